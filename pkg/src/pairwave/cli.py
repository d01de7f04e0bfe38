"""Command-line front end.

Exit codes: 0 success, 1 user error (bad flags, config, validity), 2 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import analytic, oracles, output
from .config import ConfigError, RunPlan, load_config
from .dynamics import IntegrationError
from .model import FAIL, SystemSpec, derive, to_mhz, validate
from .sweep import (
    SweepAxis,
    ValidityError,
    fig4_axes,
    fig5_axes,
    find_optimum,
    resolve_point,
    run_point,
    sweep_grid,
)

log = logging.getLogger("pairwave")

EXIT_OK, EXIT_USER, EXIT_NUMERIC = 0, 1, 2


class UserError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UserError(message)


def _overrides(args) -> dict[str, float]:
    out = {}
    for name in ("c1", "omega_mhz", "gcs_ratio", "mu_ratio", "n_max", "dt_ps"):
        value = getattr(args, name, None)
        if value is not None:
            out[name] = value
    return out


def _load(args) -> tuple[SystemSpec, RunPlan]:
    spec, plan = load_config(args.config)
    for notice in plan.notices:
        log.info("%s", notice)
    return spec, plan


def _check_writable(path: Path) -> None:
    parent = path.parent if str(path.parent) else Path(".")
    if not parent.is_dir():
        raise UserError(f"output directory does not exist: {parent}")


# -- subcommands ---------------------------------------------------------------

def cmd_validate(args) -> int:
    spec, _ = _load(args)
    spec, _ = resolve_point(spec, _overrides(args))
    report = validate(spec)
    print(report.format())
    return EXIT_USER if report.status == FAIL else EXIT_OK


def cmd_simulate(args) -> int:
    spec, plan = _load(args)
    sim = plan.sim
    if args.t_final_ns is not None:
        sim = replace(sim, t_final_ns=args.t_final_ns)
    rec = run_point(spec, _overrides(args), sim, force=args.force or plan.force)
    print(f"t_op = {rec.t_op_ns:.6f} ns")
    print(f"F_joint = {rec.F_joint:.6f}")
    for j, f in enumerate(rec.F_pair, start=1):
        print(f"F_pair{j} = {f:.6f}")
    print(f"validity = {rec.validity}")
    print(f"steps = {rec.steps}  trace_error = {rec.trace_error:.3g}  min_eig = {rec.min_eigenvalue:.3g}")
    if args.timing:
        print(f"wall_s = {rec.wall_seconds:.2f}")
    if rec.note:
        print(f"note: {rec.note}")
    if args.out:
        path = Path(args.out)
        _check_writable(path)
        output.write_csv([rec], path, timing=args.timing)
    return EXIT_OK


def _resample(axis: SweepAxis, count: int) -> SweepAxis:
    lo, hi = min(axis.values), max(axis.values)
    return SweepAxis.linear(axis.name, lo, hi, count)


def cmd_sweep(args) -> int:
    spec, plan = _load(args)
    force = args.force or plan.force
    if args.fig4:
        axes = fig4_axes()
    elif args.fig5:
        axes = fig5_axes()
        # the high-amplitude corner of this preset sits below the hard validity threshold
        force = True
    else:
        axes = list(plan.axes)
    if not axes:
        raise UserError("no sweep axes: pass --fig4/--fig5 or add [[sweep.axes]] to the config")
    if args.subgrid:
        counts = args.subgrid
        if len(counts) != len(axes):
            raise UserError(f"--subgrid needs {len(axes)} counts")
        axes = [_resample(a, n) for a, n in zip(axes, counts)]
    out = Path(args.out)
    _check_writable(out)
    if args.svg:
        _check_writable(Path(args.svg))
    fixed = _overrides(args)
    clash = set(fixed) & {a.name for a in axes}
    if clash:
        raise UserError(f"cannot fix a swept parameter: {', '.join(sorted(clash))}")
    records = sweep_grid(spec, axes, plan.sim, force=force, workers=args.workers, fixed=fixed)
    output.write_csv(records, out, timing=args.timing)
    print(f"wrote {len(records)} rows to {out}")
    if args.svg:
        ys = axes[0].values if len(axes) == 2 else (0.0,)
        xs = axes[-1].values
        if len(axes) == 1:
            for r in records:
                r.index = (0,) + tuple(r.index)
        output.write_heatmap(
            records, xs, ys, axes[-1].name, axes[0].name if len(axes) == 2 else "", args.svg, title="F_joint"
        )
        print(f"wrote heatmap to {args.svg}")
    failed = [r for r in records if not math.isfinite(r.F_joint)]
    if len(failed) == len(records):
        print("every point failed", file=sys.stderr)
        return EXIT_NUMERIC
    best, _ = find_optimum(records)
    print(
        f"optimum: c1 = {best.c1:.4g}, omega = {best.omega_mhz:.4g} MHz, gcs_ratio = {best.gcs_ratio:.3g}, "
        f"F_joint = {best.F_joint:.6f}"
    )
    if failed:
        print(f"{len(failed)} point(s) failed; see the note column", file=sys.stderr)
    return EXIT_OK


def cmd_analytic(args) -> int:
    spec, _ = _load(args)
    dq = derive(spec)
    if args.t_op:
        t = dq.t_op
    elif args.t is not None:
        t = args.t
    else:
        raise UserError("pass --t NS or --t-op")
    if args.actual:
        lambdas = dq.lambda_
        label = "configured couplings"
    else:
        lambdas = tuple(g * g / d for g, d in zip(spec.g, spec.Delta))
        label = "ideal couplings (mu = g)"
    amps = analytic.pair_evolution(lambdas, t)
    print(f"t = {t:.6f} ns, {label}")
    for j, (c, s, lam) in enumerate(zip(amps.c, amps.s, lambdas), start=1):
        print(
            f"pair {j}: lambda/2pi = {to_mhz(lam):.6f} MHz  "
            f"c = {c.real:+.9f}{c.imag:+.9f}i  s = {s.real:+.9f}{s.imag:+.9f}i"
        )
    _, ledger = analytic.restore_interaction_picture(amps, spec, t)
    print(f"global phase = {math.remainder(ledger.global_phase, 2 * math.pi):+.6f} rad")
    return EXIT_OK


def cmd_oracle(args) -> int:
    results = oracles.run_all(seed=args.seed, include_full=not args.quick)
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{r.name:<{width}}  max dev {r.deviation:.3e}  tol {r.tolerance:.0e}  {'ok' if r.passed else 'FAIL'}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERIC


# -- parser --------------------------------------------------------------------

def _counts(text: str) -> list[int]:
    try:
        counts = [int(x) for x in text.lower().replace(",", "x").split("x")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected counts like 5x4, got {text!r}")
    if any(c < 1 for c in counts):
        raise argparse.ArgumentTypeError("counts must be >= 1")
    return counts


def _point_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--c1", type=float, help="dispersive ratio Delta1/g1 (couplings rematched)")
    p.add_argument("--omega-mhz", dest="omega_mhz", type=float, help="pulse amplitude Omega/2pi")
    p.add_argument("--gcs-ratio", dest="gcs_ratio", type=float, help="crosstalk strength in units of g_m")
    p.add_argument("--mu-ratio", dest="mu_ratio", type=float, help="mu_j / g_j")
    p.add_argument("--n-max", dest="n_max", type=int, help="Fock truncation per resonator")
    p.add_argument("--dt-ps", dest="dt_ps", type=float, help="fixed step (default: automatic)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pairwave", description="Parallel EPR-pair generation on resonator pairs.")
    parser.add_argument("--config", default="default", help="TOML config path, or 'default' (shipped baseline)")
    parser.add_argument("-v", "--verbose", action="store_true")
    # accept the global flags after the subcommand too
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _add = sub.add_parser

    def add_parser(name, **kw):
        return _add(name, parents=[common], **kw)

    sub.add_parser = add_parser

    p = sub.add_parser("validate", help="print the validity report")
    _point_flags(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", help="run one point and print its fidelities")
    _point_flags(p)
    p.add_argument("--t-final-ns", dest="t_final_ns", type=float)
    p.add_argument("--force", action="store_true", help="run even if validation fails")
    p.add_argument("--timing", action="store_true")
    p.add_argument("--out", help="also write the record as a one-row CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="grid sweep to CSV (and SVG)")
    grp = p.add_mutually_exclusive_group()
    grp.add_argument("--fig4", action="store_true", help="crosstalk ratio x c1 preset")
    grp.add_argument("--fig5", action="store_true", help="c1 x pulse amplitude preset")
    p.add_argument("--subgrid", type=_counts, help="resample each axis to these counts, e.g. 5x4")
    p.add_argument("--out", default="sweep.csv")
    p.add_argument("--svg")
    p.add_argument("--workers", type=int)
    p.add_argument("--force", action="store_true")
    p.add_argument("--timing", action="store_true", help="record wall time (output no longer byte-stable)")
    _point_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("analytic", help="closed-form pair amplitudes at a given time")
    grp = p.add_mutually_exclusive_group()
    grp.add_argument("--t", type=float, help="time in ns")
    grp.add_argument("--t-op", dest="t_op", action="store_true", help="use the operation time")
    p.add_argument("--actual", action="store_true", help="use the configured mu instead of mu = g")
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("oracle", help="run the integrator and exponential cross-checks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--quick", action="store_true", help="skip the full-Hamiltonian comparison")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UserError as exc:
        print(f"pairwave: error: {exc}", file=sys.stderr)
        return EXIT_USER
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UserError, ConfigError, ValidityError) as exc:
        print(f"pairwave: error: {exc}", file=sys.stderr)
        return EXIT_USER
    except OSError as exc:
        print(f"pairwave: error: {exc}", file=sys.stderr)
        return EXIT_USER
    except IntegrationError as exc:
        print(f"pairwave: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"pairwave: error: {exc}", file=sys.stderr)
        return EXIT_USER


if __name__ == "__main__":
    sys.exit(main())
