"""End-to-end simulation points and parameter grids over them."""
from __future__ import annotations

import itertools
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from . import analytic, dynamics
from .hamiltonian import build_full, system_layout
from .model import SystemSpec, derive, mhz, to_mhz, validate, ValidityReport, FAIL

log = logging.getLogger(__name__)

AXIS_NAMES = ("c1", "gcs_ratio", "omega_mhz", "n_max", "dt_ps", "mu_ratio")
TRACE_FLAG = 1e-6


class ValidityError(ValueError):
    def __init__(self, report: ValidityReport):
        names = ", ".join(f"{c.label}={c.value:.3g}" for c in report.failures)
        super().__init__(f"parameters fail the validity check ({names}); use force to run anyway")
        self.report = report


@dataclass(frozen=True)
class SweepAxis:
    name: str
    values: tuple[float, ...]

    def __post_init__(self):
        if self.name not in AXIS_NAMES:
            raise ValueError(f"unknown sweep parameter {self.name!r}; expected one of {AXIS_NAMES}")
        vals = tuple(float(v) for v in self.values)
        if not vals or not all(math.isfinite(v) for v in vals):
            raise ValueError(f"axis {self.name!r} needs at least one finite value")
        object.__setattr__(self, "values", vals)

    @classmethod
    def linear(cls, name: str, lo: float, hi: float, count: int) -> "SweepAxis":
        if count < 1:
            raise ValueError("count must be >= 1")
        return cls(name, tuple(np.linspace(lo, hi, count)) if count > 1 else (lo,))

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class SimSettings:
    """Integration controls; ``None`` picks the automatic choice."""

    dt_ns: float | None = None
    t_final_ns: float | None = None
    samples: int = dynamics.DEFAULT_SAMPLES


@dataclass
class SweepRecord:
    c: tuple[float, ...]
    omega_mhz: float
    gcs_ratio: float
    g_mhz: tuple[float, ...]
    mu_mhz: tuple[float, ...]
    t_op_ns: float
    F_joint: float
    F_pair: tuple[float, ...]
    trace_error: float
    min_eigenvalue: float
    steps: int
    wall_seconds: float
    n_max: int = 2
    validity: str = "pass"
    note: str = ""
    index: tuple[int, ...] = field(default=(), compare=False)

    @property
    def c1(self) -> float:
        return self.c[0]

    @property
    def c2(self) -> float:
        return self.c[1] if len(self.c) > 1 else math.nan

    @property
    def ok(self) -> bool:
        return not self.note and math.isfinite(self.F_joint)


def _mu_ratio(spec: SystemSpec) -> float:
    return spec.mu[0] / spec.g[0] if spec.g[0] > 0 else 1.0


def resolve_point(base: SystemSpec, overrides: Mapping[str, float]) -> tuple[SystemSpec, SimSettings | None]:
    """Apply sweep overrides; returns the new spec and, if ``dt_ps`` was given, the step."""
    unknown = set(overrides) - set(AXIS_NAMES)
    if unknown:
        raise ValueError(f"unknown override(s): {sorted(unknown)}")
    spec = base
    mu_ratio = float(overrides.get("mu_ratio", _mu_ratio(base)))
    if "c1" in overrides:
        spec = spec.with_c1(float(overrides["c1"]), mu_ratio)
    elif "mu_ratio" in overrides:
        spec = replace(spec, mu=tuple(mu_ratio * g for g in spec.g))
    if "gcs_ratio" in overrides:
        spec = replace(spec, gcs_ratio=float(overrides["gcs_ratio"]))
    if "omega_mhz" in overrides:
        spec = replace(spec, Omega=mhz(float(overrides["omega_mhz"])))
    if "n_max" in overrides:
        spec = replace(spec, n_max=int(round(overrides["n_max"])))
    sim = SimSettings(dt_ns=float(overrides["dt_ps"]) * 1e-3) if "dt_ps" in overrides else None
    return spec, sim


def simulate(spec: SystemSpec, sim: SimSettings | None = None) -> tuple[np.ndarray, dynamics.PropagationResult]:
    """Evolve the initial state under the full Hamiltonian; returns the qutrit-traced state.

    Without dissipation the pure-state integrator is used; it solves the same
    equation for a rank-one density matrix at a fraction of the cost.
    """
    sim = sim or SimSettings()
    h = build_full(spec)
    lindblad = dynamics.build_lindblad(spec)
    t_final = derive(spec).t_op if sim.t_final_ns is None else sim.t_final_ns
    psi0 = analytic.initial_state(spec)
    if lindblad:
        res = dynamics.evolve_master(h, lindblad, np.outer(psi0, psi0.conj()), t_final, sim.dt_ns, samples=sim.samples)
    else:
        res = dynamics.propagate_state(h, psi0, t_final, sim.dt_ns, samples=sim.samples)
        res.diagnostics.max_trace_deviation = abs(np.vdot(res.final, res.final).real - 1.0)
        res.diagnostics.min_eigenvalue = 0.0
    rho_res, _ = analytic.resonator_state(res.final, system_layout(spec))
    return rho_res, res


def run_point(
    base: SystemSpec,
    overrides: Mapping[str, float] | None = None,
    sim: SimSettings | None = None,
    force: bool = False,
) -> SweepRecord:
    """Build, validate, propagate to ``t_op`` and score one parameter point."""
    spec, dt_sim = resolve_point(base, overrides or {})
    if dt_sim is not None:
        sim = replace(sim or SimSettings(), dt_ns=dt_sim.dt_ns)
    report = validate(spec)
    if report.status == FAIL and not force:
        raise ValidityError(report)
    dq = derive(spec)
    start = time.perf_counter()
    rho_res, res = simulate(spec, sim)
    res_layout = system_layout(spec).sublayout([l for l in system_layout(spec).labels if l != "q"])
    diag = res.diagnostics
    note = ""
    if diag.max_trace_deviation >= TRACE_FLAG:
        note = f"trace error {diag.max_trace_deviation:.3g}"
    return SweepRecord(
        c=dq.c,
        omega_mhz=to_mhz(spec.Omega),
        gcs_ratio=spec.gcs_ratio,
        g_mhz=tuple(to_mhz(g) for g in spec.g),
        mu_mhz=tuple(to_mhz(m) for m in spec.mu),
        t_op_ns=dq.t_op,
        F_joint=analytic.joint_fidelity(rho_res, res_layout),
        F_pair=analytic.pair_fidelities(rho_res, res_layout),
        trace_error=diag.max_trace_deviation,
        min_eigenvalue=diag.min_eigenvalue,
        steps=diag.steps,
        wall_seconds=time.perf_counter() - start,
        n_max=spec.n_max,
        validity=report.status,
        note=note,
    )


def _failed_record(base: SystemSpec, overrides: Mapping[str, float], exc: Exception) -> SweepRecord:
    try:
        spec, _ = resolve_point(base, overrides)
        dq = derive(spec)
        c, t_op = dq.c, dq.t_op
        g, mu = tuple(map(to_mhz, spec.g)), tuple(map(to_mhz, spec.mu))
        validity = validate(spec).status
    except Exception:  # the overrides themselves were unusable
        spec, c, t_op, g, mu, validity = base, (math.nan,) * base.N, math.nan, (), (), FAIL
    nan = math.nan
    return SweepRecord(
        c=c,
        omega_mhz=to_mhz(spec.Omega),
        gcs_ratio=spec.gcs_ratio,
        g_mhz=g or (nan,) * base.N,
        mu_mhz=mu or (nan,) * base.N,
        t_op_ns=t_op,
        F_joint=nan,
        F_pair=(nan,) * base.N,
        trace_error=nan,
        min_eigenvalue=nan,
        steps=0,
        wall_seconds=0.0,
        n_max=spec.n_max,
        validity=validity,
        note=f"{type(exc).__name__}: {exc}",
    )


def _run_task(args) -> SweepRecord:
    base, overrides, sim, force, index = args
    try:
        rec = run_point(base, overrides, sim, force)
    except (ValueError, dynamics.IntegrationError) as exc:
        log.warning("point %s failed: %s", dict(overrides), exc)
        rec = _failed_record(base, overrides, exc)
    rec.index = index
    return rec


def default_workers() -> int:
    env = os.environ.get("PAIRWAVE_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def grid_points(axes: Sequence[SweepAxis]) -> list[tuple[tuple[int, ...], dict[str, float]]]:
    """Row-major (last axis fastest) list of ``(index, overrides)``."""
    names = [a.name for a in axes]
    if len(set(names)) != len(names):
        raise ValueError("sweep axes must be distinct")
    out = []
    for index in itertools.product(*(range(len(a)) for a in axes)):
        out.append((index, {a.name: a.values[i] for a, i in zip(axes, index)}))
    return out


def sweep_grid(
    base: SystemSpec,
    axes: Sequence[SweepAxis],
    sim: SimSettings | None = None,
    force: bool = False,
    workers: int | None = None,
    fixed: Mapping[str, float] | None = None,
) -> list[SweepRecord]:
    """Run every grid point; failures are kept as rows with a ``note``.

    Output order follows the grid index, independent of worker count.
    """
    if not 1 <= len(axes) <= 2:
        raise ValueError("sweep_grid takes one or two axes")
    fixed = dict(fixed or {})
    tasks = [(base, {**fixed, **ov}, sim, force, index) for index, ov in grid_points(axes)]
    workers = default_workers() if workers is None else max(1, workers)
    if workers == 1 or len(tasks) == 1:
        return [_run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(_run_task, tasks))


def find_optimum(records: Sequence[SweepRecord]) -> tuple[SweepRecord, list[SweepRecord]]:
    """Row with the largest joint fidelity, plus its grid neighbours.

    Ties go to the smallest ``c1``, then the smallest pulse amplitude.
    """
    if not records:
        raise ValueError("empty table")
    scored = [r for r in records if math.isfinite(r.F_joint)] or list(records)
    best = min(scored, key=lambda r: (-_finite(r.F_joint), r.c1, r.omega_mhz))
    neighbours = [
        r
        for r in records
        if r is not best
        and r.index
        and best.index
        and all(abs(i - j) <= 1 for i, j in zip(r.index, best.index))
    ]
    return best, neighbours


def _finite(x: float) -> float:
    return x if math.isfinite(x) else -math.inf


# presets matching the published figure ranges; resolutions are our choice
def fig4_axes(count: int = 21) -> list[SweepAxis]:
    return [
        SweepAxis("gcs_ratio", (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)),
        SweepAxis.linear("c1", 7.0, 17.0, count),
    ]


def fig5_axes(c1_count: int = 21, omega_count: int = 16) -> list[SweepAxis]:
    return [
        SweepAxis.linear("c1", 7.0, 17.0, c1_count),
        SweepAxis.linear("omega_mhz", 50.0, 200.0, omega_count),
    ]
