"""TOML run configuration: parsing with unit conversion, and the reverse."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import tomli_w

from .model import (
    DissipationSpec,
    SystemSpec,
    ghz,
    lifetime_us,
    mhz,
    rate_from_us,
    resolve_matching,
    to_ghz,
    to_mhz,
)
from .sweep import SimSettings, SweepAxis

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunPlan:
    sim: SimSettings = SimSettings()
    axes: tuple[SweepAxis, ...] = ()
    force: bool = False
    notices: tuple[str, ...] = field(default=(), compare=False)


_SCHEMA: dict[str, set[str]] = {
    "qutrit": {"omega_eg_ghz", "omega_fg_ghz"},
    "resonators": {"delta_ghz"},
    "couplings": {"c1", "g_mhz", "mu_ratio", "mu_mhz"},
    "pulse": {"omega_mhz", "omega_fe_mhz", "leakage"},
    "crosstalk": {"enabled", "gcs_ratio"},
    "dissipation": {
        "enabled", "t1_a_us", "t1_b_us", "t1_eg_us", "t1_fe_us", "t1_fg_us", "tphi_e_us", "tphi_f_us",
    },
    "sim": {"n_max", "dt_ps", "t_final_ns", "samples"},
    "sweep": {"axes", "force"},
}
_AXIS_KEYS = {"name", "values", "min", "max", "count"}

_DISSIPATION_DEFAULTS = {
    "t1_a_us": 10.0,
    "t1_b_us": 10.0,
    "t1_eg_us": 5.0,
    "t1_fe_us": 2.5,
    "t1_fg_us": 3.5,
    "tphi_e_us": 2.5,
    "tphi_f_us": 1.5,
}


def default_config_text() -> str:
    return resources.files("pairwave").joinpath("data/default.toml").read_text(encoding="utf-8")


def load_config(source: str | Path) -> tuple[SystemSpec, RunPlan]:
    """Read ``source`` (a path, or ``"default"`` for the shipped config)."""
    if str(source) == "default":
        return parse_config(default_config_text())
    try:
        text = Path(source).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {source}: {exc}") from exc
    return parse_config(text)


class _Reader:
    def __init__(self, doc: dict):
        self.doc = doc
        self.notices: list[str] = []

    def section(self, name: str) -> dict:
        sec = self.doc.get(name, {})
        if not isinstance(sec, dict):
            raise ConfigError(f"[{name}] must be a table")
        return sec

    def required(self, sec: str, key: str) -> Any:
        table = self.section(sec)
        if key not in table:
            raise ConfigError(f"missing required key {sec}.{key}")
        return table[key]

    def optional(self, sec: str, key: str, default: Any) -> Any:
        table = self.section(sec)
        if key in table:
            return table[key]
        self.notices.append(f"{sec}.{key} not set, using {default!r}")
        log.info("config: %s.%s not set, using %r", sec, key, default)
        return default


def _number(value: Any, where: str, positive: bool = False, allow_zero: bool = True) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where} must be a number, got {value!r}")
    x = float(value)
    if not math.isfinite(x):
        raise ConfigError(f"{where} must be finite")
    if positive and (x < 0 or (x == 0 and not allow_zero)):
        raise ConfigError(f"{where} must be {'positive' if not allow_zero else 'nonnegative'}, got {x}")
    return x


def _numbers(value: Any, where: str, n: int | None = None, **kw) -> tuple[float, ...]:
    if not isinstance(value, list):
        value = [value] * (n or 1)
    vals = tuple(_number(v, f"{where}[{i}]", **kw) for i, v in enumerate(value))
    if n is not None and len(vals) != n:
        raise ConfigError(f"{where} needs {n} entries, got {len(vals)}")
    return vals


def _bool(value: Any, where: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{where} must be true or false")
    return value


def _lifetimes(values: tuple[float, ...]) -> tuple[float, ...]:
    return tuple(rate_from_us(v) if v > 0 else 0.0 for v in values)


def parse_config(text: str) -> tuple[SystemSpec, RunPlan]:
    """Parse a TOML run description into internal units (rad/ns, ns, 1/ns)."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    for name, table in doc.items():
        if name not in _SCHEMA:
            raise ConfigError(f"unknown section [{name}]")
        if not isinstance(table, dict):
            raise ConfigError(f"[{name}] must be a table")
        extra = set(table) - _SCHEMA[name]
        if extra:
            raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(sorted(extra))}")
    r = _Reader(doc)

    omega_eg = ghz(_number(r.required("qutrit", "omega_eg_ghz"), "qutrit.omega_eg_ghz", positive=True))
    omega_fg = ghz(_number(r.required("qutrit", "omega_fg_ghz"), "qutrit.omega_fg_ghz", positive=True))
    delta_raw = r.required("resonators", "delta_ghz")
    if not isinstance(delta_raw, list) or not delta_raw:
        raise ConfigError("resonators.delta_ghz must be a nonempty list")
    delta_ghz = _numbers(delta_raw, "resonators.delta_ghz")
    if any(d <= 0 for d in delta_ghz):
        raise ConfigError("resonators.delta_ghz entries must be > 0")
    delta = tuple(ghz(d) for d in delta_ghz)
    n = len(delta)

    couplings = r.section("couplings")
    if ("c1" in couplings) == ("g_mhz" in couplings):
        raise ConfigError("couplings needs exactly one of c1 or g_mhz")
    if "c1" in couplings:
        c1 = _number(couplings["c1"], "couplings.c1")
        if c1 <= 0:
            raise ConfigError("couplings.c1 must be > 0")
        g, _ = resolve_matching(delta, c1)
    else:
        g = tuple(mhz(x) for x in _numbers(couplings["g_mhz"], "couplings.g_mhz", n, positive=True))
    if "mu_mhz" in couplings:
        if "mu_ratio" in couplings:
            raise ConfigError("couplings takes mu_ratio or mu_mhz, not both")
        mu = tuple(mhz(x) for x in _numbers(couplings["mu_mhz"], "couplings.mu_mhz", n, positive=True))
    else:
        ratio = _number(r.optional("couplings", "mu_ratio", 0.95), "couplings.mu_ratio", positive=True)
        mu = tuple(ratio * x for x in g)

    omega = mhz(_number(r.required("pulse", "omega_mhz"), "pulse.omega_mhz", positive=True))
    pulse = r.section("pulse")
    omega_fe = mhz(_number(pulse["omega_fe_mhz"], "pulse.omega_fe_mhz", positive=True)) if "omega_fe_mhz" in pulse else None
    leakage = _bool(r.optional("pulse", "leakage", True), "pulse.leakage")

    crosstalk = _bool(r.optional("crosstalk", "enabled", True), "crosstalk.enabled")
    gcs_ratio = _number(r.optional("crosstalk", "gcs_ratio", 0.4), "crosstalk.gcs_ratio", positive=True)

    dissipation_on = _bool(r.optional("dissipation", "enabled", True), "dissipation.enabled")
    life = {
        key: _numbers(
            r.optional("dissipation", key, default),
            f"dissipation.{key}",
            n if key in ("t1_a_us", "t1_b_us") else None,
            positive=True,
        )
        for key, default in _DISSIPATION_DEFAULTS.items()
    }
    dissipation = DissipationSpec(
        kappa_a=_lifetimes(life["t1_a_us"]),
        kappa_b=_lifetimes(life["t1_b_us"]),
        gamma_eg=_lifetimes(life["t1_eg_us"])[0],
        gamma_fe=_lifetimes(life["t1_fe_us"])[0],
        gamma_fg=_lifetimes(life["t1_fg_us"])[0],
        gamma_phi_e=_lifetimes(life["tphi_e_us"])[0],
        gamma_phi_f=_lifetimes(life["tphi_f_us"])[0],
    )

    n_max = r.optional("sim", "n_max", 2)
    if isinstance(n_max, bool) or not isinstance(n_max, int) or n_max < 1:
        raise ConfigError("sim.n_max must be an integer >= 1")
    sim_table = r.section("sim")
    dt_ps = _number(sim_table["dt_ps"], "sim.dt_ps") if "dt_ps" in sim_table else None
    if dt_ps is not None and dt_ps <= 0:
        raise ConfigError("sim.dt_ps must be > 0")
    t_final = _number(sim_table["t_final_ns"], "sim.t_final_ns", positive=True) if "t_final_ns" in sim_table else None
    samples = int(_number(r.optional("sim", "samples", 200), "sim.samples", positive=True))

    try:
        spec = SystemSpec(
            N=n,
            omega_eg=omega_eg,
            omega_fg=omega_fg,
            Delta=delta,
            g=g,
            mu=mu,
            Omega=omega,
            Omega_fe=omega_fe,
            dissipation=dissipation,
            gcs_ratio=gcs_ratio,
            n_max=n_max,
            include_crosstalk=crosstalk,
            include_leakage=leakage,
            include_dissipation=dissipation_on,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    sweep = r.section("sweep")
    axes = tuple(_parse_axis(a, i) for i, a in enumerate(sweep.get("axes", [])))
    force = _bool(sweep.get("force", False), "sweep.force")
    sim = SimSettings(dt_ns=None if dt_ps is None else dt_ps * 1e-3, t_final_ns=t_final, samples=samples)
    return spec, RunPlan(sim=sim, axes=axes, force=force, notices=tuple(r.notices))


def _parse_axis(table: Any, i: int) -> SweepAxis:
    where = f"sweep.axes[{i}]"
    if not isinstance(table, dict):
        raise ConfigError(f"{where} must be a table")
    extra = set(table) - _AXIS_KEYS
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(extra))}")
    if "name" not in table:
        raise ConfigError(f"missing required key {where}.name")
    try:
        if "values" in table:
            if {"min", "max", "count"} & set(table):
                raise ConfigError(f"{where} takes values or min/max/count, not both")
            return SweepAxis(table["name"], tuple(_numbers(table["values"], f"{where}.values")))
        for key in ("min", "max", "count"):
            if key not in table:
                raise ConfigError(f"missing required key {where}.{key}")
        return SweepAxis.linear(
            table["name"], _number(table["min"], f"{where}.min"), _number(table["max"], f"{where}.max"), int(table["count"])
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _inverse(x: float, forward, backward) -> float:
    """A float ``y`` near ``backward(x)`` with ``forward(y) == x`` when one exists.

    Keeps serialize -> parse exact despite the unit conversions.
    """
    y0 = backward(x)
    if not math.isfinite(y0):
        return y0
    up = down = y0
    for _ in range(8):
        for y in (up, down):
            if forward(y) == x:
                return y
        up, down = math.nextafter(up, math.inf), math.nextafter(down, -math.inf)
    return y0


def _out_ghz(w: float) -> float:
    return _inverse(w, ghz, to_ghz)


def _out_mhz(w: float) -> float:
    return _inverse(w, mhz, to_mhz)


def _us(rate: float) -> float:
    return 0.0 if rate == 0 else _inverse(rate, rate_from_us, lifetime_us)


def serialize_config(spec: SystemSpec, plan: RunPlan | None = None) -> str:
    """TOML text that parses back to ``spec`` (couplings written out explicitly).

    A zero rate is written as a lifetime of 0, which the parser reads as "no decay".
    """
    plan = plan or RunPlan()
    diss = spec.dissipation
    doc: dict[str, Any] = {
        "qutrit": {"omega_eg_ghz": _out_ghz(spec.omega_eg), "omega_fg_ghz": _out_ghz(spec.omega_fg)},
        "resonators": {"delta_ghz": [_out_ghz(d) for d in spec.Delta]},
        "couplings": {"g_mhz": [_out_mhz(g) for g in spec.g], "mu_mhz": [_out_mhz(m) for m in spec.mu]},
        "pulse": {"omega_mhz": _out_mhz(spec.Omega), "leakage": spec.include_leakage},
        "crosstalk": {"enabled": spec.include_crosstalk, "gcs_ratio": spec.gcs_ratio},
        "dissipation": {
            "enabled": spec.include_dissipation,
            "t1_a_us": [_us(k) for k in diss.kappa_a],
            "t1_b_us": [_us(k) for k in diss.kappa_b],
            "t1_eg_us": _us(diss.gamma_eg),
            "t1_fe_us": _us(diss.gamma_fe),
            "t1_fg_us": _us(diss.gamma_fg),
            "tphi_e_us": _us(diss.gamma_phi_e),
            "tphi_f_us": _us(diss.gamma_phi_f),
        },
        "sim": {"n_max": spec.n_max, "samples": plan.sim.samples},
        "sweep": {"force": plan.force, "axes": [{"name": a.name, "values": list(a.values)} for a in plan.axes]},
    }
    if spec.Omega_fe is not None:
        doc["pulse"]["omega_fe_mhz"] = _out_mhz(spec.Omega_fe)
    if plan.sim.dt_ns is not None:
        doc["sim"]["dt_ps"] = _inverse(plan.sim.dt_ns, lambda v: v * 1e-3, lambda v: v * 1e3)
    if plan.sim.t_final_ns is not None:
        doc["sim"]["t_final_ns"] = plan.sim.t_final_ns
    return tomli_w.dumps(doc)
