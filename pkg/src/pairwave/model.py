"""Physical parameters of the qutrit coupler and its 2N resonators.

Internal units: angular frequencies in rad/ns, times in ns, rates in 1/ns.
Human-facing values (GHz, MHz, microsecond lifetimes) go through the
converters below exactly once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

TWO_PI = 2.0 * math.pi


def ghz(f: float) -> float:
    """Ordinary frequency in GHz -> angular frequency in rad/ns."""
    return TWO_PI * f


def mhz(f: float) -> float:
    return TWO_PI * f * 1e-3


def to_ghz(w: float) -> float:
    return w / TWO_PI


def to_mhz(w: float) -> float:
    return w / TWO_PI * 1e3


def rate_from_us(lifetime_us: float | None) -> float:
    """Lifetime in microseconds -> rate in 1/ns; ``None`` or inf means no decay."""
    if lifetime_us is None or math.isinf(lifetime_us):
        return 0.0
    if lifetime_us <= 0:
        raise ValueError(f"lifetime must be positive, got {lifetime_us}")
    return 1.0 / (lifetime_us * 1e3)


def lifetime_us(rate: float) -> float:
    return math.inf if rate == 0 else 1.0 / rate * 1e-3


@dataclass(frozen=True)
class DissipationSpec:
    kappa_a: tuple[float, ...]
    kappa_b: tuple[float, ...]
    gamma_eg: float = 0.0
    gamma_fe: float = 0.0
    gamma_fg: float = 0.0
    gamma_phi_e: float = 0.0
    gamma_phi_f: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kappa_a", tuple(float(k) for k in self.kappa_a))
        object.__setattr__(self, "kappa_b", tuple(float(k) for k in self.kappa_b))
        if len(self.kappa_a) != len(self.kappa_b):
            raise ValueError("kappa_a and kappa_b must have the same length")
        rates = self.kappa_a + self.kappa_b + (
            self.gamma_eg, self.gamma_fe, self.gamma_fg, self.gamma_phi_e, self.gamma_phi_f
        )
        if any(not math.isfinite(r) or r < 0 for r in rates):
            raise ValueError("dissipation rates must be finite and nonnegative")

    @classmethod
    def none(cls, n_pairs: int) -> "DissipationSpec":
        return cls((0.0,) * n_pairs, (0.0,) * n_pairs)

    @classmethod
    def baseline(cls, n_pairs: int = 2) -> "DissipationSpec":
        """Conservative flux-qutrit and resonator lifetimes used for the four-resonator example."""
        kappa = rate_from_us(10.0)
        return cls(
            kappa_a=(kappa,) * n_pairs,
            kappa_b=(kappa,) * n_pairs,
            gamma_eg=rate_from_us(5.0),
            gamma_fe=rate_from_us(2.5),
            gamma_fg=rate_from_us(3.5),
            gamma_phi_e=rate_from_us(2.5),
            gamma_phi_f=rate_from_us(1.5),
        )

    def scaled(self, s: float) -> "DissipationSpec":
        return DissipationSpec(
            tuple(s * k for k in self.kappa_a),
            tuple(s * k for k in self.kappa_b),
            s * self.gamma_eg,
            s * self.gamma_fe,
            s * self.gamma_fg,
            s * self.gamma_phi_e,
            s * self.gamma_phi_f,
        )


@dataclass(frozen=True)
class SystemSpec:
    """Everything needed to build the Hamiltonian and dissipators.

    ``Omega_fe=None`` means the leakage drive equals ``Omega``.
    """

    N: int
    omega_eg: float
    omega_fg: float
    Delta: tuple[float, ...]
    g: tuple[float, ...]
    mu: tuple[float, ...]
    Omega: float
    dissipation: DissipationSpec
    Omega_fe: float | None = None
    gcs_ratio: float = 0.0
    n_max: int = 2
    include_crosstalk: bool = False
    include_leakage: bool = False
    include_dissipation: bool = False

    def __post_init__(self):
        for name in ("Delta", "g", "mu"):
            object.__setattr__(self, name, tuple(float(x) for x in getattr(self, name)))
        n = self.N
        if n < 1:
            raise ValueError("N must be >= 1")
        if not (len(self.Delta) == len(self.g) == len(self.mu) == n):
            raise ValueError(f"Delta, g, mu must each have N={n} entries")
        if len(self.dissipation.kappa_a) != n:
            raise ValueError("dissipation spec has the wrong number of resonator pairs")
        if any(d <= 0 for d in self.Delta):
            raise ValueError("all detunings Delta_j must be > 0")
        values = (self.omega_eg, self.omega_fg, self.Omega, self.gcs_ratio) + self.g + self.mu
        if self.Omega_fe is not None:
            values += (self.Omega_fe,)
        if any(not math.isfinite(v) or v < 0 for v in values):
            raise ValueError("frequencies, couplings and rates must be finite and nonnegative")
        if self.omega_fg <= self.omega_eg:
            raise ValueError("need omega_fg > omega_eg")
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")

    @property
    def omega_fe(self) -> float:
        return self.omega_fg - self.omega_eg

    @property
    def leakage_rabi(self) -> float:
        return self.Omega if self.Omega_fe is None else self.Omega_fe

    @property
    def g_m(self) -> float:
        return max(self.g + self.mu)

    @property
    def g_cs(self) -> float:
        return self.gcs_ratio * self.g_m

    def replace(self, **changes) -> "SystemSpec":
        return replace(self, **changes)

    def scaled(self, s: float) -> "SystemSpec":
        """All frequencies and rates multiplied by ``s``."""
        return replace(
            self,
            omega_eg=s * self.omega_eg,
            omega_fg=s * self.omega_fg,
            Delta=tuple(s * d for d in self.Delta),
            g=tuple(s * x for x in self.g),
            mu=tuple(s * x for x in self.mu),
            Omega=s * self.Omega,
            Omega_fe=None if self.Omega_fe is None else s * self.Omega_fe,
            dissipation=self.dissipation.scaled(s),
        )

    def with_c1(self, c1: float, mu_ratio: float) -> "SystemSpec":
        """Re-resolve couplings from the normalized detuning of pair 1."""
        g, _ = resolve_matching(self.Delta, c1)
        return replace(self, g=g, mu=tuple(mu_ratio * x for x in g))


BASELINE_OMEGA_EG_GHZ = 7.5
BASELINE_OMEGA_FG_GHZ = 12.5
BASELINE_DELTA_GHZ = (0.75, 1.5)


def baseline_spec(
    c1: float = 11.0,
    omega_mhz: float = 100.0,
    gcs_ratio: float = 0.4,
    mu_ratio: float = 0.95,
    n_max: int = 2,
    crosstalk: bool = True,
    leakage: bool = True,
    dissipation: bool = True,
) -> SystemSpec:
    """Two-pair flux-qutrit example with matched couplings."""
    delta = tuple(ghz(d) for d in BASELINE_DELTA_GHZ)
    g, _ = resolve_matching(delta, c1)
    return SystemSpec(
        N=2,
        omega_eg=ghz(BASELINE_OMEGA_EG_GHZ),
        omega_fg=ghz(BASELINE_OMEGA_FG_GHZ),
        Delta=delta,
        g=g,
        mu=tuple(mu_ratio * x for x in g),
        Omega=mhz(omega_mhz),
        dissipation=DissipationSpec.baseline(2),
        gcs_ratio=gcs_ratio,
        n_max=n_max,
        include_crosstalk=crosstalk,
        include_leakage=leakage,
        include_dissipation=dissipation,
    )


def resolve_matching(Delta: Sequence[float], c1: float) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Couplings with ``g_j**2 / Delta_j`` independent of ``j``.

    Returns ``(g, c)`` where ``g_1 = Delta_1 / c1`` and ``c_j = Delta_j / g_j``.
    """
    if c1 <= 0 or not math.isfinite(c1):
        raise ValueError(f"c1 must be positive, got {c1}")
    if not Delta or any(d <= 0 for d in Delta):
        raise ValueError("detunings must be positive")
    g1 = Delta[0] / c1
    g = tuple(g1 * math.sqrt(d / Delta[0]) for d in Delta)
    return g, tuple(d / x for d, x in zip(Delta, g))


@dataclass(frozen=True)
class DerivedQuantities:
    lambda_: tuple[float, ...]
    delta: tuple[float, ...]
    lambda_ideal: float
    t_op: float
    omega_a: tuple[float, ...]
    omega_b: tuple[float, ...]
    c: tuple[float, ...]
    g_m: float
    Q_a: tuple[float, ...]
    Q_b: tuple[float, ...]
    crosstalk_detunings: dict[tuple[str, str], float] = field(default_factory=dict)


def crosstalk_detunings(spec: SystemSpec) -> dict[tuple[str, str], float]:
    """Detuning of each resonator-resonator exchange ``x y^+`` keyed ``(x, y)``.

    For N=2 this is the six-term set (a_j b_k, a1 a2, b1 b2); larger N uses
    every unordered pair.
    """
    wa = [spec.omega_fg - d for d in spec.Delta]
    wb = [spec.omega_fe - d for d in spec.Delta]
    out: dict[tuple[str, str], float] = {}
    n = spec.N
    for j in range(n):
        for k in range(n):
            out[(f"a{j + 1}", f"b{k + 1}")] = wb[k] - wa[j]
    for j in range(n):
        for k in range(j + 1, n):
            out[(f"a{j + 1}", f"a{k + 1}")] = wa[k] - wa[j]
    for j in range(n):
        for k in range(j + 1, n):
            out[(f"b{j + 1}", f"b{k + 1}")] = wb[k] - wb[j]
    return out


def derive(spec: SystemSpec) -> DerivedQuantities:
    lam = tuple(g * m / d for g, m, d in zip(spec.g, spec.mu, spec.Delta))
    dlt = tuple((g * g - m * m) / d for g, m, d in zip(spec.g, spec.mu, spec.Delta))
    lam_ideal = spec.g[0] ** 2 / spec.Delta[0]
    t_op = math.pi / (2.0 * lam_ideal) if lam_ideal > 0 else math.inf
    wa = tuple(spec.omega_fg - d for d in spec.Delta)
    wb = tuple(spec.omega_fe - d for d in spec.Delta)
    c = tuple(d / g if g > 0 else math.inf for d, g in zip(spec.Delta, spec.g))
    diss = spec.dissipation

    def q(w, k):
        return w / k if k > 0 else math.inf

    return DerivedQuantities(
        lambda_=lam,
        delta=dlt,
        lambda_ideal=lam_ideal,
        t_op=t_op,
        omega_a=wa,
        omega_b=wb,
        c=c,
        g_m=spec.g_m,
        Q_a=tuple(q(w, k) for w, k in zip(wa, diss.kappa_a)),
        Q_b=tuple(q(w, k) for w, k in zip(wb, diss.kappa_b)),
        crosstalk_detunings=crosstalk_detunings(spec),
    )


# -- validity -----------------------------------------------------------------

PASS, WARN, FAIL = "pass", "warn", "fail"
_SEVERITY = {PASS: 0, WARN: 1, FAIL: 2}


@dataclass(frozen=True)
class RatioCheck:
    family: str
    label: str
    value: float
    status: str


@dataclass(frozen=True)
class ValidityReport:
    checks: tuple[RatioCheck, ...]

    @property
    def status(self) -> str:
        return max((c.status for c in self.checks), key=_SEVERITY.__getitem__, default=PASS)

    @property
    def failures(self) -> tuple[RatioCheck, ...]:
        return tuple(c for c in self.checks if c.status == FAIL)

    def get(self, label: str) -> RatioCheck:
        for c in self.checks:
            if c.label == label:
                return c
        raise KeyError(label)

    def format(self) -> str:
        lines = [f"{'family':<16} {'ratio':<28} {'value':>12}  status"]
        for c in self.checks:
            lines.append(f"{c.family:<16} {c.label:<28} {c.value:>12.4g}  {c.status}")
        lines.append(f"overall: {self.status}")
        return "\n".join(lines)


def validate(spec: SystemSpec, fail_below: float = 5.0, warn_below: float = 10.0) -> ValidityReport:
    """Tag each "much greater than" condition of the reduction by its ratio."""

    def tag(v: float) -> str:
        if v < fail_below:
            return FAIL
        if v < warn_below:
            return WARN
        return PASS

    checks = []

    def add(family, label, value):
        checks.append(RatioCheck(family, label, value, tag(value)))

    def ratio(num, den):
        if den == 0:
            return math.inf if num > 0 else 0.0 if num == 0 else -math.inf
        return num / den

    d, g, mu = spec.Delta, spec.g, spec.mu
    for j in range(spec.N):
        add("dispersive", f"Delta{j + 1}/g{j + 1}", ratio(d[j], g[j]))
        add("dispersive", f"Delta{j + 1}/mu{j + 1}", ratio(d[j], mu[j]))
    for j in range(spec.N):
        for k in range(spec.N):
            if j == k:
                continue
            sep = abs(d[j] - d[k]) / (1.0 / d[j] + 1.0 / d[k])
            add(
                "pair-separation",
                f"sep{j + 1}{k + 1}",
                ratio(sep, max(g[j] * g[k], g[j] * mu[k], mu[j] * mu[k])),
            )
    for j in range(spec.N):
        lam = g[j] * mu[j] / d[j]
        scale = max(g[j] ** 2 / (4 * d[j]), mu[j] ** 2 / (4 * d[j]), lam / 4)
        add("strong-driving", f"Omega/shift{j + 1}", ratio(spec.Omega, scale))
        add("strong-driving", f"Delta{j + 1}/Omega", ratio(d[j], spec.Omega))
    return ValidityReport(tuple(checks))
