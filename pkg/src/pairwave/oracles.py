"""Independent cross-checks for the exponential and the integrators.

Each check returns a maximum deviation; :func:`run_all` collects them with
their tolerances for the ``oracle`` command.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import analytic, dynamics
from . import quantum as qc
from .hamiltonian import HarmonicHamiltonian, build_full
from .model import derive, baseline_spec


@dataclass(frozen=True)
class OracleResult:
    name: str
    deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.deviation <= self.tolerance


def random_hermitian(d: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (a + a.conj().T) / 2


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    k = rank or d
    x = rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))
    rho = x @ x.conj().T
    return rho / np.trace(rho).real


def taylor_expm(a: np.ndarray, terms: int = 30) -> np.ndarray:
    """Plain power series; only accurate for small ``||a||``."""
    result = np.eye(a.shape[0], dtype=complex)
    term = np.eye(a.shape[0], dtype=complex)
    for k in range(1, terms + 1):
        term = term @ a / k
        result = result + term
    return result


def magnus4_propagate(h: HarmonicHamiltonian, psi0: np.ndarray, t_final: float, steps: int) -> np.ndarray:
    """Fourth-order Magnus integrator built on :func:`quantum.expm_oracle`.

    Two Gauss-Legendre nodes per step; shares no code with the RK4 path.
    """
    dt = t_final / steps
    c = math.sqrt(3) / 6
    psi = np.array(psi0, dtype=complex)
    for k in range(steps):
        t0 = k * dt
        h1 = h.evaluate(t0 + (0.5 - c) * dt)
        h2 = h.evaluate(t0 + (0.5 + c) * dt)
        omega = -0.5j * dt * (h1 + h2) - (math.sqrt(3) / 12) * dt**2 * qc.commutator(h2, h1)
        psi = qc.expm_oracle(omega) @ psi
    return psi


def check_expm_taylor(seed: int = 0, d: int = 8) -> float:
    """expm_oracle against a 30-term series on a matrix small enough for the series."""
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    a *= 0.5 / np.linalg.norm(a, 1)
    return float(np.abs(qc.expm_oracle(a) - taylor_expm(a)).max())


def check_expm_inverse(seed: int = 0, d: int = 8) -> float:
    """``expm(A) expm(-A) = I`` for a matrix that needs several squarings."""
    rng = np.random.default_rng(seed)
    a = 3.0 * (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / math.sqrt(d)
    return float(np.abs(qc.expm_oracle(a) @ qc.expm_oracle(-a) - np.eye(d)).max())


def check_static_propagation(seed: int = 0, d: int = 12, t: float = 3.0) -> float:
    """RK4 under a static Hamiltonian against ``expm(-iHt) psi0``."""
    rng = np.random.default_rng(seed)
    hmat = random_hermitian(d, rng)
    layout = qc.HilbertLayout((d,))
    psi0 = rng.normal(size=d) + 1j * rng.normal(size=d)
    psi0 /= np.linalg.norm(psi0)
    res = dynamics.propagate_state(HarmonicHamiltonian(layout, hmat), psi0, t, samples=2)
    exact = qc.expm_oracle(-1j * hmat * t) @ psi0
    return float(np.abs(res.final - exact).max())


def random_lindblad(d: int, rng: np.random.Generator, channels: int = 3) -> dynamics.LindbladSet:
    collapse = tuple(
        (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)), float(rng.uniform(0.1, 1.0)))
        for _ in range(channels)
    )
    proj = np.zeros((d, d), dtype=complex)
    proj[d - 1, d - 1] = 1.0
    return dynamics.LindbladSet(collapse, ((proj, 0.3),))


def check_superoperator(seed: int = 0, d: int = 6) -> float:
    """Matrix-form master RHS (reference and fast kernel) against the explicit superoperator."""
    rng = np.random.default_rng(seed)
    hmat = random_hermitian(d, rng)
    lindblad = random_lindblad(d, rng)
    rho = random_density(d, rng)
    sup = dynamics.lindblad_superoperator(hmat, lindblad)
    expected = (sup @ rho.ravel()).reshape(d, d)
    ref = dynamics.lindblad_rhs(rho, hmat, lindblad)
    fast = dynamics.make_master_rhs(HarmonicHamiltonian(qc.HilbertLayout((d,)), hmat), lindblad)(0.0, rho)
    return float(max(np.abs(ref - expected).max(), np.abs(fast - expected).max()))


def check_full_hamiltonian(c1: float = 11.0, magnus_dt: float = 2e-3) -> float:
    """RK4 against the Magnus/expm product for the full Hamiltonian on the ``n_max = 1`` space.

    Closed system; crosstalk and leakage on. Returns the final-state deviation.
    """
    spec = baseline_spec(c1=c1, n_max=1, dissipation=False)
    h = build_full(spec)
    psi0 = analytic.initial_state(spec)
    t = derive(spec).t_op
    rk4 = dynamics.propagate_state(h, psi0, t, samples=2).final
    steps = int(math.ceil(t / magnus_dt))
    ref = magnus4_propagate(h, psi0, t, steps)
    return float(np.abs(rk4 - ref).max())


def run_all(seed: int = 0, include_full: bool = True) -> list[OracleResult]:
    out = [
        OracleResult("expm vs 30-term Taylor (8x8)", check_expm_taylor(seed), 1e-12),
        OracleResult("expm(A) expm(-A) = I (8x8)", check_expm_inverse(seed), 1e-10),
        OracleResult("RK4 vs expm, static H (d=12)", check_static_propagation(seed), 1e-8),
        OracleResult("master RHS vs superoperator (d=6)", check_superoperator(seed), 1e-12),
    ]
    if include_full:
        out.append(OracleResult("RK4 vs Magnus-expm, full H (n_max=1)", check_full_hamiltonian(), 1e-6))
    return out

