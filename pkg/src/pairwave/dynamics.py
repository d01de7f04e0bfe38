"""Fixed-step RK4 propagation of pure states and Lindblad density matrices."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
import scipy.sparse as sp

from . import quantum as qc
from .hamiltonian import HarmonicHamiltonian, system_layout
from .model import SystemSpec
from .quantum import HilbertLayout

log = logging.getLogger(__name__)

NORM_ABORT = 1e-6
TRACE_ABORT = 1e-6
REHERMITIZE_EVERY = 1000
POINTS_PER_PERIOD = 80
DEFAULT_SAMPLES = 200


class IntegrationError(RuntimeError):
    """Raised when a propagation drifts past its abort threshold."""

    def __init__(self, message: str, diagnostics: "Diagnostics"):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True, eq=False)
class LindbladSet:
    """Collapse operators and dephasing projectors with their rates (1/ns)."""

    collapse: tuple[tuple[np.ndarray, float], ...] = ()
    dephasing: tuple[tuple[np.ndarray, float], ...] = ()

    def __post_init__(self):
        for _, rate in self.collapse + self.dephasing:
            if not math.isfinite(rate) or rate < 0:
                raise ValueError(f"rate must be finite and >= 0, got {rate}")

    def channels(self) -> list[tuple[np.ndarray, float]]:
        """All ``(L, rate)`` pairs with nonzero rate.

        A dephasing projector P enters as ``L[P]`` since ``P^+ P = P``.
        """
        return [(op, r) for op, r in self.collapse + self.dephasing if r > 0]

    def __bool__(self) -> bool:
        return bool(self.channels())


def build_lindblad(spec: SystemSpec, layout: HilbertLayout | None = None) -> LindbladSet:
    """Resonator decay, qutrit relaxation and qutrit dephasing channels for ``spec``."""
    layout = layout or system_layout(spec)
    if not spec.include_dissipation:
        return LindbladSet()
    diss = spec.dissipation
    collapse = []
    for prefix, kappas in (("a", diss.kappa_a), ("b", diss.kappa_b)):
        for j, kappa in enumerate(kappas, start=1):
            label = f"{prefix}{j}"
            d = layout.dims[layout.position(label)]
            collapse.append((qc.embed(qc.annihilate(d), label, layout), kappa))
    for lower, upper, rate in (("e", "f", diss.gamma_fe), ("g", "f", diss.gamma_fg), ("g", "e", diss.gamma_eg)):
        collapse.append((qc.embed(qc.qutrit_transfer(lower, upper), "q", layout), rate))
    dephasing = [
        (qc.embed(qc.qutrit_project("e"), "q", layout), diss.gamma_phi_e),
        (qc.embed(qc.qutrit_project("f"), "q", layout), diss.gamma_phi_f),
    ]
    return LindbladSet(tuple(collapse), tuple(dephasing))


def lindblad_rhs(rho: np.ndarray, hmat: np.ndarray, lindblad: LindbladSet) -> np.ndarray:
    """Master-equation right-hand side at one instant, written out term by term."""
    out = -1j * (hmat @ rho - rho @ hmat)
    for op, rate in lindblad.channels():
        opd = op.conj().T
        ll = opd @ op
        out += rate * (op @ rho @ opd - 0.5 * ll @ rho - 0.5 * rho @ ll)
    return out


def lindblad_superoperator(hmat: np.ndarray, lindblad: LindbladSet) -> np.ndarray:
    """Dense ``d**2 x d**2`` generator acting on row-major ``rho.ravel()``.

    Only meant for small instances, as an independent check on the matrix kernels.
    """
    d = hmat.shape[0]
    eye = np.eye(d)
    sup = -1j * (np.kron(hmat, eye) - np.kron(eye, hmat.T))
    for op, rate in lindblad.channels():
        ll = op.conj().T @ op
        sup += rate * (np.kron(op, op.conj()) - 0.5 * np.kron(ll, eye) - 0.5 * np.kron(eye, ll.T))
    return sup


def default_dt(h: HarmonicHamiltonian, points_per_period: int = POINTS_PER_PERIOD) -> float:
    """Step that resolves the fastest harmonic with ``points_per_period`` points.

    Also capped so that ``dt * ||H|| <= 0.012`` for slow or static Hamiltonians.
    """
    envelope = np.abs(h.static)
    for op, _ in h.terms:
        envelope = envelope + np.abs(op) + np.abs(op).T
    bound = _perron_bound(envelope)  # >= ||H(t)||_2 at every t
    candidates = []
    if h.max_frequency > 0:
        candidates.append(2 * math.pi / h.max_frequency / points_per_period)
    if bound > 0:
        candidates.append(0.012 / bound)
    return min(candidates, default=1.0)


def _norm1(a: np.ndarray) -> float:
    return float(np.abs(a).sum(axis=0).max(initial=0.0))


def _perron_bound(a: np.ndarray, iterations: int = 60) -> float:
    """Upper bound on the spectral radius of a nonnegative matrix.

    Power iteration followed by the Collatz-Wielandt bound ``max_i (A x)_i / x_i``,
    which holds for any positive ``x``.
    """
    x = np.ones(a.shape[0])
    for _ in range(iterations):
        y = a @ x
        top = y.max(initial=0.0)
        if top == 0:
            return 0.0
        x = y / top + 1e-12
    return float(((a @ x) / x).max())


@dataclass
class Diagnostics:
    steps: int = 0
    dt: float = 0.0
    wall_seconds: float = 0.0
    max_norm_deviation: float = 0.0
    max_trace_deviation: float = 0.0
    max_hermiticity_drift: float = 0.0
    min_eigenvalue: float = float("nan")
    rehermitizations: int = 0


@dataclass
class PropagationResult:
    final: np.ndarray
    times: np.ndarray
    observables: dict[str, np.ndarray] = field(default_factory=dict)
    diagnostics: Diagnostics = field(default_factory=Diagnostics)


class CompiledHamiltonian:
    """Sparse evaluation of ``H(t)`` (optionally minus ``i K / 2``) on a shared pattern.

    All harmonics are scattered onto the union sparsity pattern once; each
    evaluation is then one small dense product plus an in-place data update.
    """

    def __init__(self, h: HarmonicHamiltonian, anti_hermitian: np.ndarray | None = None):
        static = np.array(h.static)
        if anti_hermitian is not None:
            static = static - 0.5j * anti_hermitian
        mats = [static]
        freqs = [0.0]
        for op, nu in h.terms:
            mats += [op, op.conj().T]
            freqs += [nu, -nu]
        pattern = sp.csr_matrix(sum(np.abs(m) for m in mats) if mats else static)
        pattern.sort_indices()
        rows = np.repeat(np.arange(pattern.shape[0]), np.diff(pattern.indptr))
        cols = pattern.indices
        self.coeffs = np.stack([m[rows, cols] for m in mats], axis=1)
        self.freqs = np.asarray(freqs)
        self.matrix = sp.csr_matrix(
            (np.zeros(len(cols), dtype=complex), cols.copy(), pattern.indptr.copy()), shape=static.shape
        )
        self.static_only = len(freqs) == 1
        if self.static_only:
            self.matrix.data[:] = self.coeffs[:, 0]
        self._t = None

    def at(self, t: float) -> sp.csr_matrix:
        if not self.static_only and t != self._t:
            self.matrix.data[:] = self.coeffs @ np.exp(1j * self.freqs * t)
            self._t = t
        return self.matrix


class _JumpKernel:
    """Computes ``sum_k rate_k L_k rho L_k^+``.

    Operators with at most one nonzero per row (ladder operators, qutrit
    transitions, projectors) reduce to a weighted gather on the flat matrix;
    all of those are merged into a single sparse map on ``rho.ravel()`` whose
    size is the total gather count, not ``d**4``.  Anything else falls back to
    sparse products.
    """

    def __init__(self, channels, d: int):
        self.d = d
        dst, src, weights = [], [], []
        self.general = []
        for op, rate in channels:
            s = sp.csr_matrix(op)
            s.eliminate_zeros()
            counts = np.diff(s.indptr)
            if counts.max(initial=0) <= 1:
                rows = np.nonzero(counts)[0]
                w = math.sqrt(rate) * s.data
                dst.append((rows[:, None] * d + rows[None, :]).ravel())
                src.append((s.indices[:, None] * d + s.indices[None, :]).ravel())
                weights.append(np.outer(w, w.conj()).ravel())
            else:
                root = math.sqrt(rate) * s
                self.general.append(root)
        self.gather = None
        if dst:
            self.gather = sp.csr_matrix(
                (np.concatenate(weights), (np.concatenate(dst), np.concatenate(src))), shape=(d * d, d * d)
            )

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        if self.gather is not None:
            out = (self.gather @ rho.reshape(-1)).reshape(self.d, self.d)
        else:
            out = np.zeros_like(rho)
        for s in self.general:
            out += (s @ (s @ rho).conj().T).conj().T
        return out


def _anti_hermitian_part(channels, d: int) -> np.ndarray | None:
    if not channels:
        return None
    k = np.zeros((d, d), dtype=complex)
    for op, rate in channels:
        k += rate * (op.conj().T @ op)
    return k


def _step_grid(t_final: float, dt: float) -> tuple[int, float]:
    if dt <= 0 or not math.isfinite(dt):
        raise ValueError(f"dt must be positive, got {dt}")
    if t_final < 0:
        raise ValueError("t_final must be >= 0")
    n = int(math.ceil(t_final / dt - 1e-9)) if t_final > 0 else 0
    return n, (t_final / n if n else 0.0)


def _sample_steps(n: int, samples: int) -> np.ndarray:
    samples = max(2, int(samples))
    return np.unique(np.round(np.linspace(0, n, samples)).astype(int))


def _rk4(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y: np.ndarray,
    n: int,
    dt: float,
    on_step: Callable[[int, float, np.ndarray], np.ndarray],
) -> np.ndarray:
    t = 0.0
    half = 0.5 * dt
    for i in range(1, n + 1):
        k1 = rhs(t, y)
        k2 = rhs(t + half, y + half * k1)
        k3 = rhs(t + half, y + half * k2)
        k4 = rhs(t + dt, y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = i * dt
        y = on_step(i, t, y)
    return y


def propagate_state(
    h: HarmonicHamiltonian,
    psi0: np.ndarray,
    t_final: float,
    dt: float | None = None,
    observables: Mapping[str, np.ndarray] | None = None,
    samples: int = DEFAULT_SAMPLES,
) -> PropagationResult:
    """Integrate ``d psi/dt = -i H(t) psi`` from 0 to ``t_final``.

    The step is shortened so that an integer number of steps lands exactly on
    ``t_final``.
    """
    psi = np.array(psi0, dtype=complex).reshape(-1)
    if psi.shape[0] != h.dim:
        raise ValueError(f"state has dimension {psi.shape[0]}, Hamiltonian {h.dim}")
    if abs(np.linalg.norm(psi) - 1.0) > 1e-10:
        raise ValueError("initial state is not normalized")
    n, step = _step_grid(t_final, default_dt(h) if dt is None else dt)
    kernel = CompiledHamiltonian(h)
    observables = dict(observables or {})
    sample_at = set(_sample_steps(n, samples).tolist())
    times, values = [], {k: [] for k in observables}
    diag = Diagnostics(steps=n, dt=step)

    def record(t, y):
        times.append(t)
        for k, op in observables.items():
            values[k].append(np.vdot(y, op @ y))

    def rhs(t, y):
        return -1j * (kernel.at(t) @ y)

    def on_step(i, t, y):
        dev = abs(np.linalg.norm(y) - 1.0)
        diag.max_norm_deviation = max(diag.max_norm_deviation, dev)
        if not dev <= NORM_ABORT:  # also catches nan
            diag.wall_seconds = time.perf_counter() - start
            raise IntegrationError(f"norm drift {dev:.3g} at t={t:.4g} ns (step {i})", diag)
        if i in sample_at:
            record(t, y)
        return y

    start = time.perf_counter()
    record(0.0, psi)
    psi = _rk4(rhs, psi, n, step, on_step)
    diag.wall_seconds = time.perf_counter() - start
    return PropagationResult(
        final=psi,
        times=np.asarray(times),
        observables={k: np.asarray(v) for k, v in values.items()},
        diagnostics=diag,
    )


def make_master_rhs(h: HarmonicHamiltonian, lindblad: LindbladSet) -> Callable[[float, np.ndarray], np.ndarray]:
    """Fast ``(t, rho) -> d rho/dt`` used by :func:`evolve_master`.

    Assembled as ``Z + Z^+`` with ``Z = -i H_eff rho + J(rho) / 2``,
    ``H_eff = H - i/2 sum_k rate_k L_k^+ L_k`` and ``J`` the jump term, so the
    result is Hermitian to rounding whenever ``rho`` is.
    """
    channels = lindblad.channels()
    kernel = CompiledHamiltonian(h, _anti_hermitian_part(channels, h.dim))
    jumps = _JumpKernel(channels, h.dim) if channels else None

    def rhs(t: float, rho: np.ndarray) -> np.ndarray:
        z = -1j * (kernel.at(t) @ rho)
        if jumps is not None:
            z += 0.5 * jumps(rho)
        return z + z.conj().T

    return rhs


def evolve_master(
    h: HarmonicHamiltonian,
    lindblad: LindbladSet,
    rho0: np.ndarray,
    t_final: float,
    dt: float | None = None,
    observables: Mapping[str, np.ndarray] | None = None,
    samples: int = DEFAULT_SAMPLES,
) -> PropagationResult:
    """Integrate the Lindblad master equation from 0 to ``t_final``.

    The automatic step also keeps ``dt * sum_k rate_k ||L_k^+ L_k|| <= 0.05``.
    ``rho`` is re-Hermitized every ``REHERMITIZE_EVERY`` steps; the drift
    removed there is reported in the diagnostics.
    """
    rho = np.array(rho0, dtype=complex)
    d = h.dim
    if rho.shape != (d, d):
        raise ValueError(f"rho has shape {rho.shape}, Hamiltonian dimension {d}")
    if not qc.is_hermitian(rho, 1e-10):
        raise ValueError("rho0 is not Hermitian")
    if abs(np.trace(rho) - 1.0) > 1e-10:
        raise ValueError("rho0 does not have unit trace")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < -1e-10:
        raise ValueError("rho0 is not positive semidefinite")
    if dt is None:
        dt = default_dt(h)
        loss = sum(rate * _norm1(op.conj().T @ op) for op, rate in lindblad.channels())
        if loss > 0:
            dt = min(dt, 0.05 / loss)
    n, step = _step_grid(t_final, dt)
    rhs = make_master_rhs(h, lindblad)
    observables = dict(observables or {})
    sample_at = set(_sample_steps(n, samples).tolist())
    times, values = [], {k: [] for k in observables}
    diag = Diagnostics(steps=n, dt=step)

    def record(t, y):
        times.append(t)
        for k, op in observables.items():
            values[k].append(np.einsum("ij,ji->", op, y))

    def check_hermiticity(y):
        drift = float(np.max(np.abs(y - y.conj().T)))
        diag.max_hermiticity_drift = max(diag.max_hermiticity_drift, drift)

    def on_step(i, t, y):
        dev = abs(np.trace(y).real - 1.0)
        diag.max_trace_deviation = max(diag.max_trace_deviation, dev)
        if not dev <= TRACE_ABORT:
            diag.wall_seconds = time.perf_counter() - start
            raise IntegrationError(f"trace drift {dev:.3g} at t={t:.4g} ns (step {i})", diag)
        if i % REHERMITIZE_EVERY == 0:
            check_hermiticity(y)
            y = 0.5 * (y + y.conj().T)
            diag.rehermitizations += 1
        if i in sample_at:
            record(t, y)
        return y

    start = time.perf_counter()
    record(0.0, rho)
    rho = _rk4(rhs, rho, n, step, on_step)
    check_hermiticity(rho)
    diag.min_eigenvalue = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min())
    diag.wall_seconds = time.perf_counter() - start
    log.debug("master equation: %d steps of %.4g ns in %.2f s", n, step, diag.wall_seconds)
    return PropagationResult(
        final=rho,
        times=np.asarray(times),
        observables={k: np.asarray(v) for k, v in values.items()},
        diagnostics=diag,
    )
