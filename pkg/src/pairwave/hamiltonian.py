"""Hamiltonians of the qutrit-mediated resonator-pair coupling.

Every time-dependent Hamiltonian here is a finite sum of single-frequency
harmonics, stored as :class:`HarmonicHamiltonian`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import quantum as qc
from .model import SystemSpec, crosstalk_detunings, derive
from .quantum import HilbertLayout

SQRT_HALF = 1.0 / math.sqrt(2.0)

# columns are |+>, |->, |f> in the g, e, f basis
ROTATED_BASIS = np.array(
    [[SQRT_HALF, SQRT_HALF, 0.0], [SQRT_HALF, -SQRT_HALF, 0.0], [0.0, 0.0, 1.0]], dtype=complex
)


def plus_state() -> np.ndarray:
    return ROTATED_BASIS[:, 0].copy()


def minus_state() -> np.ndarray:
    return ROTATED_BASIS[:, 1].copy()


def to_rotated(qutrit_vec: np.ndarray) -> np.ndarray:
    """Qutrit amplitudes in (g, e, f) -> amplitudes in (+, -, f)."""
    return ROTATED_BASIS.conj().T @ np.asarray(qutrit_vec, dtype=complex)


def from_rotated(rotated_vec: np.ndarray) -> np.ndarray:
    return ROTATED_BASIS @ np.asarray(rotated_vec, dtype=complex)


def s_x() -> np.ndarray:
    """S+_eg + S-_eg, which equals |+><+| - |-><-| on the qutrit."""
    return qc.qutrit_transfer("e", "g") + qc.qutrit_transfer("g", "e")


@dataclass(frozen=True, eq=False)
class HarmonicHamiltonian:
    """``static + sum_k (O_k exp(i nu_k t) + h.c.)`` on ``layout``."""

    layout: HilbertLayout
    static: np.ndarray
    terms: tuple[tuple[np.ndarray, float], ...] = ()

    def __post_init__(self):
        d = self.layout.total
        static = np.array(self.static, dtype=complex)
        if static.shape != (d, d):
            raise ValueError(f"static term has shape {static.shape}, expected {(d, d)}")
        kept = []
        for op, nu in self.terms:
            op = np.array(op, dtype=complex)
            nu = float(nu)
            if op.shape != (d, d):
                raise ValueError("harmonic operator has wrong shape")
            if not math.isfinite(nu):
                raise ValueError("harmonic frequency must be finite")
            if nu == 0.0:
                static = static + op + op.conj().T
            else:
                op.setflags(write=False)
                kept.append((op, nu))
        if not qc.is_hermitian(static):
            raise ValueError("static term is not Hermitian")
        static.setflags(write=False)
        object.__setattr__(self, "static", static)
        object.__setattr__(self, "terms", tuple(kept))

    @property
    def dim(self) -> int:
        return self.layout.total

    @property
    def max_frequency(self) -> float:
        return max((abs(nu) for _, nu in self.terms), default=0.0)

    def evaluate(self, t: float) -> np.ndarray:
        out = np.array(self.static)
        for op, nu in self.terms:
            x = op * np.exp(1j * nu * t)
            out += x + x.conj().T
        return out

    __call__ = evaluate

    def __add__(self, other: "HarmonicHamiltonian") -> "HarmonicHamiltonian":
        if other.layout != self.layout:
            raise ValueError("layouts differ")
        return HarmonicHamiltonian(self.layout, self.static + other.static, self.terms + other.terms)


def system_layout(spec: SystemSpec) -> HilbertLayout:
    return HilbertLayout.system(spec.N, spec.n_max)


def resonator_layout(spec: SystemSpec) -> HilbertLayout:
    return HilbertLayout.system(spec.N, spec.n_max, qutrit=False)


class _Ops:
    """Embedded single-factor operators for one layout."""

    def __init__(self, layout: HilbertLayout):
        self.layout = layout
        self._cache: dict = {}

    def __call__(self, label: str, which: str = "a") -> np.ndarray:
        key = (label, which)
        if key not in self._cache:
            d = self.layout.dims[self.layout.position(label)]
            op = {"a": qc.annihilate, "n": qc.number}[which](d)
            self._cache[key] = qc.embed(op, label, self.layout)
        return self._cache[key]

    def qutrit(self, op: np.ndarray) -> np.ndarray:
        return qc.embed(op, "q", self.layout)


def _dag(a):
    return a.conj().T


def coupling_hamiltonian(spec: SystemSpec) -> HarmonicHamiltonian:
    """Qutrit-resonator exchange plus the resonant g<->e pulse (no leakage, no crosstalk)."""
    layout = system_layout(spec)
    ops = _Ops(layout)
    s_fg = ops.qutrit(qc.qutrit_transfer("f", "g"))
    s_fe = ops.qutrit(qc.qutrit_transfer("f", "e"))
    terms = []
    for j in range(spec.N):
        terms.append((spec.g[j] * ops(f"a{j + 1}") @ s_fg, spec.Delta[j]))
        terms.append((spec.mu[j] * ops(f"b{j + 1}") @ s_fe, spec.Delta[j]))
    static = spec.Omega * ops.qutrit(s_x())
    return HarmonicHamiltonian(layout, static, tuple(terms))


def crosstalk_hamiltonian(spec: SystemSpec) -> HarmonicHamiltonian:
    """Direct resonator-resonator exchange at uniform strength ``gcs_ratio * g_m``."""
    layout = system_layout(spec)
    ops = _Ops(layout)
    g_cs = spec.g_cs
    terms = [
        (g_cs * ops(x) @ _dag(ops(y)), nu) for (x, y), nu in crosstalk_detunings(spec).items()
    ]
    return HarmonicHamiltonian(layout, np.zeros((layout.total,) * 2), tuple(terms))


def leakage_hamiltonian(spec: SystemSpec) -> HarmonicHamiltonian:
    """Off-resonant pulse action on the e<->f transition."""
    layout = system_layout(spec)
    op = spec.leakage_rabi * qc.embed(qc.qutrit_transfer("f", "e"), "q", layout)
    nu = spec.omega_fe - spec.omega_eg
    return HarmonicHamiltonian(layout, np.zeros((layout.total,) * 2), ((op, nu),))


def build_full(spec: SystemSpec) -> HarmonicHamiltonian:
    """Interaction-picture Hamiltonian with the optional crosstalk and leakage terms."""
    h = coupling_hamiltonian(spec)
    if spec.include_crosstalk:
        h = h + crosstalk_hamiltonian(spec)
    if spec.include_leakage:
        h = h + leakage_hamiltonian(spec)
    return h


def build_effective(spec: SystemSpec) -> HarmonicHamiltonian:
    """Dispersive Hamiltonian after eliminating |f>: Stark shifts, Raman exchange, pulse."""
    layout = system_layout(spec)
    ops = _Ops(layout)
    pg = ops.qutrit(qc.qutrit_project("g"))
    pe = ops.qutrit(qc.qutrit_project("e"))
    s_eg = ops.qutrit(qc.qutrit_transfer("e", "g"))
    h = spec.Omega * ops.qutrit(s_x())
    for j in range(spec.N):
        a, b = ops(f"a{j + 1}"), ops(f"b{j + 1}")
        d = spec.Delta[j]
        lam = spec.g[j] * spec.mu[j] / d
        h = h - spec.g[j] ** 2 / d * (a @ _dag(a) @ pg)
        h = h - spec.mu[j] ** 2 / d * (b @ _dag(b) @ pe)
        raman = a @ _dag(b) @ s_eg
        h = h - lam * (raman + _dag(raman))
    return HarmonicHamiltonian(layout, h)


def _pair_exchange(ops: _Ops, j: int) -> np.ndarray:
    a, b = ops(f"a{j + 1}"), ops(f"b{j + 1}")
    return a @ _dag(b)


def build_parallel(spec: SystemSpec, with_qutrit: bool = True) -> np.ndarray:
    """Static parallel pair coupling ``-sum_j lambda_j/2 (a_j b_j^+ + h.c.)``.

    With the qutrit factor the coupling is multiplied by ``|+><+| - |-><-|``;
    without it the result lives on the resonator-only layout.
    """
    layout = system_layout(spec) if with_qutrit else resonator_layout(spec)
    ops = _Ops(layout)
    lam = derive(spec).lambda_
    h = np.zeros((layout.total,) * 2, dtype=complex)
    for j in range(spec.N):
        x = _pair_exchange(ops, j)
        h -= lam[j] / 2 * (x + _dag(x))
    if with_qutrit:
        h = h @ ops.qutrit(s_x())
    return h


def build_detuned_parallel(spec: SystemSpec) -> HarmonicHamiltonian:
    """Pair coupling in the doubly rotated frame, keeping the residual detuning ``delta_j``.

    Reduces to :func:`build_parallel` when ``g_j == mu_j``.
    """
    layout = system_layout(spec)
    ops = _Ops(layout)
    dq = derive(spec)
    sz = ops.qutrit(s_x())
    terms = tuple((-dq.lambda_[j] / 2 * _pair_exchange(ops, j) @ sz, dq.delta[j]) for j in range(spec.N))
    return HarmonicHamiltonian(layout, np.zeros((layout.total,) * 2), terms)


def frame_generators(spec: SystemSpec) -> tuple[np.ndarray, np.ndarray]:
    """Generators of the two frame changes: the pulse frame and the Stark frame."""
    layout = system_layout(spec)
    ops = _Ops(layout)
    h0 = spec.Omega * ops.qutrit(s_x())
    h0p = np.zeros((layout.total,) * 2, dtype=complex)
    for j in range(spec.N):
        a, b = ops(f"a{j + 1}"), ops(f"b{j + 1}")
        d = spec.Delta[j]
        h0p -= 0.5 * (spec.g[j] ** 2 / d * a @ _dag(a) + spec.mu[j] ** 2 / d * b @ _dag(b))
    return h0, h0p


def excitation_operator(layout: HilbertLayout, labels: Iterable[str] | None = None) -> np.ndarray:
    """Total photon number plus the |f> population (conserved without pulse and leakage)."""
    ops = _Ops(layout)
    labels = [l for l in layout.labels if l != "q"] if labels is None else list(labels)
    out = sum(ops(l, "n") for l in labels)
    if "q" in layout.labels:
        out = out + ops.qutrit(qc.qutrit_project("f"))
    return out
