"""Closed-form states for the parallel pair coupling and the fidelity measures."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import quantum as qc
from .hamiltonian import plus_state
from .model import SystemSpec
from .quantum import HilbertLayout


@dataclass(frozen=True)
class PairAmplitudes:
    """Per pair: amplitude ``c`` of |1>_a|0>_b and ``s`` of |0>_a|1>_b."""

    c: tuple[complex, ...]
    s: tuple[complex, ...]

    @property
    def n_pairs(self) -> int:
        return len(self.c)


@dataclass(frozen=True)
class PhaseLedger:
    global_phase: float
    branch_phases: tuple[tuple[float, float], ...]


def initial_state(spec: SystemSpec) -> np.ndarray:
    """Qutrit in |+>, every a resonator holding one photon, every b resonator empty."""
    fock = spec.n_max + 1
    one, zero = qc.basis(fock, 1), qc.basis(fock, 0)
    return qc.product_state([plus_state()] + [one] * spec.N + [zero] * spec.N)


def pair_evolution(lambdas: Sequence[float], t: float) -> PairAmplitudes:
    lam = np.asarray(lambdas, dtype=float)
    if np.any(lam <= 0):
        raise ValueError("pair couplings must be positive")
    half = lam * t / 2
    return PairAmplitudes(tuple(complex(x) for x in np.cos(half)), tuple(complex(x) for x in 1j * np.sin(half)))


def pair_state(amps: PairAmplitudes, n_max: int = 1) -> np.ndarray:
    """Product of per-pair superpositions on the resonator-only layout ``a1..aN b1..bN``."""
    n = amps.n_pairs
    layout = HilbertLayout.system(n, n_max, qutrit=False)
    out = np.zeros(layout.total, dtype=complex)
    for branch in itertools.product((0, 1), repeat=n):
        amp = 1.0 + 0j
        occ_a, occ_b = [], []
        for j, which in enumerate(branch):
            if which == 0:
                amp *= amps.c[j]
                occ_a.append(1)
                occ_b.append(0)
            else:
                amp *= amps.s[j]
                occ_a.append(0)
                occ_b.append(1)
        out[layout.index(occ_a + occ_b)] += amp
    return out


def epr_target(n_pairs: int, n_max: int = 1) -> np.ndarray:
    """``prod_j (|1>_aj|0>_bj + i|0>_aj|1>_bj)/sqrt(2)`` in resonator layout order."""
    if n_pairs < 1:
        raise ValueError("need at least one pair")
    r = 1 / math.sqrt(2)
    return pair_state(PairAmplitudes((r,) * n_pairs, (1j * r,) * n_pairs), n_max)


def restore_interaction_picture(amps: PairAmplitudes, spec: SystemSpec, t: float) -> tuple[np.ndarray, PhaseLedger]:
    """Undo the pulse and Stark frames on a parallel-coupling state.

    Each pair's |1,0> branch picks up ``g^2 t/Delta + mu^2 t/(2 Delta)`` and its
    |0,1> branch ``g^2 t/(2 Delta) + mu^2 t/Delta``.  The mean of the two, summed
    over pairs, is reported as the global phase and stripped (as is the
    common pulse-frame factor); the qutrit stays in |+>.
    """
    c, s, branches = [], [], []
    glob = 0.0
    for j in range(amps.n_pairs):
        g2 = spec.g[j] ** 2 / spec.Delta[j]
        m2 = spec.mu[j] ** 2 / spec.Delta[j]
        pc = (g2 + m2 / 2) * t
        ps = (g2 / 2 + m2) * t
        branches.append((pc, ps))
        mean = 0.5 * (pc + ps)
        glob += mean
        c.append(amps.c[j] * np.exp(1j * (pc - mean)))
        s.append(amps.s[j] * np.exp(1j * (ps - mean)))
    res = pair_state(PairAmplitudes(tuple(c), tuple(s)), spec.n_max)
    return np.kron(plus_state(), res), PhaseLedger(glob, tuple(branches))


def fidelity(rho_reduced: np.ndarray, target: np.ndarray) -> float:
    """``sqrt(<target| rho |target>)``, clipped to [0, 1]."""
    target = np.asarray(target).reshape(-1)
    if rho_reduced.shape != (target.size, target.size):
        raise ValueError(f"rho shape {rho_reduced.shape} does not match target dimension {target.size}")
    overlap = np.vdot(target, rho_reduced @ target).real / np.vdot(target, target).real
    return float(math.sqrt(min(max(overlap, 0.0), 1.0)))


def state_fidelity(psi: np.ndarray, target: np.ndarray) -> float:
    return fidelity(np.outer(psi, np.conj(psi)), target)


def resonator_state(rho: np.ndarray, layout: HilbertLayout) -> tuple[np.ndarray, HilbertLayout]:
    """Trace the qutrit out of a full-space density matrix (or ket)."""
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    keep = [l for l in layout.labels if l != "q"]
    return qc.partial_trace(rho, layout, keep), layout.sublayout(keep)


def pair_fidelities(rho_res: np.ndarray, layout: HilbertLayout) -> tuple[float, ...]:
    """Fidelity of each (a_j, b_j) to the single-pair EPR state, other modes traced out."""
    n = sum(1 for l in layout.labels if l.startswith("a"))
    n_max = layout.dims[0] - 1
    target = epr_target(1, n_max)
    return tuple(
        fidelity(qc.partial_trace(rho_res, layout, [f"a{j}", f"b{j}"]), target) for j in range(1, n + 1)
    )


def joint_fidelity(rho_res: np.ndarray, layout: HilbertLayout) -> float:
    n = sum(1 for l in layout.labels if l.startswith("a"))
    return fidelity(rho_res, epr_target(n, layout.dims[0] - 1))
