"""Dense operator algebra on a qutrit + resonator tensor space.

Every operator is a plain ``numpy`` complex array.  Tensor ordering is fixed
by :class:`HilbertLayout`: qutrit first (basis ``g, e, f``), then the
``a`` resonators, then the ``b`` resonators, each truncated to ``n_max + 1``
Fock levels.
"""
from __future__ import annotations

import math
import string
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

QUTRIT_LEVELS = {"g": 0, "e": 1, "f": 2}

HERMITIAN_ATOL = 1e-12


@dataclass(frozen=True)
class HilbertLayout:
    """Ordered subsystem dimensions with optional labels."""

    dims: tuple[int, ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 1 for d in dims):
            raise ValueError(f"invalid subsystem dimensions {self.dims!r}")
        object.__setattr__(self, "dims", dims)
        labels = tuple(self.labels) or tuple(str(i) for i in range(len(dims)))
        if len(labels) != len(dims) or len(set(labels)) != len(labels):
            raise ValueError("labels must be unique and match dims")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def system(cls, n_pairs: int, n_max: int, qutrit: bool = True) -> "HilbertLayout":
        """Layout ``q, a1..aN, b1..bN`` (``qutrit=False`` drops ``q``)."""
        if n_pairs < 1 or n_max < 1:
            raise ValueError("need n_pairs >= 1 and n_max >= 1")
        fock = n_max + 1
        labels = [f"a{j}" for j in range(1, n_pairs + 1)]
        labels += [f"b{j}" for j in range(1, n_pairs + 1)]
        dims = [fock] * (2 * n_pairs)
        if qutrit:
            labels.insert(0, "q")
            dims.insert(0, 3)
        return cls(tuple(dims), tuple(labels))

    @property
    def total(self) -> int:
        return math.prod(self.dims)

    def __len__(self) -> int:
        return len(self.dims)

    def position(self, subsystem: int | str) -> int:
        if isinstance(subsystem, str):
            try:
                return self.labels.index(subsystem)
            except ValueError:
                raise KeyError(f"no subsystem labelled {subsystem!r}") from None
        if not 0 <= subsystem < len(self.dims):
            raise IndexError(f"subsystem {subsystem} out of range")
        return int(subsystem)

    def index(self, multi: Sequence[int]) -> int:
        """Flat basis index of a multi-index (row-major, first factor slowest)."""
        if len(multi) != len(self.dims):
            raise ValueError("multi-index length does not match layout")
        return int(np.ravel_multi_index(tuple(multi), self.dims))

    def multi_index(self, index: int) -> tuple[int, ...]:
        return tuple(int(i) for i in np.unravel_index(index, self.dims))

    def sublayout(self, keep: Iterable[int | str]) -> "HilbertLayout":
        pos = sorted({self.position(k) for k in keep})
        return HilbertLayout(tuple(self.dims[p] for p in pos), tuple(self.labels[p] for p in pos))


# -- primitives ---------------------------------------------------------------

def _check_dim(d: int) -> None:
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")


def annihilate(d: int) -> np.ndarray:
    _check_dim(d)
    return np.diag(np.sqrt(np.arange(1, d, dtype=float)), k=1).astype(complex)


def create(d: int) -> np.ndarray:
    return annihilate(d).conj().T


def number(d: int) -> np.ndarray:
    _check_dim(d)
    return np.diag(np.arange(d, dtype=float)).astype(complex)


def qutrit_transfer(x: str, y: str) -> np.ndarray:
    """``|x><y|`` on the qutrit, e.g. ``qutrit_transfer("f", "g")`` is S+_fg."""
    if x not in QUTRIT_LEVELS or y not in QUTRIT_LEVELS:
        raise ValueError(f"qutrit levels are g, e, f; got {x!r}, {y!r}")
    out = np.zeros((3, 3), dtype=complex)
    out[QUTRIT_LEVELS[x], QUTRIT_LEVELS[y]] = 1.0
    return out


def qutrit_project(x: str) -> np.ndarray:
    return qutrit_transfer(x, x)


def basis(d: int, n: int) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[n] = 1.0
    return v


# -- tensor bookkeeping -------------------------------------------------------

def kron(*ops: np.ndarray) -> np.ndarray:
    out = np.asarray(ops[0], dtype=complex)
    for op in ops[1:]:
        out = np.kron(out, op)
    return out


def embed(op: np.ndarray, subsystem: int | str, layout: HilbertLayout) -> np.ndarray:
    """Place ``op`` on one factor of ``layout``, identities elsewhere."""
    pos = layout.position(subsystem)
    op = np.asarray(op, dtype=complex)
    if op.shape != (layout.dims[pos],) * 2:
        raise ValueError(
            f"operator shape {op.shape} does not match subsystem "
            f"{layout.labels[pos]!r} of dimension {layout.dims[pos]}"
        )
    left = math.prod(layout.dims[:pos])
    right = math.prod(layout.dims[pos + 1:])
    return np.kron(np.kron(np.eye(left), op), np.eye(right))


def embed_many(factors: dict, layout: HilbertLayout) -> np.ndarray:
    """Tensor product with ``factors[subsystem]`` placed on each listed factor."""
    placed = {layout.position(k): np.asarray(v, dtype=complex) for k, v in factors.items()}
    mats = [placed.get(p, np.eye(d)) for p, d in enumerate(layout.dims)]
    for p, m in placed.items():
        if m.shape != (layout.dims[p],) * 2:
            raise ValueError(f"operator for subsystem {layout.labels[p]!r} has wrong shape")
    return kron(*mats)


def product_state(vectors: Sequence[np.ndarray]) -> np.ndarray:
    return kron(*[np.asarray(v, dtype=complex).reshape(-1) for v in vectors]).reshape(-1)


def partial_trace(rho: np.ndarray, layout: HilbertLayout, keep: Iterable[int | str]) -> np.ndarray:
    """Reduced density matrix on ``keep`` (returned in layout order)."""
    keep = sorted({layout.position(k) for k in keep})
    if not keep:
        raise ValueError("keep set is empty")
    rho = np.asarray(rho)
    if rho.shape != (layout.total, layout.total):
        raise ValueError(f"rho shape {rho.shape} does not match layout total {layout.total}")
    n = len(layout.dims)
    letters = string.ascii_letters
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for p in range(n):
        if p not in keep:
            col[p] = row[p]
    out = "".join(row[p] for p in keep) + "".join(col[p] for p in keep)
    t = np.einsum("".join(row) + "".join(col) + "->" + out, rho.reshape(layout.dims * 2))
    d = math.prod(layout.dims[p] for p in keep)
    return t.reshape(d, d)


def dag(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def is_hermitian(a: np.ndarray, atol: float = HERMITIAN_ATOL) -> bool:
    return bool(np.max(np.abs(a - a.conj().T), initial=0.0) < atol)


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def expm_oracle(a: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a truncated Taylor series.

    Kept independent of ``scipy.linalg.expm`` so it can serve as a
    cross-check for the time integrators.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expm_oracle needs a square matrix")
    norm = np.linalg.norm(a, 1)
    squarings = max(0, int(math.ceil(math.log2(norm / 0.25)))) if norm > 0.25 else 0
    x = a / 2.0**squarings
    # 0.25**20 / 20! is far below double precision
    result = np.eye(a.shape[0], dtype=complex)
    term = np.eye(a.shape[0], dtype=complex)
    for k in range(1, 21):
        term = term @ x / k
        result = result + term
    for _ in range(squarings):
        result = result @ result
    return result
