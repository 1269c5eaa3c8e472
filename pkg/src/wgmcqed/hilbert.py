"""Operator algebra on truncated composite Hilbert spaces.

The composite space of the cavity-QD system is ordered as
``(mode_cw, mode_ccw, emitter)``: two bosonic factors truncated at ``n_fock``
levels each and one two-level factor.  Basis index ``1`` of the emitter
factor is the excited state, so ``sigma_minus`` maps index 1 to index 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from numbers import Number

import numpy as np
import scipy.sparse as sp

from .errors import InvalidDimensionError, LayoutMismatchError

CW, CCW, EMITTER = 0, 1, 2


@dataclass(frozen=True)
class SpaceLayout:
    """Per-factor dimensions of a tensor-product space, in fixed order."""

    mode_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.mode_dims)
        if not dims or any(d < 1 for d in dims):
            raise InvalidDimensionError(f"bad factor dimensions {self.mode_dims!r}")
        object.__setattr__(self, "mode_dims", dims)

    @classmethod
    def cavity_qd(cls, n_fock: int = 6) -> "SpaceLayout":
        """Two bosonic modes of ``n_fock`` levels plus one two-level emitter."""
        if int(n_fock) < 2:
            raise InvalidDimensionError(f"n_fock must be >= 2, got {n_fock}")
        return cls((int(n_fock), int(n_fock), 2))

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.mode_dims))

    @property
    def n_factors(self) -> int:
        return len(self.mode_dims)

    @property
    def n_fock(self) -> int:
        return self.mode_dims[0]

    @property
    def is_cavity_qd(self) -> bool:
        d = self.mode_dims
        return len(d) == 3 and d[0] == d[1] and d[0] >= 2 and d[2] == 2

    def basis_labels(self) -> np.ndarray:
        """Per-factor level index of every composite basis state, shape (D, n_factors)."""
        grids = np.meshgrid(*[np.arange(d) for d in self.mode_dims], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def excitation_numbers(self) -> np.ndarray:
        """Total excitation (photons plus emitter) of each composite basis state."""
        return self.basis_labels().sum(axis=1)


class OperatorMatrix:
    """Immutable sparse complex matrix tied to a :class:`SpaceLayout`.

    Storage is CSR with sorted indices and no explicit zeros, so iteration
    order over :attr:`entries` is deterministic.
    """

    __slots__ = ("_layout", "_mat")

    def __init__(self, layout: SpaceLayout, matrix):
        mat = sp.csr_array(matrix, dtype=np.complex128, copy=True)
        n = layout.total_dim
        if mat.shape != (n, n):
            raise LayoutMismatchError(
                f"matrix shape {mat.shape} does not match layout dimension {n}"
            )
        mat.eliminate_zeros()
        mat.sort_indices()
        for arr in (mat.data, mat.indices, mat.indptr):
            arr.flags.writeable = False
        self._layout = layout
        self._mat = mat

    @classmethod
    def from_entries(cls, layout: SpaceLayout, entries: dict) -> "OperatorMatrix":
        n = layout.total_dim
        if entries:
            rows, cols = zip(*entries.keys())
            vals = list(entries.values())
        else:
            rows, cols, vals = (), (), ()
        if any(r < 0 or r >= n for r in rows) or any(c < 0 or c >= n for c in cols):
            raise InvalidDimensionError("entry index out of range")
        return cls(layout, sp.coo_array((vals, (rows, cols)), shape=(n, n)))

    @classmethod
    def identity(cls, layout: SpaceLayout) -> "OperatorMatrix":
        return cls(layout, sp.identity(layout.total_dim, format="csr"))

    @classmethod
    def zeros(cls, layout: SpaceLayout) -> "OperatorMatrix":
        n = layout.total_dim
        return cls(layout, sp.csr_array((n, n)))

    @property
    def layout(self) -> SpaceLayout:
        return self._layout

    @property
    def dim(self) -> int:
        return self._layout.total_dim

    @property
    def nnz(self) -> int:
        return self._mat.nnz

    @property
    def csr(self) -> sp.csr_array:
        """The underlying read-only CSR array."""
        return self._mat

    @property
    def entries(self) -> dict:
        coo = self._mat.tocoo()
        return {(int(r), int(c)): complex(v) for r, c, v in zip(coo.row, coo.col, coo.data)}

    def to_dense(self) -> np.ndarray:
        return self._mat.toarray()

    def _check(self, other: "OperatorMatrix"):
        if not isinstance(other, OperatorMatrix):
            return NotImplemented
        if other._layout != self._layout:
            raise LayoutMismatchError(f"{self._layout} vs {other._layout}")
        return None

    def __add__(self, other):
        if (r := self._check(other)) is not None:
            return r
        return OperatorMatrix(self._layout, self._mat + other._mat)

    def __sub__(self, other):
        if (r := self._check(other)) is not None:
            return r
        return OperatorMatrix(self._layout, self._mat - other._mat)

    def __neg__(self):
        return OperatorMatrix(self._layout, -self._mat)

    def __mul__(self, scalar):
        if not isinstance(scalar, Number):
            return NotImplemented
        return OperatorMatrix(self._layout, self._mat * complex(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if not isinstance(scalar, Number):
            return NotImplemented
        return OperatorMatrix(self._layout, self._mat / complex(scalar))

    def __matmul__(self, other):
        if (r := self._check(other)) is not None:
            return r
        return OperatorMatrix(self._layout, self._mat @ other._mat)

    def __eq__(self, other):
        if not isinstance(other, OperatorMatrix):
            return NotImplemented
        return self._layout == other._layout and (self._mat != other._mat).nnz == 0

    __hash__ = None

    def dag(self) -> "OperatorMatrix":
        return OperatorMatrix(self._layout, self._mat.conj().T)

    def trace(self) -> complex:
        return complex(self._mat.diagonal().sum())

    def is_hermitian(self, atol: float = 1e-14) -> bool:
        diff = self._mat - self._mat.conj().T
        return diff.nnz == 0 or float(np.abs(diff.data).max()) <= atol

    def __repr__(self):
        return f"OperatorMatrix(dims={self._layout.mode_dims}, nnz={self.nnz})"


def commutator(a: OperatorMatrix, b: OperatorMatrix) -> OperatorMatrix:
    return a @ b - b @ a


def annihilation(dim: int) -> OperatorMatrix:
    """Truncated bosonic lowering operator, ``a[n-1, n] = sqrt(n)``."""
    if int(dim) != dim or dim < 2:
        raise InvalidDimensionError(f"Fock dimension must be an integer >= 2, got {dim}")
    dim = int(dim)
    mat = sp.diags(np.sqrt(np.arange(1, dim, dtype=float)), 1, shape=(dim, dim))
    return OperatorMatrix(SpaceLayout((dim,)), mat)


def lower_sigma() -> OperatorMatrix:
    """Two-level lowering operator ``|g><e|``."""
    return OperatorMatrix.from_entries(SpaceLayout((2,)), {(0, 1): 1.0})


def embed(op: OperatorMatrix, slot: int, layout: SpaceLayout) -> OperatorMatrix:
    """Kronecker-embed a single-factor operator at ``slot`` of ``layout``."""
    if not 0 <= slot < layout.n_factors:
        raise InvalidDimensionError(f"slot {slot} out of range for {layout.n_factors} factors")
    if op.layout.n_factors != 1 or op.dim != layout.mode_dims[slot]:
        raise LayoutMismatchError(
            f"operator of dimension {op.dim} cannot sit in slot {slot} "
            f"of dimension {layout.mode_dims[slot]}"
        )
    factors = [
        op.csr if i == slot else sp.identity(d, format="csr", dtype=np.complex128)
        for i, d in enumerate(layout.mode_dims)
    ]
    return OperatorMatrix(layout, reduce(lambda x, y: sp.kron(x, y, format="csr"), factors))
