"""Liouvillian assembly, steady-state solution, time evolution and diagnostics.

Vectorization is row-major: ``vec(rho)[i*D + j] = rho[i, j]``, which is what
``numpy.ravel`` produces.  With this convention ``vec(A rho B) = (A kron B^T) vec(rho)``
and the coherent part of the generator is ``-i (H kron I - I kron H^T)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp

from .errors import (
    ConvergenceError,
    InvalidStateError,
    LayoutMismatchError,
    NonUniqueSteadyStateError,
    StepSizeError,
)
from .hilbert import CCW, CW, OperatorMatrix, SpaceLayout, annihilation, embed

log = logging.getLogger(__name__)

TRACE_TOL = 1e-10
HERMITIAN_TOL = 1e-10
POSITIVITY_TOL = 1e-8
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    layout: SpaceLayout
    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.complex128)
        n = self.layout.total_dim
        if arr.shape != (n, n):
            raise LayoutMismatchError(f"density matrix shape {arr.shape} != ({n}, {n})")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @classmethod
    def basis_state(cls, layout: SpaceLayout, levels) -> "DensityMatrix":
        """Pure product state ``|levels><levels|``."""
        idx = int(np.ravel_multi_index(tuple(levels), layout.mode_dims))
        rho = np.zeros((layout.total_dim,) * 2, dtype=np.complex128)
        rho[idx, idx] = 1.0
        return cls(layout, rho)

    @classmethod
    def ground(cls, layout: SpaceLayout) -> "DensityMatrix":
        return cls.basis_state(layout, (0,) * layout.n_factors)

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.data))

    @property
    def hermiticity_error(self) -> float:
        return float(np.abs(self.data - self.data.conj().T).max())

    @property
    def min_eigenvalue(self) -> float:
        herm = 0.5 * (self.data + self.data.conj().T)
        return float(np.linalg.eigvalsh(herm)[0])

    def vector(self) -> np.ndarray:
        return self.data.ravel()

    def validate(self, trace_tol=TRACE_TOL, herm_tol=HERMITIAN_TOL, pos_tol=POSITIVITY_TOL) -> "DensityMatrix":
        """Raise :class:`InvalidStateError` unless trace, Hermiticity and positivity hold."""
        if abs(self.trace - 1) > trace_tol:
            raise InvalidStateError(f"trace {self.trace} deviates from 1")
        if self.hermiticity_error > herm_tol:
            raise InvalidStateError(f"non-Hermitian by {self.hermiticity_error:.3g}")
        lam = self.min_eigenvalue
        if lam < -pos_tol:
            raise InvalidStateError(f"negative eigenvalue {lam:.3g}")
        return self

    def expect(self, op: OperatorMatrix) -> complex:
        return expectation(self, op)


@dataclass(frozen=True, eq=False)
class Liouvillian:
    """Sparse generator acting on row-major vectorized density matrices.

    ``lindblad`` marks generators built by :func:`assemble_liouvillian`;
    only those are known to commute with the Hermitian-conjugation map,
    which the sector solver relies on.
    """

    layout: SpaceLayout
    matrix: sp.csr_array
    lindblad: bool = False
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def apply(self, rho: DensityMatrix | np.ndarray) -> np.ndarray:
        """``L rho`` as a matrix."""
        arr = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho)
        d = self.layout.total_dim
        return (self.matrix @ arr.ravel()).reshape(d, d)

    def norm(self) -> float:
        """Infinity norm (largest absolute row sum)."""
        if "norm" not in self._cache:
            self._cache["norm"] = float(abs(self.matrix).sum(axis=1).max())
        return self._cache["norm"]


def _spre(op: sp.csr_array) -> sp.csr_array:
    return sp.kron(op, sp.identity(op.shape[0], format="csr"), format="csr")


def _spost(op: sp.csr_array) -> sp.csr_array:
    return sp.kron(sp.identity(op.shape[0], format="csr"), op.T, format="csr")


def hamiltonian_superop(H: OperatorMatrix) -> sp.csr_array:
    h = H.csr
    return -1j * (_spre(h) - _spost(h))


def dissipator_superop(C: OperatorMatrix) -> sp.csr_array:
    c = C.csr
    cdc = (c.conj().T @ c).tocsr()
    return sp.csr_array(sp.kron(c, c.conj(), format="csr") - 0.5 * _spre(cdc) - 0.5 * _spost(cdc))


def assemble_liouvillian(H: OperatorMatrix, collapses=()) -> Liouvillian:
    """Lindblad generator ``-i[H, .] + sum_C (C . C^+ - {C^+ C, .}/2)``."""
    for c in collapses:
        if c.layout != H.layout:
            raise LayoutMismatchError("collapse operator layout differs from Hamiltonian layout")
    mat = hamiltonian_superop(H)
    for c in collapses:
        mat = mat + dissipator_superop(c)
    mat = sp.csr_array(mat)
    mat.eliminate_zeros()
    mat.sort_indices()
    return Liouvillian(H.layout, mat, lindblad=True)


# --- steady state -----------------------------------------------------------

def _trace_indices(d: int) -> np.ndarray:
    return np.arange(d) * (d + 1)


class _SectorStructure:
    """Index bookkeeping for block elimination over excitation-difference sectors.

    Sector ``k`` holds the elements ``rho[i, j]`` with ``exc(i) - exc(j) = k``.
    A driven, excitation-conserving Lindbladian only couples neighbouring
    sectors, and Hermitian conjugation maps sector ``k`` onto ``-k``.
    """

    def __init__(self, layout: SpaceLayout):
        d = layout.total_dim
        exc = layout.excitation_numbers()
        labels = (exc[:, None] - exc[None, :]).ravel()
        self.labels = labels
        self.kmax = int(labels.max())
        self.index = {}
        for k in range(0, self.kmax + 1):
            self.index[k] = np.flatnonzero(labels == k)
        swap = lambda v: (v % d) * d + v // d  # noqa: E731
        for k in range(1, self.kmax + 1):
            self.index[-k] = swap(self.index[k])
        idx0 = self.index[0]
        pos = np.empty(d * d, dtype=np.int64)
        pos[idx0] = np.arange(idx0.size)
        self.perm0 = pos[swap(idx0)]
        self.trace_pos = pos[_trace_indices(d)]
        self.row0 = int(pos[0])

    def is_tridiagonal(self, mat: sp.csr_array) -> bool:
        coo = mat.tocoo()
        return bool(np.all(np.abs(self.labels[coo.row] - self.labels[coo.col]) <= 1))


def _sector_structure(layout: SpaceLayout) -> _SectorStructure:
    cache = _sector_structure.cache
    if layout not in cache:
        cache[layout] = _SectorStructure(layout)
    return cache[layout]


_sector_structure.cache = {}


def _block(mat: sp.csr_array, rows, cols, dense=True):
    sub = mat[rows][:, cols]
    return sub.toarray() if dense else sub


def _solve_sectors(L: Liouvillian) -> np.ndarray:
    s = _sector_structure(L.layout)
    mat = L.matrix
    ix = s.index
    G = {}
    M = None
    for k in range(s.kmax, 0, -1):
        diag = _block(mat, ix[k], ix[k])
        if M is not None:
            diag = diag - _block(mat, ix[k], ix[k + 1], dense=False) @ G[k + 1]
        M = diag
        try:
            lu = la.lu_factor(M, check_finite=False)
        except la.LinAlgError as exc:
            raise NonUniqueSteadyStateError(f"sector {k} block is singular") from exc
        G[k] = la.lu_solve(lu, _block(mat, ix[k], ix[k - 1]), check_finite=False)
    A0 = _block(mat, ix[0], ix[0])
    if s.kmax > 0:
        C = _block(mat, ix[0], ix[1], dense=False) @ G[1]
        A0 = A0 - C - C.conj()[np.ix_(s.perm0, s.perm0)]
    scale = float(np.abs(A0).max()) or 1.0
    A0[s.row0, :] = 0.0
    A0[s.row0, s.trace_pos] = scale
    rhs = np.zeros(A0.shape[0], dtype=np.complex128)
    rhs[s.row0] = scale
    lu0, piv0 = la.lu_factor(A0, check_finite=False)
    if np.min(np.abs(np.diag(lu0))) <= np.finfo(float).eps * scale * A0.shape[0]:
        raise NonUniqueSteadyStateError("steady state is not unique")
    x = la.lu_solve((lu0, piv0), rhs, check_finite=False)
    vec = np.zeros(mat.shape[0], dtype=np.complex128)
    vec[ix[0]] = x
    for k in range(1, s.kmax + 1):
        x = -(G[k] @ x)
        vec[ix[k]] = x
        vec[ix[-k]] = x.conj()
    return vec


def _constrained_system(L: Liouvillian):
    d = L.layout.total_dim
    scale = L.norm() or 1.0
    mat = sp.lil_array(L.matrix)
    mat[0, :] = 0
    mat[[0] * d, _trace_indices(d)] = scale
    rhs = np.zeros(d * d, dtype=np.complex128)
    rhs[0] = scale
    return sp.csc_array(mat), rhs


def _solve_direct(L: Liouvillian) -> np.ndarray:
    A, b = _constrained_system(L)
    try:
        lu = spla.splu(A, permc_spec="COLAMD")
    except RuntimeError as exc:
        raise NonUniqueSteadyStateError(str(exc)) from exc
    return lu.solve(b)


def _solve_iterative(L: Liouvillian, rtol=1e-13, maxiter=2000) -> np.ndarray:
    A, b = _constrained_system(L)
    ilu = spla.spilu(A, drop_tol=1e-6, fill_factor=30)
    prec = spla.LinearOperator(A.shape, ilu.solve, dtype=np.complex128)
    x, info = spla.gmres(A, b, M=prec, rtol=rtol, atol=0.0, restart=200, maxiter=maxiter)
    if info != 0:
        raise ConvergenceError(f"GMRES did not converge (info={info})")
    return x


def steady_state(L: Liouvillian, method: str = "auto", validate: bool = True) -> DensityMatrix:
    """Unique stationary state of ``L``.

    Methods: ``"sectors"`` (dense block elimination over excitation-difference
    sectors, used automatically for cavity-QD Lindbladians), ``"direct"``
    (sparse LU with row 0 replaced by the trace condition) and
    ``"iterative"`` (ILU-preconditioned GMRES on the same constrained system).
    """
    if method == "auto":
        use_sectors = (
            L.lindblad
            and L.layout.is_cavity_qd
            and _sector_structure(L.layout).is_tridiagonal(L.matrix)
        )
        method = "sectors" if use_sectors else "direct"
    if method == "sectors":
        vec = _solve_sectors(L)
    elif method == "direct":
        try:
            vec = _solve_direct(L)
        except MemoryError:
            log.warning("sparse LU ran out of memory, falling back to GMRES")
            vec = _solve_iterative(L)
    elif method == "iterative":
        vec = _solve_iterative(L)
    else:
        raise ValueError(f"unknown steady-state method {method!r}")

    if not np.all(np.isfinite(vec)):
        raise NonUniqueSteadyStateError("solution contains non-finite values")
    d = L.layout.total_dim
    rho = vec.reshape(d, d)
    rho = rho / np.trace(rho)
    rho = 0.5 * (rho + rho.conj().T)
    residual = float(np.abs(L.matrix @ rho.ravel()).max())
    if residual > RESIDUAL_TOL * L.norm():
        raise ConvergenceError(f"steady-state residual {residual:.3g} exceeds tolerance")
    out = DensityMatrix(L.layout, rho)
    return out.validate() if validate else out


# --- time evolution ---------------------------------------------------------

def evolve(rho0: DensityMatrix, L: Liouvillian, t_final: float, rtol: float = 1e-10,
           atol: float = 1e-13, method: str = "DOP853") -> DensityMatrix:
    """Integrate ``d vec(rho)/dt = L vec(rho)`` with an adaptive explicit Runge-Kutta scheme."""
    if t_final < 0:
        raise ValueError("t_final must be non-negative")
    if rho0.layout != L.layout:
        raise LayoutMismatchError("state and generator layouts differ")
    if t_final == 0:
        return rho0
    mat = L.matrix
    sol = solve_ivp(lambda t, y: mat @ y, (0.0, t_final), rho0.vector().copy(),
                    method=method, rtol=rtol, atol=atol)
    if sol.status != 0:
        if "step size" in sol.message.lower():
            raise StepSizeError(sol.message)
        raise ConvergenceError(sol.message)
    d = L.layout.total_dim
    rho = sol.y[:, -1].reshape(d, d)
    drift = abs(np.trace(rho) - rho0.trace)
    if drift > 1e-8:
        raise ConvergenceError(f"trace drifted by {drift:.3g} during integration")
    return DensityMatrix(L.layout, rho)


# --- observables ------------------------------------------------------------

def expectation(rho: DensityMatrix, op: OperatorMatrix) -> complex:
    """``tr(rho op)``."""
    if rho.layout != op.layout:
        raise LayoutMismatchError("state and operator layouts differ")
    coo = op.csr.tocoo()
    return complex(np.sum(coo.data * rho.data[coo.col, coo.row]))


def truncation_residual(rho: DensityMatrix, layout: SpaceLayout | None = None) -> np.ndarray:
    """``|<[a, a^+]> - 1|`` for each bosonic factor.

    In a truncated Fock space this equals ``N * p(N-1)``: the population of the
    top level times the dimension, a direct measure of truncation leakage.
    """
    layout = layout or rho.layout
    if layout != rho.layout:
        raise LayoutMismatchError("layout differs from the state's layout")
    return np.array([abs(expectation(rho, comm) - 1.0) for comm in _commutators(layout)])


@lru_cache(maxsize=8)
def _commutators(layout: SpaceLayout) -> tuple:
    slots = (CW, CCW) if layout.is_cavity_qd else tuple(range(layout.n_factors))
    out = []
    for slot in slots:
        a = embed(annihilation(layout.mode_dims[slot]), slot, layout)
        out.append(a @ a.dag() - a.dag() @ a)
    return tuple(out)
