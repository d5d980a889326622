"""Operator algebra on truncated composite Hilbert spaces."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import reduce
from numbers import Number

import numpy as np
import scipy.linalg
import scipy.sparse as sp

logger = logging.getLogger(__name__)

# Spaces up to this total dimension keep a dense matrix; larger ones stay sparse.
DENSE_LIMIT = 64

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-8


class DimensionError(ValueError):
    """Raised when operator dimensions do not fit the space they are used on."""

    def __init__(self, message: str, expected: object = None, actual: object = None):
        self.expected = expected
        self.actual = actual
        super().__init__(message)


class DensityMatrixError(ValueError):
    """Raised when an operator fails the trace or positivity checks of a state."""

    def __init__(self, message: str, trace: complex, min_eigenvalue: float):
        self.trace = trace
        self.min_eigenvalue = min_eigenvalue
        super().__init__(message)


@dataclass(frozen=True)
class HilbertSpace:
    """Ordered tensor product of subsystems; slot 0 is the leftmost Kronecker factor.

    ``fock_slots`` marks truncated bosonic modes whose top level is monitored
    for truncation artifacts.
    """

    dims: tuple[int, ...]
    fock_slots: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.dims)
        if not dims:
            raise DimensionError("Hilbert space needs at least one subsystem")
        for d in dims:
            if d < 2:
                raise DimensionError(f"Subsystem dimension must be >= 2, got {d}", 2, d)
        for slot in self.fock_slots:
            if not 0 <= slot < len(dims):
                raise DimensionError(f"Fock slot {slot} outside {len(dims)} subsystems")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "fock_slots", tuple(self.fock_slots))

    @property
    def total_dim(self) -> int:
        return math.prod(self.dims)

    def identity(self) -> Operator:
        return Operator(self, sp.identity(self.total_dim, dtype=complex, format="csr"))

    def basis_projector(self, slot: int, i: int, j: int) -> Operator:
        """|i><j| on ``slot``, identity elsewhere."""
        return embed(transition(self.dims[slot], i, j), self, slot)


def _coerce(matrix: object, dim: int) -> np.ndarray | sp.csr_matrix:
    if dim <= DENSE_LIMIT:
        if sp.issparse(matrix):
            return np.asarray(matrix.toarray(), dtype=complex)
        return np.array(matrix, dtype=complex)
    if sp.issparse(matrix):
        return sp.csr_matrix(matrix, dtype=complex)
    return sp.csr_matrix(np.asarray(matrix, dtype=complex))


class Operator:
    """Matrix on a HilbertSpace. Dense up to DENSE_LIMIT, CSR above it.

    Instances are treated as immutable; every operation returns a new Operator.
    """

    __slots__ = ("space", "matrix")
    # numpy scalars defer to __rmul__ instead of broadcasting over the object
    __array_ufunc__ = None

    def __init__(self, space: HilbertSpace, matrix: object):
        n = space.total_dim
        shape = getattr(matrix, "shape", None) or np.shape(matrix)
        if tuple(shape) != (n, n):
            raise DimensionError(
                f"Matrix shape {tuple(shape)} does not match space dimension {n}",
                (n, n),
                tuple(shape),
            )
        self.space = space
        self.matrix = _coerce(matrix, n)

    # -- algebra -------------------------------------------------------

    def _check_same_space(self, other: Operator) -> None:
        if other.space.dims != self.space.dims:
            raise DimensionError(
                f"Space mismatch: {self.space.dims} vs {other.space.dims}",
                self.space.dims,
                other.space.dims,
            )

    def __add__(self, other: Operator) -> Operator:
        self._check_same_space(other)
        return Operator(self.space, self.matrix + other.matrix)

    def __sub__(self, other: Operator) -> Operator:
        self._check_same_space(other)
        return Operator(self.space, self.matrix - other.matrix)

    def __neg__(self) -> Operator:
        return Operator(self.space, -self.matrix)

    def __mul__(self, scalar: Number) -> Operator:
        if isinstance(scalar, Operator):
            raise TypeError("Use @ for operator products")
        return Operator(self.space, self.matrix * complex(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar: Number) -> Operator:
        return Operator(self.space, self.matrix / complex(scalar))

    def __matmul__(self, other: Operator) -> Operator:
        self._check_same_space(other)
        return Operator(self.space, self.matrix @ other.matrix)

    def dagger(self) -> Operator:
        return Operator(self.space, self.matrix.conj().T)

    # -- inspection ----------------------------------------------------

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)

    def to_dense(self) -> np.ndarray:
        if self.is_sparse:
            return np.asarray(self.matrix.toarray())
        return np.array(self.matrix)

    def to_sparse(self) -> sp.csr_matrix:
        return sp.csr_matrix(self.matrix, dtype=complex)

    def trace(self) -> complex:
        return complex(self.matrix.diagonal().sum())

    def max_abs(self) -> float:
        if self.is_sparse:
            return float(abs(self.matrix).max()) if self.matrix.nnz else 0.0
        return float(np.max(np.abs(self.matrix))) if self.matrix.size else 0.0

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        scale = self.max_abs()
        if scale == 0.0:
            return True
        diff = self.matrix - self.matrix.conj().T
        worst = float(abs(diff).max()) if sp.issparse(diff) else float(np.max(np.abs(diff)))
        return worst <= tol * scale

    def eigenvalues(self) -> np.ndarray:
        dense = self.to_dense()
        if self.is_hermitian():
            return scipy.linalg.eigvalsh(dense)
        return scipy.linalg.eigvals(dense)

    def check_density(
        self, trace_tol: float = TRACE_TOL, positivity_tol: float = POSITIVITY_TOL
    ) -> None:
        """Raise DensityMatrixError unless this is a unit-trace positive Hermitian matrix."""
        tr = self.trace()
        if not self.is_hermitian(1e-10):
            raise DensityMatrixError("Density matrix is not Hermitian", tr, math.nan)
        min_eig = float(np.min(scipy.linalg.eigvalsh(self.to_dense())))
        if abs(tr - 1.0) > trace_tol:
            raise DensityMatrixError(f"Density matrix trace {tr} != 1", tr, min_eig)
        if min_eig < -positivity_tol:
            raise DensityMatrixError(
                f"Density matrix has negative eigenvalue {min_eig:.3e}", tr, min_eig
            )

    def __repr__(self) -> str:
        kind = "sparse" if self.is_sparse else "dense"
        return f"Operator(dims={self.space.dims}, {kind})"


def fock_annihilation(n_max: int) -> Operator:
    """Lowering operator on the Fock levels 0..n_max-1."""
    if n_max < 2:
        raise DimensionError(f"Fock cutoff must be >= 2, got {n_max}", 2, n_max)
    a = sp.diags(np.sqrt(np.arange(1, n_max, dtype=float)), 1, format="csr")
    return Operator(HilbertSpace((n_max,), fock_slots=(0,)), a)


def transition(dim: int, i: int, j: int) -> Operator:
    """|i><j| on a single ``dim``-level subsystem."""
    if not (0 <= i < dim and 0 <= j < dim):
        raise DimensionError(f"Levels ({i}, {j}) outside dimension {dim}")
    m = sp.csr_matrix(([1.0 + 0j], ([i], [j])), shape=(dim, dim))
    return Operator(HilbertSpace((dim,)), m)


def identity(space: HilbertSpace) -> Operator:
    return space.identity()


def embed(op: Operator, space: HilbertSpace, slot: int) -> Operator:
    """Lift a single-subsystem operator into ``space`` at ``slot``."""
    if not 0 <= slot < len(space.dims):
        raise DimensionError(f"Slot {slot} outside {len(space.dims)} subsystems")
    if op.space.total_dim != space.dims[slot]:
        raise DimensionError(
            f"Operator of dimension {op.space.total_dim} cannot sit in slot {slot} "
            f"of dimension {space.dims[slot]}",
            space.dims[slot],
            op.space.total_dim,
        )
    factors = [
        op.to_sparse() if k == slot else sp.identity(d, dtype=complex, format="csr")
        for k, d in enumerate(space.dims)
    ]
    return Operator(space, reduce(lambda x, y: sp.kron(x, y, format="csr"), factors))


def tensor(*ops: Operator) -> Operator:
    """Kronecker product, first argument in slot 0."""
    if not ops:
        raise DimensionError("tensor() needs at least one operator")
    dims: tuple[int, ...] = ()
    fock: tuple[int, ...] = ()
    for op in ops:
        fock += tuple(len(dims) + s for s in op.space.fock_slots)
        dims += op.space.dims
    matrix = reduce(lambda x, y: sp.kron(x, y, format="csr"), (op.to_sparse() for op in ops))
    return Operator(HilbertSpace(dims, fock_slots=fock), matrix)


def expect(obs: Operator, rho: Operator) -> complex:
    """tr(obs @ rho) without forming the product."""
    obs._check_same_space(rho)
    if obs.is_sparse:
        return complex(obs.matrix.multiply(rho.matrix.T).sum())
    return complex(np.einsum("ij,ji->", obs.matrix, rho.matrix))


def partial_trace(rho: Operator, keep: int) -> Operator:
    """Reduced operator on subsystem ``keep``."""
    dims = rho.space.dims
    if not 0 <= keep < len(dims):
        raise DimensionError(f"Slot {keep} outside {len(dims)} subsystems")
    n = len(dims)
    tensor_form = rho.to_dense().reshape(dims + dims)
    # trace out from the highest slot down so the remaining axis indices stay valid
    for slot in reversed(range(n)):
        if slot == keep:
            continue
        current = tensor_form.ndim // 2
        tensor_form = np.trace(tensor_form, axis1=slot, axis2=slot + current)
    fock = (0,) if keep in rho.space.fock_slots else ()
    return Operator(HilbertSpace((dims[keep],), fock_slots=fock), tensor_form)


def thermal_state(n_max: int, n_bar: float) -> Operator:
    """Geometric Fock distribution with mean ``n_bar``, renormalised on the truncated space."""
    if n_max < 2:
        raise DimensionError(f"Fock cutoff must be >= 2, got {n_max}", 2, n_max)
    if n_bar < 0:
        raise ValueError(f"Thermal occupation must be non-negative, got {n_bar}")
    if n_bar == 0:
        probs = np.zeros(n_max)
        probs[0] = 1.0
    else:
        ratio = n_bar / (n_bar + 1.0)
        probs = ratio ** np.arange(n_max, dtype=float)
        probs /= probs.sum()
    return Operator(HilbertSpace((n_max,), fock_slots=(0,)), sp.diags(probs, format="csr"))


def coherent_state(n_max: int, alpha: complex) -> Operator:
    """Projector on the truncated, renormalised coherent state |alpha>."""
    if n_max < 2:
        raise DimensionError(f"Fock cutoff must be >= 2, got {n_max}", 2, n_max)
    amps = np.empty(n_max, dtype=complex)
    amps[0] = 1.0
    for k in range(1, n_max):
        amps[k] = amps[k - 1] * alpha / math.sqrt(k)
    amps /= np.linalg.norm(amps)
    return Operator(HilbertSpace((n_max,), fock_slots=(0,)), np.outer(amps, amps.conj()))
