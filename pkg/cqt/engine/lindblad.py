"""Open-system models, Liouvillian assembly and steady-state solves.

Density matrices are vectorised by column stacking, so that
vec(A rho B) = (B^T kron A) vec(rho) and rho[0, 0] sits at index 0.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from cqt.engine.hilbert import (
    DensityMatrixError,
    DimensionError,
    HilbertSpace,
    Operator,
    partial_trace,
)

logger = logging.getLogger(__name__)

# Liouvillians up to this dimension (Hilbert dimension 32) are handled densely.
DENSE_SOLVE_LIMIT = 32**2
NULLSPACE_RCOND = 1e-12
STEADY_TOL = 1e-10
TRACE_PRESERVATION_TOL = 1e-10


class SteadyStateError(RuntimeError):
    """Base error for steady-state solves."""


class NonUniqueSteadyStateError(SteadyStateError):
    def __init__(self, kernel_dim: int | None):
        self.kernel_dim = kernel_dim
        detail = f"kernel dimension {kernel_dim}" if kernel_dim is not None else "singular"
        super().__init__(f"Liouvillian has no unique steady state ({detail})")


class ConvergenceError(SteadyStateError):
    def __init__(self, residual: float, tol: float):
        self.residual = residual
        self.tol = tol
        super().__init__(f"Steady-state residual {residual:.3e} exceeds tolerance {tol:.1e}")


class NonHermitianError(ValueError):
    def __init__(self, what: str = "Hamiltonian"):
        self.what = what
        super().__init__(f"{what} is not Hermitian")


@dataclass(frozen=True)
class DissipationChannel:
    """One Lindblad term ``rate * D[jump]`` tagged with its bath.

    ``quantum`` is the lab-frame energy delivered INTO the system per jump and is
    the weight used when the channel is counted. ``shift`` is nonzero only for
    cavity channels written in a displaced frame: the physical jump is then
    ``jump + shift * 1``, and heat and counting statistics use that operator.
    """

    jump: Operator
    rate: float
    bath_id: str
    temperature: float
    quantum: float
    label: str = ""
    shift: complex = 0j

    def __post_init__(self) -> None:
        if not self.rate >= 0:
            raise ValueError(f"Channel rate must be non-negative, got {self.rate}")
        if not self.temperature > 0:
            raise ValueError(f"Bath temperature must be positive, got {self.temperature}")

    @property
    def counted_label(self) -> str:
        return self.label or f"{self.bath_id}_{'up' if self.quantum > 0 else 'down'}"

    @property
    def lab_jump(self) -> Operator:
        if not self.shift:
            return self.jump
        return self.jump + complex(self.shift) * self.jump.space.identity()


@dataclass(frozen=True)
class DriveSpec:
    amplitude: float
    frequency: float
    kappa: float
    detuning: float


@dataclass
class OpenSystem:
    """Rotating-frame Hamiltonian plus dissipation channels: the unit of simulation.

    ``cavity_slot`` is 0 for cavity+system models and None for system-only
    models. ``displacement`` is the c-number the cavity operator was shifted
    by (a = displacement + a_tilde); zero in the lab frame.
    """

    space: HilbertSpace
    hamiltonian: Operator
    channels: tuple[DissipationChannel, ...]
    drive: DriveSpec | None = None
    cavity_slot: int | None = None
    displacement: complex = 0j
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.channels = tuple(self.channels)
        if self.hamiltonian.space.dims != self.space.dims:
            raise DimensionError("Hamiltonian lives on a different space", self.space.dims,
                                 self.hamiltonian.space.dims)
        for ch in self.channels:
            if ch.jump.space.dims != self.space.dims:
                raise DimensionError(
                    f"Channel {ch.counted_label!r} lives on a different space",
                    self.space.dims,
                    ch.jump.space.dims,
                )

    @property
    def system_slot(self) -> int:
        return 0 if self.cavity_slot is None else 1

    def bath_ids(self) -> list[str]:
        seen: list[str] = []
        for ch in self.channels:
            if ch.bath_id not in seen:
                seen.append(ch.bath_id)
        return seen

    def channel_indices(self, bath_id: str) -> list[int]:
        return [k for k, ch in enumerate(self.channels) if ch.bath_id == bath_id]

    def bath_temperature(self, bath_id: str) -> float:
        indices = self.channel_indices(bath_id)
        if not indices:
            raise KeyError(f"No channels for bath {bath_id!r}")
        return self.channels[indices[0]].temperature


@dataclass
class Superoperator:
    space: HilbertSpace
    matrix: sp.csr_matrix

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def to_dense(self) -> np.ndarray:
        return np.asarray(self.matrix.toarray())

    def trace_row(self) -> np.ndarray:
        return trace_row(self.space.total_dim)

    def is_trace_preserving(self, tol: float = TRACE_PRESERVATION_TOL) -> bool:
        left = self.matrix.T @ self.trace_row()
        scale = max(spla.norm(self.matrix), 1.0)
        return float(np.linalg.norm(left)) <= tol * scale


@dataclass
class SteadyState:
    rho: Operator
    residual: float
    edge_population: float


@dataclass
class CutoffConvergenceReport:
    cutoffs: list[int]
    values: list[float]
    differences: list[float]
    edge_populations: list[float]
    threshold: float
    edge_threshold: float
    converged: bool
    reason: str = ""


# -- vectorisation ------------------------------------------------------


def vec(rho: Operator | np.ndarray) -> np.ndarray:
    m = rho.to_dense() if isinstance(rho, Operator) else np.asarray(rho)
    return m.reshape(-1, order="F")


def unvec(v: np.ndarray, n: int) -> np.ndarray:
    return np.asarray(v).reshape((n, n), order="F")


def trace_row(n: int) -> np.ndarray:
    """vec(I): the left null vector of every trace-preserving generator."""
    row = np.zeros(n * n, dtype=complex)
    row[:: n + 1] = 1.0
    return row


def spre(op: Operator) -> sp.csr_matrix:
    """rho -> op @ rho."""
    n = op.space.total_dim
    return sp.kron(sp.identity(n, dtype=complex), op.to_sparse(), format="csr")


def spost(op: Operator) -> sp.csr_matrix:
    """rho -> rho @ op."""
    n = op.space.total_dim
    return sp.kron(op.to_sparse().T, sp.identity(n, dtype=complex), format="csr")


def sprepost(left: Operator, right: Operator) -> sp.csr_matrix:
    """rho -> left @ rho @ right."""
    return sp.kron(right.to_sparse().T, left.to_sparse(), format="csr")


def jump_superoperator(jump: Operator) -> sp.csr_matrix:
    """rho -> L rho L^dagger."""
    return sprepost(jump, jump.dagger())


def dissipator(jump: Operator) -> Superoperator:
    """D[L] rho = L rho L^dagger - {L^dagger L, rho} / 2."""
    ldl = jump.dagger() @ jump
    matrix = jump_superoperator(jump) - 0.5 * spre(ldl) - 0.5 * spost(ldl)
    return Superoperator(jump.space, matrix.tocsr())


def liouvillian(system: OpenSystem) -> Superoperator:
    h = system.hamiltonian
    if not h.is_hermitian():
        raise NonHermitianError()
    matrix = -1j * (spre(h) - spost(h))
    for ch in system.channels:
        if ch.rate == 0:
            continue
        matrix = matrix + ch.rate * dissipator(ch.jump).matrix
    matrix = sp.csr_matrix(matrix)
    logger.debug(
        "Liouvillian assembled: dims=%s dim=%d nnz=%d channels=%d",
        system.space.dims, matrix.shape[0], matrix.nnz, len(system.channels),
    )
    return Superoperator(system.space, matrix)


def apply(L: Superoperator, rho: Operator) -> Operator:
    """L rho, returned as an operator."""
    n = L.space.total_dim
    return Operator(L.space, unvec(L.matrix @ vec(rho), n))


def _spectral_shift(matrix: sp.spmatrix) -> float:
    # any positive real shift makes the eigenvalue at 0 the one nearest to it
    diag = np.abs(matrix.diagonal())
    scale = float(diag.max()) if diag.size and diag.max() > 0 else 1.0
    return 1e-3 * scale


def liouvillian_spectrum(L: Superoperator, k: int | None = None) -> np.ndarray:
    """Eigenvalues sorted by decreasing real part.

    Dense and complete below DENSE_SOLVE_LIMIT (or when ``k`` is None);
    otherwise the ``k`` eigenvalues closest to zero via shift-invert.
    """
    if k is None or L.dim <= DENSE_SOLVE_LIMIT:
        values = scipy.linalg.eigvals(L.to_dense())
    else:
        v0 = np.ones(L.dim, dtype=complex) / math.sqrt(L.dim)
        values = spla.eigs(
            L.matrix.tocsc(), k=k, sigma=_spectral_shift(L.matrix), which="LM", v0=v0,
            return_eigenvectors=False,
        )
    order = np.argsort(-values.real, kind="stable")
    return values[order][: k or None]


# -- steady state -------------------------------------------------------


class BorderedSolver:
    """Factorisation of L with its first row replaced by the trace functional.

    Solving ``A x = b`` with ``b[0] = t`` returns the unique x with
    ``L x = b`` on rows 1.. and ``tr x = t``. The same factorisation serves the
    steady state (t = 1, b = 0) and Drazin-inverse applications (t = 0).
    """

    def __init__(self, L: Superoperator):
        self.liouvillian = L
        n = L.space.total_dim
        top = sp.csr_matrix(trace_row(n)[np.newaxis, :])
        bordered = sp.vstack([top, L.matrix[1:, :]], format="csc")
        if L.dim <= DENSE_SOLVE_LIMIT:
            kernel = scipy.linalg.null_space(L.to_dense(), rcond=NULLSPACE_RCOND)
            if kernel.shape[1] != 1:
                raise NonUniqueSteadyStateError(kernel.shape[1])
            self._dense = scipy.linalg.lu_factor(bordered.toarray())
            self._sparse = None
        else:
            try:
                self._sparse = spla.splu(bordered)
            except RuntimeError as exc:
                raise NonUniqueSteadyStateError(None) from exc
            self._dense = None
        logger.debug("Bordered factorisation: dim=%d dense=%s", L.dim, self._dense is not None)

    def solve(self, rhs: np.ndarray, trace: complex = 0.0) -> np.ndarray:
        b = np.array(rhs, dtype=complex)
        b[0] = trace
        if self._sparse is not None:
            x = self._sparse.solve(b)
        else:
            x = scipy.linalg.lu_solve(self._dense, b)
        if not np.all(np.isfinite(x)):
            raise NonUniqueSteadyStateError(None)
        return x


def edge_population(rho: Operator) -> float:
    """Population of the top level of every truncated Fock slot, summed."""
    total = 0.0
    for slot in rho.space.fock_slots:
        reduced = partial_trace(rho, slot).to_dense()
        total += float(reduced[-1, -1].real)
    return total


def steady_state(
    L: Superoperator, tol: float = STEADY_TOL, solver: BorderedSolver | None = None
) -> SteadyState:
    if not L.is_trace_preserving():
        raise SteadyStateError("Liouvillian is not trace preserving")
    solver = solver or BorderedSolver(L)
    n = L.space.total_dim
    x = solver.solve(np.zeros(L.dim, dtype=complex), trace=1.0)
    rho_m = unvec(x, n)
    rho_m = 0.5 * (rho_m + rho_m.conj().T)
    rho_m = rho_m / np.trace(rho_m)
    v = vec(rho_m)
    residual = float(np.linalg.norm(L.matrix @ v) / np.linalg.norm(v))
    if not math.isfinite(residual) or residual > tol:
        raise ConvergenceError(residual, tol)
    rho = Operator(L.space, rho_m)
    try:
        rho.check_density()
    except DensityMatrixError as exc:
        raise SteadyStateError(f"Steady state is not a valid density matrix: {exc}") from exc
    edge = edge_population(rho)
    logger.debug("Steady state: dim=%d residual=%.2e edge=%.2e", L.dim, residual, edge)
    return SteadyState(rho=rho, residual=residual, edge_population=edge)


def check_cutoff_convergence(
    builder: Callable[[int], OpenSystem],
    observable: Callable[[OpenSystem, SteadyState], float],
    cutoffs: Sequence[int],
    threshold: float = 1e-4,
    edge_threshold: float = 1e-6,
    tol: float = STEADY_TOL,
) -> CutoffConvergenceReport:
    """Solve at each cutoff and compare successive values of ``observable``."""
    cutoffs = [int(c) for c in cutoffs]
    if len(cutoffs) < 2:
        raise ValueError("Cutoff convergence needs at least two cutoffs")

    values: list[float] = []
    edges: list[float] = []
    for cutoff in cutoffs:
        system = builder(cutoff)
        steady = steady_state(liouvillian(system), tol)
        values.append(float(observable(system, steady)))
        edges.append(steady.edge_population)
        logger.info("cutoff=%d value=%.10g edge=%.2e", cutoff, values[-1], edges[-1])

    differences = [
        abs(b - a) / max(abs(b), np.finfo(float).tiny) for a, b in zip(values, values[1:])
    ]
    reasons = []
    if differences[-1] > threshold:
        reasons.append(f"relative change {differences[-1]:.2e} > {threshold:.1e}")
    if edges[-1] > edge_threshold:
        reasons.append(f"edge population {edges[-1]:.2e} > {edge_threshold:.1e}")
    if reasons:
        logger.warning("Cutoff %d not converged: %s", cutoffs[-1], "; ".join(reasons))
    return CutoffConvergenceReport(
        cutoffs=cutoffs,
        values=values,
        differences=differences,
        edge_populations=edges,
        threshold=threshold,
        edge_threshold=edge_threshold,
        converged=not reasons,
        reason="; ".join(reasons),
    )
