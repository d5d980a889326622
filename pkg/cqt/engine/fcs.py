"""Full counting statistics of weighted jump currents: mean and zero-frequency noise."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from tqdm import tqdm

from cqt.engine.hilbert import Operator, expect
from cqt.engine.lindblad import (
    DENSE_SOLVE_LIMIT,
    STEADY_TOL,
    BorderedSolver,
    OpenSystem,
    SteadyState,
    Superoperator,
    jump_superoperator,
    liouvillian,
    steady_state,
    trace_row,
    vec,
)

logger = logging.getLogger(__name__)

DEFAULT_FD_STEP = 1e-2
VARIANCE_SLACK = 1e-10
DRAZIN_RESIDUAL_TOL = 1e-8


class NoiseError(RuntimeError):
    """Raised when a noise computation cannot produce a trustworthy value."""


class BranchAmbiguityError(NoiseError):
    def __init__(self, chi: float, gap: float, shift: float):
        self.chi = chi
        self.gap = gap
        self.shift = shift
        super().__init__(
            f"Dominant tilted eigenvalue is not isolated at chi={chi:.3g}: "
            f"gap {gap:.3e} vs stencil shift {shift:.3e}"
        )


class CountingError(ValueError):
    def __init__(self, message: str, index: int | None = None):
        self.index = index
        super().__init__(message)


@dataclass(frozen=True)
class CountedCurrent:
    """Jump channels counted with signed weights; unlisted channels carry weight 0."""

    channel_weights: tuple[tuple[int, float], ...]
    name: str = ""

    def __post_init__(self) -> None:
        pairs = tuple((int(k), float(w)) for k, w in self.channel_weights)
        indices = [k for k, _ in pairs]
        if len(set(indices)) != len(indices):
            raise CountingError(f"Channel listed twice in counted current {self.name!r}")
        object.__setattr__(self, "channel_weights", pairs)

    def validate(self, system: OpenSystem) -> None:
        n = len(system.channels)
        for k, _ in self.channel_weights:
            if not 0 <= k < n:
                raise CountingError(f"Channel index {k} outside 0..{n - 1}", k)

    def weights(self, n_channels: int) -> np.ndarray:
        out = np.zeros(n_channels)
        for k, w in self.channel_weights:
            out[k] = w
        return out

    def scaled(self, factor: float) -> CountedCurrent:
        return CountedCurrent(
            tuple((k, factor * w) for k, w in self.channel_weights), name=self.name
        )

    @property
    def max_weight(self) -> float:
        return max((abs(w) for _, w in self.channel_weights), default=0.0)


@dataclass(frozen=True)
class NoiseResult:
    mean: float
    variance: float
    method: str
    richardson_gap: float | None = None

    def __post_init__(self) -> None:
        slack = VARIANCE_SLACK * max(self.mean**2, abs(self.variance), 1e-300)
        if self.variance < -slack:
            raise NoiseError(f"Negative current variance {self.variance:.6e} ({self.method})")


def counted_bath_current(system: OpenSystem, bath_id: str) -> CountedCurrent:
    """Heat current from one bath: every channel of the bath weighted by its quantum."""
    indices = system.channel_indices(bath_id)
    if not indices:
        raise CountingError(f"Model has no bath {bath_id!r}")
    return CountedCurrent(
        tuple((k, system.channels[k].quantum) for k in indices), name=f"J_{bath_id}"
    )


def fano_factor(result: NoiseResult) -> float:
    if result.mean == 0:
        raise NoiseError("Fano factor undefined for a zero mean current")
    return result.variance / result.mean


def current_mean(
    system: OpenSystem, rho: Operator | SteadyState, counted: CountedCurrent
) -> float:
    counted.validate(system)
    rho = rho.rho if isinstance(rho, SteadyState) else rho
    total = 0.0
    for k, w in counted.channel_weights:
        ch = system.channels[k]
        if w == 0 or ch.rate == 0:
            continue
        total += w * ch.rate * expect(ch.lab_jump.dagger() @ ch.lab_jump, rho).real
    return total


def _weighted_jumps(system: OpenSystem, counted: CountedCurrent, power: int) -> sp.csr_matrix:
    n = system.space.total_dim
    total = sp.csr_matrix((n * n, n * n), dtype=complex)
    for k, w in counted.channel_weights:
        ch = system.channels[k]
        if w == 0 or ch.rate == 0:
            continue
        total = total + (w**power * ch.rate) * jump_superoperator(ch.lab_jump)
    return total.tocsr()


def current_noise_drazin(
    system: OpenSystem,
    counted: CountedCurrent,
    tol: float = STEADY_TOL,
    L: Superoperator | None = None,
    solver: BorderedSolver | None = None,
    steady: SteadyState | None = None,
) -> NoiseResult:
    """Mean and zero-frequency variance through one implicit Drazin-inverse application.

    variance = tr(J2 rho) - 2 tr(J1 L^D J1 rho), with L^D applied by solving
    L x = P J1 rho on the traceless subspace.
    """
    counted.validate(system)
    L = L or liouvillian(system)
    solver = solver or BorderedSolver(L)
    steady = steady or steady_state(L, tol, solver)

    n = system.space.total_dim
    ones = trace_row(n)
    r = vec(steady.rho)
    j1 = _weighted_jumps(system, counted, 1)
    j2 = _weighted_jumps(system, counted, 2)

    y = j1 @ r
    mean = complex(ones @ y)
    projected = y - r * mean
    x = solver.solve(projected, trace=0.0)

    scale = max(float(np.linalg.norm(projected)), 1e-300)
    defect = float(np.linalg.norm(L.matrix @ x - projected)) / scale
    if defect > DRAZIN_RESIDUAL_TOL:
        raise NoiseError(f"Drazin solve residual {defect:.3e} too large")

    variance = complex(ones @ (j2 @ r)) - 2.0 * complex(ones @ (j1 @ x))
    logger.debug(
        "Drazin noise %s: mean=%.10g variance=%.10g defect=%.1e",
        counted.name, mean.real, variance.real, defect,
    )
    return NoiseResult(mean=mean.real, variance=variance.real, method="drazin")


def _tilted_matrix(
    L: Superoperator, tilts: list[tuple[float, sp.csr_matrix]], chi: float
) -> sp.csr_matrix:
    matrix = L.matrix
    for weight, jumps in tilts:
        matrix = matrix + (np.exp(1j * chi * weight) - 1.0) * jumps
    return sp.csr_matrix(matrix)


def _dominant_eigenvalue(matrix: sp.csr_matrix) -> tuple[complex, float]:
    """Largest-real-part eigenvalue and its distance to the nearest other eigenvalue."""
    dim = matrix.shape[0]
    if dim <= DENSE_SOLVE_LIMIT:
        values = scipy.linalg.eigvals(matrix.toarray())
    else:
        diag = np.abs(matrix.diagonal())
        shift = 1e-3 * (float(diag.max()) if diag.max() > 0 else 1.0)
        v0 = np.ones(dim, dtype=complex) / math.sqrt(dim)
        values = spla.eigs(
            matrix.tocsc(), k=min(4, dim - 2), sigma=shift, which="LM", v0=v0,
            return_eigenvectors=False,
        )
    top = int(np.argmax(values.real))
    others = np.delete(values, top)
    gap = float(np.min(np.abs(others - values[top]))) if others.size else math.inf
    return complex(values[top]), gap


def _tilts(system: OpenSystem, counted: CountedCurrent, scale: float):
    return [
        (w / scale, system.channels[k].rate * jump_superoperator(system.channels[k].lab_jump))
        for k, w in counted.channel_weights
        if w != 0 and system.channels[k].rate != 0
    ]


def tilted_eigenvalue(system: OpenSystem, counted: CountedCurrent, chi: float) -> complex:
    """Dominant eigenvalue of the generator tilted by exp(i chi w) on each counted jump."""
    counted.validate(system)
    L = liouvillian(system)
    value, _ = _dominant_eigenvalue(_tilted_matrix(L, _tilts(system, counted, 1.0), chi))
    return value


def current_noise_tilted_fd(
    system: OpenSystem,
    counted: CountedCurrent,
    step: float = DEFAULT_FD_STEP,
    progress: bool = False,
) -> NoiseResult:
    """Mean and variance from finite differences of the tilted-generator eigenvalue.

    The counting field is measured in units of 1 / max|w|; the 5-point
    derivatives at ``step`` and ``step / 2`` are Richardson-combined.
    """
    if step <= 0:
        raise ValueError(f"Finite-difference step must be positive, got {step}")
    counted.validate(system)
    scale = counted.max_weight
    if scale == 0:
        return NoiseResult(mean=0.0, variance=0.0, method="tilted_fd", richardson_gap=0.0)

    L = liouvillian(system)
    tilts = _tilts(system, counted, scale)
    h = float(step)
    stencil = sorted({0.0, h / 2, -h / 2, h, -h, 2 * h, -2 * h})

    f: dict[float, complex] = {}
    gaps: dict[float, float] = {}
    for chi in tqdm(stencil, desc="tilted eigenvalues", disable=not progress, leave=False):
        f[chi], gaps[chi] = _dominant_eigenvalue(_tilted_matrix(L, tilts, chi))

    shift = max(abs(f[chi] - f[0.0]) for chi in stencil)
    resolution = shift + 1e-12 * max(1.0, abs(L.matrix.diagonal()).max())
    for chi in stencil:
        if gaps[chi] <= resolution:
            raise BranchAmbiguityError(chi * scale, gaps[chi], shift)

    def first(d: float) -> complex:
        return (f[-2 * d] - 8 * f[-d] + 8 * f[d] - f[2 * d]) / (12 * d)

    def second(d: float) -> complex:
        return (-f[-2 * d] + 16 * f[-d] - 30 * f[0.0] + 16 * f[d] - f[2 * d]) / (12 * d * d)

    d1 = (16 * first(h / 2) - first(h)) / 15
    d2_coarse, d2_fine = second(h), second(h / 2)
    d2 = (16 * d2_fine - d2_coarse) / 15
    gap = abs(d2_coarse - d2_fine) / max(abs(d2_fine), 1e-300)

    mean = d1.imag * scale
    variance = -d2.real * scale**2
    logger.debug(
        "Tilted noise %s: mean=%.10g variance=%.10g lambda(0)=%.1e richardson_gap=%.1e",
        counted.name, mean, variance, abs(f[0.0]), gap,
    )
    return NoiseResult(mean=mean, variance=variance, method="tilted_fd", richardson_gap=gap)
