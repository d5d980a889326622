"""Semi-classical reduction of a coherently driven cavity.

A cavity driven at amplitude E settles (without the emitter) in a coherent
state of amplitude alpha = -2 (E / kappa) chi. In the limit g -> 0 with
g |alpha| fixed the cavity acts on the emitter as a classical drive, and a
coupling c_NM a^N (a^dagger)^M O_NM reduces to g c_NM alpha^N conj(alpha)^M O_NM.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

logger = logging.getLogger(__name__)

SUSCEPTIBILITY_TOL = 1e-12


class ParameterError(ValueError):
    def __init__(self, message: str, field: str | None = None, value: object = None):
        self.field = field
        self.value = value
        super().__init__(message)


def bose_einstein(omega: float, temperature: float) -> float:
    """Bose-Einstein occupation 1 / (exp(omega / T) - 1)."""
    if not omega > 0:
        raise ParameterError(f"Mode frequency must be positive, got {omega}", "omega", omega)
    if not temperature > 0:
        raise ParameterError(
            f"Temperature must be positive, got {temperature}", "temperature", temperature
        )
    x = omega / temperature
    if x > 700.0:
        return 0.0
    return 1.0 / math.expm1(x)


def temperature_for_occupation(omega: float, n_bar: float) -> float:
    """Inverse of bose_einstein at fixed frequency."""
    if not n_bar > 0:
        raise ParameterError(f"Occupation must be positive, got {n_bar}", "n_bar", n_bar)
    return omega / math.log1p(1.0 / n_bar)


def susceptibility(detuning: float, kappa: float) -> complex:
    """chi = 1 / (1 + 2 i Delta / kappa)."""
    if not kappa > 0:
        raise ParameterError(f"kappa must be positive, got {kappa}", "kappa", kappa)
    return 1.0 / complex(1.0, 2.0 * detuning / kappa)


@dataclass(frozen=True)
class SemiClassicalDrive:
    chi: complex
    alpha: complex
    E_sc: complex

    def __post_init__(self) -> None:
        if abs(self.chi.real - abs(self.chi) ** 2) > SUSCEPTIBILITY_TOL:
            raise ParameterError("Susceptibility violates Re(chi) = |chi|^2", "chi", self.chi)

    @classmethod
    def from_drive(
        cls, amplitude: float, kappa: float, detuning: float, g: float
    ) -> SemiClassicalDrive:
        chi = susceptibility(detuning, kappa)
        alpha = -2.0 * (amplitude / kappa) * chi
        return cls(chi=chi, alpha=alpha, E_sc=g * alpha)


def heisenberg_field_prediction(
    alpha: complex, g: float, kappa: float, chi: complex, o_mean: complex
) -> complex:
    """Steady-state <a> = alpha - 2 i (g / kappa) chi <O> from the field's Heisenberg equation."""
    return alpha - 2j * (g / kappa) * chi * o_mean


@dataclass(frozen=True)
class MultiPhotonTerm:
    """Leading classical-drive coefficient of c_NM a^N (a^dagger)^M O_NM + h.c."""

    N: int
    M: int
    c_NM: float
    g: float
    leading_coefficient: complex

    @property
    def scaling_exponent(self) -> int:
        # g |alpha|^(N+M) stays fixed along the semi-classical limit
        return self.N + self.M


def _check_orders(N: int, M: int) -> None:
    if N < 0 or M < 0:
        raise ParameterError(f"Photon orders must be non-negative, got N={N}, M={M}")
    if N + M == 0:
        raise ParameterError("Coupling without field operators has no semi-classical drive")


def semiclassical_drive_term(
    c_NM: float, N: int, M: int, g: float, alpha: complex
) -> MultiPhotonTerm:
    _check_orders(N, M)
    coefficient = g * c_NM * alpha**N * alpha.conjugate() ** M
    return MultiPhotonTerm(N=N, M=M, c_NM=c_NM, g=g, leading_coefficient=complex(coefficient))


def residual_coupling_terms(
    c_NM: float, N: int, M: int, g: float, alpha: complex
) -> tuple[complex, complex]:
    """Coefficients of a_tilde O_NM and a_tilde^dagger O_NM left after the classical term.

    These carry one fluctuation operator and vanish at first order in the
    semi-classical expansion parameter.
    """
    _check_orders(N, M)
    alpha = complex(alpha)
    on_a = g * N * c_NM * alpha ** (N - 1) * alpha.conjugate() ** M if N else 0j
    on_adag = g * M * c_NM * alpha**N * alpha.conjugate() ** (M - 1) if M else 0j
    return complex(on_a), complex(on_adag)
