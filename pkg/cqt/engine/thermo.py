"""Heat currents, powers, entropy production and thermodynamic uncertainty.

Three bookkeepings are supported for a driven cavity coupled to a system:

- standard: every photon leaving the cavity is heat (current J)
- io: only the fluctuations of the output field are heat (J_io); the
  coherent part counts as power
- sc: the cavity is a classical drive; only the system baths produce entropy

Heat currents are positive when they flow INTO the system.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from cqt.engine.fcs import NoiseResult
from cqt.engine.hilbert import HilbertSpace, Operator, embed, expect, fock_annihilation
from cqt.engine.lindblad import OpenSystem, SteadyState

logger = logging.getLogger(__name__)

CAVITY_BATH = "cavity"
UNDEFINED_CURRENT_RATIO = 1e-12
IMAGINARY_TOL = 1e-10
SECOND_LAW_SLACK = 1e-10


class ThermoError(ValueError):
    """Raised when thermodynamic quantities cannot be formed from the given inputs."""


class UndefinedUncertaintyError(ThermoError):
    def __init__(self, mean: float, variance: float):
        self.mean = mean
        self.variance = variance
        super().__init__(
            f"Uncertainty product undefined: mean {mean:.3e} vanishes "
            f"against variance {variance:.3e}"
        )


class Framework(str, Enum):
    STANDARD = "standard"
    IO = "io"
    SC = "sc"


@dataclass(frozen=True)
class ThermoHamiltonian:
    """Energy bookkeeping operator cavity_weight * a^dagger a + system_part."""

    cavity_weight: float
    system_part: Operator

    def __post_init__(self) -> None:
        if not self.system_part.is_hermitian():
            raise ThermoError("Thermodynamic Hamiltonian must be Hermitian")
        dense = self.system_part.to_dense()
        if np.max(np.abs(dense - np.diag(np.diag(dense)))) > 0:
            raise ThermoError("Thermodynamic Hamiltonian must be diagonal in the level basis")

    def on(self, system: OpenSystem) -> Operator:
        """The operator on the model's space, including the cavity term when there is one."""
        h = embed(self.system_part, system.space, system.system_slot)
        if system.cavity_slot is not None:
            _, number = cavity_operators(system.space, system.displacement)
            h = h + self.cavity_weight * number
        return h


def cavity_operators(
    space: HilbertSpace, displacement: complex = 0j
) -> tuple[Operator, Operator]:
    """(a, a^dagger a) on cavity slot 0, with a = displacement + a_tilde."""
    a = embed(fock_annihilation(space.dims[0]), space, 0)
    if displacement:
        a = a + complex(displacement) * space.identity()
    return a, a.dagger() @ a


@dataclass(frozen=True)
class CavityMoments:
    a_mean: complex
    n_mean: float
    anti_normal_mean: float  # <a a^dagger>, kept separate from <a^dagger a> + 1 at finite cutoff


def cavity_moments(rho: Operator, displacement: complex = 0j) -> CavityMoments:
    a, number = cavity_operators(rho.space, displacement)
    return CavityMoments(
        a_mean=expect(a, rho),
        n_mean=expect(number, rho).real,
        anti_normal_mean=expect(a @ a.dagger(), rho).real,
    )


def bath_heat_current(
    system: OpenSystem,
    rho: Operator | SteadyState,
    thermo_h: ThermoHamiltonian,
    bath_id: str,
) -> float:
    """tr(H_TD D_bath rho), evaluated as <D_bath^dagger(H_TD)> with the lab-frame jumps."""
    rho = rho.rho if isinstance(rho, SteadyState) else rho
    indices = system.channel_indices(bath_id)
    if not indices:
        raise ThermoError(f"Model has no bath {bath_id!r}")
    temperatures = {system.channels[k].temperature for k in indices}
    if len(temperatures) > 1:
        raise ThermoError(f"Bath {bath_id!r} channels disagree on temperature: {temperatures}")

    h_td = thermo_h.on(system)
    total = 0.0
    for k in indices:
        ch = system.channels[k]
        if ch.rate == 0:
            continue
        jump = ch.lab_jump
        jump_dag = jump.dagger()
        ldl = jump_dag @ jump
        adjoint = jump_dag @ h_td @ jump - 0.5 * (ldl @ h_td + h_td @ ldl)
        total += ch.rate * expect(adjoint, rho).real
    return total


def cavity_heat_current(
    rho: Operator, kappa: float, n_bar: float, omega_d: float, displacement: complex = 0j
) -> float:
    """omega_d kappa (n_bar <a a^dagger> - (n_bar + 1) <a^dagger a>).

    Equal to omega_d kappa (n_bar - <a^dagger a>) on an untruncated space; the
    truncated form matches the cavity channels exactly.
    """
    m = cavity_moments(rho, displacement)
    return omega_d * kappa * (n_bar * m.anti_normal_mean - (n_bar + 1.0) * m.n_mean)


def power_standard(
    rho: Operator, amplitude: float | None, omega_d: float, displacement: complex = 0j
) -> float:
    """-omega_d E <a + a^dagger>: work done by the coherent drive."""
    if amplitude is None:
        raise ThermoError("Power needs a driven cavity")
    a_mean = cavity_moments(rho, displacement).a_mean
    return -omega_d * amplitude * 2.0 * a_mean.real


def power_io(
    rho: Operator, p_standard: float, kappa: float, omega_d: float, displacement: complex = 0j
) -> float:
    """Power minus the energy flux of the coherent output field."""
    a_mean = cavity_moments(rho, displacement).a_mean
    return p_standard - omega_d * kappa * abs(a_mean) ** 2


def heat_io(j_cavity: float, p_standard: float, p_io: float) -> float:
    """Cavity heat counting only field fluctuations; J + P = J_io + P_io."""
    return j_cavity + p_standard - p_io


def power_semiclassical(
    rho: Operator, g: float, alpha: complex, coupling: Operator, omega_d: float
) -> float:
    """-i omega_d g (alpha <O^dagger> - conj(alpha) <O>) for the classically driven system."""
    o_mean = expect(coupling, rho)
    o_dag_mean = expect(coupling.dagger(), rho)
    value = -1j * omega_d * g * (alpha * o_dag_mean - np.conj(alpha) * o_mean)
    if abs(value.imag) > IMAGINARY_TOL * max(1.0, abs(value)):
        raise ThermoError(f"Semi-classical power has imaginary part {value.imag:.3e}")
    return float(value.real)


def entropy_production(
    framework: Framework | str,
    system_currents: Mapping[str, tuple[float, float]],
    cavity_current: float | None = None,
    cavity_temperature: float | None = None,
) -> float:
    """-sum_j J_j / T_j, plus -J / T for the cavity in the standard and io bookkeepings.

    ``system_currents`` maps bath id to (heat current, temperature). For the io
    bookkeeping ``cavity_current`` is J_io.
    """
    framework = Framework(framework)
    sigma = 0.0
    for bath_id, (current, temperature) in system_currents.items():
        if not temperature > 0:
            raise ThermoError(f"Bath {bath_id!r} temperature must be positive")
        sigma -= current / temperature
    if framework is Framework.SC:
        return sigma
    if cavity_current is None or cavity_temperature is None:
        raise ThermoError(f"{framework.value} entropy production needs the cavity heat current")
    if not cavity_temperature > 0:
        raise ThermoError("Cavity bath temperature must be positive")
    return sigma - cavity_current / cavity_temperature


def thermodynamic_uncertainty(mean: float, variance: float, sigma: float) -> float:
    """Q = variance / mean^2 * sigma."""
    if mean == 0 or abs(mean) < UNDEFINED_CURRENT_RATIO * math.sqrt(abs(variance)):
        raise UndefinedUncertaintyError(mean, variance)
    return variance / mean**2 * sigma


def q_standard_prediction(
    q_sc: float, mean: float, variance: float, j_cavity: float, temperature: float
) -> float:
    """Standard-bookkeeping Q expected from the semi-classical one: Q_sc - (var / mean^2) J / T."""
    return q_sc - variance / mean**2 * j_cavity / temperature


def first_law_residual(power: float, currents: Iterable[float]) -> float:
    """|P + sum J| relative to the largest term."""
    terms = [power, *currents]
    scale = max(abs(t) for t in terms)
    if scale == 0:
        return 0.0
    return abs(math.fsum(terms)) / scale


@dataclass
class ThermoReport:
    J_bath: dict[str, float]
    T_bath: dict[str, float]
    J_cavity: float | None = None
    J_io: float | None = None
    P_standard: float | None = None
    P_io: float | None = None
    P_sc: float | None = None
    sigma_standard: float | None = None
    sigma_io: float | None = None
    sigma_sc: float | None = None
    a_mean: complex | None = None
    noise: dict[str, NoiseResult] = field(default_factory=dict)
    Q: dict[tuple[str, Framework], float | None] = field(default_factory=dict)
    first_law_residuals: dict[Framework, float] = field(default_factory=dict)
    solver_residual: float = 0.0
    edge_population: float = 0.0

    def q_undefined(self, current: str, framework: Framework) -> bool:
        return (current, framework) in self.Q and self.Q[(current, framework)] is None

    def second_law_ok(self, slack: float = SECOND_LAW_SLACK) -> bool:
        if self.sigma_standard is None or self.sigma_io is None:
            return True
        tol = slack * abs(self.sigma_standard)
        return self.sigma_standard >= self.sigma_io - tol and self.sigma_io >= -tol


def evaluate(
    system: OpenSystem,
    steady: SteadyState,
    thermo_h: ThermoHamiltonian,
    noise: Mapping[str, NoiseResult] | None = None,
    p_sc: float | None = None,
    frameworks: Iterable[Framework | str] = tuple(Framework),
) -> ThermoReport:
    """Assemble every current, power, entropy production and Q value for one steady state.

    ``noise`` maps a bath id to the counted statistics of that bath's heat
    current. Standard and io quantities need a driven cavity in ``system``.
    """
    frameworks = [Framework(f) for f in frameworks]
    rho = steady.rho
    system_baths = [b for b in system.bath_ids() if b != CAVITY_BATH]
    report = ThermoReport(
        J_bath={b: bath_heat_current(system, rho, thermo_h, b) for b in system_baths},
        T_bath={b: system.bath_temperature(b) for b in system_baths},
        P_sc=p_sc,
        noise=dict(noise or {}),
        solver_residual=steady.residual,
        edge_population=steady.edge_population,
    )
    currents = {b: (report.J_bath[b], report.T_bath[b]) for b in system_baths}
    report.sigma_sc = entropy_production(Framework.SC, currents)

    has_cavity = system.cavity_slot is not None and system.drive is not None
    if has_cavity:
        drive = system.drive
        t_cav = system.bath_temperature(CAVITY_BATH)
        report.J_cavity = bath_heat_current(system, rho, thermo_h, CAVITY_BATH)
        report.a_mean = cavity_moments(rho, system.displacement).a_mean
        report.P_standard = power_standard(rho, drive.amplitude, drive.frequency,
                                           system.displacement)
        report.P_io = power_io(rho, report.P_standard, drive.kappa, drive.frequency,
                               system.displacement)
        report.J_io = heat_io(report.J_cavity, report.P_standard, report.P_io)
        report.sigma_standard = entropy_production(
            Framework.STANDARD, currents, report.J_cavity, t_cav
        )
        report.sigma_io = entropy_production(Framework.IO, currents, report.J_io, t_cav)
        system_sum = list(report.J_bath.values())
        report.first_law_residuals[Framework.STANDARD] = first_law_residual(
            report.P_standard, [report.J_cavity, *system_sum]
        )
        report.first_law_residuals[Framework.IO] = first_law_residual(
            report.P_io, [report.J_io, *system_sum]
        )
        if not report.second_law_ok():
            logger.warning(
                "Second-law chain violated: sigma=%.6g sigma_io=%.6g",
                report.sigma_standard, report.sigma_io,
            )
    if p_sc is not None:
        report.first_law_residuals[Framework.SC] = first_law_residual(
            p_sc, list(report.J_bath.values())
        )

    sigmas = {
        Framework.STANDARD: report.sigma_standard,
        Framework.IO: report.sigma_io,
        Framework.SC: report.sigma_sc,
    }
    for current, stats in report.noise.items():
        for fw in frameworks:
            sigma = sigmas[fw]
            if sigma is None:
                continue
            try:
                report.Q[(current, fw)] = thermodynamic_uncertainty(
                    stats.mean, stats.variance, sigma
                )
            except UndefinedUncertaintyError as exc:
                logger.info("Q(%s, %s) undefined: %s", current, fw.value, exc)
                report.Q[(current, fw)] = None
    return report
