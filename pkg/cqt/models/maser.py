"""Three-level maser in a driven cavity, and its semi-classical reduction.

Levels |1>, |2>, |3> are indices 0, 1, 2. The hot bath drives 1 <-> 3, the
cold bath 2 <-> 3, and the cavity couples 1 <-> 2 through O = |1><2|. All
frequencies and rates are in units of kappa; dynamics is in the frame
rotating at the drive frequency omega_d.
"""

from __future__ import annotations

import logging
import math
from typing import Literal

from pydantic import BaseModel, field_validator, model_validator

from cqt.engine.hilbert import HilbertSpace, Operator, embed, fock_annihilation, transition
from cqt.engine.lindblad import DissipationChannel, DriveSpec, OpenSystem
from cqt.engine.thermo import CAVITY_BATH, ThermoHamiltonian
from cqt.models.semiclassical import (
    ParameterError,
    SemiClassicalDrive,
    bose_einstein,
    temperature_for_occupation,
)

logger = logging.getLogger(__name__)

LEVEL_1, LEVEL_2, LEVEL_3 = 0, 1, 2
HOT_BATH = "H"
COLD_BATH = "C"

Frame = Literal["lab", "displaced"]

_FREQUENCY_TOL = 1e-9


class MaserParams(BaseModel):
    """Model parameters; defaults are the reference engine operating point."""

    kappa: float = 1.0
    E: float = 1.5
    g: float = 0.025
    Delta: float = 0.0
    omega_d: float = 3500.0
    Omega: float | None = None
    omega_2: float | None = None
    omega_3: float | None = None
    gamma_H: float = 0.1
    gamma_C: float = 2.0
    T: float = 2000.0
    T_C: float = 2000.0
    T_H: float = 7.4e4
    n_cutoff: int = 30
    n_H_override: float | None = None

    @field_validator("kappa", "omega_d", "gamma_H", "gamma_C", "T", "T_C", "T_H")
    @classmethod
    def validate_positive(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("must be positive")
        return v

    @field_validator("g")
    @classmethod
    def validate_coupling(cls, v: float) -> float:
        if v < 0:
            raise ValueError("coupling g must be non-negative")
        return v

    @field_validator("n_cutoff")
    @classmethod
    def validate_cutoff(cls, v: int) -> int:
        if v < 2:
            raise ValueError("n_cutoff must be at least 2")
        return v

    @field_validator("n_H_override")
    @classmethod
    def validate_override(cls, v: float | None) -> float | None:
        if v is not None and not v > 0:
            raise ValueError("n_H_override must be positive (it fixes a finite T_H)")
        return v

    @model_validator(mode="after")
    def fill_frequencies(self) -> MaserParams:
        expected_omega = self.omega_d + self.Delta
        if self.Omega is None:
            self.Omega = expected_omega
        elif abs(self.Omega - expected_omega) > _FREQUENCY_TOL * abs(self.Omega):
            raise ValueError(f"Omega={self.Omega} inconsistent with omega_d + Delta")
        if self.omega_2 is None:
            self.omega_2 = self.Omega
        elif abs(self.omega_2 - self.Omega) > _FREQUENCY_TOL * abs(self.Omega):
            raise ValueError("omega_2 must equal Omega")
        if self.omega_3 is None:
            self.omega_3 = 3.0 * self.omega_2
        if not self.omega_3 > self.omega_d:
            raise ValueError("omega_3 must exceed omega_d (cold-bath quantum must be positive)")
        return self

    def with_updates(self, **changes) -> MaserParams:
        """Validated copy with some fields replaced."""
        return MaserParams.model_validate({**self.model_dump(), **changes})

    # -- derived quantities -----------------------------------------------

    @property
    def n_bar(self) -> float:
        """Cavity bath occupation, taken at the drive frequency."""
        return bose_einstein(self.omega_d, self.T)

    @property
    def n_bar_ratio(self) -> float:
        """n(omega_d) / n(Omega); reported only."""
        return self.n_bar / bose_einstein(self.Omega, self.T)

    @property
    def n_bar_H(self) -> float:
        if self.n_H_override is not None:
            return self.n_H_override
        return bose_einstein(self.omega_3, self.T_H)

    @property
    def T_H_effective(self) -> float:
        if self.n_H_override is not None:
            return temperature_for_occupation(self.omega_3, self.n_H_override)
        return self.T_H

    @property
    def n_bar_C(self) -> float:
        return bose_einstein(self.cold_quantum, self.T_C)

    @property
    def cold_quantum(self) -> float:
        return self.omega_3 - self.omega_d

    @property
    def drive(self) -> SemiClassicalDrive:
        return SemiClassicalDrive.from_drive(self.E, self.kappa, self.Delta, self.g)

    @property
    def alpha(self) -> complex:
        return self.drive.alpha

    @property
    def E_sc(self) -> complex:
        return self.drive.E_sc


def fig2_defaults() -> MaserParams:
    """Reference engine point: E=1.5, g=0.025, gamma_H=0.1, gamma_C=2, omega_d=3500, T=2000."""
    return MaserParams()


def _system_channels(p: MaserParams, space: HilbertSpace, slot: int) -> list[DissipationChannel]:
    def level(i: int, j: int) -> Operator:
        return embed(transition(3, i, j), space, slot)

    n_h, n_c = p.n_bar_H, p.n_bar_C
    t_h = p.T_H_effective
    w3, wc = p.omega_3, p.cold_quantum
    return [
        DissipationChannel(level(LEVEL_3, LEVEL_1), p.gamma_H * n_h, HOT_BATH, t_h, w3, "hot_up"),
        DissipationChannel(
            level(LEVEL_1, LEVEL_3), p.gamma_H * (n_h + 1.0), HOT_BATH, t_h, -w3, "hot_down"
        ),
        DissipationChannel(level(LEVEL_3, LEVEL_2), p.gamma_C * n_c, COLD_BATH, p.T_C, wc,
                           "cold_up"),
        DissipationChannel(
            level(LEVEL_2, LEVEL_3), p.gamma_C * (n_c + 1.0), COLD_BATH, p.T_C, -wc, "cold_down"
        ),
    ]


def _metadata(p: MaserParams, frame: str) -> dict:
    return {
        "frame": frame,
        "g": p.g,
        "alpha": p.alpha,
        "E_sc": p.E_sc,
        "omega_d": p.omega_d,
        "n_bar": p.n_bar,
        "n_bar_H": p.n_bar_H,
        "n_bar_C": p.n_bar_C,
        "T_H": p.T_H_effective,
        "n_H_source": "override" if p.n_H_override is not None else "temperature",
        "n_bar_ratio": p.n_bar_ratio,
    }


def build_maser(p: MaserParams, frame: Frame = "lab") -> OpenSystem:
    """Cavity (slot 0, n_cutoff Fock levels) coupled to the three-level system (slot 1).

    ``frame="displaced"`` writes the same model for a_tilde = a - alpha, which
    needs far fewer Fock levels when |alpha| is large.
    """
    if frame not in ("lab", "displaced"):
        raise ParameterError(f"Unknown frame {frame!r}", "frame", frame)
    space = HilbertSpace((p.n_cutoff, 3), fock_slots=(0,))
    a = embed(fock_annihilation(p.n_cutoff), space, 0)
    a_dag = a.dagger()
    o = embed(transition(3, LEVEL_1, LEVEL_2), space, 1)
    o_dag = o.dagger()
    level_2 = embed(transition(3, LEVEL_2, LEVEL_2), space, 1)

    flip_flop = p.g * (a @ o_dag + a_dag @ o)
    h = p.Delta * (a_dag @ a) + p.Delta * level_2 + flip_flop
    if frame == "lab":
        h = h + 1j * p.E * (a - a_dag)
        displacement = 0j
    else:
        alpha = p.alpha
        h = h + p.g * (alpha * o_dag + alpha.conjugate() * o)
        displacement = alpha

    n_bar = p.n_bar
    channels = [
        DissipationChannel(a, p.kappa * (n_bar + 1.0), CAVITY_BATH, p.T, -p.omega_d,
                           "cavity_emit", shift=displacement),
        DissipationChannel(a_dag, p.kappa * n_bar, CAVITY_BATH, p.T, p.omega_d, "cavity_absorb",
                           shift=displacement.conjugate()),
        *_system_channels(p, space, 1),
    ]
    logger.debug(
        "Maser built: frame=%s cutoff=%d g=%.4g E=%.4g n_H=%.4g", frame, p.n_cutoff, p.g, p.E,
        p.n_bar_H,
    )
    return OpenSystem(
        space=space,
        hamiltonian=h,
        channels=tuple(channels),
        drive=DriveSpec(amplitude=p.E, frequency=p.omega_d, kappa=p.kappa, detuning=p.Delta),
        cavity_slot=0,
        displacement=displacement,
        metadata=_metadata(p, frame),
    )


def build_sc_maser(p: MaserParams) -> OpenSystem:
    """Three-level system alone, driven by E_sc O^dagger + conj(E_sc) O."""
    space = HilbertSpace((3,))
    o = transition(3, LEVEL_1, LEVEL_2)
    e_sc = p.E_sc
    h = p.Delta * transition(3, LEVEL_2, LEVEL_2) + e_sc * o.dagger() + e_sc.conjugate() * o
    return OpenSystem(
        space=space,
        hamiltonian=h,
        channels=tuple(_system_channels(p, space, 0)),
        drive=None,
        cavity_slot=None,
        metadata=_metadata(p, "semiclassical"),
    )


def coupling_operator(system: OpenSystem) -> Operator:
    """O = |1><2| on the model's system slot."""
    return embed(transition(3, LEVEL_1, LEVEL_2), system.space, system.system_slot)


def maser_thermo_hamiltonian(p: MaserParams) -> ThermoHamiltonian:
    """omega_d a^dagger a + omega_d |2><2| + omega_3 |3><3|.

    Level 2 carries omega_d so that the flip-flop coupling conserves the
    bookkeeping energy exactly.
    """
    system_part = p.omega_d * transition(3, LEVEL_2, LEVEL_2) + p.omega_3 * transition(
        3, LEVEL_3, LEVEL_3
    )
    return ThermoHamiltonian(cavity_weight=p.omega_d, system_part=system_part)


def semiclassical_limit_family(p: MaserParams, scale: float) -> MaserParams:
    """g -> g / s, E -> E s: |alpha| grows by s while g alpha stays fixed."""
    if not scale > 0:
        raise ParameterError(f"Scale must be positive, got {scale}", "scale", scale)
    if scale == 1:
        return p.model_copy()
    return p.with_updates(g=p.g / scale, E=p.E * scale)


def suggested_cutoff(p: MaserParams, frame: Frame = "lab", tail: float = 1e-10) -> int:
    """Fock cutoff leaving roughly ``tail`` population above it.

    Lab frame: coherent amplitude |alpha| broadened by thermal noise.
    Displaced frame: geometric thermal tail plus a small margin for the
    emitter's own field.
    """
    n_bar = p.n_bar
    if frame == "lab":
        amp = abs(p.alpha)
        spread = 8.0 * amp * math.sqrt(n_bar + 0.5)
        return int(math.ceil(amp**2 + spread + 10))
    if n_bar <= 0:
        return 8
    levels = math.log(tail) / math.log(n_bar / (n_bar + 1.0))
    return max(8, int(math.ceil(levels)) + 4)
