"""Shared test fixtures for cqt."""

from __future__ import annotations

import pytest

from cqt.config import RunConfig
from cqt.engine.hilbert import HilbertSpace, transition
from cqt.engine.lindblad import DissipationChannel, OpenSystem
from cqt.engine.thermo import ThermoHamiltonian
from cqt.models.maser import MaserParams, fig2_defaults
from cqt.models.semiclassical import bose_einstein


def _qubit_between_baths(eps: float, baths: list[tuple[str, float, float]]) -> OpenSystem:
    """Qubit with gap ``eps`` coupled to Bose baths given as (bath_id, temperature, gamma)."""
    space = HilbertSpace((2,))
    lower = transition(2, 0, 1)
    raise_ = transition(2, 1, 0)
    channels = []
    for bath_id, temperature, gamma in baths:
        n = bose_einstein(eps, temperature)
        channels.append(DissipationChannel(raise_, gamma * n, bath_id, temperature, eps))
        channels.append(DissipationChannel(lower, gamma * (n + 1), bath_id, temperature, -eps))
    return OpenSystem(space=space, hamiltonian=0.0 * transition(2, 0, 0), channels=channels)


def _two_state_cycle(up: float, down: float) -> OpenSystem:
    """Classical telegraph process 0 -> 1 at rate ``up`` and 1 -> 0 at rate ``down``."""
    space = HilbertSpace((2,))
    return OpenSystem(
        space=space,
        hamiltonian=0.0 * transition(2, 0, 0),
        channels=[
            DissipationChannel(transition(2, 1, 0), up, "x", 1.0, 1.0, "up"),
            DissipationChannel(transition(2, 0, 1), down, "x", 1.0, -1.0, "down"),
        ],
    )


@pytest.fixture
def qubit_factory():
    return _qubit_between_baths


@pytest.fixture
def two_bath_qubit():
    return _qubit_between_baths(1.0, [("h", 2.0, 1.0), ("c", 1.0, 1.0)])


@pytest.fixture
def qubit_thermo_h():
    return ThermoHamiltonian(cavity_weight=0.0, system_part=transition(2, 1, 1))


@pytest.fixture
def two_state_cycle():
    return _two_state_cycle(1.3, 0.7)


@pytest.fixture
def cycle_factory():
    return _two_state_cycle


@pytest.fixture
def fig2_params() -> MaserParams:
    return fig2_defaults()


@pytest.fixture
def small_maser_params() -> MaserParams:
    """Engine point with few Fock levels: use it in the displaced frame."""
    return fig2_defaults().with_updates(n_cutoff=12, n_H_override=2.0)


@pytest.fixture
def lab_maser_params() -> MaserParams:
    """Truncated lab-frame engine; the first laws hold exactly at any cutoff."""
    return fig2_defaults().with_updates(n_cutoff=20, n_H_override=2.0)


@pytest.fixture
def small_run_config() -> RunConfig:
    return RunConfig.model_validate({
        "model": {"n_cutoff": 12},
        "sweep": {"axis": "n_H", "values": [1.0, 2.0]},
        "solver": {"frame": "displaced"},
        "output": {"path": "-"},
    })

