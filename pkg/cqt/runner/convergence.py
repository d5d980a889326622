"""Cutoff and semi-classical-limit convergence tables."""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

from cqt.config import RunConfig
from cqt.engine.fcs import NoiseError
from cqt.engine.lindblad import (
    OpenSystem,
    SteadyState,
    SteadyStateError,
    check_cutoff_convergence,
    liouvillian,
    steady_state,
)
from cqt.engine.thermo import ThermoHamiltonian, bath_heat_current, cavity_moments
from cqt.models.maser import (
    COLD_BATH,
    HOT_BATH,
    MaserParams,
    build_maser,
    build_sc_maser,
    maser_thermo_hamiltonian,
    semiclassical_limit_family,
    suggested_cutoff,
)

logger = logging.getLogger(__name__)

COLUMNS = [
    "table",
    "observable",
    "cutoff",
    "scale",
    "g",
    "E",
    "value",
    "rel_diff",
    "J_C_composite",
    "J_C_sc",
    "gap",
    "edge_population",
    "passed",
    "error",
]

# s = max(scales) must close at least half of the s = min(scales) gap
GAP_REDUCTION = 0.5

Observable = Callable[[OpenSystem, SteadyState], float]


@dataclass
class ConvergenceReport:
    cutoff_rows: list[dict[str, Any]] = field(default_factory=list)
    scale_rows: list[dict[str, Any]] = field(default_factory=list)
    cutoff_passed: bool = False
    scale_passed: bool = False

    @property
    def passed(self) -> bool:
        return self.cutoff_passed and self.scale_passed

    @property
    def rows(self) -> list[dict[str, Any]]:
        return self.cutoff_rows + self.scale_rows


def make_observable(name: str, thermo_h: ThermoHamiltonian) -> Observable:
    if name == "n_photon":
        return lambda system, steady: cavity_moments(steady.rho, system.displacement).n_mean
    if name in ("J_C", "J_H"):
        bath = COLD_BATH if name == "J_C" else HOT_BATH
        return lambda system, steady: bath_heat_current(system, steady, thermo_h, bath)
    raise ValueError(f"Unknown observable {name!r}")


def _row(**values: Any) -> dict[str, Any]:
    row = dict.fromkeys(COLUMNS)
    row.update(values)
    return row


def cutoff_table(cfg: RunConfig, params: MaserParams | None = None) -> tuple[list[dict], bool]:
    p = params or cfg.model
    conv = cfg.convergence
    frame = cfg.solver.frame
    observable = make_observable(conv.observable, maser_thermo_hamiltonian(p))
    try:
        report = check_cutoff_convergence(
            lambda n: build_maser(p.with_updates(n_cutoff=n), frame),
            observable,
            conv.cutoffs,
            threshold=conv.threshold,
            edge_threshold=conv.edge_threshold,
            tol=cfg.solver.steady_tol,
        )
    except (SteadyStateError, ValueError) as exc:
        logger.warning("Cutoff convergence failed: %s", exc)
        return [_row(table="cutoff", observable=conv.observable, passed=False,
                     error=f"{type(exc).__name__}: {exc}")], False

    rows = []
    for i, cutoff in enumerate(report.cutoffs):
        diff = report.differences[i - 1] if i else None
        edge = report.edge_populations[i]
        passed = None if diff is None else (diff <= conv.threshold and edge <= conv.edge_threshold)
        rows.append(_row(
            table="cutoff", observable=conv.observable, cutoff=cutoff, g=p.g, E=p.E,
            value=report.values[i], rel_diff=diff, edge_population=edge, passed=passed,
        ))
    return rows, report.converged


def _cold_current(
    system: OpenSystem, thermo_h: ThermoHamiltonian, tol: float
) -> tuple[float, float]:
    steady = steady_state(liouvillian(system), tol)
    return bath_heat_current(system, steady, thermo_h, COLD_BATH), steady.edge_population


def scale_table(cfg: RunConfig, params: MaserParams | None = None) -> tuple[list[dict], bool]:
    """Cold-bath current of the composite model against the semi-classical one along g -> g/s."""
    p = params or cfg.model
    conv = cfg.convergence
    rows: list[dict] = []
    gaps: list[float] = []
    for scale in conv.scales:
        ps = semiclassical_limit_family(p, scale)
        cutoff = conv.scale_cutoff or suggested_cutoff(ps, conv.scale_frame)
        ps = ps.with_updates(n_cutoff=cutoff)
        thermo_h = maser_thermo_hamiltonian(ps)
        try:
            j_comp, edge = _cold_current(build_maser(ps, conv.scale_frame), thermo_h,
                                         cfg.solver.steady_tol)
            j_sc, _ = _cold_current(build_sc_maser(ps), thermo_h, cfg.solver.steady_tol)
        except (SteadyStateError, NoiseError, ValueError) as exc:
            logger.warning("Scale %g failed: %s", scale, exc)
            rows.append(_row(table="scale", observable="J_C", scale=scale, cutoff=cutoff,
                             g=ps.g, E=ps.E, passed=False, error=f"{type(exc).__name__}: {exc}"))
            return rows, False
        gap = abs(j_comp - j_sc)
        passed = not gaps or gap < gaps[-1]
        gaps.append(gap)
        logger.info("scale=%g cutoff=%d J_C=%.10g J_C_sc=%.10g gap=%.3e", scale, cutoff, j_comp,
                    j_sc, gap)
        rows.append(_row(
            table="scale", observable="J_C", scale=scale, cutoff=cutoff, g=ps.g, E=ps.E,
            J_C_composite=j_comp, J_C_sc=j_sc, gap=gap, edge_population=edge, passed=passed,
        ))
    ok = all(r["passed"] for r in rows) and (
        len(gaps) < 2 or gaps[-1] <= GAP_REDUCTION * gaps[0]
    )
    return rows, ok


def run_convergence(cfg: RunConfig) -> ConvergenceReport:
    cutoff_rows, cutoff_ok = cutoff_table(cfg)
    scale_rows, scale_ok = scale_table(cfg)
    if not cutoff_ok:
        logger.warning("Cutoff convergence check failed")
    if not scale_ok:
        logger.warning("Semi-classical convergence check failed")
    return ConvergenceReport(
        cutoff_rows=cutoff_rows,
        scale_rows=scale_rows,
        cutoff_passed=cutoff_ok,
        scale_passed=scale_ok,
    )
