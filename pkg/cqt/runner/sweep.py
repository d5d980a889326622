"""Parameter sweeps: one row of thermodynamic quantities per sweep value and model."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any

import numpy as np
from tqdm import tqdm

from cqt.config import RunConfig
from cqt.engine.fcs import (
    NoiseError,
    counted_bath_current,
    current_noise_drazin,
    current_noise_tilted_fd,
)
from cqt.engine.lindblad import (
    BorderedSolver,
    SteadyStateError,
    check_cutoff_convergence,
    liouvillian,
    steady_state,
)
from cqt.engine.thermo import (
    Framework,
    ThermoReport,
    evaluate,
    power_semiclassical,
    q_standard_prediction,
)
from cqt.models.maser import (
    COLD_BATH,
    HOT_BATH,
    MaserParams,
    build_maser,
    build_sc_maser,
    coupling_operator,
    maser_thermo_hamiltonian,
)
from cqt.runner.convergence import make_observable

logger = logging.getLogger(__name__)

POINT_ERRORS = (SteadyStateError, NoiseError, ValueError, ArithmeticError, np.linalg.LinAlgError,
                RuntimeError)


def columns(currents: list[str]) -> list[str]:
    """Header of the sweep table; per counted current X: J_X_mean, J_X_variance, Q_X_* ..."""
    head = [
        "model", "axis", "sweep_value", "n_H", "g_ratio",
        "J_H", "J_C", "J", "J_io", "P", "P_io", "P_sc",
        "sigma", "sigma_io", "sigma_sc",
    ]
    per_current: list[str] = []
    for x in currents:
        per_current += [
            f"J_{x}_mean", f"J_{x}_variance",
            f"Q_{x}_standard", f"Q_{x}_io", f"Q_{x}_sc",
            f"Q_{x}_standard_undefined", f"Q_{x}_io_undefined", f"Q_{x}_sc_undefined",
            f"Q_{x}_standard_predicted",
        ]
    tail = [
        "first_law_standard", "first_law_io", "first_law_sc",
        "solver_residual", "edge_population",
        "sigma_gap_semiclassical", "n_bar_ratio", "a_mean_re", "a_mean_im",
        "cutoff_rel_diff", "cutoff_converged", "error",
    ]
    return head + per_current + tail


@dataclass(frozen=True)
class PointTask:
    """Everything one worker needs for one row; plain data so it pickles."""

    model: str
    axis: str
    value: float
    params: dict[str, Any]
    frameworks: tuple[str, ...]
    currents: tuple[str, ...]
    frame: str
    noise_method: str
    fd_step: float
    steady_tol: float
    check_cutoff: bool
    cutoff_step: int
    threshold: float
    edge_threshold: float


def point_params(base: MaserParams, axis: str, value: float) -> MaserParams:
    if axis == "n_H":
        return base.with_updates(n_H_override=value)
    if axis == "g_ratio":
        return base.with_updates(g=value * base.kappa)
    raise ValueError(f"Unknown sweep axis {axis!r}")


def build_tasks(cfg: RunConfig) -> list[PointTask]:
    tasks = []
    for value in cfg.sweep.resolved_values():
        params = point_params(cfg.model, cfg.sweep.axis, value).model_dump()
        for model in cfg.models:
            tasks.append(PointTask(
                model=model,
                axis=cfg.sweep.axis,
                value=float(value),
                params=params,
                frameworks=tuple(cfg.frameworks),
                currents=tuple(cfg.currents_to_count),
                frame=cfg.solver.frame,
                noise_method=cfg.solver.noise_method,
                fd_step=cfg.solver.fd_step,
                steady_tol=cfg.solver.steady_tol,
                check_cutoff=cfg.solver.check_cutoff,
                cutoff_step=cfg.solver.cutoff_step,
                threshold=cfg.convergence.threshold,
                edge_threshold=cfg.convergence.edge_threshold,
            ))
    return tasks


def _report_columns(report: ThermoReport, currents: tuple[str, ...]) -> dict[str, Any]:
    out: dict[str, Any] = {
        "J_H": report.J_bath.get(HOT_BATH),
        "J_C": report.J_bath.get(COLD_BATH),
        "J": report.J_cavity,
        "J_io": report.J_io,
        "P": report.P_standard,
        "P_io": report.P_io,
        "P_sc": report.P_sc,
        "sigma": report.sigma_standard,
        "sigma_io": report.sigma_io,
        "sigma_sc": report.sigma_sc,
        "first_law_standard": report.first_law_residuals.get(Framework.STANDARD),
        "first_law_io": report.first_law_residuals.get(Framework.IO),
        "first_law_sc": report.first_law_residuals.get(Framework.SC),
        "solver_residual": report.solver_residual,
        "edge_population": report.edge_population,
    }
    if report.a_mean is not None:
        out["a_mean_re"] = report.a_mean.real
        out["a_mean_im"] = report.a_mean.imag
    for x in currents:
        stats = report.noise.get(x)
        if stats is None:
            continue
        out[f"J_{x}_mean"] = stats.mean
        out[f"J_{x}_variance"] = stats.variance
        for fw in Framework:
            if (x, fw) in report.Q:
                out[f"Q_{x}_{fw.value}"] = report.Q[(x, fw)]
                out[f"Q_{x}_{fw.value}_undefined"] = report.q_undefined(x, fw)
    return out


def evaluate_point(task: PointTask) -> dict[str, Any]:
    """Solve one (sweep value, model) point. Failures land in the ``error`` column."""
    row: dict[str, Any] = dict.fromkeys(columns(list(task.currents)))
    row.update(model=task.model, axis=task.axis, sweep_value=task.value)
    try:
        p = MaserParams.model_validate(task.params)
        row.update(n_H=p.n_bar_H, g_ratio=p.g / p.kappa, n_bar_ratio=p.n_bar_ratio)
        composite = task.model == "composite"
        system = build_maser(p, task.frame) if composite else build_sc_maser(p)
        L = liouvillian(system)
        solver = BorderedSolver(L)
        steady = steady_state(L, task.steady_tol, solver)

        noise = {}
        for bath in task.currents:
            if bath not in system.bath_ids():
                continue
            counted = counted_bath_current(system, bath)
            if task.noise_method == "tilted_fd":
                noise[bath] = current_noise_tilted_fd(system, counted, task.fd_step)
            else:
                noise[bath] = current_noise_drazin(
                    system, counted, task.steady_tol, L=L, solver=solver, steady=steady
                )

        p_sc = None
        if not composite:
            p_sc = power_semiclassical(
                steady.rho, p.g, p.alpha, coupling_operator(system), p.omega_d
            )
        report = evaluate(
            system, steady, maser_thermo_hamiltonian(p), noise, p_sc, task.frameworks
        )
        row.update(_report_columns(report, task.currents))

        if composite and task.check_cutoff:
            lower = p.n_cutoff - task.cutoff_step
            check = check_cutoff_convergence(
                lambda n: build_maser(p.with_updates(n_cutoff=n), task.frame),
                make_observable("J_C", maser_thermo_hamiltonian(p)),
                [lower, p.n_cutoff],
                threshold=task.threshold,
                edge_threshold=task.edge_threshold,
                tol=task.steady_tol,
            )
            row.update(cutoff_rel_diff=check.differences[-1], cutoff_converged=check.converged)
        logger.info("%s %s=%g solved (residual %.1e)", task.model, task.axis, task.value,
                    steady.residual)
    except POINT_ERRORS as exc:
        logger.warning("%s %s=%g failed: %s", task.model, task.axis, task.value, exc)
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def _attach_cross_model(rows: list[dict[str, Any]], cfg: RunConfig) -> None:
    """Composite rows get predictions built from the semi-classical row at the same value."""
    by_value: dict[float, dict[str, dict[str, Any]]] = {}
    for row in rows:
        by_value.setdefault(row["sweep_value"], {})[row["model"]] = row
    temperature = cfg.model.T
    for pair in by_value.values():
        comp, sc = pair.get("composite"), pair.get("semiclassical")
        if comp is None or sc is None or comp["error"] or sc["error"]:
            continue
        if comp["sigma"] is not None and sc["sigma_sc"] is not None and comp["J"] is not None:
            reduced = sc["sigma_sc"] - comp["J"] / temperature
            comp["sigma_gap_semiclassical"] = comp["sigma"] - reduced
        for x in cfg.currents_to_count:
            q_sc = sc.get(f"Q_{x}_sc")
            mean, variance = comp.get(f"J_{x}_mean"), comp.get(f"J_{x}_variance")
            if q_sc is None or not mean or variance is None or comp["J"] is None:
                continue
            comp[f"Q_{x}_standard_predicted"] = q_standard_prediction(
                q_sc, mean, variance, comp["J"], temperature
            )


def run_sweep(cfg: RunConfig, progress: bool = False) -> list[dict[str, Any]]:
    """Rows in sweep order, each requested model per sweep value."""
    tasks = build_tasks(cfg)
    logger.info("Sweep over %s: %d points x %d models", cfg.sweep.axis,
                len(cfg.sweep.resolved_values()), len(cfg.models))
    workers = max(1, cfg.runner.max_workers)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(tqdm(pool.map(evaluate_point, tasks), total=len(tasks),
                             disable=not progress, desc="sweep"))
    else:
        rows = [evaluate_point(t) for t in tqdm(tasks, disable=not progress, desc="sweep")]
    _attach_cross_model(rows, cfg)
    failed = sum(1 for r in rows if r["error"])
    if failed:
        logger.warning("%d of %d sweep points failed", failed, len(rows))
    return rows
