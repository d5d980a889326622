"""End-to-end checks of the maser engine at the reference operating point.

The sweeps solve the composite model with 40 Fock levels at every point (the
limit-family check uses the displaced frame) and are marked slow; run them
with ``pytest -m slow``.
"""

import pytest

from cqt.config import DEFAULT_G_RATIO_VALUES, DEFAULT_N_H_VALUES, RunConfig
from cqt.engine.fcs import counted_bath_current, current_noise_drazin, current_noise_tilted_fd
from cqt.models.maser import build_maser, fig2_defaults, semiclassical_limit_family
from cqt.runner.sweep import run_sweep

pytestmark = pytest.mark.slow

CLASSICAL_WINDOW = (1.0, 3.0)


def _pairs(rows):
    comp = [r for r in rows if r["model"] == "composite"]
    sc = [r for r in rows if r["model"] == "semiclassical"]
    assert [r["sweep_value"] for r in comp] == [r["sweep_value"] for r in sc]
    return list(zip(comp, sc))


def _limit_family_sweep(scale):
    base = semiclassical_limit_family(fig2_defaults(), scale).with_updates(n_cutoff=20)
    cfg = RunConfig.model_validate({
        "model": base.model_dump(),
        "sweep": {"axis": "n_H", "values": [0.5, 10.0]},
        "solver": {"frame": "displaced"},
    })
    rows = run_sweep(cfg)
    assert all(r["error"] is None for r in rows)
    return _pairs(rows)


@pytest.fixture(scope="module")
def n_h_sweep():
    cfg = RunConfig.model_validate({"model": {"n_cutoff": 40}})
    rows = run_sweep(cfg)
    assert all(r["error"] is None for r in rows)
    return _pairs(rows)


@pytest.fixture(scope="module")
def g_sweep():
    cfg = RunConfig.model_validate({
        "model": {"n_cutoff": 40, "n_H_override": 2.0},
        "sweep": {"axis": "g_ratio"},
    })
    rows = run_sweep(cfg)
    assert all(r["error"] is None for r in rows)
    return _pairs(rows)


class TestOccupationSweep:
    def test_covers_the_range(self, n_h_sweep):
        assert [c["n_H"] for c, _ in n_h_sweep] == DEFAULT_N_H_VALUES

    def test_first_laws(self, n_h_sweep):
        for comp, sc in n_h_sweep:
            assert comp["first_law_standard"] <= 1e-8
            assert comp["first_law_io"] <= 1e-8
            assert sc["first_law_sc"] <= 1e-8

    def test_second_law_chain(self, n_h_sweep):
        for comp, _ in n_h_sweep:
            slack = 1e-10 * abs(comp["sigma"])
            assert comp["sigma"] >= comp["sigma_io"] - slack
            assert comp["sigma_io"] >= -slack

    def test_truncation_is_negligible(self, n_h_sweep):
        for comp, _ in n_h_sweep:
            assert comp["edge_population"] < 1e-6

    def test_power_matches_classical_drive(self, n_h_sweep):
        window = [
            (c, s) for c, s in n_h_sweep
            if CLASSICAL_WINDOW[0] <= c["n_H"] <= CLASSICAL_WINDOW[1] and s["P_sc"] < 0
        ]
        assert len(window) == 4
        for comp, sc in window:
            assert comp["P_io"] == pytest.approx(sc["P_sc"], rel=0.05)
            assert comp["sigma_io"] == pytest.approx(sc["sigma_sc"], rel=0.05)

    def test_classical_drive_gap_stays_bounded(self, n_h_sweep):
        # at g / kappa = 0.025 the finite-coupling correction reaches ~10% at the ends
        for comp, sc in n_h_sweep:
            if sc["P_sc"] < 0:
                assert comp["P_io"] == pytest.approx(sc["P_sc"], rel=0.12)
                assert comp["sigma_io"] == pytest.approx(sc["sigma_sc"], rel=0.12)

    def test_uncertainty_products(self, n_h_sweep):
        for comp, _ in n_h_sweep:
            assert comp["Q_C_standard"] > 2.0
        assert any(c["Q_C_io"] < 2.0 and s["Q_C_sc"] < 2.0 for c, s in n_h_sweep)
        for comp, sc in n_h_sweep:
            if sc["P_sc"] < 0:
                assert comp["Q_C_io"] == pytest.approx(sc["Q_C_sc"], rel=0.10)


class TestCouplingSweep:
    def test_values(self, g_sweep):
        assert [c["g_ratio"] for c, _ in g_sweep] == pytest.approx(DEFAULT_G_RATIO_VALUES)

    def test_semiclassical_picture_breaks_down(self, g_sweep):
        power_gaps = [abs(c["P_io"] - s["P_sc"]) for c, s in g_sweep]
        q_gaps = [abs(c["Q_C_io"] - s["Q_C_sc"]) for c, s in g_sweep]
        assert power_gaps == sorted(power_gaps)
        assert q_gaps == sorted(q_gaps)


class TestNoiseCrossValidation:
    def test_composite_tilted_matches_drazin(self):
        p = fig2_defaults().with_updates(n_cutoff=15, n_H_override=2.0)
        system = build_maser(p)
        counted = counted_bath_current(system, "C")
        fd = current_noise_tilted_fd(system, counted)
        exact = current_noise_drazin(system, counted)
        assert fd.mean == pytest.approx(exact.mean, rel=1e-6)
        assert fd.variance == pytest.approx(exact.variance, rel=1e-5)


class TestLimitFamily:
    def test_classical_drive_gap_is_quadratic_in_coupling(self):
        coarse = _limit_family_sweep(1.0)
        fine = _limit_family_sweep(2.0)

        def gap(pair, key, sc_key):
            comp, sc = pair
            return abs(comp[key] - sc[sc_key]) / abs(sc[sc_key])

        # halving g at fixed g * alpha shrinks the gap about fourfold
        assert fine[0][1]["P_sc"] == pytest.approx(coarse[0][1]["P_sc"], rel=1e-10)
        assert 3.0 <= gap(coarse[0], "P_io", "P_sc") / gap(fine[0], "P_io", "P_sc") <= 5.0
        assert 3.0 <= gap(coarse[1], "sigma_io", "sigma_sc") / gap(
            fine[1], "sigma_io", "sigma_sc"
        ) <= 5.0
