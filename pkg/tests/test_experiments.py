"""Experiment plumbing: initial data, fits, reports, and runner smoke tests.

The quantitative theorem surrogates live in test_acceptance.py; here we
check the machinery around them on small grids and short horizons.
"""

import json
import os

import numpy as np
import pytest

from nlsdelta.bound_states import BoundStateFamily
from nlsdelta.experiments import (
    ExperimentReport,
    delta_rho,
    fit_power,
    initial_state,
    random_localized_field,
    run_dispersion,
    run_modulation_residuals,
    run_selection,
    run_small_en,
)
from nlsdelta.grid import NormKind, norm
from nlsdelta.nonlinearity import power_law, saturating


class TestInitialState:
    @pytest.mark.parametrize("kind", ["ground_state", "offset_gaussian", "soliton_bump"])
    def test_h1_size_is_exact(self, kind, grid_main, sd_main, family_cubic):
        u = initial_state(kind, 0.05, grid_main, sd_main, family_cubic)
        assert norm(u, NormKind.H1) == pytest.approx(0.05, rel=1e-9)

    def test_unknown_shape_rejected(self, grid_main, sd_main):
        with pytest.raises(ValueError, match="unknown initial-state shape"):
            initial_state("plane_wave", 0.05, grid_main, sd_main)

    def test_nonpositive_size_rejected(self, grid_main, sd_main):
        with pytest.raises(ValueError, match="positive"):
            initial_state("ground_state", 0.0, grid_main, sd_main)

    def test_soliton_bump_needs_family(self, grid_main, sd_main):
        with pytest.raises(ValueError, match="family"):
            initial_state("soliton_bump", 0.05, grid_main, sd_main, None)

    def test_random_field_is_reproducible_and_localized(self, grid_main):
        a = random_localized_field(grid_main, np.random.default_rng(42))
        b = random_localized_field(grid_main, np.random.default_rng(42))
        assert np.array_equal(a.values, b.values)
        far = np.abs(grid_main.x) > 35.0
        assert np.max(np.abs(a.values[far])) < 1e-3 * np.max(np.abs(a.values))


class TestFits:
    def test_fit_power_recovers_exponent(self):
        x = np.array([0.02, 0.04, 0.08, 0.16])
        slope, dev = fit_power(x, 3.5 * x**2.2)
        assert slope == pytest.approx(2.2, abs=1e-10)
        assert dev < 1e-10

    def test_fit_power_flags_bad_rung(self):
        x = np.array([0.02, 0.04, 0.08, 0.16])
        y = 3.5 * x**2.2
        y[0] *= 2.0
        _, dev = fit_power(x, y)
        assert dev > 0.1

    def test_delta_rho_conventions(self):
        t = np.linspace(0.0, 10.0, 101)
        const = np.full_like(t, 0.3 + 0.1j, dtype=complex)
        assert delta_rho(t, const, 10.0) == 0.0
        ramp = t.astype(complex)
        assert delta_rho(t, ramp, 10.0) == pytest.approx(5.0)


class TestReport:
    def _dummy(self):
        rep = ExperimentReport(experiment="demo", config={"a": 1}, confighash="abc123")
        rep.rows.append({"eps": 0.1, "value": 2.0})
        rep.fits["slope"] = 1.5
        rep.checks["ok"] = True
        return rep

    def test_passed_tracks_checks(self):
        rep = self._dummy()
        assert rep.passed
        rep.checks["other"] = False
        assert not rep.passed

    def test_save_round_trip(self, tmp_path):
        rep = self._dummy()
        jpath, cpath = rep.save(str(tmp_path))
        assert os.path.basename(jpath) == "demo-abc123.json"
        with open(jpath) as fh:
            back = json.load(fh)
        assert back["confighash"] == "abc123"
        assert back["passed"] is True
        assert back["rows"][0]["eps"] == 0.1
        with open(cpath) as fh:
            header = fh.readline()
        assert header.startswith("# config abc123")


class TestRunnerGates:
    def test_small_p_needs_experimental_flag(self, grid_small):
        with pytest.raises(ValueError, match="experimental"):
            run_selection(power_law(0.4, 1.0), grid_small, eps_ladder=(0.05,), T=1.0)

    def test_dispersion_rejects_focusing(self, grid_small):
        with pytest.raises(ValueError, match="defocusing"):
            run_dispersion(power_law(1.0, -1.0), grid_small, amplitudes=(0.5,), T=1.0)

    def test_dispersion_rejects_non_defocusing_composite(self, grid_small):
        # for small exponents the saturating g has s g(s) - G(s) turning
        # negative, so the virial bookkeeping of the dispersive run
        # does not apply even though the sign is repulsive
        with pytest.raises(ValueError, match="defocusing"):
            run_dispersion(saturating(0.3), grid_small, amplitudes=(0.5,), T=1.0)


@pytest.mark.slow
class TestRunnerSmoke:
    """Short-horizon runs checking shapes and serialization, not physics."""

    def test_small_en_produces_rows_and_fits(self, grid_small, tmp_path):
        rep = run_small_en(power_law(1.0, -1.0), grid_small,
                           eps_ladder=(0.025, 0.05, 0.1), T=4.0)
        assert len(rep.rows) == 3
        for row in rep.rows:
            assert row["I_T"] > 0.0
            assert row["sup_ratio"] > 0.0
        assert "I_slope" in rep.fits
        assert len(rep.fits["halving_ratios"]) == 2
        jpath, cpath = rep.save(str(tmp_path))
        data = json.load(open(jpath))
        assert data["experiment"] == "thm-small-en"
        assert sum(1 for line in open(cpath) if line.startswith("# run")) == 3

    def test_selection_report_shape(self, grid_small):
        rep = run_selection(power_law(1.0, -1.0), grid_small,
                            eps_ladder=(0.05, 0.1, 0.2), T=4.0)
        assert len(rep.rows) == 3
        assert "tv_slope" in rep.fits
        for row in rep.rows:
            assert len(row["delta_rho"]) == 3
            assert len(row["gauge_floor"]) == 3

    def test_experimental_run_carries_note_and_no_verdict(self, grid_small):
        rep = run_selection(power_law(0.4, 1.0), grid_small,
                            eps_ladder=(0.05, 0.1, 0.2), T=4.0, experimental=True)
        assert any("experimental" in n for n in rep.notes)
        assert rep.checks == {}

    def test_dispersion_report_shape(self, grid_small):
        rep = run_dispersion(power_law(1.0, 1.0), grid_small,
                             amplitudes=(0.5, 1.0), T=6.0)
        assert len(rep.rows) == 2
        for row in rep.rows:
            assert row["I_T"] > 0.0
            assert row["B"] > 0.0
            assert row["ratio"] == pytest.approx(row["I_T"] / row["B"])

    def test_residuals_assemble(self, grid_small):
        rep = run_modulation_residuals(power_law(1.0, -1.0), grid_small,
                                       eps=0.05, T=2.0)
        assert rep.checks.get("assembled") is True
        assert "residual_max" in rep.fits
        assert "speed_ratio_max" in rep.fits
