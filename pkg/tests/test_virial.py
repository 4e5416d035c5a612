"""Cutoff weights, the localization identity, and coercivity constants."""

import numpy as np
import pytest

from nlsdelta.grid import ComplexField, make_grid, norm
from nlsdelta.operator import project_continuous
from nlsdelta.virial import (
    coercivity_report,
    commutator_identity,
    cutoff,
    cutoff_derivatives,
    j_functional,
    make_weights,
)
from nlsdelta.experiments import random_localized_field


def _plateau_bump(grid):
    """Smooth complex field supported strictly inside [-1, 1]."""
    m = np.abs(grid.x) < 0.9
    vals = np.zeros(grid.N, dtype=complex)
    vals[m] = np.exp(-1.0 / (0.81 - grid.x[m] ** 2)) * np.exp(1.3j * grid.x[m])
    return ComplexField(grid, vals)


def _generic_field(grid, rng=None, width=6.0):
    if rng is None:
        rng = np.random.default_rng(2)
    env = np.exp(-(grid.x / width) ** 2)
    vals = env * (rng.standard_normal() * np.cos(1.1 * grid.x)
                  + 1j * rng.standard_normal() * np.sin(0.7 * grid.x))
    vals[0] = vals[-1] = 0.0
    return ComplexField(grid, vals)


class TestCutoff:
    def test_plateau_and_support(self):
        x = np.linspace(-3.0, 3.0, 601)
        c = cutoff(x)
        assert np.all(c[np.abs(x) <= 1.0] == 1.0)
        assert np.all(c[np.abs(x) >= 2.0] == 0.0)
        assert np.all((0.0 <= c) & (c <= 1.0))

    def test_even_and_monotone_outward(self):
        x = np.linspace(0.0, 2.5, 500)
        c = cutoff(x)
        assert np.all(np.diff(c) <= 1e-15)
        assert np.allclose(cutoff(-x), c)

    def test_derivatives_match_differencing(self):
        x = np.linspace(-2.5, 2.5, 2001)
        h = x[1] - x[0]
        c1, c2 = cutoff_derivatives(x)
        d1 = np.gradient(cutoff(x), h, edge_order=2)
        assert np.max(np.abs(c1 - d1)) < 5e-4
        d2 = np.gradient(c1, h, edge_order=2)
        assert np.max(np.abs(c2 - d2)) < 5e-3


class TestWeights:
    def test_scale_floor(self, grid_main):
        with pytest.raises(ValueError, match="A >= 4"):
            make_weights(3.9, grid_main)

    @pytest.mark.parametrize("A", [4.0, 8.0, 16.0])
    def test_envelope_comparison(self, grid_main, A):
        wts = make_weights(A, grid_main)
        ref = np.exp(-np.abs(grid_main.x) / A)
        assert np.all(wts.zeta >= ref - 1e-14)
        assert np.max(wts.zeta / ref) <= 2.0 + 1e-12

    def test_zeta_plateau_and_far_field(self, grid_main):
        wts = make_weights(16.0, grid_main)
        inner_region = np.abs(grid_main.x) <= 1.0
        assert np.all(wts.zeta[inner_region] == 1.0)
        outer = np.abs(grid_main.x) >= 2.0
        assert np.allclose(wts.zeta[outer],
                           np.exp(-np.abs(grid_main.x[outer]) / 16.0), rtol=1e-12)

    def test_psi_odd_linear_core_positive_slope(self, grid_main):
        wts = make_weights(8.0, grid_main)
        assert np.allclose(wts.psi + wts.psi[::-1], 0.0, atol=1e-14)
        core = np.abs(grid_main.x) <= 1.0
        assert np.allclose(wts.psi[core], grid_main.x[core], atol=1e-12)
        assert np.all(wts.psi_prime > 0.0)
        differenced = np.gradient(wts.psi, grid_main.h, edge_order=2)
        interior = slice(2, -2)
        assert np.max(np.abs(differenced[interior] - wts.psi_prime[interior])) < 5e-3

    def test_potential_support(self, grid_main):
        wts = make_weights(16.0, grid_main)
        inside = (np.abs(grid_main.x) > 1.0) & (np.abs(grid_main.x) < 2.0)
        assert np.any(wts.V[inside] != 0.0)
        assert np.all(wts.V[~inside & (np.abs(grid_main.x) != 1.0)
                            & (np.abs(grid_main.x) != 2.0)] == 0.0)


class TestJFunctional:
    def test_vanishes_on_real_and_zero_fields(self, grid_main):
        wts = make_weights(16.0, grid_main)
        real = ComplexField(grid_main, np.exp(-grid_main.x**2))
        zero = ComplexField(grid_main, np.zeros(grid_main.N))
        assert abs(j_functional(real, wts)) < 1e-14
        assert j_functional(zero, wts) == 0.0

    def test_sign_tracks_packet_position(self, grid_main):
        # the weight is odd, so a centered packet carries no flux; a
        # rightward-moving packet on the right half line is positive
        wts = make_weights(16.0, grid_main)
        centered = ComplexField(grid_main,
                                np.exp(-grid_main.x**2 / 4) * np.exp(1j * grid_main.x))
        assert abs(j_functional(centered, wts)) < 1e-12
        off = ComplexField(grid_main,
                           np.exp(-((grid_main.x - 3.0) ** 2) / 4) * np.exp(1j * grid_main.x))
        assert j_functional(off, wts) > 1e-3

    def test_grid_mismatch_rejected(self, grid_main, grid_small):
        wts = make_weights(16.0, grid_main)
        f = ComplexField(grid_small, np.ones(grid_small.N))
        with pytest.raises(ValueError, match="grid mismatch"):
            j_functional(f, wts)


class TestCommutatorIdentity:
    def test_exact_on_the_plateau(self, grid_main):
        # inside [-1,1] the weights are trivial and the two sides are
        # the same discrete sum; the gap is pure rounding
        wts = make_weights(16.0, grid_main)
        chk = commutator_identity(_plateau_bump(grid_main), wts)
        assert chk.gap < 1e-12

    def test_generic_gap_small_and_refining(self, grid_main):
        wts = make_weights(16.0, grid_main)
        gap1 = commutator_identity(_generic_field(grid_main), wts).gap
        assert gap1 < 1e-4
        g2 = make_grid(40.0, 4001)
        gap2 = commutator_identity(_generic_field(g2), make_weights(16.0, g2)).gap
        assert gap2 < 0.4 * gap1, "identity gap should vanish under refinement"

    def test_wrong_potential_breaks_the_identity(self, grid_main):
        wts = make_weights(16.0, grid_main)
        xi = _generic_field(grid_main)
        good = commutator_identity(xi, wts).gap
        bad = commutator_identity(xi, wts, use_statement_potential=True).gap
        assert bad > 1e-4
        assert bad > 20 * good

    def test_gap_over_random_batch(self, grid_main, rng):
        wts = make_weights(16.0, grid_main)
        worst = max(
            commutator_identity(_generic_field(grid_main, rng,
                                               width=3.0 + 5.0 * rng.random()), wts).gap
            for _ in range(25)
        )
        assert worst < 1e-4


class TestCoercivity:
    def test_rejects_unprojected_field(self, grid_main, sd_main):
        wts = make_weights(16.0, grid_main)
        with pytest.raises(ValueError, match="projector-orthogonal"):
            coercivity_report(sd_main.phi_hat, wts)

    @pytest.mark.parametrize("A", [8.0, 16.0, 32.0])
    def test_ratio_floor_and_bounds(self, grid_main, sd_main, rng, A):
        wts = make_weights(A, grid_main)
        for _ in range(10):
            xi = project_continuous(random_localized_field(grid_main, rng), sd_main)
            rep = coercivity_report(xi, wts)
            assert rep.ratio >= 0.19, f"coercivity ratio {rep.ratio:.3f} below floor"
            assert abs(rep.vterm_ratio) * A <= 2.0
            assert rep.const_norm <= 12.0
            assert rep.bound_margin <= 1e-8
            assert rep.quadform > 0.0

    def test_vterm_scaling_on_windowed_probes(self, grid_main, sd_main, rng):
        # probes confined to the cutoff plateau keep both the pairing
        # and the reference form A-stable, isolating the 1/(2A) factor
        As = np.array([8.0, 16.0, 32.0])
        wts = {A: make_weights(A, grid_main) for A in As}
        win = cutoff(grid_main.x)
        slopes = []
        for _ in range(10):
            raw = random_localized_field(grid_main, rng, spread=1.0, span=0.8, kmax=2.0)
            xi = project_continuous(ComplexField(grid_main, win * raw.values), sd_main)
            vt = [abs(coercivity_report(xi, wts[A]).vterm_ratio) for A in As]
            slopes.append(np.polyfit(np.log(As), np.log(vt), 1)[0])
        med = float(np.median(slopes))
        assert med == pytest.approx(-1.0, abs=0.25), \
            f"median V-term scaling slope {med:.3f} should be near -1"
