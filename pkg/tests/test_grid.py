"""Grid construction, field arithmetic, and the discrete norm family."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nlsdelta.grid import ComplexField, NormKind, derivative, inner, make_grid, norm


class TestMakeGrid:
    def test_spacing_and_endpoints(self):
        g = make_grid(10.0, 101)
        assert g.h == pytest.approx(0.2)
        assert g.x[0] == -10.0 and g.x[-1] == 10.0

    def test_center_node_is_exactly_zero(self):
        # the defect lives at x = 0, so the center sample must be exact
        g = make_grid(7.3, 999)
        assert g.x[g.center] == 0.0

    def test_weights_integrate_constants_exactly(self):
        g = make_grid(5.0, 201)
        assert np.sum(g.weights) == pytest.approx(10.0, rel=1e-14)
        assert g.weights[0] == pytest.approx(g.h / 2)
        assert g.weights[-1] == pytest.approx(g.h / 2)

    def test_arrays_are_read_only(self):
        g = make_grid(5.0, 201)
        with pytest.raises(ValueError):
            g.x[0] = 1.0

    @pytest.mark.parametrize("L,N", [(0.0, 101), (-2.0, 101), (5.0, 100), (5.0, 1)])
    def test_bad_arguments_rejected(self, L, N):
        with pytest.raises(ValueError):
            make_grid(L, N)


class TestComplexField:
    def test_values_are_copied_and_complex(self, grid_small):
        raw = np.ones(grid_small.N)
        f = ComplexField(grid_small, raw)
        raw[0] = 5.0
        assert f.values[0] == 1.0 + 0j
        assert f.values.dtype == np.complex128

    def test_non_finite_rejected(self, grid_small):
        bad = np.ones(grid_small.N)
        bad[3] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            ComplexField(grid_small, bad)

    def test_wrong_length_rejected(self, grid_small):
        with pytest.raises(ValueError):
            ComplexField(grid_small, np.ones(grid_small.N + 1))

    def test_grid_mismatch_in_arithmetic(self, grid_small):
        other = make_grid(20.0, 503)
        f = ComplexField(grid_small, np.ones(grid_small.N))
        g = ComplexField(other, np.ones(other.N))
        with pytest.raises(ValueError, match="grid mismatch"):
            f + g

    def test_arithmetic(self, grid_small):
        f = ComplexField(grid_small, np.full(grid_small.N, 1.0 + 2.0j))
        g = ComplexField(grid_small, np.full(grid_small.N, 0.5))
        assert np.all((f + g).values == 1.5 + 2.0j)
        assert np.all((f - g).values == 0.5 + 2.0j)
        assert np.all((f * 2.0).values == 2.0 + 4.0j)
        assert np.all((-f).values == -1.0 - 2.0j)
        assert np.all(f.conj().values == 1.0 - 2.0j)

    def test_at_zero_reads_center(self, grid_small):
        vals = np.arange(grid_small.N, dtype=float)
        f = ComplexField(grid_small, vals)
        assert f.at_zero() == grid_small.center


class TestInnerAndDerivative:
    def test_inner_is_real_and_symmetric(self, grid_small, rng):
        f = ComplexField(grid_small, rng.standard_normal(grid_small.N)
                         + 1j * rng.standard_normal(grid_small.N))
        g = ComplexField(grid_small, rng.standard_normal(grid_small.N)
                         + 1j * rng.standard_normal(grid_small.N))
        assert isinstance(inner(f, g), float)
        assert inner(f, g) == pytest.approx(inner(g, f), rel=1e-12)

    def test_inner_of_field_with_i_field_vanishes(self, grid_small, rng):
        f = ComplexField(grid_small, rng.standard_normal(grid_small.N)
                         + 1j * rng.standard_normal(grid_small.N))
        rotated = ComplexField(grid_small, 1j * f.values)
        assert abs(inner(f, rotated)) < 1e-12 * inner(f, f)

    def test_derivative_exact_on_quadratics(self, grid_small):
        f = ComplexField(grid_small, grid_small.x**2)
        d = derivative(f)
        assert np.allclose(d.values, 2.0 * grid_small.x, atol=1e-10), \
            "second-order differencing should be exact on x^2"


class TestNorms:
    def test_l2_matches_gaussian_quadrature(self, grid_main):
        f = ComplexField(grid_main, np.exp(-grid_main.x**2))
        # ||e^{-x^2}||_2 = (pi/2)^{1/4}
        assert norm(f) == pytest.approx((np.pi / 2) ** 0.25, rel=1e-8)

    def test_h1_dominates_l2(self, grid_main, rng):
        f = ComplexField(grid_main, np.exp(-grid_main.x**2)
                         * rng.standard_normal())
        assert norm(f, NormKind.H1) >= norm(f, NormKind.L2)

    def test_weighted_norm_equivalence_bounds(self, grid_main):
        # the weight's own slope enters the derivative term, so the
        # clean comparison carries a (1 + gamma) factor
        f = ComplexField(grid_main, np.exp(-np.abs(grid_main.x)))
        assert norm(f, NormKind.H1_MINUS_GAMMA) <= 1.2 * norm(f, NormKind.H1)
        assert norm(f, NormKind.L2_GAMMA) >= norm(f, NormKind.L2)

    def test_gamma_weight_matches_direct_sum(self, grid_main):
        f = ComplexField(grid_main, np.exp(-np.abs(grid_main.x)))
        direct = np.sqrt(np.sum(grid_main.weights
                                * np.exp(0.4 * np.abs(grid_main.x))
                                * np.abs(f.values) ** 2))
        assert norm(f, NormKind.L2_GAMMA, gamma=0.2) == pytest.approx(direct, rel=1e-12)

    def test_x_norm_combines_slope_and_decay(self, grid_main):
        f = ComplexField(grid_main, np.exp(-grid_main.x**2 / 4))
        d = norm(derivative(f))
        loc = norm(ComplexField(grid_main, f.values / (1.0 + grid_main.x**2)))
        assert norm(f, NormKind.X) == pytest.approx(np.hypot(d, loc), rel=1e-12)

    def test_overflowing_weight_rejected(self):
        g = make_grid(4000.0, 5001)
        f = ComplexField(g, np.exp(-np.abs(g.x)))
        with pytest.raises(ValueError, match="overflows"):
            norm(f, NormKind.L2_GAMMA, gamma=0.5)

    @given(c=st.floats(min_value=-50.0, max_value=50.0,
                       allow_nan=False, allow_infinity=False))
    def test_homogeneity(self, grid_small, c):
        f = ComplexField(grid_small, np.exp(-grid_small.x**2) * (1 + 0.3j))
        for kind in NormKind:
            assert norm(f * c, kind) == pytest.approx(abs(c) * norm(f, kind),
                                                      rel=1e-10, abs=1e-12)
