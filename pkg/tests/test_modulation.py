"""Decompositions u = Q[z] + remainder under both orthogonality rules."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nlsdelta.grid import ComplexField, inner, norm
from nlsdelta.modulation import (
    decompose_hc,
    decompose_pc,
    r_operator,
    tangent_pairing_matrix,
)
from nlsdelta.operator import project_continuous


def _radiation(grid, sd, seed=1, size=0.01):
    rng = np.random.default_rng(seed)
    vals = np.exp(-((grid.x - 1.5) ** 2) / 8.0) * (
        rng.standard_normal() * np.cos(0.9 * grid.x)
        + 1j * rng.standard_normal() * np.sin(1.1 * grid.x)
    )
    xi = project_continuous(ComplexField(grid, vals), sd)
    return xi * (size / norm(xi))


class TestProjectorConvention:
    def test_pure_bound_state_recovers_amplitude(self, family_cubic):
        z = 0.07 * np.exp(0.4j)
        Q, _ = family_cubic.bound_state(z)
        ms = decompose_pc(Q, family_cubic)
        assert ms.convention == "pc"
        assert abs(ms.z - z) < 1e-12
        assert norm(ms.remainder) < 1e-12

    def test_round_trip_with_radiation(self, family_cubic, sd_main):
        z = 0.05 - 0.03j
        xi = _radiation(family_cubic.grid, sd_main)
        Q, _ = family_cubic.bound_state(z)
        u = ComplexField(family_cubic.grid, Q.values + xi.values)
        ms = decompose_pc(u, family_cubic)
        assert abs(ms.z - z) < 1e-9
        assert norm(ms.remainder - xi) < 1e-9

    def test_remainder_lands_in_projector_range(self, family_cubic, sd_main):
        u = ComplexField(
            family_cubic.grid,
            family_cubic.bound_state(0.06)[0].values
            + _radiation(family_cubic.grid, sd_main, seed=3).values,
        )
        ms = decompose_pc(u, family_cubic)
        phi = family_cubic.sd.phi_hat
        pairing = complex(np.sum(u.grid.weights * ms.remainder.values
                                 * np.conj(phi.values)))
        assert abs(pairing) < 1e-11

    def test_size_cap_enforced(self, family_cubic):
        big = ComplexField(family_cubic.grid,
                           np.exp(-family_cubic.grid.x**2))
        with pytest.raises(ValueError, match="too large"):
            decompose_pc(big, family_cubic)

    @given(theta=st.floats(min_value=-np.pi, max_value=np.pi))
    def test_gauge_equivariance(self, family_cubic, sd_main, theta):
        z = 0.04 + 0.02j
        xi = _radiation(family_cubic.grid, sd_main, seed=5)
        u = ComplexField(family_cubic.grid,
                         family_cubic.bound_state(z)[0].values + xi.values)
        rot = ComplexField(u.grid, np.exp(1j * theta) * u.values)
        ms = decompose_pc(rot, family_cubic)
        assert abs(ms.z - np.exp(1j * theta) * z) < 1e-12
        assert norm(ms.remainder - xi * np.exp(1j * theta)) < 1e-9


class TestTangentConvention:
    def test_round_trip_through_corrected_remainder(self, family_cubic, sd_main):
        z = 0.06 * np.exp(-0.9j)
        xi = _radiation(family_cubic.grid, sd_main, seed=7)
        eta = r_operator(z, xi, family_cubic)
        u = ComplexField(family_cubic.grid,
                         family_cubic.bound_state(z)[0].values + eta.values)
        ms = decompose_hc(u, family_cubic)
        assert ms.convention == "hc"
        assert abs(ms.z - z) < 1e-9
        assert norm(ms.remainder - eta) < 1e-8

    def test_remainder_satisfies_tangent_constraints(self, family_cubic, sd_main):
        z = 0.05
        xi = _radiation(family_cubic.grid, sd_main, seed=9)
        u = ComplexField(family_cubic.grid,
                         family_cubic.bound_state(z)[0].values + xi.values)
        ms = decompose_hc(u, family_cubic)
        i_rem = ComplexField(u.grid, 1j * ms.remainder.values)
        for j in (1, 2):
            pairing = inner(i_rem, family_cubic.dQ(ms.z, j))
            assert abs(pairing) < 1e-10

    def test_conventions_agree_at_zero_amplitude(self, family_cubic, sd_main):
        # with no bound-state content both decompositions return z ~ 0
        # and the remainder is the field itself
        xi = _radiation(family_cubic.grid, sd_main, seed=11)
        pc = decompose_pc(xi, family_cubic)
        hc = decompose_hc(xi, family_cubic)
        assert abs(pc.z) < 1e-12
        assert abs(hc.z) < 1e-9
        assert norm(hc.remainder - pc.remainder) < 1e-8


class TestCorrectionOperator:
    def test_identity_at_zero(self, family_cubic, sd_main):
        xi = _radiation(family_cubic.grid, sd_main, seed=13)
        out = r_operator(0.0, xi, family_cubic)
        assert norm(out - xi) < 1e-14 * norm(xi)

    def test_output_is_tangent_orthogonal(self, family_cubic, sd_main):
        z = 0.08 * np.exp(2.1j)
        xi = _radiation(family_cubic.grid, sd_main, seed=15)
        out = r_operator(z, xi, family_cubic)
        i_out = ComplexField(out.grid, 1j * out.values)
        for j in (1, 2):
            assert abs(inner(i_out, family_cubic.dQ(z, j))) < 1e-12

    def test_rejects_leaky_input(self, family_cubic):
        leaky = ComplexField(family_cubic.grid,
                             family_cubic.sd.phi_hat.values * 0.01)
        with pytest.raises(ValueError, match="projector-orthogonal"):
            r_operator(0.05, leaky, family_cubic)

    def test_tangent_matrix_is_identity_at_zero(self, family_cubic):
        M = tangent_pairing_matrix(family_cubic, 0.0)
        assert np.allclose(M, np.eye(2), atol=1e-12)
