"""Endogenous share system under CES demand."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from netcpi.cpi import cpi_change, elasticity_set
from netcpi.errors import DataError, IndeterminacyError
from netcpi.iotable import IOTable, derive
from netcpi.sharesys import (
    ElasticityParams, ShareShocks, ces_elasticities, prop3_from_solution, share_system_residuals,
    solve_share_system, substitution_matrices,
)
from netcpi.synthetic import random_table

from conftest import tables


def _params(table, rng):
    return ElasticityParams(rng.uniform(0.2, 3.0), rng.uniform(0.2, 3.0, len(table.sectors)))


def _shocks(table, rng, scale=0.01):
    N, F, M = table.shape
    return ShareShocks(rng.normal(0, scale, N), rng.normal(0, scale, M), rng.normal(0, scale, N),
                       rng.normal(0, scale, F), float(rng.normal(0, scale)))


def closed_fixture():
    return IOTable(("s1", "s2"), ("labor",), (), [[0.2, 0.1], [0.0, 0.3]], [[0.7], [0.7]],
                   np.zeros((2, 0)), [0.3 / 0.7, 0.4 / 0.7], [], [0.0, 0.0])


class TestSubstitutionMatrices:
    def test_cobb_douglas_is_zero(self, fixture):
        phi = substitution_matrices(fixture, ElasticityParams.uniform(1.0, 2))
        for name in ("consumer", "producer", "phi_c_d", "phi_c_m", "phi_d", "phi_m", "phi_f",
                     "phi_f_d", "phi_f_f", "phi_f_m"):
            assert not np.any(np.abs(getattr(phi, name)) > 1e-15), name

    def test_single_producer_hand_example(self):
        # one sector buying itself (0.6) and labor (0.4)
        t = IOTable(("a",), ("L",), (), [[0.6]], [[0.4]], np.zeros((1, 0)), [1.0], [], [0.0])
        phi = substitution_matrices(t, ElasticityParams(1.0, [2.0]))
        np.testing.assert_allclose(phi.producer[0], [[-0.4, 0.4], [0.6, -0.6]], atol=1e-15)

    def test_nonpositive_elasticity(self):
        with pytest.raises(ValueError):
            ElasticityParams(0.0, [1.0])
        with pytest.raises(ValueError):
            ElasticityParams(1.0, [1.0, -0.5])

    @given(tables(), st.floats(0.1, 5.0))
    def test_consumer_adding_up(self, table, theta):
        phi = substitution_matrices(table, ElasticityParams.uniform(theta, len(table.sectors)))
        b = np.concatenate([table.b_d, table.b_m])
        np.testing.assert_allclose(b @ phi.consumer, 0.0, atol=1e-14)

    @given(tables(), st.integers(0, 2**32 - 1))
    def test_producer_adding_up(self, table, seed):
        # expenditure-weighted share changes of each producer sum to zero
        phi = substitution_matrices(table, _params(table, np.random.default_rng(seed)))
        s = np.hstack([table.omega, table.gamma, table.A])
        np.testing.assert_allclose(np.einsum("ij,ijk->ik", s, phi.producer), 0.0, atol=1e-14)

    def test_general_tensors_match_ces(self, fixture):
        p = ElasticityParams(0.7, [1.5, 2.5])
        eps_c, eps_p = ces_elasticities(fixture, p)
        a = substitution_matrices(fixture, p)
        b = substitution_matrices(fixture, eps_consumer=eps_c, eps_producer=eps_p)
        np.testing.assert_array_equal(a.phi_d, b.phi_d)
        np.testing.assert_array_equal(a.phi_f_f, b.phi_f_f)


class TestSolve:
    def test_zero_shocks(self, fixture):
        sol = solve_share_system(fixture, ElasticityParams(0.5, [2.0, 0.8]), ShareShocks.zeros(fixture))
        for v in (sol.w_hat, sol.dlambda_bar, sol.dLambda_bar, sol.p_d_hat, sol.dx_bar):
            np.testing.assert_array_equal(v, 0.0)
        assert sol.transfer_change == 0.0

    def test_closed_cobb_douglas_money_is_neutral(self):
        t = closed_fixture()
        sol = solve_share_system(t, ElasticityParams.uniform(1.0, 2), {"m_hat": 0.01})
        np.testing.assert_allclose(sol.w_hat, [0.01], atol=1e-14)
        np.testing.assert_allclose(sol.dlambda_bar, 0.0, atol=1e-14)
        np.testing.assert_allclose(sol.dLambda_bar, 0.0, atol=1e-14)
        assert prop3_from_solution(t, None, sol) == pytest.approx(0.01, abs=1e-14)

    def test_cobb_douglas_shares_move_only_through_exports(self, fixture):
        rng = np.random.default_rng(5)
        s = derive(fixture)
        sol = solve_share_system(fixture, ElasticityParams.uniform(1.0, 2), _shocks(fixture, rng), s)
        np.testing.assert_allclose(sol.dlambda_bar, s.psi.T @ sol.dx_bar, atol=1e-15)
        np.testing.assert_allclose(sol.dLambda_bar, fixture.A.T @ sol.dlambda_bar, atol=1e-15)

    def test_singular_system_reports_rcond(self, fixture):
        # a factor with no payments leaves its price undetermined
        t = IOTable(("s1", "s2"), ("L", "K"), ("m1",), fixture.omega, [[0.5, 0.0], [0.4, 0.0]],
                    fixture.gamma, fixture.b_d, fixture.b_m, fixture.x)
        with pytest.raises(IndeterminacyError) as info:
            solve_share_system(t, ElasticityParams.uniform(1.0, 2), ShareShocks.zeros(t))
        assert info.value.rcond < 1e-12

    def test_zero_factor_share_undefined_log_change(self, fixture):
        sol = solve_share_system(fixture, ElasticityParams.uniform(1.0, 2), ShareShocks.zeros(fixture))
        stats = derive(fixture)
        bad = type(stats)(stats.psi, stats.lam, np.zeros(1))
        with pytest.raises(DataError):
            prop3_from_solution(fixture, bad, sol)

    @given(tables(max_n=5, max_f=5, max_m=5), st.integers(0, 2**32 - 1))
    def test_residuals_vanish(self, table, seed):
        rng = np.random.default_rng(seed)
        p = _params(table, rng)
        s = derive(table)
        phi = substitution_matrices(table, p, s)
        sol = solve_share_system(table, p, _shocks(table, rng), s, phi)
        for name, r in share_system_residuals(table, s, phi, sol).items():
            assert np.abs(r).max(initial=0.0) < 1e-10, name

    @given(tables(max_n=5, max_f=5, max_m=5), st.integers(0, 2**32 - 1))
    def test_cross_consistency(self, table, seed):
        rng = np.random.default_rng(seed)
        p = _params(table, rng)
        s = derive(table)
        sol = solve_share_system(table, p, _shocks(table, rng), s)
        factor_price_form = cpi_change(elasticity_set(table, s), sol.shocks.z_hat, sol.w_hat, sol.shocks.pm_hat)
        assert prop3_from_solution(table, s, sol) == pytest.approx(factor_price_form, abs=1e-10)

    @given(st.integers(0, 2**32 - 1))
    def test_linearity(self, seed):
        rng = np.random.default_rng(seed)
        t = random_table(rng, 4, 2, 2)
        p = _params(t, rng)
        sh = _shocks(t, rng)
        a = solve_share_system(t, p, sh)
        b = solve_share_system(t, p, sh.scaled(2.0))
        np.testing.assert_allclose(b.w_hat, 2 * a.w_hat, atol=1e-13)
        np.testing.assert_allclose(b.dlambda_bar, 2 * a.dlambda_bar, atol=1e-13)
        assert b.transfer_change == pytest.approx(2 * a.transfer_change, abs=1e-13)
