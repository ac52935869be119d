"""CPI responses: network formula, closed economy, factor-share form, two-period economy, paths."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from netcpi.cpi import (
    Prop3Inputs, TwoPeriodInputs, cpi_change, cpi_from_price_system, cpi_prop3, decompose_path,
    elasticity_set, implied_transfer, implied_wage_change, lagged_difference, model_inflation,
    moments, net_transfer, shock_path_from_levels, two_period_cpi,
)
from netcpi.errors import DataError, StructuralError
from netcpi.iotable import IOTable, derive

from conftest import shocks_for, tables

SHOCK = dict(z_hat=[0.01, 0.0], w_hat=[0.02], pm_hat=[0.05])


class TestElasticitySet:
    def test_soe_network_fixture(self, fixture, fixture_stats):
        es = elasticity_set(fixture, fixture_stats, "soe_network")
        np.testing.assert_allclose(es.weight_z, [0.375, 0.625], atol=1e-7)
        np.testing.assert_allclose(es.weight_w, [0.4375], atol=1e-7)
        np.testing.assert_allclose(es.weight_pm, [0.5625], atol=1e-7)

    def test_no_network_fixture(self, fixture, fixture_stats):
        es = elasticity_set(fixture, fixture_stats, "soe_no_network")
        np.testing.assert_allclose(es.weight_pm, [0.48], atol=1e-12)

    def test_closed_uses_ratio(self, fixture, fixture_stats):
        es = elasticity_set(fixture, fixture_stats, "closed", expenditure_over_gdp=2.0)
        np.testing.assert_allclose(es.weight_z, 2 * fixture_stats.lam)
        np.testing.assert_allclose(es.weight_pm, [0.0])

    def test_closed_rebalanced_fixture_matches(self, fixture):
        t = fixture.replace(export_shares=[0.0, 0.0], imports=(), import_input_shares=np.zeros((2, 0)),
                            consumption_shares_import=[], consumption_shares_domestic=[0.3 / 0.7, 0.4 / 0.7],
                            factor_shares_by_sector=[[0.7], [0.7]])
        s = derive(t)
        a, b = elasticity_set(t, s, "soe_network"), elasticity_set(t, s, "closed")
        np.testing.assert_allclose(a.weight_z, b.weight_z, atol=1e-14)
        np.testing.assert_allclose(a.weight_w, b.weight_w, atol=1e-14)

    def test_unknown_variant(self, fixture):
        with pytest.raises(ValueError):
            elasticity_set(fixture, variant="open")


class TestCPIChange:
    def test_fixture_network(self, fixture, fixture_stats):
        es = elasticity_set(fixture, fixture_stats)
        assert cpi_change(es, **SHOCK) == pytest.approx(0.033125, abs=1e-7)

    def test_fixture_price_system_oracle(self, fixture):
        assert cpi_from_price_system(fixture, **SHOCK) == pytest.approx(0.033125, abs=1e-12)

    def test_fixture_closed(self, fixture, fixture_stats):
        es = elasticity_set(fixture, fixture_stats, "closed")
        assert cpi_change(es, **SHOCK) == pytest.approx(-0.005 + 0.5357142857142857 * 0.02, abs=1e-7)
        assert cpi_change(es, **SHOCK) == pytest.approx(0.0057143, abs=1e-7)

    def test_zero(self, fixture):
        assert cpi_change(elasticity_set(fixture), [0, 0], [0], [0]) == 0.0

    def test_dimension_mismatch(self, fixture):
        with pytest.raises(StructuralError):
            cpi_change(elasticity_set(fixture), [0.01], [0.0], [0.0])

    def test_stacked_dates(self, fixture):
        es = elasticity_set(fixture)
        z = np.array([[0.01, 0.0], [0.0, 0.0]])
        out = cpi_change(es, z, [[0.02], [0.0]], [[0.05], [0.0]])
        np.testing.assert_allclose(out, [0.033125, 0.0], atol=1e-12)

    @given(tables(), st.floats(-0.1, 0.1))
    def test_homogeneity(self, table, delta):
        N, F, M = table.shape
        es = elasticity_set(table)
        assert cpi_change(es, np.zeros(N), np.full(F, delta), np.full(M, delta)) == pytest.approx(delta, abs=1e-10)

    @given(tables(), st.integers(0, 2**32 - 1))
    def test_matches_price_system(self, table, seed):
        z, w, pm = shocks_for(table, np.random.default_rng(seed))
        es = elasticity_set(table)
        assert cpi_change(es, z, w, pm) == pytest.approx(cpi_from_price_system(table, z, w, pm), abs=1e-10)

    @given(tables(closed=True), st.integers(0, 2**32 - 1))
    def test_closed_reduction(self, table, seed):
        rng = np.random.default_rng(seed)
        N, F, _ = table.shape
        s = derive(table)
        z, w = rng.normal(0, 0.02, N), rng.normal(0, 0.02, F)
        a = cpi_change(elasticity_set(table, s, "soe_network"), z, w, [])
        b = cpi_change(elasticity_set(table, s, "closed"), z, w, [])
        assert a == pytest.approx(b, abs=1e-12)

    @given(tables(), st.integers(0, 2**32 - 1))
    def test_dampening_and_amplification(self, table, seed):
        rng = np.random.default_rng(seed)
        N, F, M = table.shape
        s = derive(table)
        z = rng.random(N) * 0.02
        net = elasticity_set(table, s, "soe_network")
        closed = elasticity_set(table, s, "closed")
        raw = elasticity_set(table, s, "soe_no_network")
        assert abs(cpi_change(net, z, np.zeros(F), np.zeros(M))) <= abs(cpi_change(closed, z, np.zeros(F), np.zeros(M))) + 1e-15
        assert np.all(net.weight_pm >= raw.weight_pm - 1e-15)


class TestProp3:
    def test_money_only_balanced_table(self):
        # exports chosen so that value added equals expenditure and the transfer is zero
        t = IOTable(("a", "b"), ("L",), ("m",), [[0.1, 0.2], [0.0, 0.3]], [[0.5], [0.6]],
                    [[0.2], [0.1]], [0.45, 0.35], [0.2], [0.0, 0.0])
        s0 = derive(t)
        v = np.array([0.5, 0.5])
        g1 = t.gamma.sum(1)
        scale = (t.b_m.sum() + s0.lam @ g1) / (v.sum() - v @ s0.psi @ g1)
        t = t.replace(export_shares=scale * v)
        s = derive(t)
        assert s.Lam.sum() == pytest.approx(1.0, abs=1e-12)
        delta = 0.01
        inp = Prop3Inputs([0.0], [0.0], 0.0, delta, [0, 0], [0])
        lam_tilde = t.x @ s.psi @ t.A
        assert cpi_prop3(t, s, inp) == pytest.approx((1 - lam_tilde.sum()) * delta, abs=1e-12)

    def test_fixture_factor_supply(self, fixture, fixture_stats):
        inp = Prop3Inputs([0.0], [-0.01], 0.0, 0.0, [0, 0], [0])
        assert cpi_prop3(fixture, fixture_stats, inp) == pytest.approx(0.004375, abs=1e-12)

    def test_closed_economy_share_change_has_no_effect(self):
        t = IOTable(("a", "b"), ("L", "K"), (), [[0.1, 0.2], [0.0, 0.3]], [[0.4, 0.3], [0.5, 0.2]],
                    np.zeros((2, 0)), [0.6, 0.4], [], [0.0, 0.0])
        s = derive(t)
        d_lam = np.array([0.02, -0.03])
        inp = Prop3Inputs(d_lam, [0, 0], implied_transfer(s, d_lam, 0.0), 0.0, [0, 0], [])
        base = Prop3Inputs([0, 0], [0, 0], 0.0, 0.0, [0, 0], [])
        # reallocation enters only through the transfer it implies, which is the aggregate factor-share change
        assert cpi_prop3(t, s, inp) - cpi_prop3(t, s, base) == pytest.approx(s.Lam @ d_lam, abs=1e-14)

    def test_inconsistent_transfer_rejected(self, fixture, fixture_stats):
        inp = Prop3Inputs([0.01], [0.0], 0.0, 0.0, [0, 0], [0])
        with pytest.raises(DataError, match="inconsistent"):
            cpi_prop3(fixture, fixture_stats, inp)

    def test_nonfinite_rejected(self):
        with pytest.raises(DataError):
            Prop3Inputs([np.nan], [0.0], 0.0, 0.0, [0.0], [0.0])

    @given(tables(), st.integers(0, 2**32 - 1))
    def test_substitution_equals_expanded(self, table, seed):
        rng = np.random.default_rng(seed)
        N, F, M = table.shape
        s = derive(table)
        d_lam, l_bar = rng.normal(0, 0.02, F), rng.normal(0, 0.02, F)
        m = rng.normal(0, 0.02)
        z, pm = rng.normal(0, 0.02, N), rng.normal(0, 0.02, M)
        inp = Prop3Inputs(d_lam, l_bar, implied_transfer(s, d_lam, m), m, z, pm)
        w = d_lam + m - l_bar
        assert cpi_prop3(table, s, inp) == pytest.approx(cpi_change(elasticity_set(table, s), z, w, pm), abs=1e-12)


class TestTwoPeriod:
    def test_zero(self, fixture, fixture_stats):
        out = two_period_cpi(TwoPeriodInputs(), fixture, fixture_stats)
        assert out.total == 0.0
        assert all(v == 0.0 for v in out.components.values())
        assert len(out.components) == 6

    def test_nominal_anchor(self, fixture, fixture_stats):
        out = two_period_cpi(TwoPeriodInputs(eps0_hat=0.03, e0_hat=0.03), fixture, fixture_stats)
        assert out.components["aggregate_demand"] == 0.0
        assert out.total == pytest.approx(0.03, abs=1e-15)

    def test_import_channel(self, fixture, fixture_stats):
        out = two_period_cpi(TwoPeriodInputs(pm_star_hat=[0.05]), fixture, fixture_stats)
        assert out.total == pytest.approx(0.028125, abs=1e-12)
        assert out.components["import_prices"] == pytest.approx(0.028125, abs=1e-12)

    def test_euler_default_for_demand(self, fixture, fixture_stats):
        inp = TwoPeriodInputs(e1_hat=0.02, istar_hat=0.005)
        assert inp.demand_gap() == pytest.approx(0.015)
        out = two_period_cpi(inp, fixture, fixture_stats)
        assert out.components["aggregate_demand"] == pytest.approx(0.4375 * 0.015)

    @given(st.lists(st.floats(-0.05, 0.05), min_size=9, max_size=9))
    def test_components_sum_and_match_network_formula(self, v):
        from netcpi.synthetic import fixture_table
        t = fixture_table()
        s = derive(t)
        inp = TwoPeriodInputs(eps0_hat=v[0], e0_hat=v[1], z_hat=v[2:4], dlambda_bar_hat=[v[4]],
                              l_bar_hat=[v[5]], pm_star_hat=[v[6]], p_m0_star_hat=v[7])
        out = two_period_cpi(inp, t, s)
        assert sum(out.components.values()) == pytest.approx(out.total, abs=1e-15)
        w = implied_wage_change(inp, 1)
        local_pm = np.array([v[0] + v[6]])
        ref = cpi_change(elasticity_set(t, s), v[2:4], w, local_pm)
        assert out.total == pytest.approx(ref, abs=1e-12)

    def test_numeraire_price_cancels(self, fixture, fixture_stats):
        a = two_period_cpi(TwoPeriodInputs(eps0_hat=0.01, pm_star_hat=[0.03]), fixture, fixture_stats)
        b = two_period_cpi(TwoPeriodInputs(eps0_hat=0.01, pm_star_hat=[0.03], p_m0_star_hat=0.02),
                           fixture, fixture_stats)
        assert a.total == pytest.approx(b.total, abs=1e-15)


class TestNetTransfer:
    def test_balanced(self):
        assert net_transfer(0.96, 1.0, 1.0, 1.0) == 0.0

    def test_signs(self):
        assert net_transfer(0.96, 1.0, 1.1, 1.0) == pytest.approx(-0.096)
        assert net_transfer(0.96, 1.0, 0.9, 1.0) == pytest.approx(0.096)

    def test_zero_consumption(self):
        with pytest.raises(ValueError):
            net_transfer(0.96, 1.0, 1.0, 0.0)


class TestShockPath:
    def levels(self, z1, base="2018Q4"):
        return {"z": {"s1": {base: 1.0, "2019Q1": z1}, "s2": {base: 0.5, "2019Q1": 0.5}},
                "pm": {"m1": {base: 0.0, "2019Q1": 0.0}}}

    def test_deviation(self):
        p = shock_path_from_levels(self.levels(1.02), "2018Q4", ("s1", "s2"), ("labor",), ("m1",))
        assert p.dates == ("2018Q4", "2019Q1")
        np.testing.assert_allclose(p.z_hat[1], [0.02, 0.0], atol=1e-15)
        np.testing.assert_array_equal(p.z_hat[0], 0.0)
        np.testing.assert_array_equal(p.w_hat, 0.0)

    def test_constant_is_zero(self):
        p = shock_path_from_levels(self.levels(1.0), "2018Q4", ("s1", "s2"), ("labor",), ("m1",))
        assert not p.z_hat.any()

    def test_missing_base(self):
        with pytest.raises(DataError, match="base"):
            shock_path_from_levels(self.levels(1.0), "2017Q4", ("s1", "s2"), ("labor",), ("m1",))

    def test_ragged(self):
        lv = self.levels(1.0)
        lv["z"]["s2"] = {"2018Q4": 0.5}
        with pytest.raises(DataError, match="ragged"):
            shock_path_from_levels(lv, "2018Q4", ("s1", "s2"), ("labor",), ("m1",))

    def test_missing_sector(self):
        lv = self.levels(1.0)
        del lv["z"]["s2"]
        with pytest.raises(DataError, match="s2"):
            shock_path_from_levels(lv, "2018Q4", ("s1", "s2"), ("labor",), ("m1",))


class TestInflation:
    def test_lagged_difference(self):
        out = lagged_difference([0, 0.01, 0.02, 0.03, 0.05], list("abcde"), 4)
        assert out.dates == ("e",)
        assert out.values[0] == pytest.approx(0.05)

    def test_short_path_warns(self):
        with pytest.warns(RuntimeWarning):
            out = lagged_difference([0.0, 0.1], ["a", "b"], 4)
        assert out.short and out.values.size == 0

    def test_bad_lag(self):
        with pytest.raises(ValueError):
            lagged_difference([0.0, 0.1], ["a", "b"], 0)

    def test_constant_wage_level_gives_zero_inflation(self, fixture):
        dates = [f"t{k}" for k in range(10)]
        lv = {"z": {s: {d: 0.0 for d in dates} for s in ("s1", "s2")},
              "pm": {"m1": {d: 0.0 for d in dates}},
              "w": {"labor": {d: (0.0 if d == "t0" else 0.02) for d in dates}}}
        p = shock_path_from_levels(lv, "t0", fixture.sectors, fixture.factors, fixture.imports)
        pi = model_inflation(elasticity_set(fixture), p, lag=4)
        np.testing.assert_allclose(pi.values[:1], [0.4375 * 0.02])
        np.testing.assert_array_equal(pi.values[1:], 0.0)

    def test_decomposition_sums(self, fixture):
        rng = np.random.default_rng(1)
        dates = [f"2019Q{k}" for k in range(1, 5)] + [f"2020Q{k}" for k in range(1, 5)]
        lv = {"z": {s: dict(zip(dates, rng.normal(0, 0.01, 8))) for s in fixture.sectors},
              "w": {"labor": dict(zip(dates, rng.normal(0, 0.01, 8)))},
              "pm": {"m1": dict(zip(dates, rng.normal(0, 0.01, 8)))}}
        p = shock_path_from_levels(lv, dates[0], fixture.sectors, fixture.factors, fixture.imports)
        parts = decompose_path(elasticity_set(fixture), p)
        total = sum(parts[k].values for k in ("technology", "factor_prices", "import_prices"))
        np.testing.assert_allclose(total, parts["inflation"].values, atol=1e-15)


class TestMoments:
    def test_constant(self):
        assert moments([0.3, 0.3, 0.3]) == (pytest.approx(0.3), 0.0)

    def test_pair(self):
        m, s = moments([1.0, 3.0])
        assert m == 2.0
        assert s == pytest.approx(1.4142136, abs=1e-7)

    def test_empty(self):
        with pytest.raises(ValueError):
            moments([])
