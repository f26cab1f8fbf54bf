import math

import numpy as np
import pytest

from noma_secrecy.allocation import (
    ObjectiveConfig,
    alpha_grid,
    far_rate_objective,
    near_rate,
    oracle_search,
    random_allocation,
)
from noma_secrecy.channel import ChannelRealization, PowerSplit, SystemParams
from noma_secrecy.secrecy import secrecy_rates_for_alphas
from noma_secrecy.channel import sample_gain_matrix

from conftest import nominal_params


def unit_params():
    return SystemParams(p_tx=10.0, n0=1.0, eta=0.7, m_shape=1.0,
                        omega_su_n=1.0, omega_su_f=1.0, omega_se=1.0,
                        omega_un_e=1.0, omega_un_uf=1.0)


class TestObjectiveConfig:
    def test_defaults_valid(self):
        cfg = ObjectiveConfig()
        assert cfg.alpha_min == 0.5 and cfg.alpha_max == 1.0
        assert cfg.grid_step == 1e-3 and cfg.qos_min_rate_near == 0.5

    def test_rejects_bad_bounds(self):
        with pytest.raises(ValueError):
            ObjectiveConfig(alpha_min=0.4)
        with pytest.raises(ValueError):
            ObjectiveConfig(alpha_min=0.9, alpha_max=0.8)
        with pytest.raises(ValueError):
            ObjectiveConfig(grid_step=0.6)

    def test_grid_is_exclusive(self):
        grid = alpha_grid(ObjectiveConfig())
        assert grid[0] == pytest.approx(0.501)
        assert grid[-1] == pytest.approx(0.999)
        assert len(grid) == 499


class TestRates:
    def test_dead_far_link(self, split):
        ch = ChannelRealization(1.0, 0.0, 1.0, 1.0, 1.0)
        for a in (0.51, 0.75, 0.99):
            assert far_rate_objective(a, ch, unit_params(), split) == 0.0

    def test_far_rate_strictly_increasing(self, split):
        ch = ChannelRealization(1.0, 0.5, 1.0, 1.0, 1.0)
        vals = [far_rate_objective(a, ch, unit_params(), split)
                for a in np.linspace(0.55, 0.95, 11)]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_far_rate_arithmetic(self, split):
        # log2(1 + 2.8/1.7) from the SINR example
        ch = ChannelRealization(1.0, 0.5, 1.0, 1.0, 1.0)
        expected = math.log2(1.0 + 2.8 / 1.7)
        assert far_rate_objective(0.8, ch, unit_params(), split) == pytest.approx(
            expected, rel=1e-12)

    def test_near_rate_arithmetic(self, split):
        # 0.5*log2(1 + 0.7*1*0.2*10) = 0.5*log2(2.4)
        ch = ChannelRealization(1.0, 0.5, 1.0, 1.0, 1.0)
        expected = 0.5 * math.log2(2.4)
        assert near_rate(0.8, ch, unit_params(), split) == pytest.approx(
            expected, rel=1e-12)

    def test_near_rate_vanishes_as_alpha_f_tops_out(self, split):
        ch = ChannelRealization(1.0, 0.5, 1.0, 1.0, 1.0)
        assert near_rate(1.0 - 1e-9, ch, unit_params(), split) < 1e-8

    def test_dead_near_link(self, split):
        ch = ChannelRealization(0.0, 0.5, 1.0, 1.0, 1.0)
        assert near_rate(0.8, ch, unit_params(), split) == 0.0

    def test_near_rate_strictly_decreasing(self, split):
        ch = ChannelRealization(1.0, 0.5, 1.0, 1.0, 1.0)
        vals = [near_rate(a, ch, unit_params(), split)
                for a in np.linspace(0.55, 0.95, 11)]
        assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_domain_errors(self, split):
        ch = ChannelRealization(1.0, 0.5, 1.0, 1.0, 1.0)
        for bad in (0.5, 1.0, 0.2, 1.3):
            with pytest.raises(ValueError):
                far_rate_objective(bad, ch, unit_params(), split)
            with pytest.raises(ValueError):
                near_rate(bad, ch, unit_params(), split)


class TestOracleSearch:
    def test_unconstrained_hits_upper_boundary(self, split):
        ch = ChannelRealization(1.0, 0.5, 1.0, 1.0, 1.0)
        cfg = ObjectiveConfig(qos_min_rate_near=0.0)
        res = oracle_search(ch, unit_params(), split, cfg)
        assert res.feasible
        assert res.alpha_f_star == pytest.approx(0.999)

    def test_impossible_floor_reports_infeasible(self, split):
        ch = ChannelRealization(1.0, 0.5, 1.0, 1.0, 1.0)
        cfg = ObjectiveConfig(qos_min_rate_near=50.0)
        res = oracle_search(ch, unit_params(), split, cfg)
        assert not res.feasible
        assert res.alpha_f_star == pytest.approx(0.501)

    def test_objective_value_consistent(self, split):
        ch = ChannelRealization(2.0, 0.5, 1.0, 1.0, 1.0)
        cfg = ObjectiveConfig()
        res = oracle_search(ch, unit_params(), split, cfg)
        assert res.objective_value == pytest.approx(
            far_rate_objective(res.alpha_f_star, ch, unit_params(), split))

    def test_no_grid_point_improves(self, params, split, rng):
        cfg = ObjectiveConfig()
        gains = sample_gain_matrix(params, rng, 50)
        for row in gains:
            ch = ChannelRealization(*row)
            res = oracle_search(ch, params, split, cfg)
            grid = alpha_grid(cfg)
            for a in grid[::37]:
                ok = near_rate(float(a), ch, params, split) >= cfg.qos_min_rate_near
                if ok and res.feasible:
                    assert far_rate_objective(float(a), ch, params, split) \
                        <= res.objective_value + 1e-12

    def test_fine_grid_agrees_with_coarse(self, params, split, rng):
        # the chosen share is always within one coarse step of the fine
        # optimum; the objective gap is slope * step, below 1e-3 except
        # for rare steep boundary realizations
        gains = sample_gain_matrix(params, rng, 20)
        coarse = ObjectiveConfig(grid_step=1e-3)
        fine = ObjectiveConfig(grid_step=1e-5)
        for row in gains:
            ch = ChannelRealization(*row)
            a = oracle_search(ch, params, split, coarse)
            b = oracle_search(ch, params, split, fine)
            if a.feasible and b.feasible:
                assert abs(a.alpha_f_star - b.alpha_f_star) <= 1e-3 + 1e-12
                assert b.objective_value >= a.objective_value - 1e-12

    def test_fine_grid_objective_gap_typical_realization(self, params, split):
        ch = ChannelRealization(2.0, 3.0, 1.0, 1.0, 1.0)
        a = oracle_search(ch, params, split, ObjectiveConfig(grid_step=1e-3))
        b = oracle_search(ch, params, split, ObjectiveConfig(grid_step=1e-5))
        assert abs(a.objective_value - b.objective_value) < 1e-3

    def test_argmax_invariant_to_common_power_rescale(self, split, rng):
        cfg = ObjectiveConfig()
        base = unit_params()
        scaled = SystemParams(p_tx=10.0 * 7.3, n0=7.3, eta=0.7, m_shape=1.0,
                              omega_su_n=1.0, omega_su_f=1.0, omega_se=1.0,
                              omega_un_e=1.0, omega_un_uf=1.0)
        for _ in range(10):
            ch = ChannelRealization(*rng.gamma(1.0, 1.0, 5))
            a = oracle_search(ch, base, split, cfg)
            b = oracle_search(ch, scaled, split, cfg)
            assert a.alpha_f_star == pytest.approx(b.alpha_f_star, abs=1e-12)


class TestRandomAllocation:
    def test_support_and_mean(self):
        rng = np.random.default_rng(3)
        draws = np.array([random_allocation(rng) for _ in range(100_000)])
        assert ((draws > 0.5) & (draws < 1.0)).all()
        se = math.sqrt(1.0 / 48.0 / draws.size)  # var of U(0.5,1) is 1/48
        assert abs(draws.mean() - 0.75) < 3.0 * se

    def test_seed_reproducibility(self):
        a = [random_allocation(np.random.default_rng(9)) for _ in range(5)]
        b = [random_allocation(np.random.default_rng(9)) for _ in range(5)]
        assert a == b


class TestOracleBeatsRandom:
    def test_average_secrecy_rate_ordering(self, params, split):
        rng = np.random.default_rng(12)
        gains = sample_gain_matrix(params, rng, 2000)
        cfg = ObjectiveConfig()
        oracle_alpha = np.array([
            oracle_search(ChannelRealization(*row), params, split, cfg).alpha_f_star
            for row in gains
        ])
        random_alpha = rng.uniform(0.5, 1.0, len(gains))
        r_oracle = secrecy_rates_for_alphas(params, split, gains, oracle_alpha).mean()
        r_random = secrecy_rates_for_alphas(params, split, gains, random_alpha).mean()
        assert r_oracle >= r_random
