import dataclasses
import math

import numpy as np
import pytest

from noma_secrecy.channel import (
    ChannelRealization,
    PowerAllocation,
    PowerSplit,
    SystemParams,
    compute_sinrs,
    db_to_linear,
    linear_to_db,
    sample_channels,
    sample_gain_matrix,
    sinrs_from_gains,
)

from conftest import nominal_params


def unit_params(m=1.0):
    return SystemParams(p_tx=10.0, n0=1.0, eta=0.7, m_shape=m,
                        omega_su_n=1.0, omega_su_f=1.0, omega_se=1.0,
                        omega_un_e=1.0, omega_un_uf=1.0)


class TestValidation:
    def test_rejects_nonpositive_fields(self):
        with pytest.raises(ValueError, match="p_tx"):
            SystemParams(p_tx=0.0, n0=1.0, eta=0.7, m_shape=1.0,
                         omega_su_n=1, omega_su_f=1, omega_se=1,
                         omega_un_e=1, omega_un_uf=1)

    def test_rejects_eta_above_one(self):
        with pytest.raises(ValueError, match="eta"):
            unit_params()
            SystemParams(p_tx=1, n0=1, eta=1.2, m_shape=1.0,
                         omega_su_n=1, omega_su_f=1, omega_se=1,
                         omega_un_e=1, omega_un_uf=1)

    def test_rejects_small_shape(self):
        with pytest.raises(ValueError, match="m_shape"):
            SystemParams(p_tx=1, n0=1, eta=0.7, m_shape=0.25,
                         omega_su_n=1, omega_su_f=1, omega_se=1,
                         omega_un_e=1, omega_un_uf=1)

    def test_allocation_constraints(self):
        with pytest.raises(ValueError):
            PowerAllocation(alpha_n=0.6, alpha_f=0.4)
        with pytest.raises(ValueError):
            PowerAllocation(alpha_n=0.3, alpha_f=0.8)
        a = PowerAllocation.from_far(0.8)
        assert a.alpha_n == pytest.approx(0.2)
        assert a.sinr_ceiling == pytest.approx(4.0)

    def test_split_open_interval(self):
        with pytest.raises(ValueError):
            PowerSplit.uniform(0.0)
        with pytest.raises(ValueError):
            PowerSplit.uniform(1.0)

    def test_negative_gain_rejected(self):
        with pytest.raises(ValueError):
            ChannelRealization(-0.1, 1, 1, 1, 1)

    def test_value_objects_immutable(self):
        a = PowerAllocation.from_far(0.8)
        with pytest.raises(dataclasses.FrozenInstanceError):
            a.alpha_f = 0.9


class TestDbConversion:
    def test_round_trip(self):
        for x in (1e-3, 0.5, 1.0, 3.1623, 1e4):
            assert linear_to_db(db_to_linear(linear_to_db(x))) == pytest.approx(
                linear_to_db(x), abs=1e-12)

    def test_known_point(self):
        assert db_to_linear(5.0) == pytest.approx(10 ** 0.5)


class TestSampling:
    def test_unit_mean_exponential(self, rng):
        g = sample_gain_matrix(unit_params(), rng, 1_000_000)
        assert abs(g[:, 1].mean() - 1.0) < 0.01

    def test_exponential_tail(self, rng):
        # Pr[g > 1] for a unit-mean exponential, checked against the
        # closed-form survival value with a binomial error band.
        n = 1_000_000
        g = sample_gain_matrix(unit_params(), rng, n)
        p_hat = float(np.mean(g[:, 1] > 1.0))
        p = math.exp(-1.0)
        assert abs(p_hat - p) < 3.0 * math.sqrt(p * (1 - p) / n)

    def test_shape_two_variance(self, rng):
        # gamma variance omega^2 / m = 0.5 for omega=1, m=2
        g = sample_gain_matrix(unit_params(m=2.0), rng, 1_000_000)
        assert abs(g[:, 0].var() - 0.5) < 0.01

    def test_seeded_reproducibility(self):
        a = sample_channels(unit_params(), np.random.default_rng(7))
        b = sample_channels(unit_params(), np.random.default_rng(7))
        assert a == b


class TestSinrFormulas:
    def test_zero_far_gain_kills_link(self, alloc, split):
        ch = ChannelRealization(1.0, 0.0, 1.0, 1.0, 1.0)
        assert compute_sinrs(unit_params(), alloc, split, ch).snr_f1 == 0.0

    def test_far_sinr_arithmetic(self, alloc, split):
        ch = ChannelRealization(1.0, 0.5, 1.0, 1.0, 1.0)
        s = compute_sinrs(unit_params(), alloc, split, ch)
        assert s.snr_f1 == pytest.approx(2.8 / 1.7, rel=1e-12)

    def test_relay_snr_arithmetic(self, alloc, split):
        ch = ChannelRealization(1.0, 0.5, 1.0, 1.0, 1.0)
        s = compute_sinrs(unit_params(), alloc, split, ch)
        assert s.snr_rf2 == pytest.approx(0.7 * 0.3 * 0.7 * 10.0, rel=1e-12)

    def test_near_own_snr(self, alloc, split):
        ch = ChannelRealization(1.0, 0.5, 1.0, 1.0, 1.0)
        s = compute_sinrs(unit_params(), alloc, split, ch)
        assert s.snr_n2 == pytest.approx(0.7 * 1.0 * 0.2 * 10.0, rel=1e-12)

    def test_phase1_ceiling(self, params, split, rng):
        alloc = PowerAllocation.from_far(0.8)
        gains = sample_gain_matrix(params, rng, 20_000)
        nf1, _, f1, e1, _, _ = sinrs_from_gains(params, alloc, split, gains)
        ceiling = alloc.sinr_ceiling
        assert (nf1 < ceiling).all() and (f1 < ceiling).all() and (e1 < ceiling).all()

    def test_far_rate_monotone_in_alpha(self, params, split):
        ch = ChannelRealization(1.0, 0.5, 1.0, 1.0, 1.0)
        vals = [compute_sinrs(params, PowerAllocation.from_far(a), split, ch).snr_f1
                for a in np.linspace(0.55, 0.95, 11)]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_near_own_decreases_in_alpha_f(self, params, split):
        ch = ChannelRealization(1.0, 0.5, 1.0, 1.0, 1.0)
        vals = [compute_sinrs(params, PowerAllocation.from_far(a), split, ch).snr_n2
                for a in np.linspace(0.55, 0.95, 11)]
        assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_power_scaling(self, alloc, split):
        ch = ChannelRealization(1.0, 0.5, 1.0, 1.0, 1.0)
        lo = compute_sinrs(unit_params(), alloc, split, ch)
        hi_params = SystemParams(p_tx=20.0, n0=1.0, eta=0.7, m_shape=1.0,
                                 omega_su_n=1, omega_su_f=1, omega_se=1,
                                 omega_un_e=1, omega_un_uf=1)
        hi = compute_sinrs(hi_params, alloc, split, ch)
        assert hi.snr_n2 > lo.snr_n2
        assert hi.snr_rf2 > lo.snr_rf2
        assert hi.snr_re2 > lo.snr_re2
        assert lo.snr_f1 < hi.snr_f1 < alloc.sinr_ceiling

    def test_vanishing_harvest_split_kills_phase_two(self, params, alloc):
        # rho_n1 at the bottom of its open range starves the relay phase
        split = PowerSplit(rho_n1=1e-280, rho_f1=0.3, rho_e1=0.3,
                           rho_f2=0.3, rho_e2=0.3)
        ch = ChannelRealization(1.0, 0.5, 1.0, 1.0, 1.0)
        s = compute_sinrs(params, alloc, split, ch)
        assert s.snr_rf2 < 1e-250 and s.snr_re2 < 1e-250

    def test_scalar_matches_vector_path(self, params, alloc, split, rng):
        gains = sample_gain_matrix(params, rng, 64)
        arrays = sinrs_from_gains(params, alloc, split, gains)
        one = compute_sinrs(params, alloc, split, ChannelRealization(*gains[17]))
        for field_value, arr in zip(
                (one.snr_nf1, one.snr_n2, one.snr_f1, one.snr_e1,
                 one.snr_rf2, one.snr_re2), arrays):
            assert field_value == pytest.approx(arr[17], rel=1e-15)

    def test_all_finite_at_nominal(self, split, rng):
        params = nominal_params(snr_db=30.0)
        gains = sample_gain_matrix(params, rng, 10_000)
        for arr in sinrs_from_gains(params, PowerAllocation.from_far(0.9),
                                    split, gains):
            assert np.isfinite(arr).all()
