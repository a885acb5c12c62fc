import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diffcsi.capacity import (
    CapacityConfig,
    block_capacity,
    ergodic_capacity,
    waterfill,
    waterfill_batch,
)
from diffcsi.channel import ChannelParams, autocorrelation
from diffcsi.mathcore import RngStream, sample_cn
from diffcsi.ratedist import FeedbackBudget, distortion_from_rate


def random_unitary(n, rng):
    q, r = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


class TestWaterfill:
    def test_equal_gains_split_equally(self):
        for a2 in (0.1, 1.0, 10.0):
            alloc = waterfill(np.array([2.0, 2.0]), a2, 2)
            assert np.allclose(alloc.z2, [1.0, 1.0], atol=1e-12)

    def test_single_active_mode(self):
        # gap between inverse gains exceeds the total power: weak mode off
        g1, g2 = 10.0, 0.1
        a2 = 1.0
        assert 1 / (g2**2 * a2) - 1 / (g1**2 * a2) > 2
        alloc = waterfill(np.array([g1, g2]), a2, 2)
        assert alloc.z2[1] == 0.0
        assert alloc.z2[0] == pytest.approx(2.0, abs=1e-12)
        assert g2**2 * a2 < 1 / alloc.mu  # cut-off inequality for the off mode

    def test_power_constraint_random(self, rng):
        for _ in range(200):
            g = np.sort(rng.uniform(0.01, 3.0, size=2))[::-1]
            a2 = float(rng.uniform(0.05, 20.0))
            alloc = waterfill(g, a2, 2)
            assert abs(alloc.z2.sum() - 2.0) < 1e-12
            for i, z2 in enumerate(alloc.z2):
                if z2 > 0:
                    assert g[i] ** 2 * a2 >= 1 / alloc.mu - 1e-12

    def test_all_zero_gains_rejected(self):
        with pytest.raises(ValueError):
            waterfill(np.array([0.0, 0.0]), 1.0, 2)

    def test_more_power_never_fewer_active_modes(self, rng):
        for _ in range(100):
            g = np.sort(rng.uniform(0.01, 3.0, size=2))[::-1]
            n_lo = np.count_nonzero(waterfill(g, 0.5, 2).z2)
            n_hi = np.count_nonzero(waterfill(g, 5.0, 2).z2)
            assert n_hi >= n_lo

    def test_batch_matches_scalar(self, rng):
        gs = np.sort(rng.uniform(0.0, 3.0, size=(500, 2)), axis=1)[:, ::-1]
        gs[gs < 0.05] = 0.0
        gs[:, 0] = np.maximum(gs[:, 0], 0.1)  # keep at least one live mode
        z2 = waterfill_batch(gs, 1.3, 2)
        for row_g, row_z in zip(gs, z2):
            alloc = waterfill(row_g, 1.3, 2)
            assert np.allclose(row_z, alloc.z2, atol=1e-10)

    @given(g1=st.floats(min_value=0.05, max_value=5.0),
           ratio=st.floats(min_value=0.01, max_value=1.0),
           a2=st.floats(min_value=0.01, max_value=50.0))
    @settings(max_examples=200, deadline=None)
    def test_power_conservation_property(self, g1, ratio, a2):
        alloc = waterfill(np.array([g1, g1 * ratio]), a2, 2)
        assert abs(alloc.z2.sum() - 2.0) < 1e-12
        assert np.all(alloc.z2 >= 0)


class TestBlockCapacity:
    def test_perfect_estimation_reduces_to_direct_form(self, params_perfect):
        cfg = CapacityConfig(params=params_perfect, snr_db=0.0, l_block=100)
        rng = RngStream(31, 0).generator()
        for _ in range(20):
            h = sample_cn((2, 2), 1.0, rng)
            got = block_capacity(h, h, cfg)
            # direct evaluation: F = (1/A^2) I
            _, s, vh = np.linalg.svd(h)
            from diffcsi.capacity import waterfill as wf
            z = np.sqrt(wf(s, cfg.amplitude2, 2).z2)
            j = h @ vh.conj().T @ np.diag(z)
            direct = cfg.overhead * math.log2(
                np.real(np.linalg.det(np.eye(2) + cfg.amplitude2 * (j @ j.conj().T))))
            assert got == pytest.approx(direct, rel=1e-10)

    def test_zero_power_gives_zero_capacity(self, cap_cfg):
        # manually zeroed precoder: J = 0, log2 det(I) = 0
        from diffcsi.capacity import _capacity_batch
        h = sample_cn((1, 2, 2), 1.0, RngStream(32, 0).generator())
        vz = np.zeros((1, 2, 2), dtype=complex)
        assert _capacity_batch(h, vz, cap_cfg)[0] == pytest.approx(0.0, abs=1e-12)

    def test_capacity_nonnegative(self, cap_cfg):
        rng = RngStream(33, 0).generator()
        for _ in range(50):
            h_hat = sample_cn((2, 2), 1.2, rng)
            h_bar = h_hat - sample_cn((2, 2), 0.3, rng)
            assert block_capacity(h_hat, h_bar, cap_cfg) >= 0.0

    def test_unitary_rotation_invariance(self, cap_cfg):
        rng = RngStream(34, 0).generator()
        for _ in range(20):
            h_hat = sample_cn((2, 2), 1.2, rng)
            h_bar = h_hat - sample_cn((2, 2), 0.2, rng)
            q = random_unitary(2, rng)
            a = block_capacity(h_hat, h_bar, cap_cfg)
            b = block_capacity(q @ h_hat, q @ h_bar, cap_cfg)
            assert b == pytest.approx(a, rel=1e-9)

    def test_pilot_overhead_scaling(self, params):
        rng = RngStream(35, 0).generator()
        h_hat = sample_cn((2, 2), 1.2, rng)
        h_bar = h_hat - sample_cn((2, 2), 0.2, rng)
        cfg_a = CapacityConfig(params=params, snr_db=0.0, l_block=100)
        cfg_b = CapacityConfig(params=params, snr_db=0.0, l_block=50)
        ca = block_capacity(h_hat, h_bar, cfg_a)
        cb = block_capacity(h_hat, h_bar, cfg_b)
        assert cb / ca == pytest.approx((48 / 50) / (98 / 100), rel=1e-12)

    def test_f_closed_form_monte_carlo(self, params, cap_cfg):
        # E[J_e J_e^+ | J] against the (1-r)^2 J J^+ + N_t sigma_psi^2 I form
        rng = RngStream(36, 0).generator()
        n = 10**5
        r = params.ratio
        for trial in range(3):
            h_hat = sample_cn((2, 2), params.sigma_hhat2, rng)
            _, s, vh = np.linalg.svd(h_hat - sample_cn((2, 2), 0.2, rng))
            z = np.sqrt(waterfill(s, cap_cfg.amplitude2, 2).z2)
            vz = vh.conj().T @ np.diag(z)
            # H_e = (1 - r) H_hat - Psi with Psi indep of H_hat
            psi = sample_cn((n, 2, 2), params.psi_variance, rng)
            h_e = (1 - r) * h_hat[None, :, :] - psi
            j_e = h_e @ vz
            emp = np.mean(j_e @ np.swapaxes(j_e.conj(), 1, 2), axis=0)
            j = h_hat @ vz
            closed = (1 - r) ** 2 * (j @ j.conj().T) \
                + params.n_t * params.psi_variance * np.eye(2)
            se = np.abs(closed).max() / math.sqrt(n) * 4
            assert np.all(np.abs(emp - closed) < 3 * (se + 0.01))


class TestErgodicCapacity:
    def test_monotone_degradation_with_distortion(self, params, cap_cfg):
        budget = FeedbackBudget(c_fb=2.0, r_bits=8.0, t_blocks=4)
        m1, s1 = ergodic_capacity(cap_cfg, budget, 0.05, trials=2000, seed=42)
        m2, s2 = ergodic_capacity(cap_cfg, budget, 0.6, trials=2000, seed=42)
        assert m1 >= m2 - 3 * max(s1, s2)

    def test_finite_and_nonnegative(self, cap_cfg):
        budget = FeedbackBudget(c_fb=1.0, r_bits=4.0, t_blocks=4)
        m, s = ergodic_capacity(cap_cfg, budget, 0.3, trials=500, seed=7)
        assert math.isfinite(m) and m >= 0
        assert math.isfinite(s) and s >= 0

    def test_diminishing_returns_in_feedback_capacity(self, params, cap_cfg):
        means = []
        t = 6
        alpha = autocorrelation(params, t)
        for c_fb in (0.5, 1.0, 2.0, 4.0):
            d = distortion_from_rate(params, alpha, c_fb * t)
            budget = FeedbackBudget(c_fb=c_fb, r_bits=c_fb * t, t_blocks=t)
            m, _ = ergodic_capacity(cap_cfg, budget, d, trials=4000, seed=11)
            means.append(m)
        assert all(b >= a for a, b in zip(means, means[1:]))
        increments = [b - a for a, b in zip(means, means[1:])]
        assert increments[-1] < increments[0]

    def test_worker_count_invariance(self, cap_cfg):
        budget = FeedbackBudget(c_fb=2.0, r_bits=6.0, t_blocks=3)
        # trials > chunk size so multiple chunks exist
        a = ergodic_capacity(cap_cfg, budget, 0.2, trials=4096, seed=3, workers=1)
        b = ergodic_capacity(cap_cfg, budget, 0.2, trials=4096, seed=3, workers=2)
        assert a == b

    def test_analytic_mode_runs(self, cap_cfg):
        budget = FeedbackBudget(c_fb=2.0, r_bits=6.0, t_blocks=3)
        m, s = ergodic_capacity(cap_cfg, budget, 0.2, trials=500, seed=5,
                                mode="analytic", periods=4)
        assert math.isfinite(m) and m > 0

    def test_invalid_arguments(self, cap_cfg):
        budget = FeedbackBudget(c_fb=2.0, r_bits=6.0, t_blocks=3)
        with pytest.raises(ValueError):
            ergodic_capacity(cap_cfg, budget, 0.2, trials=0, seed=1)
        with pytest.raises(ValueError):
            ergodic_capacity(cap_cfg, budget, 0.2, trials=10, seed=1, mode="bogus")


def test_capacity_config_validation(params):
    with pytest.raises(ValueError):
        CapacityConfig(params=params, snr_db=0.0, l_block=2)
    cfg = CapacityConfig(params=params, snr_db=0.0, l_block=100)
    # SNR convention: A^2 = SNR_lin sigma_0^2 / (N_t sigma_h2)
    assert cfg.amplitude2 == pytest.approx(0.5)
    assert cfg.overhead == pytest.approx(0.98)
