import math

import numpy as np
import pytest

import survmed as sm
from survmed.rng import substream
from survmed.simulate import _draw_structural


class FixedExponential:
    """Duck-typed rng stub returning a preset array from .exponential()."""

    def __init__(self, values):
        self.values = np.asarray(values, dtype=float)

    def exponential(self, scale, size):
        assert size == self.values.shape
        return self.values


def s_config(**overrides):
    base = dict(
        n=2000, p=1, a=(0.5,), b=(-1.5,), r=2.0, target_censor_rate=0.25, seed=0, scenario_id="s"
    )
    base.update(overrides)
    return sm.ScenarioConfig(**base)


class TestInverseTransform:
    def test_hand_value(self):
        # shape 2, eta -5, null coefficients, u = e^-1 -> t = e^{2.5}
        t = sm.inverse_weibull_time(np.array([math.exp(-1.0)]), 2.0, np.array([-5.0]))
        assert t[0] == pytest.approx(math.exp(2.5), rel=1e-12)

    def test_exponentiality_of_transformed_times(self):
        # with null coefficients, T^shape * exp(eta) is standard exponential
        cfg = s_config(a=(0.0,), b=(0.0,), r=0.0, target_censor_rate=0.0, n=100_000)
        ds = sm.gen_dataset(cfg, substream(1, 0), math.inf)
        sample = np.sort(ds.outcomes.exit**cfg.weibull_shape * math.exp(cfg.weibull_eta))
        # one-sided KS against Exp(1), by hand
        cdf = 1.0 - np.exp(-sample)
        n = sample.size
        ecdf_hi = np.arange(1, n + 1) / n
        ecdf_lo = np.arange(0, n) / n
        ks = max(np.max(ecdf_hi - cdf), np.max(cdf - ecdf_lo))
        assert ks < 0.01


class TestGenDataset:
    def test_zero_target_all_events(self):
        cfg = s_config(target_censor_rate=0.0, n=500)
        ds = sm.gen_dataset(cfg, substream(2, 0))
        assert ds.outcomes.n_events == 500
        assert np.all(ds.outcomes.entry == 0.0)

    def test_determinism_bit_identical(self):
        cfg = s_config(n=400)
        scale = sm.calibrate_censoring(cfg)
        a = sm.gen_dataset(cfg, substream(cfg.seed, 3), scale)
        b = sm.gen_dataset(cfg, substream(cfg.seed, 3), scale)
        assert np.array_equal(a.outcomes.exit, b.outcomes.exit)
        assert np.array_equal(a.outcomes.event, b.outcomes.event)
        assert np.array_equal(a.exposure, b.exposure)
        assert np.array_equal(a.mediators, b.mediators)

    def test_mediator_joint_law(self):
        cfg = sm.ScenarioConfig(
            n=100_000,
            p=3,
            a=(1.0, 0.5, -0.7),
            b=(0.5, 0.5, 0.5),
            r=1.0,
            target_censor_rate=0.0,
            scenario_id="law",
        )
        ds = sm.gen_dataset(cfg, substream(4, 0), math.inf)
        x = ds.exposure[:, 0]
        n = cfg.n
        for j, a_j in enumerate(cfg.a):
            m_j = ds.mediators[:, j]
            cov = float(np.cov(x, m_j)[0, 1])
            var = float(np.var(m_j, ddof=1))
            se_cov = math.sqrt((1.0 * var + cov**2) / n)
            assert abs(cov - a_j) < 3 * se_cov
            target_var = a_j**2 + cfg.mediator_noise_sd**2
            se_var = target_var * math.sqrt(2.0 / n)
            assert abs(var - target_var) < 3 * se_var

    def test_validates_against_core_rules(self):
        cfg = s_config(n=300, target_censor_rate=0.5)
        ds = sm.gen_dataset(cfg, substream(5, 0))
        assert sm.validate_dataset(ds).ok


class TestApplyCensoring:
    def test_infinite_scale_sentinel(self):
        out = sm.apply_censoring(np.array([1.0, 2.0]), math.inf, substream(0, 0))
        assert out.event.all()
        assert np.array_equal(out.exit, [1.0, 2.0])

    def test_elementwise_min_and_flags(self):
        out = sm.apply_censoring(np.array([1.0, 2.0, 3.0]), 1.0, FixedExponential([2.0, 1.0, 4.0]))
        assert np.array_equal(out.exit, [1.0, 1.0, 3.0])
        assert out.event.tolist() == [True, False, True]

    def test_realized_rate_within_one_point(self):
        cfg = s_config(n=100_000, target_censor_rate=0.65)
        scale = sm.calibrate_censoring(cfg)
        ds = sm.gen_dataset(cfg, substream(6, 0), scale)
        assert abs(ds.outcomes.censor_rate - 0.65) < 0.01


class TestCalibration:
    def test_zero_target_infinite(self):
        assert sm.calibrate_censoring(s_config(target_censor_rate=0.0)) == math.inf

    def test_pilot_rate_within_band(self):
        cfg = s_config(target_censor_rate=0.5)
        scale = sm.calibrate_censoring(cfg)
        _, _, t = _draw_structural(cfg, substream(cfg.seed, sm.simulate.PILOT_TAG), 100_000)
        rate = float(np.mean(-np.expm1(-t / scale)))
        assert abs(rate - 0.5) <= 0.005

    def test_monotone_in_target(self):
        scales = [
            sm.calibrate_censoring(s_config(target_censor_rate=tc)) for tc in (0.2, 0.5, 0.8)
        ]
        assert scales[0] > scales[1] > scales[2]

    def test_config_bounds(self):
        with pytest.raises(ValueError):
            s_config(target_censor_rate=0.999)
        with pytest.raises(ValueError):
            s_config(n=10)
        with pytest.raises(ValueError):
            sm.ScenarioConfig(n=100, p=0, a=(), b=(), r=1.0)


class TestScenarioGrids:
    def test_s1_grid(self):
        cfgs = sm.make_scenarios("S1")
        assert len(cfgs) == 9
        assert [c.target_censor_rate for c in cfgs] == [
            0.05, 0.15, 0.20, 0.25, 0.35, 0.65, 0.85, 0.90, 0.95,
        ]
        assert all((c.n, c.p, c.a, c.b, c.r) == (2000, 1, (0.5,), (-1.5,), 2.0) for c in cfgs)
        assert all(c.replications == 1000 for c in cfgs)

    def test_s2_grid(self):
        cfgs = sm.make_scenarios("S2")
        assert [c.n for c in cfgs] == [200, 500, 1000, 2000, 5000]
        assert all(c.target_censor_rate == 0.25 for c in cfgs)

    def test_m1_grid(self):
        cfgs = sm.make_scenarios("M1")
        assert [c.target_censor_rate for c in cfgs] == [0.05, 0.25, 0.65, 0.85, 0.95]
        assert all(c.p == 5 and c.a == (1.0,) * 5 and c.b == (0.5,) * 5 and c.r == 2.5 for c in cfgs)

    def test_m2_m3_m4_grids(self):
        assert [c.a[0] for c in sm.make_scenarios("M2")] == [0.05, 0.25, 0.5, 1.0, 3.0, 5.0]
        assert [c.b[0] for c in sm.make_scenarios("M3")] == [0.01, 0.25, 0.5, 1.0, 2.0, 3.0]
        assert [c.r for c in sm.make_scenarios("M4")] == [0.05, 0.5, 1.0, 2.0, 5.0, 10.0]
        for family in ("M2", "M3", "M4"):
            assert all(c.target_censor_rate == 0.85 for c in sm.make_scenarios(family))

    def test_m5_grid(self):
        cfgs = sm.make_scenarios("M5")
        assert [c.p for c in cfgs] == [1, 2, 3, 4, 5]

    def test_overrides(self):
        cfgs = sm.make_scenarios("M1", q=25, seed=9, n=1000)
        assert all(c.replications == 25 and c.seed == 9 and c.n == 1000 for c in cfgs)

    def test_weibull_baseline_shared(self):
        for family in sm.simulate.FAMILIES:
            for c in sm.make_scenarios(family):
                assert (c.weibull_shape, c.weibull_eta) == (2.0, -5.0)

    def test_unknown_family(self):
        with pytest.raises(ValueError):
            sm.make_scenarios("S9")


class TestConsistencyOracle:
    def test_replicate_means_track_large_sample_fit(self):
        # S-style setting: replicate-averaged coefficient estimates within 5%
        # of one huge-sample plug-in fit
        cfg = s_config(n=2000, target_censor_rate=0.25, seed=31)
        scale = sm.calibrate_censoring(cfg)
        chat, rhat, bhat = [], [], []
        for rep in range(200):
            ds = sm.gen_dataset(cfg, substream(cfg.seed, rep), scale)
            fits = sm.fit_three_models(ds)
            chat.append(fits[0].beta[0])
            rhat.append(fits[2].beta[0])
            bhat.append(fits[2].beta[1])

        from dataclasses import replace

        mega = replace(cfg, n=200_000, scenario_id="mega")
        ds_mega = sm.gen_dataset(mega, substream(99, 0), scale)
        fits_mega = sm.fit_three_models(ds_mega)
        c_star = fits_mega[0].beta[0]
        r_star = fits_mega[2].beta[0]
        b_star = fits_mega[2].beta[1]

        assert np.mean(chat) == pytest.approx(c_star, rel=0.05)
        assert np.mean(rhat) == pytest.approx(r_star, rel=0.05)
        assert np.mean(bhat) == pytest.approx(b_star, rel=0.05)
