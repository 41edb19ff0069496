import math

import numpy as np
import pytest

from replicheck.anova import grbd_anova
from replicheck.errors import ConfigurationError
from replicheck.sim import (
    SimParams, calibration_study, generate_grbd, null_params, permutation_pvalue, simulate_many,
)

from conftest import make_dataset


def ks_uniform(ps):
    """Kolmogorov-Smirnov distance between a sample and Uniform(0, 1)."""
    x = np.sort(ps)
    n = x.size
    upper = np.arange(1, n + 1) / n - x
    lower = x - np.arange(n) / n
    return float(max(upper.max(), lower.max()))


class TestParams:
    @pytest.mark.parametrize("kwargs", [
        dict(t=1, b=3, r=2), dict(t=2, b=3, r=0), dict(t=2, b=3, r=2, sigma=0.0),
        dict(t=2, b=3, r=2, treatment_effects=(1.0,)), dict(t=2, b=3, r=2, batch_effects=(0, 1)),
        dict(t=2, b=3, r=2, interaction_sd=-1.0),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigurationError):
            SimParams(**kwargs)


class TestGenerate:
    def test_noise_free_limit(self):
        p = SimParams(2, 3, 4, (-1.5, 1.5), (0.0, 10.0, -2.0), interaction_sd=0.0, sigma=1e-12, seed=1)
        d = generate_grbd(p)
        for o in d.included:
            i, j = int(o.treatment[1:]) - 1, int(o.batch[1:]) - 1
            assert o.outcome == pytest.approx(p.treatment_effects[i] + p.batch_effects[j], abs=1e-9)

    def test_deterministic(self):
        p = SimParams(3, 2, 5, interaction_sd=0.7, seed=42)
        assert generate_grbd(p) == generate_grbd(p)
        assert generate_grbd(p) != generate_grbd(SimParams(3, 2, 5, interaction_sd=0.7, seed=43))

    def test_balanced_layout(self):
        d = generate_grbd(SimParams(2, 3, 7, seed=0))
        assert len(d.observations) == 42
        assert d.treatment_levels() == ("T1", "T2")

    def test_label_order_survives_ten_levels(self):
        d = generate_grbd(SimParams(2, 11, 2, seed=0))
        assert d.batch_levels()[:3] == ("B01", "B02", "B03")

    def test_mean_difference(self):
        d = generate_grbd(SimParams(2, 3, 100, (-1.0, 1.0), seed=5))
        y, tr, _ = d.columns()
        y, tr = np.asarray(y), np.asarray(tr)
        a, b = y[tr == "T1"], y[tr == "T2"]
        se = math.sqrt(a.var(ddof=1) / a.size + b.var(ddof=1) / b.size)
        assert abs((b.mean() - a.mean()) - 2.0) < 3 * se


class TestPermutation:
    def test_constant_outcome(self):
        d = make_dataset({(tr, bt): [3.0] * 4 for tr in "CT" for bt in "XYZ"})
        assert permutation_pvalue(d, "eq1_treatment", 199, seed=0) == 1.0
        assert permutation_pvalue(d, "interaction", 199, seed=0) == 1.0

    def test_overwhelming_effect(self):
        d = generate_grbd(SimParams(2, 3, 10, (-50.0, 50.0), seed=3))
        assert permutation_pvalue(d, "eq1_treatment", 999, seed=1) == pytest.approx(1 / 1000)

    def test_agrees_with_f_test(self):
        d = generate_grbd(null_params(seed=11))
        p_perm = permutation_pvalue(d, "eq1_treatment", 10000, seed=2)
        p_f = grbd_anova(d)["treatment"].p_error
        assert abs(p_perm - p_f) <= 0.03

    def test_interaction_statistic(self):
        d = generate_grbd(null_params(seed=12))
        p_perm = permutation_pvalue(d, "interaction", 10000, seed=2)
        assert abs(p_perm - grbd_anova(d)["interaction"].p_error) <= 0.03

    def test_deterministic(self):
        d = generate_grbd(null_params(seed=4))
        assert permutation_pvalue(d, n_perm=500, seed=9) == permutation_pvalue(d, n_perm=500, seed=9)
        # chunking is an implementation detail
        assert permutation_pvalue(d, n_perm=500, seed=9, chunk=64) == permutation_pvalue(d, n_perm=500, seed=9)

    def test_within_batch_structure(self):
        # a huge batch effect with no treatment effect must not look significant
        p = SimParams(2, 3, 8, batch_effects=(0.0, 100.0, -100.0), seed=8)
        assert permutation_pvalue(generate_grbd(p), n_perm=999, seed=0) > 0.01

    @pytest.mark.parametrize("n_perm", [0, 50, 98])
    def test_too_few(self, n_perm):
        with pytest.raises(ConfigurationError):
            permutation_pvalue(generate_grbd(null_params()), n_perm=n_perm)

    def test_bad_statistic(self):
        with pytest.raises(ConfigurationError):
            permutation_pvalue(generate_grbd(null_params()), "eq2", 99)

    @pytest.mark.slow
    def test_null_uniformity(self):
        datasets = simulate_many(null_params(seed=0), 500)
        ps = [permutation_pvalue(d, "eq1_treatment", 999, seed=i) for i, d in enumerate(datasets)]
        assert ks_uniform(ps) < 0.05


class TestCalibration:
    def test_power_limit(self):
        res = calibration_study(SimParams(2, 3, 10, (-3.0, 3.0), seed=1), n_sims=200)
        assert res.rejection_rate_eq1 == 1.0

    def test_interaction_heterogeneity(self):
        res = calibration_study(SimParams(2, 3, 10, interaction_sd=3.0, seed=2), n_sims=1000)
        assert res.rejection_rate_interaction > 0.5
        assert abs(res.rejection_rate_eq2 - 0.05) < 4 * math.sqrt(0.05 * 0.95 / 1000)
        # heterogeneity leaks into the MS(Error) test
        assert res.rejection_rate_eq1 > 0.2

    def test_se(self):
        res = calibration_study(null_params(seed=3), n_sims=100)
        for key, rate in (("eq1", res.rejection_rate_eq1), ("eq2", res.rejection_rate_eq2),
                          ("interaction", res.rejection_rate_interaction)):
            assert res.monte_carlo_se[key] == pytest.approx(math.sqrt(rate * (1 - rate) / 100))

    def test_order_independent(self):
        p = null_params(seed=4)
        assert calibration_study(p, 120) == calibration_study(p, 120, n_jobs=2)

    def test_config_errors(self):
        with pytest.raises(ConfigurationError):
            calibration_study(null_params(), n_sims=50)
        with pytest.raises(ConfigurationError):
            calibration_study(null_params(), n_sims=100, alpha=0.0)
