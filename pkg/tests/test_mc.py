import math
import warnings

import numpy as np
import pytest

from udnplan import analytic as an
from udnplan import mc
from udnplan.geometry import PointSet, sample_ppp
from udnplan.scenario import Scenario, SimControl

SMALL = SimControl(window_side=30.0, trials=60, seed=11)


def quiet_estimate(*args, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return mc.estimate(*args, **kw)


@pytest.mark.parametrize("regime", mc.REGIMES)
def test_same_seed_same_result(regime):
    sc = Scenario().with_overrides(lambda_mu=0.2, lambda_mm=0.3, sigma2=1e-9)
    if regime == "mm_in":
        sc = sc.with_overrides(area_in=50.0, lambda_g=0.002, sigma2=1.0)
    sim = SimControl(window_side=25.0, trials=12, seed=3)
    a = quiet_estimate(regime, sc, sim)
    b = quiet_estimate(regime, sc, sim)
    assert a == b
    c = quiet_estimate(regime, sc, SimControl(window_side=25.0, trials=12, seed=4))
    assert c.mean != a.mean


def test_worker_count_does_not_change_the_estimate():
    sc = Scenario().with_overrides(lambda_mu=0.2, sigma2=1e-9)
    sim = SimControl(window_side=30.0, trials=40, seed=5)
    one = quiet_estimate("mu_dl", sc, sim, workers=1)
    two = quiet_estimate("mu_dl", sc, sim, workers=2)
    assert one.mean == two.mean and one.stderr == two.stderr


def test_active_bs_edge_cases():
    side = 20.0
    bs = PointSet(np.array([[2.0, 2.0], [10.0, 10.0], [15.0, 3.0]]), "muWaveBS", side)
    none = PointSet(np.empty((0, 2)), "user", side)
    assert len(mc.active_bs(bs, none)) == 0
    one = PointSet(np.array([[9.0, 9.5]]), "user", side)
    assert mc.active_bs(bs, one).tolist() == [1]


def test_active_density_saturates_at_user_density():
    # with far more BSs than users nearly every user has its own cell
    rng = np.random.default_rng(2)
    side, lam_u = 150.0, 0.02
    counts = [len(mc.active_bs(sample_ppp(20.0, side, rng), sample_ppp(lam_u, side, rng)))
              for _ in range(10)]
    p = an.active_probability(lam_u, 20.0)
    assert np.mean(counts) / side**2 == pytest.approx(20.0 * p, rel=0.02)
    assert np.mean(counts) / side**2 == pytest.approx(lam_u, rel=0.02)


def test_active_fraction_matches_void_probability():
    rng = np.random.default_rng(9)
    side, lam_u, lam_mu = 60.0, 0.05, 0.05
    frac = [len(mc.active_bs(b := sample_ppp(lam_mu, side, rng), sample_ppp(lam_u, side, rng))) / len(b)
            for _ in range(200)]
    exact = an.active_probability(lam_u, lam_mu)
    assert np.mean(frac) == pytest.approx(exact, abs=3 * np.std(frac) / math.sqrt(len(frac)) + 0.005)


def test_overall_equals_outdoor_without_blockage():
    sc = Scenario().with_overrides(lambda_g=0.0, lambda_mm=0.3, sigma2=1e-3, window_side=30.0)
    for s in range(5):
        a = mc.run_trial("mm", sc, np.random.default_rng(s))
        b = mc.run_trial("mm_out", sc, np.random.default_rng(s))
        assert a == b


def test_no_base_station_counts_as_zero_rate():
    sc = Scenario().with_overrides(lambda_mu=1e-9, window_side=10.0)
    est = quiet_estimate("mu_dl", sc, SimControl(window_side=10.0, trials=20, seed=0))
    assert est.mean == 0.0 and est.zero_rate == 1.0


def test_single_trial_has_infinite_stderr():
    sc = Scenario().with_overrides(lambda_mu=0.2)
    est = quiet_estimate("mu_dl", sc, SimControl(window_side=20.0, trials=1, seed=0))
    assert est.stderr == math.inf and est.n_trials == 1


def test_insufficient_trials_warning():
    sc = Scenario().with_overrides(lambda_mu=0.05, sigma2=1e-9)
    with pytest.warns(mc.InsufficientTrials):
        mc.estimate("mu_dl", sc, SimControl(window_side=20.0, trials=5, seed=0))


def test_unknown_regime():
    with pytest.raises(ValueError):
        mc.estimate("thz", Scenario(), SMALL)
    with pytest.raises(ValueError):
        mc.run_trial("thz", Scenario(), np.random.default_rng(0))


def test_confidence_interval_is_normal_interval():
    est = quiet_estimate("mu_dl", Scenario().with_overrides(lambda_mu=0.2, sigma2=1e-9), SMALL)
    assert est.ci_half_width == pytest.approx(1.959963984540054 * est.stderr, rel=1e-12)
    assert est.ci_low < est.mean < est.ci_high


def test_crn_shares_streams_across_parameters():
    a = mc.trial_seeds(1, "mu_dl", Scenario(), 0, 3, crn=True)
    b = mc.trial_seeds(1, "mu_dl", Scenario().with_overrides(lambda_mu=7), 0, 3, crn=True)
    assert [s.spawn_key for s in a] == [s.spawn_key for s in b]
    c = mc.trial_seeds(1, "mu_dl", Scenario().with_overrides(lambda_mu=7), 0, 3)
    assert [s.spawn_key for s in a] != [s.spawn_key for s in c]
    # the sim controls do not enter the physical key
    assert mc.physical_key(Scenario()) == mc.physical_key(Scenario().with_overrides(trials=7))


def test_densification_raises_the_estimate():
    sim = SimControl(window_side=30.0, trials=300, seed=1)
    lo = quiet_estimate("mu_dl", Scenario().with_overrides(lambda_mu=0.05, sigma2=1e-9), sim, crn=True)
    hi = quiet_estimate("mu_dl", Scenario().with_overrides(lambda_mu=1.0, sigma2=1e-9), sim, crn=True)
    assert hi.mean - lo.mean > 3 * math.hypot(hi.stderr, lo.stderr)


@pytest.mark.parametrize("regime", ["mu_dl", "mu_ul"])
def test_mu_estimate_dominates_bound(regime):
    sc = Scenario().with_overrides(lambda_mu=0.5, sigma2=1e-9)
    est = quiet_estimate(regime, sc, SimControl(window_side=40.0, trials=300, seed=2))
    assert est.ci_high >= an.se_mu_bound(0.5, 0.02, 4.58).value


def test_indoor_estimate_dominates_bound():
    sc = Scenario().with_overrides(lambda_mm=1.0, area_in=50.0, lambda_g=0.002, sigma2=1.0)
    est = quiet_estimate("mm_in", sc, SimControl(window_side=100.0, trials=60, seed=4))
    assert est.ci_high >= an.se_mm_in_bound(1.0, 1.0).value
