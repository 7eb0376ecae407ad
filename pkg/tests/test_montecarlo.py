import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from edmimo import detector as det
from edmimo import montecarlo as mc
from edmimo import ser
from edmimo.channel import Rayleigh, Sparse
from edmimo.constellation import make_conventional_pam, make_ook


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 10**7), st.lists(st.floats(0.01, 1.0), min_size=2, max_size=8))
def test_allocation_sums_and_tracks_priors(trials, raw):
    q = np.array(raw) / sum(raw)
    n = mc.allocate(trials, q)
    assert n.sum() == trials
    assert np.all(np.abs(n - trials * q) < 1.0)


def _counts(channel, backend, shards=1, c=None, M=16, snr_db=6.0, trials=3000):
    c = c or make_conventional_pam(4)
    sn2 = 10 ** (-snr_db / 10)
    fixed = [det.aed_gaussian_thresholds(1.0, sn2, c, M, relaxed=True), det.aed_bayesian_thresholds(1.0, sn2, c, M)]
    return mc.simulate_counts(c, channel, M, sn2, np.uint64(987654321), trials, fixed, True, True,
                              shard_count=shards, backend=backend)[0]


@pytest.mark.parametrize("channel", [Rayleigh(16), Sparse(16, 5), Sparse(16, 9, los=True, profile="exponential")])
def test_numba_and_numpy_backends_count_identically(channel):
    np.testing.assert_array_equal(_counts(channel, "numba"), _counts(channel, "numpy"))


@pytest.mark.parametrize("shards", [2, 7, 64])
def test_counts_do_not_depend_on_sharding(shards):
    ref = _counts(Rayleigh(16), "numba")
    np.testing.assert_array_equal(_counts(Rayleigh(16), "numba", shards=shards), ref)
    np.testing.assert_array_equal(_counts(Rayleigh(16), "numpy", shards=shards), ref)


def test_prefix_trials_are_a_subset():
    # trial t uses the same variates whatever the total, so error counts only grow
    a = _counts(Rayleigh(16), "numba", trials=2000, c=make_ook())
    b = _counts(Rayleigh(16), "numba", trials=4000, c=make_ook())
    assert np.all(b >= a)


def _scenario(**kw):
    base = dict(constellation=make_conventional_pam(4), channel=Rayleigh(8), detectors=mc.DETECTORS,
                axis="snr_db", points=(3.0,), antennas=8, trials=60_000, seed=11)
    base.update(kw)
    return mc.Scenario(**base)


def test_monte_carlo_agrees_with_analytic():
    sc = _scenario()
    res = mc.run_sweep(sc)
    pt = res.points[0]
    for name, analytic in (("aed_gaussian", "aed_gaussian"), ("aed_bayesian", "aed_bayesian"),
                           ("ied", "ied_exact"), ("coherent", "coherent")):
        rep = pt.montecarlo[name]
        se = ser.wilson_standard_error(rep.errors, rep.trials)
        assert abs(rep.average - pt.analytic[analytic].average) < 4 * se, name


def test_run_point_is_reproducible_and_seed_sensitive():
    a, _ = mc.run_point(_scenario(trials=5000), 0)
    b, _ = mc.run_point(_scenario(trials=5000), 0)
    c, _ = mc.run_point(_scenario(trials=5000, seed=12), 0)
    assert all(a[k].errors == b[k].errors for k in a)
    assert any(a[k].errors != c[k].errors for k in a)


def test_curves_use_distinct_streams():
    a, _ = mc.run_point(_scenario(trials=5000, curve=0), 0)
    b, _ = mc.run_point(_scenario(trials=5000, curve=1), 0)
    assert any(a[k].errors != b[k].errors for k in a)


@pytest.mark.parametrize("kw", [dict(regime="fast"), dict(points=(3.0, 1.0)), dict(trials=0),
                                dict(detectors=("nope",)), dict(axis="L"), dict(points=()),
                                dict(axis="M", points=(8.5,)), dict(channel="rayleigh"),
                                dict(point_constellations=(make_ook(), make_ook()))])
def test_scenario_validation(kw):
    with pytest.raises(mc.ScenarioError):
        _scenario(**kw)


def test_fast_regime_allows_average_energy_detectors():
    sc = _scenario(regime="fast", detectors=("aed_gaussian",), trials=1000)
    out, _ = mc.run_point(sc, 0)
    assert set(out) == {"aed_gaussian"}


def test_full_grid_sparse_behaves_like_rayleigh():
    c = make_conventional_pam(4)
    sn2 = 10 ** (-0.6)
    M = 12
    fixed = [det.aed_bayesian_thresholds(1.0, sn2, c, M)]
    counts, n = mc.simulate_counts(c, Sparse(M, M), M, sn2, np.uint64(5), 60_000, fixed, False, False)
    rate = counts[0].sum() / n.sum()
    ref = ser.aed_exact_ser(1.0, sn2, c, M, fixed[0]).average
    assert abs(rate - ref) < 4 * math.sqrt(ref * (1 - ref) / n.sum())
