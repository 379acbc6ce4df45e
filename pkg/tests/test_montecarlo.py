import json
import math

import numpy as np
import pytest
from scipy import stats

from nstable import DomainError, PgfSpec, SamplerTruncationError
from nstable.distributions import Empirical, Exponential, ParetoIII, Uniform01
from nstable.montecarlo import (
    SimConfig,
    _sibuya_sf,
    analytic_transform,
    ks_critical_value,
    ks_distance,
    run_simulation,
    sample_count,
    simulate_extreme,
)


def _freq_ok(counts, k, prob, z=5.0):
    n = counts.size
    return abs(np.mean(counts == k) - prob) <= z * math.sqrt(prob * (1 - prob) / n)


@pytest.mark.parametrize("method", ["auto", "pmf"])
@pytest.mark.parametrize("p", [0.25, 0.5, 0.75])
def test_geometric_counts(p, method):
    c = sample_count(PgfSpec.geometric(p), 1, 200_000, method=method)
    for k in (1, 2, 3, 5):
        assert _freq_ok(c, k, p * (1 - p) ** (k - 1))
    assert c.min() >= 1


def test_harris_counts():
    c = sample_count(PgfSpec.harris(2, 2), 2, 200_000)
    # P(N = 1) = Q'(0) = u^(-1/j); P(N = 3) = (1/j) (1 - 1/u) u^(-1/j)
    assert _freq_ok(c, 1, 2 ** -0.5)
    assert _freq_ok(c, 3, 0.5 * 0.5 * 2 ** -0.5)
    assert np.all(c % 2 == 1)
    pmf = sample_count(PgfSpec.harris(2, 2), 2, 200_000, method="pmf")
    assert stats.ks_2samp(c, pmf).pvalue > 1e-4


def test_sibuya_tail_against_recursion():
    # pmf p_1 = g, p_k = p_{k-1} (k - 1 - g) / k
    g = 0.5
    k = np.arange(1, 200)
    pmf = np.empty(k.size)
    pmf[0] = g
    for i in range(1, k.size):
        pmf[i] = pmf[i - 1] * (k[i] - 1 - g) / k[i]
    assert np.max(np.abs(_sibuya_sf(k.astype(float), g) - (1 - np.cumsum(pmf)))) <= 1e-12


def test_shaked_counts():
    c = sample_count(PgfSpec.shaked(2), 3, 200_000)
    # 1 - sqrt(1 - s^2) = s^2/2 + s^4/8 + ...
    assert _freq_ok(c, 2, 0.5)
    assert _freq_ok(c, 4, 0.125)
    assert np.all(c % 2 == 0)


def test_counts_deterministic():
    a = sample_count(PgfSpec.shaked(3), 9, 1000)
    assert np.array_equal(a, sample_count(PgfSpec.shaked(3), 9, 1000))


def test_formal_member_not_sampled():
    with pytest.raises(DomainError):
        sample_count(PgfSpec.geometric(2.0), 0, 10)


def test_heavy_tail_pmf_sampler_refuses():
    with pytest.raises(SamplerTruncationError):
        sample_count(PgfSpec.shaked(2), 0, 10, method="pmf")


def test_explicit_cap_raises():
    cfg = SimConfig(PgfSpec.shaked(2), Uniform01(), kind="Max", trials=20_000, seed=0,
                    reduction="explicit")
    with pytest.raises(SamplerTruncationError):
        simulate_extreme(cfg)


def test_ks_distance_matches_scipy():
    x = Exponential(1.0).sample(5000, seed=4)
    ours = ks_distance(Empirical(x), Exponential(1.0))
    assert ours == pytest.approx(stats.kstest(x, stats.expon.cdf).statistic, abs=1e-15)


def test_ks_critical_value():
    assert ks_critical_value(10_000, 0.05) == pytest.approx(1.358 / 100, abs=1e-4)


@pytest.mark.parametrize("kind", ["Max", "Min"])
@pytest.mark.parametrize("pgf", [PgfSpec.geometric(0.5), PgfSpec.harris(2, 2),
                                 PgfSpec.shaked(2)], ids=repr)
def test_simulation_agrees_with_transform(pgf, kind):
    cfg = SimConfig(pgf, ParetoIII(2.0), kind=kind, trials=50_000, seed=21)
    res = run_simulation(cfg)
    assert res.ks <= cfg.ks_tolerance
    assert res.ks <= 2 * res.critical_value


def test_mixture_uses_pmf_sampler():
    mix = PgfSpec.mixture(0.4, PgfSpec.geometric(0.5), PgfSpec.harris(2, 1))
    res = run_simulation(SimConfig(mix, Uniform01(), kind="Min", trials=50_000, seed=8))
    assert res.passed


def test_order_statistic_shortcut_matches_explicit():
    base = dict(pgf=PgfSpec.geometric(0.1), dist=Exponential(1.0), kind="Max",
                trials=40_000)
    explicit = simulate_extreme(SimConfig(**base, seed=1, reduction="explicit"))
    shortcut = simulate_extreme(SimConfig(**base, seed=2, explicit_limit=1))
    assert stats.ks_2samp(explicit.samples, shortcut.samples).pvalue > 1e-4


def test_deterministic_across_workers():
    cfg = SimConfig(PgfSpec.harris(2, 2), Uniform01(), kind="Min", trials=30_000, seed=5)
    a = simulate_extreme(cfg, workers=1).samples
    assert np.array_equal(a, simulate_extreme(cfg, workers=4).samples)
    assert np.array_equal(a, simulate_extreme(cfg, workers=1).samples)
    other = SimConfig(PgfSpec.harris(2, 2), Uniform01(), kind="Min", trials=30_000, seed=6)
    assert not np.array_equal(a, simulate_extreme(other).samples)


def test_config_validation():
    with pytest.raises(DomainError):
        SimConfig(PgfSpec.geometric(0.5), Uniform01(), trials=0)
    with pytest.raises(DomainError):
        SimConfig(PgfSpec.geometric(0.5), Uniform01(), kind="median")


def test_config_roundtrip():
    cfg = SimConfig(PgfSpec.shaked(2), ParetoIII(2.0), kind="min", trials=1000, seed=3)
    assert cfg.kind == "Min"
    assert SimConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


def test_result_written(tmp_path):
    cfg = SimConfig(PgfSpec.geometric(0.5), Uniform01(), trials=2000, seed=1)
    res = run_simulation(cfg)
    paths = res.write(tmp_path)
    rep = json.loads(open(paths["report"]).read())
    assert rep["ks_distance"] == res.ks
    assert Empirical.from_csv(paths["samples"]).n == 2000
    assert analytic_transform(cfg).cdf(0.5) == pytest.approx(1 / 3)
