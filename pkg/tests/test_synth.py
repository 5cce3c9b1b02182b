import json

import numpy as np
import pytest

from bnsynth.dag import Dag
from bnsynth.dataset import BinaryDataset, load_csv
from bnsynth.experiments import get_scenario
from bnsynth.mcmc import ChainOutput, McmcConfig, run_chain
from bnsynth.rng import generator
from bnsynth.score import HyperParams, PriorSpec
from bnsynth.synth import (
    ThetaAssignment,
    ancestral_sample,
    chain_from_distribution,
    hpd_interval,
    posterior_predictive,
    release_output,
    s2_pipeline,
    sample_theta,
)
from bnsynth.utility import StatisticSpec, UndefinedStatistic
from conftest import random_dataset

H = HyperParams()


def fixed_chain(dag, m, names=(), seed=0):
    cfg = McmcConfig(iterations=m, burn_in=0, lag=1, seed=seed)
    return ChainOutput(cfg, dag.d, [dag] * m, [0.0] * m, tuple(names))


def test_theta_beta_mean():
    # node 1 under X0 = 0 has n_j = 10, z_j = 3
    cells = [[0, 1]] * 3 + [[0, 0]] * 7 + [[1, 1]] * 2
    data = BinaryDataset(np.array(cells))
    g = Dag.from_edges(2, [(0, 1)])
    gen = generator(0)
    draws = np.array([sample_theta(g, data, H, gen).tables[1][0] for _ in range(20_000)])
    se = np.sqrt(4 * 8 / (12**2 * 13) / draws.size)
    assert abs(draws.mean() - 4 / 12) < 3 * se


def test_theta_unseen_config_is_uniform():
    data = BinaryDataset(np.array([[1, 0]] * 5))
    g = Dag.from_edges(2, [(0, 1)])
    gen = generator(1)
    draws = np.array([sample_theta(g, data, H, gen).tables[1][0] for _ in range(20_000)])
    assert draws.mean() == pytest.approx(0.5, abs=0.01)
    assert draws.var() == pytest.approx(1 / 12, abs=0.005)


def test_theta_reproducible():
    data = random_dataset(np.random.default_rng(0), 30, 3)
    g = Dag.from_edges(3, [(0, 1), (1, 2)])
    a = sample_theta(g, data, H, generator(5))
    b = sample_theta(g, data, H, generator(5))
    assert all(np.array_equal(x, y) for x, y in zip(a.tables, b.tables))


def test_ancestral_degenerate_and_marginal():
    g = Dag.from_edges(2, [(0, 1)])
    zeros = ThetaAssignment(g, (np.zeros(1), np.zeros(2)))
    assert ancestral_sample(g, zeros, 50, generator(0)).cells.sum() == 0
    ones = ThetaAssignment(g, (np.ones(1), np.ones(2)))
    assert ancestral_sample(g, ones, 50, generator(0)).cells.min() == 1
    theta = ThetaAssignment(g, (np.array([0.5]), np.array([0.1, 0.9])))
    y = ancestral_sample(g, theta, 100_000, generator(3))
    p = y.cells[:, 1].mean()
    assert abs(p - 0.5) < 3 * np.sqrt(0.25 / 100_000)
    assert y.cells[y.cells[:, 0] == 0, 1].mean() == pytest.approx(0.1, abs=0.01)


def test_theta_table_validation():
    g = Dag.from_edges(2, [(0, 1)])
    with pytest.raises(ValueError):
        ThetaAssignment(g, (np.zeros(1), np.zeros(1)))
    with pytest.raises(ValueError):
        ThetaAssignment(g, (np.array([1.5]), np.zeros(2)))


def test_hpd():
    assert hpd_interval(np.arange(100.0), 0.98) == (0.0, 97.0)
    v = np.r_[np.zeros(98), 50.0, 100.0]
    assert hpd_interval(v, 0.98) == (0.0, 0.0)


def test_predictive_streams_and_threads():
    data = random_dataset(np.random.default_rng(2), 60, 3)
    chain = run_chain(data, H, PriorSpec(), McmcConfig(iterations=600, burn_in=100, lag=5, seed=4))
    specs = [StatisticSpec.parse("mle:1|0=0"), StatisticSpec.parse("chi2:0,2"), StatisticSpec.parse("overlap:2|1=1")]
    a = posterior_predictive(data, chain, H, specs)
    b = posterior_predictive(data, chain, H, specs, threads=4)
    for sa, sb in zip(a.series, b.series):
        assert np.array_equal(sa.values, sb.values, equal_nan=True)
    assert a.M == 100 and a.datasets == []
    kept = posterior_predictive(data, chain, H, specs, keep_datasets=3)
    assert len(kept.datasets) == 3


def test_predictive_fixed_dag_deterministic():
    data = random_dataset(np.random.default_rng(3), 40, 2)
    chain = fixed_chain(Dag.from_edges(2, [(0, 1)]), 50, seed=8)
    spec = [StatisticSpec.parse("mle:1|0=1")]
    a = posterior_predictive(data, chain, H, spec)
    b = posterior_predictive(data, chain, H, spec)
    assert np.array_equal(a.series[0].values, b.series[0].values)


def test_undefined_draws_are_counted():
    # X0 = 1 on a single row, so some synthetic sets never see X0 = 1
    data = BinaryDataset(np.array([[1, 1]] + [[0, 0]] * 30))
    chain = fixed_chain(Dag.empty(2), 200, seed=1)
    res = posterior_predictive(data, chain, H, [StatisticSpec.parse("mle:1|0=1")])
    s = res.series[0]
    assert 0 < s.n_undefined < 200
    assert s.summary()["n_defined"] == 200 - s.n_undefined


def test_predictive_mean_near_truth():
    sc = get_scenario("d3_n5000")
    data = sc.simulate(0)
    chain = run_chain(data, H, PriorSpec(), McmcConfig(iterations=6000, burn_in=1000, lag=5, seed=2))
    res = posterior_predictive(data, chain, H, [StatisticSpec.parse("mle:1|0=0")])
    true_theta = sc.theta_truth.tables[1][0]
    assert abs(res.series[0].mean - true_theta) < 0.05


def test_release_modes(tmp_path):
    data = random_dataset(np.random.default_rng(4), 50, 3)
    chain = run_chain(data, H, PriorSpec(), McmcConfig(iterations=300, burn_in=100, lag=10, seed=1))
    spec = [StatisticSpec.parse("mle:1|0=0")]
    res = posterior_predictive(data, chain, H, spec, keep_datasets=20)
    p1 = release_output(1, tmp_path / "m1", chain)
    dist = json.loads(p1[0].read_text())["distribution"]
    assert sum(dist.values()) == pytest.approx(1.0)
    p2 = release_output(2, tmp_path / "m2", chain, res)
    assert len(p2) == 20
    p3 = release_output(3, tmp_path / "m3", chain, res, subset=5)
    assert [p.name for p in p3] == [f"synthetic_000{i}.csv" for i in range(1, 6)]
    assert load_csv(p3[0]).names == data.names
    p5 = release_output(5, tmp_path / "m5", chain, res)
    summ = json.loads(p5[0].read_text())["summaries"][0]
    assert {"mean", "hpd_low", "hpd_high"} <= summ.keys()
    with pytest.raises(ValueError, match="keep_datasets"):
        release_output(2, tmp_path / "x", chain, posterior_predictive(data, chain, H, spec))
    with pytest.raises(ValueError):
        release_output(3, tmp_path / "x", chain, res, subset=11)


def test_mode1_replay():
    dist = {"000": 0.25, "008": 0.75}
    chain = chain_from_distribution(dist, 3, 4000, seed=3)
    share = sum(g.encode() == "008" for g in chain.samples) / 4000
    assert share == pytest.approx(0.75, abs=0.03)
    with pytest.raises(ValueError):
        chain_from_distribution({"000": 0.5}, 3, 10, seed=0)


def test_s2_pipeline():
    data = random_dataset(np.random.default_rng(6), 200, 3)
    g = Dag.from_edges(3, [(0, 1)])
    chain = fixed_chain(g, 10)
    spec = [StatisticSpec.parse("mle:1|0=0")]
    a = s2_pipeline(data, chain, spec, seed=4)[0]
    b = s2_pipeline(data, chain, spec, seed=4)[0]
    assert a.values == b.values and len(a.values) == 5
    assert a.interval.low <= a.point <= a.interval.high
    sparse = BinaryDataset(np.array([[1, 1]] + [[0, 0]] * 30))
    with pytest.raises(UndefinedStatistic):
        s2_pipeline(sparse, fixed_chain(Dag.empty(2), 3), [StatisticSpec.parse("chi2:0,1")], seed=0)
