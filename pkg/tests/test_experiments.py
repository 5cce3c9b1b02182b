import json

import numpy as np
import pytest

from bnsynth.dag import Dag
from bnsynth.experiments import (
    SCENARIO_SEED,
    builtin_scenarios,
    calibrate_gamma,
    get_scenario,
    nondecreasing_until_saturation,
    run_scenario,
)
from bnsynth.exact import exact_posterior
from bnsynth.mcmc import McmcConfig
from bnsynth.score import HyperParams, PriorSpec

SMALL = McmcConfig(iterations=3000, burn_in=500, lag=5)


def test_truth_networks():
    assert Dag.decode(get_scenario("d3_n1000").truth.encode(), 3).edges() == [(0, 1)]
    assert get_scenario("d7_n2000").truth.n_edges == 5
    for s in builtin_scenarios():
        for t in s.theta_truth.tables:
            assert np.all((t >= 0.2) & (t <= 0.8))


def test_unknown_scenario_lists_ids():
    with pytest.raises(KeyError, match="d3_n1000"):
        get_scenario("d9_n1")


def test_replication_data_is_seeded():
    s = get_scenario("d4_n1000")
    assert np.array_equal(s.simulate(2).cells, s.simulate(2).cells)
    assert not np.array_equal(s.simulate(2).cells, s.simulate(3).cells)
    other = get_scenario("d4_n1000", seed=SCENARIO_SEED + 1)
    assert not np.array_equal(s.simulate(2).cells, other.simulate(2).cells)


def test_structure_only_report_is_reproducible():
    s = get_scenario("d3_n500", replications=3)
    a = run_scenario(s, PriorSpec(), HyperParams(), SMALL, methods=())
    b = run_scenario(s, PriorSpec(), HyperParams(), SMALL, methods=(), threads=3)
    assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())
    assert a.csv_rows() == []
    assert all("s1" not in r and "s2" not in r for r in a.replications)
    assert a.summary["chain"]["replications"] == 3


def test_report_with_methods_has_csv_rows():
    s = get_scenario("d3_n500", replications=2)
    rep = run_scenario(s, PriorSpec(), HyperParams(), SMALL, methods=("S1", "S2"))
    rows = rep.csv_rows()
    assert len(rows) == 2 * 2 * len(s.statistics)
    assert rep.to_csv().splitlines()[0] == ",".join(rep.CSV_FIELDS)


def test_calibration_gamma_zero_and_threshold():
    s = get_scenario("d3_n1000", replications=2)
    c = calibrate_gamma(s, [0.0, 1.0, 2.0])
    for r in range(2):
        ep = exact_posterior(s.simulate(r), HyperParams(), PriorSpec())
        assert c.per_replication[r][0] == pytest.approx(ep.by_class[s.truth.equivalence_key()], abs=1e-12)
    assert calibrate_gamma(s, [0.0, 1.0], threshold=1.01).gamma_star is None
    with pytest.raises(ValueError):
        calibrate_gamma(s, [1.0, 0.5])


def test_calibration_mcmc_route_close_to_exact():
    s = get_scenario("d3_n5000", replications=1)
    exact = calibrate_gamma(s, [0.0, 4.0])
    mc = calibrate_gamma(s, [0.0, 4.0], use_mcmc=True, mcmc_config=McmcConfig(iterations=8000, burn_in=1000, block_size=2))
    assert np.allclose(exact.probabilities, mc.probabilities, atol=0.06)


def test_nondecreasing_helper():
    assert nondecreasing_until_saturation([0.1, 0.5, 0.9, 0.9, 0.8])
    assert not nondecreasing_until_saturation([0.1, 0.05, 0.9])
