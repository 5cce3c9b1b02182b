import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from bnsynth import special
from bnsynth.dataset import BinaryDataset, ParentConfig
from bnsynth.utility import (
    Interval,
    StatisticSpec,
    UndefinedStatistic,
    chi2_independence,
    conditional_mle,
    overlap_measure,
    pearson_statistic,
    s2_combine,
    wald_ci,
)


def rows_with(n_j, z_j, extra=0):
    """Column 0 is the conditioning variable (0 on ``n_j`` rows), column 1 the target."""
    cells = [[0, 1]] * z_j + [[0, 0]] * (n_j - z_j) + [[1, 1]] * extra
    return BinaryDataset(np.array(cells))


def test_conditional_mle():
    data = rows_with(10, 3, extra=4)
    assert conditional_mle(data, 1, ParentConfig((0,), (0,))) == pytest.approx(0.3)
    ones = BinaryDataset(np.ones((5, 1), dtype=int))
    assert conditional_mle(ones, 0, ParentConfig((), ())) == 1.0
    with pytest.raises(UndefinedStatistic):
        conditional_mle(rows_with(3, 1), 1, ParentConfig((0,), (1,)))


def test_wald():
    ci = wald_ci(50, 100)
    assert (ci.low, ci.high) == pytest.approx((0.402, 0.598), abs=5e-4)
    assert wald_ci(50, 100, 0.98).width / 2 == pytest.approx(0.116317, abs=1e-6)
    z = wald_ci(0, 10)
    assert (z.low, z.high) == (0.0, 0.0)


def test_overlap():
    a = Interval(0.2, 0.4, 0.95)
    assert overlap_measure(a, a) == 1.0
    assert overlap_measure(a, Interval(0.3, 0.5, 0.95)) == pytest.approx(0.5)
    assert overlap_measure(Interval(0.1, 0.2, 0.95), Interval(0.3, 0.4, 0.95)) == 0.0
    with pytest.raises(UndefinedStatistic):
        overlap_measure(Interval(0, 0, 0.95), Interval(0, 0, 0.95))


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_overlap_bounded_and_symmetric(a, b, c, e):
    i1 = Interval(min(a, b), max(a, b), 0.95)
    i2 = Interval(min(c, e), max(c, e), 0.95)
    if i1.width + i2.width == 0:
        return
    v = overlap_measure(i1, i2)
    assert 0 <= v <= 1
    assert v == overlap_measure(i2, i1)


def test_pearson():
    assert pearson_statistic(np.array([[10, 10], [10, 10]])) == 0.0
    stat = pearson_statistic(np.array([[20, 10], [10, 20]]))
    assert stat == pytest.approx(60 * (400 - 100) ** 2 / 30**4)
    assert special.chi2_sf(stat) == pytest.approx(0.009823, abs=5e-7)
    with pytest.raises(UndefinedStatistic):
        pearson_statistic(np.array([[5, 5], [0, 0]]))


def test_chi2_on_data():
    cells = [[0, 0]] * 20 + [[0, 1]] * 10 + [[1, 0]] * 10 + [[1, 1]] * 20
    data = BinaryDataset(np.array(cells))
    assert chi2_independence(data, 0, 1) == pytest.approx(oracles.chi2_sf_1(60 * 300**2 / 30**4), abs=1e-12)
    with pytest.raises(ValueError):
        chi2_independence(data, 1, 1)


def test_s2_combine():
    point, ci = s2_combine([0.1, 0.2, 0.3, 0.4, 0.5])
    assert point == pytest.approx(0.3)
    assert ci.width / 2 == pytest.approx(0.264942, abs=1e-5)
    p, flat = s2_combine([0.5] * 5)
    assert (p, flat.width) == (0.5, 0.0)
    assert s2_combine([0.1, 0.2, 0.3, 0.4, 0.5], level=0)[1].width == 0
    with pytest.raises(ValueError):
        s2_combine([0.1, 0.2])


def test_statistic_parsing():
    names = ("X1", "X2", "X3")
    s = StatisticSpec.parse("mle:X2|X1=0", names)
    assert (s.kind, s.node, s.event) == ("conditional_mle", 1, ParentConfig((0,), (0,)))
    assert s.label == "mle[1|0=0]"
    assert StatisticSpec.parse("chi2:0,2", names).pair == (0, 2)
    assert StatisticSpec.parse("overlap:X3|X2=1,X1=0@0.9", names).event == ParentConfig((0, 1), (0, 1))
    for bad in ("mle:X9|X1=0", "foo:X1", "chi2:X1,X1", "mle:X1|X1=0"):
        with pytest.raises(ValueError):
            StatisticSpec.parse(bad, names)


def test_overlap_statistic_is_one_on_original():
    data = rows_with(10, 3, extra=4)
    s = StatisticSpec.parse("overlap:1|0=0")
    assert s.original_value(data) == 1.0


def test_special_functions_grid():
    pts = oracles.special_grid()
    assert len(pts) == 50
    for name, *args in pts:
        ours = getattr(special, name)(*args)
        ref = oracles.special_reference(name, *args)
        assert abs(ours - ref) <= 1e-8 * max(1.0, abs(ref)), (name, args, ours, ref)


def test_oracle_reproduces_published_values():
    for (name, *args), value in oracles.PUBLISHED.items():
        assert getattr(oracles, name)(*args) == pytest.approx(value, abs=1e-9)
