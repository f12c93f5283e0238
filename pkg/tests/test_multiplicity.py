import numpy as np
import pytest

from frontlab.multiplicity import (
    MULTIPLE, UNIQUE_CERTIFIED, UNIQUE_OBSERVED, UNKNOWN, CertificationError, classify,
    expected_regime, front_census,
)
from frontlab.speeds import SpeedReport

SP = SpeedReport(2.0, 5.04, c_star=2.0, c1_star=2.0, c_dag_v1=2.846)


def mat(*off):
    n = int(round((1 + np.sqrt(1 + 8 * len(off))) / 2))
    d = np.zeros((n, n))
    d[np.triu_indices(n, 1)] = off
    return d + d.T


def test_expected_regimes():
    assert expected_regime(2.25, SP) == MULTIPLE
    assert expected_regime(6.0, SP) == UNIQUE_CERTIFIED
    assert expected_regime(4.0, SP) == UNKNOWN


def test_two_clusters_below_the_uniqueness_speed():
    regime, _ = classify(2.25, SP, mat(0.4, 1e-8, 0.4))
    assert regime == MULTIPLE


def test_agreeing_fronts():
    assert classify(6.0, SP, mat(1e-8, 2e-8, 1e-8))[0] == UNIQUE_CERTIFIED
    assert classify(4.0, SP, mat(1e-8))[0] == UNIQUE_OBSERVED


def test_grey_zone_is_unknown():
    regime, notes = classify(4.0, SP, mat(1e-4))
    assert regime == UNKNOWN and notes


def test_distinct_fronts_above_the_uniqueness_speed_are_an_error():
    with pytest.raises(CertificationError):
        classify(6.0, SP, mat(0.3))


def test_empty_census():
    assert classify(3.0, SP, np.zeros((0, 0)))[0] == UNKNOWN


def test_logistic_census_is_certified(logistic, point):
    rep = front_census(2.5, logistic, point)
    assert rep.regime == UNIQUE_CERTIFIED
    assert rep.plateaus == pytest.approx([1.0])
    assert np.max(rep.distances) <= 1e-6


def test_census_is_idempotent(logistic, point):
    a = front_census(2.5, logistic, point, config={"b_scan": False})
    b = front_census(2.5, logistic, point, config={"b_scan": False})
    assert a.regime == b.regime
    assert np.array_equal(a.distances, b.distances)
