import numpy as np
import pytest

from frontlab.cli import tanh_front_error
from frontlab.shooting import PLATEAU, TURN, c_dagger_shooting, plateau_front, shoot_1d

C_DAG = 9.0 / np.sqrt(10.0)


def test_connecting_speed_between_the_upper_equilibria(bistable):
    c = c_dagger_shooting(bistable, 0.5, 1.0, (1.0, 5.3))
    assert c == pytest.approx(C_DAG, abs=1e-8)


def test_connecting_speed_bracket_must_straddle(bistable):
    with pytest.raises(ValueError):
        c_dagger_shooting(bistable, 0.5, 1.0, (3.0, 5.0))


def test_exact_heteroclinic(bistable):
    assert tanh_front_error(bistable, C_DAG) <= 1e-5


@pytest.mark.parametrize("v", [0.5, 1.0])
def test_both_plateaus_launch_fronts_at_low_speed(bistable, v):
    res = plateau_front(2.25, bistable, v, z_lo=-60.0)
    assert res.kind == PLATEAU
    prof = res.profile(2.25)
    assert prof.plateau_value == pytest.approx(v, abs=1e-6)
    assert prof.lambda_fit == pytest.approx(0.6096117967977924, rel=0.02)
    assert np.all(np.diff(prof.u[:, 0]) <= 1e-12)


def test_upper_plateau_stalls_at_high_speed(bistable):
    # above the connecting speed the orbit from 1 lands on 1/2 instead of 0
    res = plateau_front(6.0, bistable, 1.0)
    assert res.kind != PLATEAU


def test_trivial_tail_stays_at_the_base_state(bistable):
    res = shoot_1d(2.25, 0.0, 0.0, bistable, v_base=0.5)
    assert res.kind == PLATEAU and res.level == 0.5
