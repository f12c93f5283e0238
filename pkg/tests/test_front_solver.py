import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frontlab.cross_section import CrossSectionMesh
from frontlab.front_solver import (
    FrontProfile, build_variational_front, compare_fronts, extract_decay, level_position,
    probe_negative, richardson, z_derivative_max,
)
from frontlab.nonlinearity import example61, kpp

from front_checks import strictly_inside

POINT = CrossSectionMesh.point()


def synthetic(z, shift=0.0):
    u = 0.5 * (1.0 - np.tanh(z - shift))
    return FrontProfile(z=z, u=u[:, None], c=2.5, psi0=np.ones(1))


@given(k=st.floats(-10.0, 10.0))
@settings(max_examples=30, deadline=None)
def test_alignment_removes_translations(k):
    z = np.arange(-30.0, 30.0 + 1e-9, 0.05)
    p1, p2 = synthetic(z), synthetic(z, shift=k * 0.05 * 3.7 / 10.0 + 3.7 * 0.05)
    assert compare_fronts(p1, p2) <= 1e-6


def test_level_position_of_a_tanh():
    z = np.arange(-10.0, 10.0, 0.02)
    assert level_position(synthetic(z, 1.234), 0.25) == pytest.approx(1.234 + np.arctanh(0.5), abs=1e-7)


def test_decay_fit_is_exact_on_exponentials():
    z = np.arange(0.0, 60.0, 0.02)
    p = FrontProfile(z=z, u=(0.3 * np.exp(-0.7 * z))[:, None], c=2.0, psi0=np.ones(1))
    a, lam = extract_decay(p)
    assert a == pytest.approx(0.3, rel=1e-10)
    assert lam == pytest.approx(0.7, rel=1e-12)


def test_extrapolation_cancels_the_second_order_term():
    zc = np.arange(0.0, 1.0 + 1e-12, 0.1)
    zf = np.arange(0.0, 1.0 + 1e-12, 0.05)
    exact = lambda z: np.sin(z)
    pc = FrontProfile(z=zc, u=(exact(zc) + 0.01 * zc)[:, None], c=1.0, psi0=np.ones(1))
    pf = FrontProfile(z=zf, u=(exact(zf) + 0.0025 * zf)[:, None], c=1.0, psi0=np.ones(1))
    r = richardson(pc, pf)
    assert np.allclose(r.u[:, 0], exact(zc), atol=1e-14)
    with pytest.raises(ValueError):
        richardson(pc, pc)


@pytest.fixture(scope="module")
def fronts():
    t = example61()
    return {band: build_variational_front(2.25, t, POINT, (0.0, band)) for band in (0.5, 1.0)}


@pytest.mark.parametrize("band", [0.5, 1.0])
def test_fronts_at_low_speed(fronts, band):
    p = fronts[band]
    assert p.plateau_value == pytest.approx(band, abs=1e-6)
    assert p.residual_inf <= 1e-7
    assert z_derivative_max(p) <= 1e-8
    assert strictly_inside(p)
    assert p.lambda_fit == pytest.approx(0.6096117967977924, rel=0.02)


def test_the_two_low_speed_fronts_differ(fronts):
    assert compare_fronts(fronts[0.5], fronts[1.0]) > 0.1


def test_energy_probe_brackets_the_logistic_speed():
    t = kpp()
    assert probe_negative(1.8, t, POINT, (0.0, 1.0))
    assert not probe_negative(2.2, t, POINT, (0.0, 1.0))
