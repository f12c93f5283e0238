import numpy as np
import pytest

from frontlab.cross_section import CrossSectionMesh
from frontlab.front_solver import FrontProfile
from frontlab.nonlinearity import DomainError, linear_decay
from frontlab.stability import InstabilityError, bump, evolve, fit_rate, predicted_rate

POINT = CrossSectionMesh.point()


def test_predicted_rate_window():
    assert predicted_rate(6.0, 6.0, -6.35) == pytest.approx(5.3, abs=1e-12)
    with pytest.raises(DomainError):
        predicted_rate(6.0, 20.0, -6.35)


def test_rate_fit_on_exact_exponential():
    t = np.linspace(0.0, 1.0, 101)
    assert fit_rate(np.column_stack([t, np.exp(-1.5 * t)])) == pytest.approx(3.0)


def test_bump_is_compactly_supported():
    z = np.linspace(-5.0, 5.0, 1001)
    b = bump(z, 1.0, 2.0, 0.1)
    assert b.max() == pytest.approx(0.1)
    assert np.all(b[np.abs(z - 1.0) >= 2.0] == 0.0)


def flat_state(c):
    z = np.arange(-20.0, 20.0 + 1e-9, 0.1)
    return FrontProfile(z=z, u=np.full((z.size, 1), 0.5), c=c, psi0=np.ones(1))


def test_linear_decay_rate_of_the_weighted_norm():
    # f = -u and c = c' = 2: the tilted equation is omega_t = omega_zz - 2 omega, so its lowest
    # Dirichlet mode decays with norm^2 rate 2 (2 + kappa) with kappa the discrete eigenvalue
    p = flat_state(2.0)
    L, dz = p.z[-1] - p.z[0], p.dz
    k = np.pi / L
    mode = np.sin(k * (p.z - p.z[0]))
    w0 = 1e-12 * np.exp(-p.z) * mode
    st = evolve(p, w0, 2.0, 0.004, 2.0, linear_decay(), POINT, record_every=5)
    kappa = (2.0 / dz * np.sin(0.5 * k * dz)) ** 2
    per_step = 1.0 - 0.004 * (2.0 + kappa)  # explicit Euler amplification of that mode
    assert st.sigma_measured == pytest.approx(-2.0 * np.log(per_step) / 0.004, rel=1e-6)
    assert st.clip_events == 0


def test_zero_perturbation_stays_zero():
    p = flat_state(2.0)
    st = evolve(p, np.zeros(p.z.size), 2.0, 0.004, 0.5, linear_decay(), POINT)
    assert np.all(st.omega == 0.0)
    assert np.all(st.history[:, 1] == 0.0)


def test_time_step_limit():
    p = flat_state(2.0)
    with pytest.raises(ValueError):
        evolve(p, np.zeros(p.z.size), 2.0, 0.01, 0.1, linear_decay(), POINT)


def test_growth_is_reported():
    # c' far from c makes the tilted shift strongly positive
    p = flat_state(0.0)
    with pytest.raises(InstabilityError):
        evolve(p, bump(p.z, 0.0, 5.0, 1e-6), -8.0, 0.004, 5.0, linear_decay(), POINT, growth_limit=10.0)
