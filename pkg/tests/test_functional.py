import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frontlab.aux_front import build_w, select_parameters
from frontlab.cross_section import CrossSectionMesh
from frontlab.front_solver import default_grid, monotone_rearrangement
from frontlab.functional import FrontFunctional
from frontlab.nonlinearity import example61, linear_decay
from frontlab.zgrid import ZGrid

POINT = CrossSectionMesh.point()


def smooth_field(rng, z, n_bumps=4, amp=0.3):
    h = np.zeros_like(z)
    for _ in range(n_bumps):
        c0, wdt = rng.uniform(-6.0, 4.0), rng.uniform(0.5, 3.0)
        h += rng.uniform(-amp, amp) * np.exp(-((z - c0) / wdt) ** 2)
    return h


@given(seed=st.integers(0, 2**31 - 1), c=st.floats(0.5, 6.0))
@settings(max_examples=60, deadline=None)
def test_weighted_poincare(seed, c):
    grid = ZGrid.covering(-15.0, 15.0, 0.05)
    F = FrontFunctional(linear_decay(), POINT, grid, c, np.zeros(grid.n))
    h = np.abs(smooth_field(np.random.default_rng(seed), grid.z))[:, None]
    h[-1] = 0.0
    # f = -u: Psi = D(h)/2 + |h|^2/2 with D(h) >= c^2/4 |h|^2
    lhs = F.value(h)
    rhs = 0.5 * (0.25 * c * c + 1.0) * F.norm2(h)
    assert lhs >= rhs * (1.0 - 1e-12)


@pytest.fixture(scope="module")
def setup():
    term = example61()
    c = 2.25
    a, d = select_parameters(c, term, POINT)
    grid = default_grid(c, term, POINT, 0.05, a=a)
    aux = build_w(c, term, POINT, grid, params=(a, d))
    return term, c, aux, FrontFunctional(term, POINT, grid, c, aux.w)


def admissible(F, rng, margin=0.0):
    """Random u = w + h in [0, 1], perturbed only where the weight e^{cz} is moderate."""
    z = F.grid.z
    w = F.w[:, 0]
    front = 0.6 * 0.5 * (1.0 + np.tanh(-(z + 3.0)))
    bumps = smooth_field(rng, z, amp=0.1) * (z < 1.0)
    u = np.clip(np.maximum(front, w) + bumps, 0.0, 1.0)
    u = np.where(z < 1.0, np.clip(u, margin, 1.0 - margin), u)
    return F.h_of(u[:, None])


def test_gradient_matches_finite_differences(setup):
    _, _, _, F = setup
    rng = np.random.default_rng(3)
    h = admissible(F, rng, margin=0.05)
    g = F.euclidean_gradient(h)
    for _ in range(10):
        d = (smooth_field(rng, F.grid.z, amp=1.0) * (F.grid.z < 1.0))[:, None]
        eps = 1e-5
        fd = (F.value(h + eps * d) - F.value(h - eps * d)) / (2 * eps)
        an = float(np.sum(g * d))
        assert abs(fd - an) <= 1e-5 * abs(an)


def test_metric_gradient_is_zero_at_an_exact_solution():
    grid = ZGrid.covering(-10.0, 10.0, 0.05)
    F = FrontFunctional(linear_decay(), POINT, grid, 3.0, np.zeros(grid.n))
    assert np.max(np.abs(F.gradient(np.zeros((grid.n, 1))))) == 0.0


def test_energy_is_submodular(setup):
    """Psi(min(u, v)) + Psi(max(u, v)) <= Psi(u) + Psi(v): the edge terms are submodular
    and the node terms are local."""
    _, _, _, F = setup
    rng = np.random.default_rng(11)
    for _ in range(20):
        u, v = F.u_of(admissible(F, rng)), F.u_of(admissible(F, rng))
        val = lambda x: F.value(F.h_of(x))
        lhs = val(np.minimum(u, v)) + val(np.maximum(u, v))
        rhs = val(u) + val(v)
        assert lhs <= rhs + 1e-10 * (1.0 + abs(rhs))


@given(seed=st.integers(0, 2**31 - 1))
@settings(max_examples=30, deadline=None)
def test_rearrangement_is_idempotent_and_fixes_decreasing_profiles(seed):
    rng = np.random.default_rng(seed)
    u = rng.uniform(size=(50, 3))
    r = monotone_rearrangement(u)
    assert np.all(np.diff(r, axis=0) <= 0.0)
    assert np.array_equal(monotone_rearrangement(r), r)
    assert np.allclose(np.sort(r, axis=0), np.sort(u, axis=0))
