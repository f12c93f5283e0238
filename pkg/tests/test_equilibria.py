import numpy as np
import pytest

from frontlab.cross_section import CrossSectionMesh
from frontlab.equilibria import closest_equilibrium, enumerate_equilibria, energy, smallest_positive


def test_constant_equilibria(bistable, point):
    eqs = enumerate_equilibria(bistable, point)
    assert [e.level for e in eqs] == pytest.approx([0.5, 0.525, 1.0], abs=1e-12)
    assert [e.energy for e in eqs] == pytest.approx([-1 / 24, -0.041565104166666664, -5 / 12], abs=1e-12)
    assert [e.nu_tilde for e in eqs] == pytest.approx([1.0, -0.95, 19.0], abs=1e-9)
    assert [e.is_v1 for e in eqs] == [True, False, False]
    assert not any(e.kink for e in eqs)


def test_smallest_positive(bistable, logistic, point):
    assert smallest_positive(bistable, point) == pytest.approx(0.5)
    assert smallest_positive(logistic, point) == pytest.approx(1.0)


def test_energy_of_zero_and_plateau(bistable, point):
    assert energy(bistable, point, np.zeros(1)) == 0.0
    assert energy(bistable, point, np.array([0.5])) == pytest.approx(-1 / 24)


def test_closest(bistable, point):
    eqs = enumerate_equilibria(bistable, point)
    assert closest_equilibrium(eqs, np.array([0.51])).level == pytest.approx(0.5)


def test_strip_equilibria_solve_the_cross_section_problem(logistic):
    mesh = CrossSectionMesh.strip(0.0, 2.0 * np.pi, 65)
    eqs = enumerate_equilibria(logistic, mesh)
    top = [e for e in eqs if e.resolved]
    assert top and all(e.residual <= 1e-8 for e in top)
    assert all(np.all(e.v > 0) and np.all(e.v < 1) for e in top)
    assert all(e.energy < 0 for e in top)
