"""Dispersion exponents and the characteristic front speeds."""
from __future__ import annotations

import logging
from dataclasses import dataclass, asdict

import numpy as np
from scipy.optimize import brentq

from .cross_section import CrossSectionMesh, principal_eigenpair
from .nonlinearity import ReactionTerm, on_mesh, q_profile

log = logging.getLogger(__name__)


class SubcriticalError(ValueError):
    """c^2 + 4 nu < 0: the linear modes oscillate and no positive tail exists."""


class HypothesisError(ValueError):
    pass


class BadBracketError(ValueError):
    pass


def lambda_pm(c: float, nu: float) -> tuple[float, float]:
    disc = c * c + 4.0 * nu
    if -1e-12 * max(c * c, 1.0) <= disc < 0.0:
        disc = 0.0  # c at the linear threshold up to rounding
    if disc < 0.0:
        raise SubcriticalError(f"c={c} is subcritical for nu={nu}")
    r = np.sqrt(disc)
    return (c - r) / 2.0, (c + r) / 2.0


def discrete_symbol(lam, c: float, dz: float):
    """Value D with L_h e^{-lam z} = D e^{-lam z} for the weighted z-stencil.

    Tends to lam^2 - c lam as dz -> 0.
    """
    s = 0.5 * c * dz
    return (np.exp(s) * np.expm1(-lam * dz) + np.exp(-s) * np.expm1(lam * dz)) / dz**2


def discrete_lambda_minus(c: float, nu: float, dz: float) -> float:
    """Slow decay rate solving D(lam) = nu exactly on the grid."""
    lam0, lam1 = lambda_pm(c, nu)
    g = lambda lam: discrete_symbol(lam, c, dz) - nu
    mid = 0.5 * (lam0 + lam1)
    lo = 0.0 if nu < 0 else -abs(lam0) - 1.0
    if g(lo) * g(mid) > 0:
        return lam0
    return brentq(g, lo, mid, xtol=1e-15, rtol=1e-15)


def linear_potential(term: ReactionTerm, mesh: CrossSectionMesh, u: float = 0.0) -> np.ndarray:
    t = on_mesh(term, mesh)
    v = np.asarray(t.fu(u), dtype=float)
    return np.full(mesh.n_unknowns, float(v)) if v.ndim == 0 else v.reshape(-1)


def principal_nu0(term, mesh):
    return principal_eigenpair(mesh, linear_potential(term, mesh))


def nu_hat(term, mesh) -> float:
    return principal_eigenpair(mesh, q_profile(term, mesh)).nu


def threshold_speeds(term: ReactionTerm, mesh: CrossSectionMesh) -> tuple[float, float]:
    """(c0, c_sharp) from the principal eigenvalues with potentials f_u(0,.) and q."""
    nu0 = principal_nu0(term, mesh).nu
    if nu0 >= 0.0:
        raise HypothesisError(f"hypothesis (U) fails: nu0 = {nu0} >= 0")
    nuh = nu_hat(term, mesh)
    if nuh >= 0.0 or nuh > nu0 + 1e-12:
        raise RuntimeError(f"internal error: nu_hat={nuh} inconsistent with nu0={nu0}")
    return float(2.0 * np.sqrt(-nu0)), float(2.0 * np.sqrt(-nuh))


@dataclass
class SpeedReport:
    c0: float
    c_sharp: float
    c_star: float | None = None
    c_star_bracket: tuple[float, float] | None = None
    c1_star: float | None = None
    c1_star_bracket: tuple[float, float] | None = None
    c_dag_v1: float | None = None
    c_dag_bracket: tuple[float, float] | None = None
    c_dag_shooting: float | None = None

    def as_dict(self) -> dict:
        d = asdict(self)
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}

    def check_ordering(self, slack: float = 0.0) -> list[str]:
        bad = []
        if self.c0 > self.c_sharp + slack:
            bad.append("c0 > c_sharp")
        if self.c_star is not None:
            if not self.c0 - slack <= self.c_star <= self.c_sharp + slack:
                bad.append("c_star outside [c0, c_sharp]")
            if self.c1_star is not None and self.c1_star > self.c_star + slack:
                bad.append("c1_star > c_star")
        return bad


def estimate_threshold(
    term: ReactionTerm,
    mesh: CrossSectionMesh,
    band: tuple[float, float],
    bracket: tuple[float, float],
    tol: float = 0.02,
    **probe_kw,
) -> tuple[float, tuple[float, float]]:
    """Bisection on c for inf Phi_c (relative to the constant state band[0]) < 0.

    Returns the bracket midpoint and the final bracket, whose width is <= tol.
    """
    from .front_solver import probe_negative

    lo, hi = map(float, bracket)
    below_lo = probe_negative(lo, term, mesh, band, **probe_kw)
    below_hi = probe_negative(hi, term, mesh, band, **probe_kw)
    if below_lo == below_hi or not below_lo:
        raise BadBracketError(
            f"bracket ({lo}, {hi}) does not straddle the threshold "
            f"(negative infimum at ends: {below_lo}, {below_hi})"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if probe_negative(mid, term, mesh, band, **probe_kw):
            lo = mid
        else:
            hi = mid
        log.info("threshold bracket for band %s: (%.6f, %.6f)", band, lo, hi)
    return float(0.5 * (lo + hi)), (float(lo), float(hi))


def estimate_c_star(term, mesh, band=(0.0, 1.0), bracket=None, tol=0.02, **kw):
    if bracket is None:
        c0, cs = threshold_speeds(term, mesh)
        bracket = (0.75 * c0, cs + 0.25)
    return estimate_threshold(term, mesh, band, bracket, tol, **kw)


def speed_report(term, mesh, v1=None, brackets=None, tol=0.02, with_thresholds=True, **kw):
    """Assemble c0, c_sharp and, if requested, c*, c1*, c_dag_{v1}."""
    from .equilibria import smallest_positive

    brackets = brackets or {}
    c0, cs = threshold_speeds(term, mesh)
    rep = SpeedReport(float(c0), float(cs))
    if not with_thresholds:
        return rep
    top = 1.0
    rep.c_star, rep.c_star_bracket = estimate_threshold(
        term, mesh, (0.0, top), brackets.get("c_star", (0.75 * c0, cs + 0.25)), tol, **kw
    )
    if v1 is None:
        v1 = smallest_positive(term, mesh)
    if v1 is not None and mesh.dim == 0 and v1 < 1.0:
        rep.c1_star, rep.c1_star_bracket = estimate_threshold(
            term, mesh, (0.0, v1), brackets.get("c1_star", (0.75 * c0, cs + 0.25)), tol, **kw
        )
        try:
            rep.c_dag_v1, rep.c_dag_bracket = estimate_threshold(
                term, mesh, (v1, top), brackets.get("c_dag", (0.5 * c0, cs + 0.25)), tol / 2, **kw
            )
        except BadBracketError:
            rep.c_dag_v1 = None
        from .shooting import c_dagger_shooting

        try:
            rep.c_dag_shooting = c_dagger_shooting(term, v1, top, brackets.get("c_dag", (0.5 * c0, cs + 0.25)))
        except ValueError:
            rep.c_dag_shooting = None
    return rep
