"""z-independent equilibria v(y), their energies and transverse stability."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import sparse
from scipy.sparse.linalg import spsolve

from .cross_section import NEUMANN, CrossSectionMesh, principal_eigenpair
from .nonlinearity import ReactionTerm, on_mesh

log = logging.getLogger(__name__)

ROOT_TOL = 1e-12


@dataclass
class Equilibrium:
    v: np.ndarray
    energy: float
    nu_tilde_left: float
    nu_tilde_right: float
    is_v1: bool = False
    resolved: bool = True
    residual: float = 0.0
    notes: list[str] = field(default_factory=list)

    @property
    def level(self) -> float:
        return float(np.min(self.v))

    @property
    def nu_tilde(self) -> float:
        """Stability index; the smaller one-sided value when f_u has a corner at v."""
        return min(self.nu_tilde_left, self.nu_tilde_right)

    @property
    def kink(self) -> bool:
        return abs(self.nu_tilde_left - self.nu_tilde_right) > 1e-12


def _polish(c, r, lo, hi):
    d = P.polyder(c)
    for _ in range(20):
        fp = P.polyval(r, d)
        if fp == 0:
            break
        step = P.polyval(r, c) / fp
        r_new = min(max(r - step, lo), hi)
        if abs(r_new - r) < 1e-16:
            r = r_new
            break
        r = r_new
    return r


def constant_roots(term: ReactionTerm) -> list[float]:
    """All roots of f(v)=0 in (0, 1] for a y-independent term."""
    roots = []
    for c, lo, hi in zip(term.coeffs, term.breakpoints, term.breakpoints[1:]):
        c = np.trim_zeros(np.asarray(c), "b")
        if c.size <= 1:
            if c.size == 0 or c[0] == 0.0:
                raise ValueError("f vanishes on a whole piece; equilibria are not isolated")
            continue
        for r in P.polyroots(c):
            if abs(r.imag) > 1e-9:
                continue
            x = r.real
            if lo - 1e-9 <= x <= hi + 1e-9:
                x = _polish(c, min(max(x, lo), hi), lo, hi)
                if 0.0 < x <= 1.0 and abs(term.f(x)) <= ROOT_TOL:
                    roots.append(float(x))
    out = []
    for r in sorted(roots):
        if not out or r - out[-1] > 1e-10:
            out.append(r)
    return out


def energy(term: ReactionTerm, mesh: CrossSectionMesh, v) -> float:
    """E[v] = int (|grad_y v|^2 / 2 + V(v, y)) dy; V(v) for a point."""
    t = on_mesh(term, mesh)
    v = np.asarray(v, dtype=float).reshape(-1)
    if mesh.dim == 0:
        return float(np.asarray(t.V(v[0])).reshape(-1)[0])
    grad = 0.5 * v @ (mesh.stiffness() @ v)
    return float(grad + mesh.integrate(np.broadcast_to(t.V(v), v.shape)))


def nu_tilde(term, mesh, v) -> tuple[float, float]:
    t = on_mesh(term, mesh)
    v = np.asarray(v, dtype=float).reshape(-1)
    vals = []
    for side in ("left", "right"):
        pot = np.broadcast_to(t.fu(v, side), v.shape).copy()
        vals.append(principal_eigenpair(mesh, pot).nu)
    return vals[0], vals[1]


def equilibrium_residual(term, mesh, v) -> float:
    t = on_mesh(term, mesh)
    v = np.asarray(v, dtype=float).reshape(-1)
    r = np.broadcast_to(t.f(v), v.shape)
    if mesh.dim:
        r = mesh.laplacian() @ v + r
    return float(np.max(np.abs(r)))


def _newton_profile(term, mesh, seed, tol=1e-12, max_iter=60):
    t = on_mesh(term, mesh)
    lap = mesh.laplacian()
    v = np.clip(np.asarray(seed, dtype=float), 0.0, 1.0)
    for _ in range(max_iter):
        F = lap @ v + np.broadcast_to(t.f(v), v.shape)
        if np.max(np.abs(F)) <= tol:
            return v, True
        J = lap + sparse.diags(np.broadcast_to(t.fu(v), v.shape))
        dv = spsolve(J.tocsc(), -F)
        step = 1.0
        while step > 1e-4:
            trial = v + step * dv
            if np.all(trial >= -1e-14) and np.all(trial <= 1 + 1e-14):
                break
            step *= 0.5
        v = np.clip(v + step * dv, 0.0, 1.0)
    F = lap @ v + np.broadcast_to(t.f(v), v.shape)
    return v, bool(np.max(np.abs(F)) <= 1e-8)


def enumerate_equilibria(term: ReactionTerm, mesh: CrossSectionMesh) -> list[Equilibrium]:
    """Positive equilibria, sorted by min v, with the smallest one flagged as v1."""
    t = on_mesh(term, mesh)
    seeds = constant_roots(term) if not term.y_dependent else _seed_levels(term)
    exact_constants = mesh.dim == 0 or (
        not term.y_dependent and mesh.bc_left == NEUMANN and mesh.bc_right == NEUMANN
    )
    found: list[Equilibrium] = []
    for s in seeds:
        notes = []
        if exact_constants:
            v, ok = np.full(mesh.n_unknowns, s), True
        else:
            v, ok = _newton_profile(t, mesh, np.full(mesh.n_unknowns, s))
            if not ok:
                notes.append(f"Newton from constant seed {s:.6g} did not converge")
        if ok and np.max(v) <= 1e-10:
            continue  # collapsed onto the trivial state
        if ok and any(np.max(np.abs(v - e.v)) < 1e-8 for e in found):
            continue
        nl, nr = nu_tilde(t, mesh, v) if ok else (np.nan, np.nan)
        eq = Equilibrium(
            v, energy(t, mesh, v), nl, nr, resolved=ok,
            residual=equilibrium_residual(t, mesh, v), notes=notes,
        )
        if ok and eq.kink:
            eq.notes.append("f_u has a corner at v; both one-sided indices reported")
        found.append(eq)
    found.sort(key=lambda e: e.level)
    for e in found:
        if e.resolved:
            e.is_v1 = True
            break
    return found


def _seed_levels(term):
    # a y-dependent term gets seeds from the roots of each piece's polynomial
    levels = set()
    for c, lo, hi in zip(term.coeffs, term.breakpoints, term.breakpoints[1:]):
        for r in P.polyroots(np.trim_zeros(np.asarray(c), "b")) if len(c) > 1 else []:
            if abs(r.imag) < 1e-9 and lo <= r.real <= hi and r.real > 0:
                levels.add(round(float(r.real), 12))
    return sorted(levels | {1.0})


def smallest_positive(term, mesh) -> float | None:
    """Level of v1 for a point cross-section or constant equilibria."""
    eqs = enumerate_equilibria(term, mesh)
    for e in eqs:
        if e.is_v1:
            return e.level
    return None


def closest_equilibrium(eqs: list[Equilibrium], v) -> Equilibrium | None:
    v = np.asarray(v, dtype=float).reshape(-1)
    best = None
    for e in eqs:
        d = float(np.max(np.abs(e.v - v)))
        if best is None or d < best[0]:
            best = (d, e)
    return None if best is None else best[1]


def write_equilibria_csv(path, eqs: list[Equilibrium]) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write("v_min,v_max,energy,nu_tilde_left,nu_tilde_right,is_v1,resolved\n")
        for e in eqs:
            fh.write(
                f"{np.min(e.v):.17g},{np.max(e.v):.17g},{e.energy:.17g},"
                f"{e.nu_tilde_left:.17g},{e.nu_tilde_right:.17g},{int(e.is_v1)},{int(e.resolved)}\n"
            )
