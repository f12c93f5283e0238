"""Auxiliary front w: explicit barriers, monotone iteration and cutoff.

w vanishes for z < 2, solves the travelling-wave equation for z > 3 and has
the exponential tail a psi_0(y) e^{-lambda_- z}.  It only serves to
renormalize the weighted energy, so any admissible choice works; the rule used
to pick a and delta is recorded in the returned object.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .cross_section import CrossSectionMesh
from .nonlinearity import ReactionTerm, check_hypotheses, on_mesh, u_samples
from .speeds import SubcriticalError, discrete_lambda_minus, lambda_pm, principal_nu0
from .zgrid import ZGrid, field_operator, pde_residual, smoothstep5

log = logging.getLogger(__name__)

CUTOFF = (2.0, 3.0)


class IterationOrderError(RuntimeError):
    """The monotone iteration left the band between the barriers."""


@dataclass
class AuxiliaryFront:
    c: float
    grid: ZGrid
    w: np.ndarray
    a: float
    delta: float
    lambda_minus: float
    lambda_discrete: float
    psi0: np.ndarray
    nu0: float
    boundary_scale: float = 2.0
    iterations: int = 0
    shift: float = 0.0
    cutoff: tuple[float, float] = CUTOFF
    metadata: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "c": self.c,
            "a": self.a,
            "delta": self.delta,
            "lambda_minus": self.lambda_minus,
            "lambda_discrete": self.lambda_discrete,
            "nu0": self.nu0,
            "boundary_scale": self.boundary_scale,
            "iterations": self.iterations,
            "shift": self.shift,
            "cutoff": list(self.cutoff),
            "grid": self.grid.as_dict(),
            **self.metadata,
        }


def select_parameters(c: float, term: ReactionTerm, mesh: CrossSectionMesh, n_samples: int = 10_000):
    """Pick (a, delta) so the barrier brackets stay at least half positive.

    delta = min(gamma lambda_-, c - 2 lambda_-) / 2, and a from
    k a^gamma 2^{1+gamma} / (delta (c - 2 lambda_- - delta)) <= 1/2 with k the
    larger of the two Holder constants; finally 2 a max(psi_0) <= 1.
    """
    pair = principal_nu0(term, mesh)
    if c * c + 4.0 * pair.nu <= 0.0:
        raise SubcriticalError(f"c={c} does not exceed c0={2*np.sqrt(max(-pair.nu, 0.0))}")
    lam, _ = lambda_pm(c, pair.nu)
    rep = check_hypotheses(term, mesh, n_samples)
    gamma = term.holder_gamma
    delta = 0.5 * min(gamma * lam, c - 2.0 * lam)
    k = max(rep.k_bar, rep.k_under, 1e-300)
    a = (delta * (c - 2.0 * lam - delta) / (2.0 ** (2.0 + gamma) * k)) ** (1.0 / gamma)
    a = min(a, 0.5 / float(np.max(pair.psi)))
    return float(a), float(delta)


def build_bounds(c, a, delta, term, mesh, grid: ZGrid, lam=None, psi0=None):
    """Sub- and supersolution a psi_0 e^{-lam z} (1 -/+ e^{-delta z}) for z >= 0, zero for z < 0.

    lam defaults to the rate that solves the discrete dispersion relation on the
    grid, so the one-signed residuals hold for the discrete operator too.
    """
    if psi0 is None or lam is None:
        pair = principal_nu0(term, mesh)
        psi0 = pair.psi if psi0 is None else psi0
        lam = discrete_lambda_minus(c, pair.nu, grid.dz) if lam is None else lam
    z = grid.z
    zp = np.maximum(z, 0.0)
    base = a * np.exp(-lam * zp)[:, None] * np.asarray(psi0)[None, :]
    corr = np.exp(-delta * zp)[:, None]
    upper = base * (1.0 + corr)
    lower = base * (1.0 - corr)
    upper[z < 0] = 0.0
    lower[z < 0] = 0.0
    return lower, upper


def barrier_residuals(c, term, mesh, grid, lower, upper):
    """Discrete residuals of the two barriers on nodes with 0 < z < z_max."""
    t = on_mesh(term, mesh)
    inside = (grid.z > 0.5 * grid.dz) & (np.arange(grid.n) < grid.n - 1)
    ru = pde_residual(upper, c, grid.dz, mesh, t)[inside]
    rl = pde_residual(lower, c, grid.dz, mesh, t)[inside]
    return rl, ru


def front_grid(c, term, mesh, dz=0.02, a=None, left_rate=None, margin=40.0) -> ZGrid:
    """z-range long enough for both tails to decay by e^{-margin}.

    The right end is max(margin / lambda_-, 40).  The left end sits margin /
    left_rate behind the expected core position ln(a) / lambda_-, which is
    where a e^{-lambda_- z} reaches order one.
    """
    pair = principal_nu0(term, mesh)
    lam, _ = lambda_pm(c, pair.nu)
    if a is None:
        a, _ = select_parameters(c, term, mesh)
    core = min(np.log(a) / lam, 0.0)
    left = margin / left_rate if left_rate else margin
    return ZGrid.covering(core - left, max(margin / lam, 40.0), dz)


def build_w(
    c: float,
    term: ReactionTerm,
    mesh: CrossSectionMesh,
    grid: ZGrid,
    boundary_scale: float = 2.0,
    tol: float = 1e-10,
    max_iter: int = 200_000,
    params: tuple[float, float] | None = None,
) -> AuxiliaryFront:
    """Monotone iteration from the supersolution on [0, z_max], then cutoff on [2, 3].

    boundary_scale sets the z = 0 data to boundary_scale * a psi_0, any value in
    [0, 2] being admissible.
    """
    if not 0.0 <= boundary_scale <= 2.0:
        raise ValueError("boundary_scale must lie in [0, 2]")
    t = on_mesh(term, mesh)
    pair = principal_nu0(t, mesh)
    lam_c, _ = lambda_pm(c, pair.nu)
    a, delta = params if params is not None else select_parameters(c, t, mesh)
    if grid.z_max < 10.0 / lam_c:
        raise ValueError(f"z_max={grid.z_max} shorter than 10 / lambda_- = {10 / lam_c}")
    lam_d = discrete_lambda_minus(c, pair.nu, grid.dz)
    lower, upper = build_bounds(c, a, delta, t, mesh, grid, lam_d, pair.psi)

    i0 = grid.index(0.0)
    sub = ZGrid(0.0, grid.dz, grid.n - i0)
    ny = mesh.n_unknowns
    us = u_samples(t, 4001)
    M = 1.05 * float(np.max(np.abs(t.fu(us[:, None] if t.y_dependent else us))))
    M = max(M, 1e-3)

    A = field_operator(sub, c, mesh)
    nfree = sub.n * ny
    # rows of the boundary nodes become identities carrying the Dirichlet data
    bmask = np.zeros((sub.n, ny), dtype=bool)
    bmask[0] = bmask[-1] = True
    bflat = bmask.ravel()
    sysm = (sparse.identity(nfree) * M - A).tolil()
    for r in np.flatnonzero(bflat):
        sysm.rows[r] = [r]
        sysm.data[r] = [1.0]
    lu = splu(sysm.tocsc())

    wk = upper[i0:].copy()
    wk[0] = boundary_scale * a * pair.psi
    bvals = wk[bmask]
    lo_k = lower[i0:]
    it = 0
    for it in range(1, max_iter + 1):
        rhs = M * wk + np.broadcast_to(t.f(np.clip(wk, 0.0, 1.0)), wk.shape)
        rhs[bmask] = bvals
        new = lu.solve(rhs.ravel()).reshape(wk.shape)
        if np.any(new > wk + 1e-12):
            raise IterationOrderError("monotone iteration increased; shift too small")
        diff = float(np.max(np.abs(new - wk)))
        wk = new
        if diff <= tol:
            break
    else:
        log.warning("monotone iteration stopped at max_iter with change %.3g", diff)
    excursion = max(float(np.max(lo_k - wk)), float(np.max(wk - upper[i0:])))
    if excursion > 1e-8:
        raise IterationOrderError(f"iterate left the barrier band by {excursion:.3g}")

    eta = smoothstep5(grid.z - CUTOFF[0])[:, None]
    w = np.zeros((grid.n, ny))
    w[i0:] = wk
    w *= eta
    return AuxiliaryFront(
        c=c, grid=grid, w=w, a=a, delta=delta, lambda_minus=lam_c, lambda_discrete=lam_d,
        psi0=pair.psi, nu0=pair.nu, boundary_scale=boundary_scale, iterations=it, shift=M,
    )


def aux_residual(aux: AuxiliaryFront, term, mesh) -> np.ndarray:
    return pde_residual(aux.w, aux.c, aux.grid.dz, mesh, on_mesh(term, mesh))


def write_aux_csv(path, aux: AuxiliaryFront, mesh) -> None:
    cols = ["z"] + [f"w_y{j}" for j in range(aux.w.shape[1])]
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for zi, row in zip(aux.grid.z, aux.w):
            fh.write(",".join(f"{v:.17g}" for v in (zi, *row)) + "\n")
