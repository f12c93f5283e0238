"""Front profiles by constrained minimization of the weighted energy, plus post-processing."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.interpolate import CubicSpline
from scipy.sparse.linalg import splu

from .aux_front import AuxiliaryFront, build_w, front_grid, select_parameters
from .cross_section import CrossSectionMesh
from .equilibria import Equilibrium, enumerate_equilibria, energy
from .functional import FrontFunctional
from .nonlinearity import on_mesh
from .speeds import lambda_pm, principal_nu0
from .zgrid import ZGrid, field_operator, pde_residual

log = logging.getLogger(__name__)


class StallError(RuntimeError):
    pass


class DomainTooShortError(RuntimeError):
    pass


class TailUnresolvedError(RuntimeError):
    pass


@dataclass
class FrontProfile:
    z: np.ndarray
    u: np.ndarray  # shape (n_z, n_y)
    c: float
    psi0: np.ndarray
    a_fit: float = float("nan")
    lambda_fit: float = float("nan")
    plateau: Equilibrium | None = None
    plateau_value: float = float("nan")
    residual_inf: float = float("nan")
    psi_value: float | None = None
    source: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def dz(self) -> float:
        return float(self.z[1] - self.z[0])

    def projected(self) -> np.ndarray:
        """Component along psi_0 (the profile itself for a point cross-section)."""
        if self.u.shape[1] == 1:
            return self.u[:, 0]
        m = self.meta.get("mass")
        m = np.ones(self.u.shape[1]) if m is None else np.asarray(m)
        return self.u @ (m * self.psi0) / np.dot(m, self.psi0**2)

    def summary(self) -> dict:
        return {
            "c": self.c,
            "a_fit": self.a_fit,
            "lambda_fit": self.lambda_fit,
            "plateau": self.plateau_value,
            "plateau_energy": None if self.plateau is None else self.plateau.energy,
            "residual_inf": self.residual_inf,
            "psi_value": self.psi_value,
            "source": self.source,
            **{k: v for k, v in self.meta.items() if k != "mass"},
        }


# -- minimization ---------------------------------------------------------
def _band_arrays(band, shape):
    lo = np.broadcast_to(np.asarray(band[0], dtype=float).reshape(1, -1) if np.ndim(band[0]) else band[0], shape)
    hi = np.broadcast_to(np.asarray(band[1], dtype=float).reshape(1, -1) if np.ndim(band[1]) else band[1], shape)
    return lo, hi


def _hessian(F: FrontFunctional, u, cap: float | None):
    """Metric Hessian of Psi at u: -(L_z + Delta_y) - f_u(u), with f_u capped at `cap`."""
    A = field_operator(F.grid, F.c, F.mesh)
    fu = np.broadcast_to(F.term.fu(np.clip(u, 0.0, 1.0)), u.shape)
    if cap is not None:
        fu = np.minimum(fu, cap)
    return (-A - sparse.diags(fu.ravel())).tocsr()


def minimize_projected(
    F: FrontFunctional,
    u0,
    band,
    gtol: float = 1e-8,
    max_iter: int = 2000,
    stall_limit: int = 50,
    stop_below: float | None = None,
    move_tol: float = 1e-6,
):
    """Projected Newton-type descent on Psi over the box band[0] <= u <= band[1].

    The search direction solves the (possibly capped) Hessian system on the
    inactive nodes; the step is the largest of 1, 1/2, ... that passes an
    Armijo test on Psi up to rounding.  Returns (u, info).
    """
    nf, ny = F.n_free, F.w.shape[1]
    lo, hi = _band_arrays(band, F.w.shape)
    u = np.clip(np.asarray(u0, dtype=float).reshape(F.w.shape), lo, hi)
    u[nf:] = F.w[nf:]
    psi = F.value(F.h_of(u))
    cap_default = 0.5 * F.c**2 / 4.0
    stall = 0
    best_gnorm = np.inf
    info = {"iterations": 0, "converged": False, "capped_steps": 0}
    for it in range(1, max_iter + 1):
        h = F.h_of(u)
        G = F.gradient(h)
        act = ((u <= lo) & (G > 0)) | ((u >= hi) & (G < 0))
        act[nf:] = True
        pg = np.where(act, 0.0, G)
        gnorm = float(np.max(np.abs(pg)))
        info.update(iterations=it, gradient_inf=gnorm, psi=psi)
        if gnorm <= gtol:
            info["converged"] = True
            break
        if stop_below is not None and psi < stop_below:
            break
        free = np.flatnonzero(~act.ravel())
        d = None
        for cap in (None, cap_default):
            H = _hessian(F, u, cap)[free][:, free].tocsc()
            try:
                dfree = splu(H).solve(-G.ravel()[free])
            except RuntimeError:
                continue
            cand = np.zeros(u.size)
            cand[free] = dfree
            cand = cand.reshape(u.shape)
            slope = F.inner(G, cand)
            if np.all(np.isfinite(cand)) and slope < 0.0 or (slope == 0.0 and np.any(cand)):
                d = cand
                if cap is not None:
                    info["capped_steps"] += 1
                break
        if d is None:
            d = -pg
            slope = F.inner(G, d)
        noise = 1e-13 * (abs(psi) + 1e-300)
        alpha = 1.0
        accepted = False
        while alpha >= 1e-10:
            trial = np.clip(u + alpha * d, lo, hi)
            trial[nf:] = F.w[nf:]
            p_new = F.value(F.h_of(trial))
            if p_new <= psi + 1e-4 * alpha * min(slope, 0.0) + noise:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            stall += 1
            if stall >= stall_limit:
                raise StallError(f"no acceptable step for {stall_limit} iterations (|PG|={gnorm:.3g})")
            continue
        # far-left nodes carry weights below the resolution of Psi, so progress
        # there shows up only in the projected gradient or in the state moving
        moved = float(np.max(np.abs(trial - u)))
        progressed = p_new < psi or gnorm < best_gnorm or moved > move_tol
        best_gnorm = min(best_gnorm, gnorm)
        stall = 0 if progressed else stall + 1
        if stall >= stall_limit:
            raise StallError(f"Psi did not decrease over {stall_limit} steps (|PG|={gnorm:.3g})")
        u, psi = trial, p_new
    info["psi"] = psi
    return u, info


def default_grid(c, term, mesh, dz=0.02, a=None) -> ZGrid:
    """Front grid; the left margin uses the slowest approach rate over stable equilibria."""
    rates = []
    for e in enumerate_equilibria(term, mesh):
        if e.resolved and e.nu_tilde > 0:
            rates.append(abs(lambda_pm(c, e.nu_tilde)[0]))
    return front_grid(c, term, mesh, dz, a=a, left_rate=min(rates) if rates else None)


def seed_profile(grid: ZGrid, w, band, core: float):
    lo, hi = band
    z = grid.z[:, None]
    s = 0.5 * (1.0 + np.tanh(-(z - core)))
    seed = np.asarray(lo) + (np.asarray(hi) - np.asarray(lo)) * s
    return np.clip(np.maximum(seed, w), lo, hi)


def minimize_front(
    c: float,
    aux: AuxiliaryFront,
    band,
    term,
    mesh: CrossSectionMesh,
    gtol: float = 1e-8,
    max_iter: int = 2000,
    seed=None,
) -> FrontProfile:
    """Minimizer of the discrete Psi_c^w with w + h confined to the band."""
    t = on_mesh(term, mesh)
    grid = aux.grid
    F = FrontFunctional(t, mesh, grid, c, aux.w)
    hi_level = float(np.max(band[1]))
    core = min(np.log(2.0 * aux.a / hi_level) / aux.lambda_minus, 0.0)
    u0 = seed_profile(grid, aux.w, band, core) if seed is None else seed
    u, info = minimize_projected(F, u0, band, gtol=gtol, max_iter=max_iter)
    if not info["converged"]:
        raise StallError(f"minimization stopped after {info['iterations']} iterations (|PG|={info['gradient_inf']:.3g})")
    left_slope = float(np.max(np.abs(u[1:20] - u[0]))) / grid.dz
    if left_slope > 1e-6:
        raise DomainTooShortError(f"front not flat at z_min (slope {left_slope:.3g}); extend the grid")
    prof = FrontProfile(
        z=grid.z, u=u, c=c, psi0=aux.psi0, psi_value=info["psi"], source="variational",
        meta={"band": [float(np.min(band[0])), hi_level], "boundary_scale": aux.boundary_scale,
              "a": aux.a, "iterations": info["iterations"], "gradient_inf": info["gradient_inf"],
              "mass": mesh.mass()},
    )
    return finalize(prof, t, mesh)


def finalize(prof: FrontProfile, term, mesh) -> FrontProfile:
    """Attach plateau, residual and decay fit."""
    t = on_mesh(term, mesh)
    eqs = enumerate_equilibria(t, mesh)
    left = prof.u[0]
    best = min(eqs, key=lambda e: float(np.max(np.abs(e.v - left)))) if eqs else None
    if best is not None and float(np.max(np.abs(best.v - left))) < 1e-3:
        prof.plateau = best
    prof.plateau_value = float(np.max(left))
    if np.allclose(np.diff(prof.z), prof.dz):
        r = pde_residual(prof.u, prof.c, prof.dz, mesh, t)
        prof.residual_inf = float(np.max(np.abs(r[1:-1])))
    try:
        prof.a_fit, prof.lambda_fit = extract_decay(prof)
    except TailUnresolvedError as exc:
        log.warning("decay fit failed: %s", exc)
    return prof


def build_variational_front(c, term, mesh, band, dz=0.02, boundary_scale=2.0, grid=None, aux=None):
    """Convenience pipeline: grid, auxiliary front, minimization."""
    if aux is None:
        a, delta = select_parameters(c, term, mesh)
        grid = grid or default_grid(c, term, mesh, dz, a=a)
        aux = build_w(c, term, mesh, grid, boundary_scale=boundary_scale, params=(a, delta))
    return minimize_front(c, aux, band, term, mesh)


# -- threshold probe ------------------------------------------------------
def probe_negative(
    c, term, mesh, band, half_length: float = 30.0, dz: float = 0.05, max_iter: int = 800
) -> bool:
    """True if the weighted energy relative to the constant state band[0] takes a negative value.

    Uses the renormalized functional with w equal to the lower equilibrium
    (so no residual term) on [-L, L], a front-like seed and early exit as soon
    as the value drops below -1e-6 * (2L).
    """
    grid = ZGrid.covering(-half_length, half_length, dz)
    ny = mesh.n_unknowns
    lo = np.asarray(band[0], dtype=float)
    w = np.broadcast_to(lo if lo.ndim else np.full(ny, float(lo)), (grid.n, ny)).copy()
    F = FrontFunctional(term, mesh, grid, c, w, residual_mask_until=-np.inf)
    tol_neg = 1e-6 * grid.length
    u0 = seed_profile(grid, w, band, 0.0)
    u0[-1] = w[-1]
    if F.value(F.h_of(u0)) < -tol_neg:
        return True
    try:
        _, info = minimize_projected(F, u0, band, gtol=1e-9, max_iter=max_iter, stop_below=-tol_neg)
    except StallError:
        return False
    return info["psi"] < -tol_neg


# -- post-processing ------------------------------------------------------
def extract_decay(p: FrontProfile, level: float = 1e-3, min_nodes: int = 20):
    """Least-squares fit log(u/psi_0) ~ log(a) - lambda z on the far tail.

    The window is [z_max - L, z_max - L/4] where L is the length of the region
    in which the projected profile is below `level`.
    """
    up = p.projected()
    z = p.z
    small = np.flatnonzero(up >= level)
    start = small[-1] + 1 if small.size else 0
    L = z[-1] - z[start] if start < len(z) else 0.0
    sel = (z >= z[-1] - L) & (z <= z[-1] - L / 4)
    if np.count_nonzero(sel) < min_nodes:
        raise TailUnresolvedError("tail window holds fewer than the required nodes")
    if np.any(up[sel] <= 0.0):
        raise TailUnresolvedError("profile not positive in the tail window")
    slope, icept = np.polyfit(z[sel], np.log(up[sel]), 1)
    return float(np.exp(icept)), float(-slope)


def level_position(p: FrontProfile, level: float) -> float:
    """Largest z at which the projected profile crosses `level` (cubic interpolation)."""
    up = p.projected()
    above = np.flatnonzero(up >= level)
    if above.size == 0 or above[-1] == len(up) - 1:
        raise ValueError(f"profile does not cross level {level}")
    i = above[-1]
    lo, hi = max(i - 3, 0), min(i + 5, len(up))
    spl = CubicSpline(p.z[lo:hi], up[lo:hi] - level)
    roots = [r for r in spl.roots(extrapolate=False) if p.z[i] - 1e-12 <= r <= p.z[i + 1] + 1e-12]
    return float(roots[0]) if roots else float(p.z[i])


def shifted(p: FrontProfile, s: float, z_eval) -> np.ndarray:
    """Values of u(z + s) at z_eval (cubic spline), columns per y node."""
    spl = CubicSpline(p.z, p.u, axis=0)
    return spl(np.asarray(z_eval) + s)


def compare_fronts(p1: FrontProfile, p2: FrontProfile, align: str = "level", level: float | None = None) -> float:
    """Sup-norm distance after translating p2 onto p1.

    align="level" matches the positions where the projected profiles cross
    `level` (default: a quarter of the lower plateau); align="tail" matches the
    fitted tail amplitudes a_fit.  Both are exact for pure translates.
    """
    if align == "tail":
        lam = 0.5 * (p1.lambda_fit + p2.lambda_fit)
        if not (np.isfinite(p1.a_fit) and np.isfinite(p2.a_fit)):
            raise TailUnresolvedError("a_fit missing")
        s = np.log(p2.a_fit / p1.a_fit) / lam
    else:
        if level is None:
            level = 0.25 * min(np.max(p1.projected()), np.max(p2.projected()))
        s = level_position(p2, level) - level_position(p1, level)
    lo = max(p1.z[0], p2.z[0] - s)
    hi = min(p1.z[-1], p2.z[-1] - s)
    sel = (p1.z >= lo) & (p1.z <= hi)
    v2 = shifted(p2, s, p1.z[sel])
    return float(np.max(np.abs(p1.u[sel] - v2)))


def monotone_rearrangement(u: np.ndarray) -> np.ndarray:
    """Decreasing rearrangement in z of each y column (sorting the values)."""
    return -np.sort(-u, axis=0)


def z_derivative_max(p: FrontProfile) -> float:
    return float(np.max(np.diff(p.u, axis=0) / np.diff(p.z)[:, None]))


def left_plateau_energy(p: FrontProfile, term, mesh) -> float:
    return energy(term, mesh, p.u[0])


def richardson(p_coarse: FrontProfile, p_fine: FrontProfile) -> FrontProfile:
    """(4 u_fine - u_coarse) / 3 on the coarse nodes, for second-order schemes on nested grids."""
    if len(p_fine.z) != 2 * len(p_coarse.z) - 1:
        raise ValueError("grids are not nested by halving")
    u = (4.0 * p_fine.u[::2] - p_coarse.u) / 3.0
    out = FrontProfile(
        z=p_coarse.z, u=u, c=p_coarse.c, psi0=p_coarse.psi0, source="variational-extrapolated",
        plateau=p_coarse.plateau, plateau_value=p_coarse.plateau_value,
        meta={k: v for k, v in p_coarse.meta.items()},
    )
    try:
        out.a_fit, out.lambda_fit = extract_decay(out)
    except TailUnresolvedError:
        pass
    return out


def write_front_csv(path, p: FrontProfile) -> None:
    cols = ["z"] + [f"u_y{j}" for j in range(p.u.shape[1])]
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for zi, row in zip(p.z, p.u):
            fh.write(",".join(f"{v:.17g}" for v in (zi, *row)) + "\n")
