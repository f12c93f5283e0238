"""Perturbations of a front in the co-moving frame and their weighted-norm decay.

With w = e^{-c' z/2} omega the perturbation equation
w_t = Delta w + c w_z + f(u + w) - f(u) becomes

    omega_t = omega_zz + Delta_y omega + (c - c') omega_z
              + (c'^2/4 - c c'/2) omega + F(u, w) omega,

F being the divided difference of f.  The weighted norm of w is the plain L^2
norm of omega, so nothing in the stepper ever multiplies by e^{c' z}.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .front_solver import FrontProfile
from .nonlinearity import DomainError, on_mesh
from .speeds import lambda_pm

log = logging.getLogger(__name__)


class InstabilityError(RuntimeError):
    pass


@dataclass
class PerturbationState:
    omega: np.ndarray
    t: float
    history: np.ndarray  # rows (t, weighted norm)
    c_prime: float
    z: np.ndarray
    clip_events: int = 0
    sigma_measured: float = float("nan")
    meta: dict = field(default_factory=dict)

    def perturbation(self) -> np.ndarray:
        return np.exp(-0.5 * self.c_prime * self.z)[:, None] * self.omega


def predicted_rate(c: float, c_prime: float, nu_hat: float) -> float:
    """Guaranteed decay rate -(c' - 2 lam_-)(c' - 2 lam_+)/2 of the squared weighted norm."""
    lm, lp = lambda_pm(c, nu_hat)
    if not 2.0 * lm - 1e-12 <= c_prime <= 2.0 * lp + 1e-12:
        raise DomainError(f"c'={c_prime} outside [2 lambda_-, 2 lambda_+] = [{2*lm}, {2*lp}]")
    return max(-0.5 * (c_prime - 2.0 * lm) * (c_prime - 2.0 * lp), 0.0)


def fit_rate(history: np.ndarray, fraction: float = 0.5) -> float:
    """Least-squares decay rate of norm^2 over the last `fraction` of the samples."""
    t, n = history[:, 0], history[:, 1]
    k = int(len(t) * (1.0 - fraction))
    t, n = t[k:], n[k:]
    ok = n > 0
    if np.count_nonzero(ok) < 2:
        return float("nan")
    slope = np.polyfit(t[ok], 2.0 * np.log(n[ok]), 1)[0]
    return float(-slope)


def evolve(
    front: FrontProfile,
    w0,
    c_prime: float,
    dt: float,
    t_end: float,
    term,
    mesh,
    window: tuple[float, float] | None = None,
    record_every: int = 1,
    growth_limit: float = 1e3,
) -> PerturbationState:
    """Explicit Euler for the tilted perturbation with zero Dirichlet data at both z-ends.

    w0 is a perturbation of the same shape as front.u (or a 1-D array for a
    point cross-section); `window` restricts the computation to a sub-range of
    the front's grid.
    """
    t_ = on_mesh(term, mesh)
    z = front.z
    dz = float(z[1] - z[0])
    if dt > 0.4 * dz**2 * (1.0 + 1e-12):
        raise ValueError(f"dt={dt} exceeds the explicit limit 0.4 dz^2 = {0.4 * dz**2}")
    sel = slice(None) if window is None else (z >= window[0]) & (z <= window[1])
    z = z[sel]
    ubar = front.u[sel]
    w = np.asarray(w0, dtype=float)
    w = (w[:, None] if w.ndim == 1 else w)[sel].copy()
    c = front.c
    tilt = np.exp(0.5 * c_prime * z)[:, None]
    omega = tilt * w
    omega[0] = omega[-1] = 0.0
    shift = 0.25 * c_prime**2 - 0.5 * c * c_prime
    lap_y = mesh.laplacian() if mesh.dim else None
    mass = mesh.mass()

    def norm(om):
        return float(np.sqrt(dz * np.sum(mass[None, :] * om**2)))

    n0 = norm(omega)
    steps = int(round(t_end / dt))
    hist = [(0.0, n0)]
    clips = 0
    for k in range(1, steps + 1):
        w = omega / tilt
        u = ubar + w
        bad = (u < 0.0) | (u > 1.0)
        if np.any(bad):
            clips += int(np.count_nonzero(bad))
            w = np.clip(u, 0.0, 1.0) - ubar
            omega = tilt * w
        F = t_.divided_difference(ubar, w)
        rhs = np.zeros_like(omega)
        rhs[1:-1] = (omega[2:] - 2.0 * omega[1:-1] + omega[:-2]) / dz**2
        if c != c_prime:
            rhs[1:-1] += (c - c_prime) * (omega[2:] - omega[:-2]) / (2.0 * dz)
        if lap_y is not None:
            rhs[1:-1] += (lap_y @ omega[1:-1].T).T
        rhs[1:-1] += (shift + F[1:-1]) * omega[1:-1]
        omega = omega + dt * rhs
        if k % record_every == 0 or k == steps:
            nk = norm(omega)
            hist.append((k * dt, nk))
            if n0 > 0 and nk > growth_limit * n0:
                raise InstabilityError(f"weighted norm grew by {nk / n0:.3g} at t={k * dt:.4g}")
    history = np.array(hist)
    state = PerturbationState(omega, steps * dt, history, c_prime, z, clips)
    state.sigma_measured = fit_rate(history) if n0 > 0 else float("nan")
    return state


def bump(z, center: float, width: float, amplitude: float) -> np.ndarray:
    """Compactly supported C^1 bump amplitude * cos^2 on [center - width, center + width]."""
    x = (np.asarray(z) - center) / width
    return np.where(np.abs(x) < 1.0, amplitude * np.cos(0.5 * np.pi * x) ** 2, 0.0)


def write_history_csv(path, state: PerturbationState) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write("t,weighted_norm\n")
        for t, n in state.history:
            fh.write(f"{t:.17g},{n:.17g}\n")
