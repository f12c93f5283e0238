"""Phase-plane shooting for u'' + c u' + f(u) = 0 on a point cross-section.

Two integration directions are offered:

* `shoot_1d` starts on the two-mode tail v + a e^{-lambda_- z} + b e^{-lambda_+ z}
  near a base state and integrates toward decreasing z.  It classifies where
  the trajectory goes (plateau, turn, exit) and is well conditioned when the
  gap lambda_+ - lambda_- is moderate.
* `plateau_front` leaves a stable-in-y plateau along its one-dimensional
  unstable direction and integrates toward increasing z.  That direction is
  well conditioned at every speed and gives the reference fronts.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from numpy.polynomial import polynomial as P

from .front_solver import FrontProfile, extract_decay, TailUnresolvedError
from .speeds import lambda_pm

log = logging.getLogger(__name__)

PLATEAU, TURN, EXIT_LOW, EXIT_HIGH, OPEN = "PLATEAU", "TURN", "EXIT_LOW", "EXIT_HIGH", "OPEN"
RTOL, ATOL = 1e-12, 1e-15


class StiffnessError(RuntimeError):
    pass


@dataclass
class ShotResult:
    kind: str
    level: float  # plateau value, turning level or exit side
    z: np.ndarray
    u: np.ndarray
    up: np.ndarray
    a: float = 0.0
    b: float = 0.0
    meta: dict = field(default_factory=dict)

    def profile(self, c, source="shooting") -> FrontProfile:
        order = np.argsort(self.z)
        prof = FrontProfile(
            z=self.z[order], u=self.u[order][:, None], c=c, psi0=np.ones(1),
            plateau_value=float(self.u[order][0]), source=source,
            meta={"a": self.a, "b": self.b, "kind": self.kind},
        )
        try:
            prof.a_fit, prof.lambda_fit = extract_decay(prof)
        except TailUnresolvedError:
            pass
        return prof


class _Expansion:
    """f(v + x) with every polynomial piece re-expanded about v, for exact small-x evaluation."""

    def __init__(self, term, v):
        self.v = float(v)
        self.cuts = [b - self.v for b in term.breakpoints[1:-1]]
        self.pieces = []
        for coef in term.coeffs:
            d, taylor, k = np.asarray(coef, dtype=float), [], 0
            while d.size and np.any(d != 0.0):
                taylor.append(float(P.polyval(self.v, d)) / float(np.prod(np.arange(1, k + 1))))
                d = P.polyder(d)
                k += 1
            self.pieces.append(taylor[::-1] or [0.0])

    def __call__(self, x):
        k = 0
        for cut in self.cuts:
            if x >= cut:
                k += 1
        acc = 0.0
        for a in self.pieces[k]:
            acc = acc * x + a
        return acc


def _rhs(term, c, v=0.0):
    """Right-hand side in the deviation x = u - v."""
    f = _Expansion(term, v)
    lo, hi = -v, 1.0 - v

    def rhs(z, y):
        x = min(max(y[0], lo), hi)
        return [y[1], -c * y[1] - f(x)]
    return rhs


def _taylor(term, v, side):
    """(f_u(v), f_uu(v)/2) from the piece on the requested side."""
    k = int(term.piece_index(v, side))
    coef = term.coeffs[k]
    d1 = P.polyder(coef)
    d2 = P.polyder(d1)
    return float(P.polyval(v, d1)), 0.5 * float(P.polyval(v, d2)) if d2.size else 0.0


def tail_state(c, a, b, z0, term, v_base=0.0):
    """Deviation (x, x') = (u - v_base, u') at z0 from the two-mode tail.

    The slow mode carries its quadratic correction -f2 a^2 E^2 / (4 lam^2 - 2 c lam + f1).
    """
    side = "right" if a + b >= 0 else "left"
    f1, f2 = _taylor(term, v_base, side)
    lm, lp = lambda_pm(c, -f1)
    Em, Ep = np.exp(-lm * z0), np.exp(-lp * z0)
    denom = 4 * lm**2 - 2 * c * lm + f1
    k2 = -f2 / denom if denom != 0 else 0.0
    x = a * Em + b * Ep + k2 * a**2 * Em**2
    xp = -lm * a * Em - lp * b * Ep - 2 * lm * k2 * a**2 * Em**2
    return x, xp


def _events(v):
    def ev_low(z, y):
        return y[0] + v
    ev_low.terminal = True

    def ev_high(z, y):
        return y[0] - (1.0 - v)
    ev_high.terminal = True
    return ev_low, ev_high


def shoot_1d(c, a, b, term, z_span=(-60.0, 30.0), v_base=0.0, hold=10.0, ball=1e-6, equilibria=None):
    """Integrate from z_span[1] toward z_span[0] and classify the outcome.

    PLATEAU(v): (u, u') stays within `ball` of (v, 0) for `hold` length units
    at the end; TURN: u' changes sign (the level is recorded); EXIT_*: u leaves
    [0, 1]; OPEN: none of these before z_span[0].
    """
    z_end, z0 = float(z_span[0]), float(z_span[1])
    if a == 0.0 and b == 0.0:
        z = np.array([z_end, z0])
        return ShotResult(PLATEAU, v_base, z, np.full(2, v_base), np.zeros(2), a, b)
    x0, xp0 = tail_state(c, a, b, z0, term, v_base)
    sgn = 1.0 if x0 >= 0 else -1.0

    def ev_turn(z, y):
        return y[1]
    ev_turn.terminal, ev_turn.direction = True, sgn  # u' crosses 0 when going backward

    ev_low, ev_high = _events(v_base)
    sol = solve_ivp(
        _rhs(term, c, v_base), (z0, z_end), [x0, xp0], method="DOP853", rtol=RTOL, atol=ATOL,
        events=(ev_turn, ev_low, ev_high), dense_output=True,
    )
    if sol.status == -1:
        raise StiffnessError(sol.message)
    z, u, up = sol.t, v_base + sol.y[0], sol.y[1]
    if sol.t_events[2].size:
        return ShotResult(EXIT_HIGH, 1.0, z, u, up, a, b)
    if sol.t_events[1].size:
        return ShotResult(EXIT_LOW, 0.0, z, u, up, a, b)
    if sol.t_events[0].size:
        return ShotResult(TURN, float(u[-1]), z, u, up, a, b)
    zz = np.linspace(z_end, z_end + hold, 50)
    xx, vv = sol.sol(zz)
    for v in equilibria or []:
        if np.all(np.hypot(v_base + xx - v, vv) <= ball):
            return ShotResult(PLATEAU, v, z, u, up, a, b)
    return ShotResult(OPEN, float(u[-1]), z, u, up, a, b)


def overshoots(res: ShotResult, target: float) -> bool:
    """True if the backward trajectory climbs past `target` (toward larger u)."""
    if res.kind == EXIT_HIGH:
        return True
    if res.kind == EXIT_LOW:
        return False
    return res.level > target


def scan_b(c, term, b_values, a=1.0, z_span=(-60.0, 30.0), v_base=0.0, equilibria=None):
    """Classify the backward orbits for each b; returns [(b, ShotResult)]."""
    return [(float(b), shoot_1d(c, a, b, term, z_span, v_base, equilibria=equilibria)) for b in b_values]


def bisect_b(c, term, target, b_under, b_over, a=1.0, z_span=(-60.0, 30.0), v_base=0.0, max_iter=200):
    """Bisection on b between an undershooting and an overshooting tail for the orbit to `target`."""
    if overshoots(shoot_1d(c, a, b_under, term, z_span, v_base), target) or not overshoots(
        shoot_1d(c, a, b_over, term, z_span, v_base), target
    ):
        raise ValueError("b values do not bracket the connecting orbit")
    for _ in range(max_iter):
        mid = 0.5 * (b_under + b_over)
        if mid in (b_under, b_over):
            break
        if overshoots(shoot_1d(c, a, mid, term, z_span, v_base), target):
            b_over = mid
        else:
            b_under = mid
    return b_under, b_over


def _pad(z_cut, x_cut, mu, lo, dz, v):
    zp = np.arange(np.ceil(lo / dz) * dz, z_cut - 0.5 * dz, dz)
    return zp, v + x_cut * np.exp(mu * (zp - z_cut))


def connecting_profile(c, term, target, b, a=1.0, z_span=(-60.0, 30.0), v_base=0.0,
                       pad_to=None, near=1e-4, dz=0.01):
    """Tabulate the orbit with tail coefficients (a, b) until it is within `near` of the
    plateau, then continue with the linear approach law target + C e^{mu z}, mu > 0."""
    z_end, z0 = z_span
    x0, xp0 = tail_state(c, a, b, z0, term, v_base)

    def ev_near(z, y):
        return abs(v_base + y[0] - target) - near
    ev_near.terminal = True

    sol = solve_ivp(_rhs(term, c, v_base), (z0, z_end), [x0, xp0], method="DOP853", rtol=RTOL,
                    atol=ATOL, events=ev_near, dense_output=True)
    if not sol.t_events[0].size:
        raise RuntimeError("orbit did not reach the plateau neighbourhood")
    z_cut = float(sol.t_events[0][0])
    f1, _ = _taylor(term, target, "left" if target > v_base else "right")
    mu = 0.5 * (-c + np.sqrt(c * c - 4.0 * f1))
    zs = np.arange(np.ceil(z_cut / dz) * dz, z0 + 0.5 * dz, dz)
    u = v_base + sol.sol(zs)[0]
    x_cut = v_base + float(sol.sol(z_cut)[0]) - target
    zp, upad = _pad(zs[0], x_cut * np.exp(mu * (zs[0] - z_cut)), mu,
                    pad_to if pad_to is not None else z_cut - 40.0 / mu, dz, target)
    z = np.concatenate([zp, zs])
    uu = np.concatenate([upad, u])
    return ShotResult(PLATEAU, target, z, uu, np.gradient(uu, z), a, b, {"z_cut": z_cut, "mu": mu})


def plateau_front(c, term, v, z_lo=-40.0, z_hi=None, dz=0.01, eps=1e-7, floor=1e-12):
    """Orbit leaving the plateau v downward, integrated toward increasing z.

    Starts at u = v - eps along the unstable eigenvector (with its quadratic
    correction) and stops when u falls below `floor`, leaves [0, 1] or turns
    upward.  kind is PLATEAU (level 0) when the orbit reaches 0 monotonically.
    The part z < 0 is the linear approach law.
    """
    f1, f2 = _taylor(term, v, "left")
    mu = 0.5 * (-c + np.sqrt(c * c - 4.0 * f1))  # growth rate of u - v as z -> -inf
    k2 = -f2 / (4 * mu**2 + 2 * c * mu + f1)
    x0 = -eps + k2 * eps**2
    xp0 = -mu * eps + 2 * mu * k2 * eps**2
    f0 = float(term.fu(0.0))
    lam_slow = lambda_pm(c, -f0)[0] if c * c - 4 * f0 >= 0 else 1.0
    if z_hi is None:
        z_hi = 30.0 / lam_slow + 60.0

    def ev_floor(z, y):
        return v + y[0] - floor
    ev_floor.terminal = True

    def ev_turn(z, y):
        return y[1]
    ev_turn.terminal, ev_turn.direction = True, 1.0

    _, ev_high = _events(v)
    sol = solve_ivp(_rhs(term, c, v), (0.0, z_hi), [x0, xp0], method="DOP853", rtol=1e-13,
                    atol=1e-18, events=(ev_floor, ev_turn, ev_high), dense_output=True)
    if sol.status == -1:
        raise StiffnessError(sol.message)
    z_stop = float(sol.t[-1])
    if sol.t_events[0].size:
        kind, level = PLATEAU, 0.0
    elif sol.t_events[1].size:
        kind, level = TURN, v + float(sol.y[0, -1])
    elif sol.t_events[2].size:
        kind, level = EXIT_HIGH, 1.0
    elif v + float(sol.y[0, -1]) < 1e-8 and float(sol.y[1, -1]) < 0.0:
        kind, level = PLATEAU, 0.0  # still creeping down the slow tail at z_hi
    else:
        kind, level = OPEN, v + float(sol.y[0, -1])
    zs = np.arange(0.0, z_stop, dz)
    u = v + sol.sol(zs)[0]
    zp, upad = _pad(0.0, x0, mu, z_lo, dz, v)
    z = np.concatenate([zp, zs])
    uu = np.concatenate([upad, u])
    return ShotResult(kind, level, z, uu, np.gradient(uu, z), meta={"mu": mu, "eps": eps, "from": v})


def c_dagger_shooting(term, v_low, v_high, bracket, tol=1e-10, z0=8.0, z_end=-40.0, amp=1e-6):
    """Speed of the decreasing orbit from v_high to v_low, by bisection on c.

    The tail at v_low uses only its decaying mode.  Integrated backward, the
    orbit passes v_high when c is too large and turns below it when c is too small.
    """
    lo, hi = bracket
    f1, _ = _taylor(term, v_low, "right")

    def over(c):
        _, lp = lambda_pm(c, -f1)
        res = shoot_1d(c, 0.0, amp * np.exp(lp * z0), term, (z_end, z0), v_base=v_low)
        return overshoots(res, v_high - 1e-12)

    if over(lo) or not over(hi):
        raise ValueError("bracket does not straddle the connecting speed")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if over(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
