"""Piecewise-polynomial reaction terms f(u, y), their derivatives and potentials.

A reaction term is a list of pieces covering [0, 1]; on each piece f is a
polynomial in u, optionally multiplied by a coefficient tabulated on the
cross-section nodes.  The potential is V(u, y) = -int_0^u f(s, y) ds.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np
from numpy.polynomial import polynomial as P

CONTINUITY_TOL = 1e-12


class DomainError(ValueError):
    """Raised when u leaves [0, 1]."""


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ReactionTerm:
    breakpoints: tuple[float, ...]
    coeffs: tuple[np.ndarray, ...]
    y_factors: tuple[np.ndarray | None, ...] = None
    holder_gamma: float = 1.0
    name: str = "custom"
    _antider: tuple = field(init=False, repr=False, compare=False)
    _offsets: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        if len(bp) < 2 or bp[0] != 0.0 or bp[-1] != 1.0 or any(
            b1 <= b0 for b0, b1 in zip(bp, bp[1:])
        ):
            raise ValueError("breakpoints must increase from 0 to 1")
        coeffs = tuple(_frozen(np.atleast_1d(c)) for c in self.coeffs)
        if len(coeffs) != len(bp) - 1:
            raise ValueError("need one coefficient row per piece")
        yf = self.y_factors
        if yf is None:
            yf = (None,) * len(coeffs)
        yf = tuple(None if f is None else _frozen(f) for f in yf)
        if len(yf) != len(coeffs):
            raise ValueError("need one y-factor entry per piece")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "y_factors", yf)
        if not 0.0 < self.holder_gamma <= 1.0:
            raise ValueError("holder_gamma must lie in (0, 1]")

        antider = tuple(P.polyint(c, lbnd=b) for c, b in zip(coeffs, bp))
        # integral of each full piece (before y scaling)
        full = [P.polyval(b1, a) for a, b1 in zip(antider, bp[1:])]
        object.__setattr__(self, "_antider", antider)
        object.__setattr__(self, "_offsets", tuple(full))

        for k, b in enumerate(bp[1:-1]):
            left = P.polyval(b, coeffs[k]) * self._yfac(k)
            right = P.polyval(b, coeffs[k + 1]) * self._yfac(k + 1)
            if np.max(np.abs(np.asarray(left - right))) > CONTINUITY_TOL:
                raise ValueError(f"f is discontinuous at u={b}")

    # -- helpers -----------------------------------------------------------
    @property
    def n_pieces(self) -> int:
        return len(self.coeffs)

    @property
    def y_dependent(self) -> bool:
        return any(f is not None for f in self.y_factors)

    def _yfac(self, k):
        f = self.y_factors[k]
        return 1.0 if f is None else f

    def piece_index(self, u, side: str = "right") -> np.ndarray:
        """Index of the piece containing u; at a breakpoint `side` picks the piece."""
        u = np.asarray(u, dtype=float)
        inner = np.asarray(self.breakpoints[1:-1])
        idx = np.searchsorted(inner, u, side="right" if side == "right" else "left")
        return idx

    def _check(self, u):
        u = np.asarray(u, dtype=float)
        if np.any(u < 0.0) or np.any(u > 1.0) or np.any(~np.isfinite(u)):
            raise DomainError("u must lie in [0, 1]")
        return u

    def _piecewise(self, u, polys, side="right"):
        u = self._check(u)
        idx = self.piece_index(u, side)
        out = np.zeros(np.broadcast_shapes(u.shape, self._yshape()))
        for k, c in enumerate(polys):
            mask = idx == k
            if not np.any(mask):
                continue
            val = P.polyval(u, c)
            val = val * self._yfac(k)
            out = np.where(mask, val, out)
        return out

    def _yshape(self):
        for f in self.y_factors:
            if f is not None:
                return f.shape
        return ()

    # -- evaluation --------------------------------------------------------
    def f(self, u, side: str = "right"):
        return self._piecewise(u, self.coeffs, side)

    def fu(self, u, side: str = "right"):
        return self._piecewise(u, [P.polyder(c) for c in self.coeffs], side)

    def V(self, u):
        u = self._check(u)
        idx = self.piece_index(u)
        out = np.zeros(np.broadcast_shapes(u.shape, self._yshape()))
        acc = 0.0
        for k, a in enumerate(self._antider):
            mask = idx == k
            if np.any(mask):
                val = -(acc + P.polyval(u, a) * self._yfac(k))
                out = np.where(mask, val, out)
            acc = acc + self._offsets[k] * self._yfac(k)
        return out

    def divided_difference(self, w, h):
        """(f(w+h) - f(w)) / h, exact in the limit h -> 0 (gives f_u(w))."""
        w = self._check(w)
        h = np.asarray(h, dtype=float)
        x = self._check(w + h)
        iw = self.piece_index(w)
        ix = self.piece_index(x)
        out = np.zeros(np.broadcast_shapes(w.shape, h.shape, self._yshape()))
        same = iw == ix
        for k, c in enumerate(self.coeffs):
            mask = same & (iw == k)
            if not np.any(mask):
                continue
            out = np.where(mask, _taylor_tail(c, w, h, 1) * self._yfac(k), out)
        if not np.all(same):
            safe_h = np.where(h == 0.0, 1.0, h)
            direct = (self.f(x) - self.f(w)) / safe_h
            out = np.where(same, out, direct)
        return out

    def second_difference_V(self, w, h):
        """(V(w+h) - V(w) - V'(w) h) / h^2, the exact second-order remainder."""
        w = self._check(w)
        h = np.asarray(h, dtype=float)
        x = self._check(w + h)
        iw = self.piece_index(w)
        ix = self.piece_index(x)
        out = np.zeros(np.broadcast_shapes(w.shape, h.shape, self._yshape()))
        same = iw == ix
        for k, a in enumerate(self._antider):
            mask = same & (iw == k)
            if not np.any(mask):
                continue
            out = np.where(mask, -_taylor_tail(a, w, h, 2) * self._yfac(k), out)
        if not np.all(same):
            safe_h = np.where(h == 0.0, 1.0, h)
            with np.errstate(divide="ignore", invalid="ignore"):  # h**2 may underflow off the crossing nodes
                direct = (self.V(x) - self.V(w) + self.f(w) * h) / safe_h**2
            out = np.where(same, out, direct)
        return out

    def restrict(self, index) -> "ReactionTerm":
        """Same term with y-factors restricted to the given node indices."""
        if not self.y_dependent:
            return self
        yf = tuple(None if f is None else f[index] for f in self.y_factors)
        return ReactionTerm(self.breakpoints, self.coeffs, yf, self.holder_gamma, self.name)

    def as_dict(self) -> dict:
        if self.name in BUILTINS:
            return {"kind": self.name}
        d = {
            "kind": "custom",
            "breakpoints": list(self.breakpoints),
            "coefficients": [c.tolist() for c in self.coeffs],
            "holder_gamma": self.holder_gamma,
        }
        if self.y_dependent:
            d["y_factors"] = [
                [] if f is None else f.tolist() for f in self.y_factors
            ]
        return d


def _taylor_tail(c, w, h, order):
    """sum_{k>=order} p^(k)(w)/k! h^(k-order) for the polynomial with coefficients c."""
    out = np.zeros(np.broadcast_shapes(np.shape(w), np.shape(h)))
    der = np.asarray(c, dtype=float)
    for _ in range(order):
        der = P.polyder(der)
    k = order
    hp = np.ones_like(out)
    while der.size and np.any(der != 0.0):
        out = out + P.polyval(w, der) / factorial(k) * hp
        der = P.polyder(der)
        k += 1
        hp = hp * h
    return out


# -- built-ins ------------------------------------------------------------
def example61() -> ReactionTerm:
    """u(1-2u) on [0, 1/2), (2u-1)(1-u)(40u-21) on [1/2, 1]."""
    upper = P.polymul(P.polymul([-1.0, 2.0], [1.0, -1.0]), [-21.0, 40.0])
    return ReactionTerm((0.0, 0.5, 1.0), ([0.0, 1.0, -2.0], upper), name="example61")


def kpp() -> ReactionTerm:
    return ReactionTerm((0.0, 1.0), ([0.0, 1.0, -1.0],), name="kpp")


def linear_decay() -> ReactionTerm:
    """f(u) = -u, a stable zero state."""
    return ReactionTerm((0.0, 1.0), ([0.0, -1.0],), name="linear_decay")


BUILTINS = {"example61": example61, "kpp": kpp, "linear_decay": linear_decay}


def term_from_dict(d: dict) -> ReactionTerm:
    kind = d.get("kind", "example61")
    if kind in BUILTINS:
        return BUILTINS[kind]()
    if kind != "custom":
        raise ValueError(f"unknown reaction term kind {kind!r}")
    yf = d.get("y_factors")
    if yf is not None:
        yf = [None if len(f) == 0 else f for f in yf]
    return ReactionTerm(
        tuple(d["breakpoints"]),
        tuple(d["coefficients"]),
        yf,
        holder_gamma=d.get("holder_gamma", 1.0),
    )


def evaluate(term: ReactionTerm, u, y_index: int | None = None):
    """Return (f, f_u, V) at u; y_index selects a cross-section node for y-dependent terms."""
    vals = (term.f(u), term.fu(u), term.V(u))
    if term.y_dependent:
        if y_index is None:
            raise ValueError("y-dependent term needs a y_index")
        vals = tuple(np.asarray(v)[..., y_index] for v in vals)
    return tuple(float(v) if np.ndim(v) == 0 else v for v in vals)


# -- hypothesis checks -----------------------------------------------------
@dataclass
class HypothesisReport:
    h1: bool
    h2: bool
    u: bool
    nu0: float
    holder_estimate: float
    k_bar: float
    k_under: float
    notes: list[str]

    @property
    def all_pass(self) -> bool:
        return self.h1 and self.h2 and self.u


def on_mesh(term: ReactionTerm, mesh) -> ReactionTerm:
    """Term whose y-factors live on the mesh's unknown nodes."""
    if term.y_dependent:
        n = term._yshape()[-1]
        if n == mesh.n_nodes:
            return term.restrict(mesh.unknown_index)
        if n != mesh.n_unknowns:
            raise ValueError("y-factors do not match the mesh")
    return term


def _as_profile(arr, mesh) -> np.ndarray:
    arr = np.asarray(arr, dtype=float)
    return np.full(mesh.n_unknowns, float(arr)) if arr.ndim == 0 else arr.reshape(-1)


def u_samples(term: ReactionTerm, n: int) -> np.ndarray:
    """Uniform grid on [0, 1] merged with the interior breakpoints."""
    return np.unique(np.concatenate([np.linspace(0.0, 1.0, n), term.breakpoints]))


def holder_constants(term: ReactionTerm, n: int = 10_000, u_max: float = 1.0):
    """Sampled max of |f_u(u) - f_u(0)| / u^gamma; used for both one-sided bounds."""
    u = np.linspace(0.0, u_max, n + 1)[1:]
    fu0 = term.fu(np.zeros(1))
    fu = term.fu(u[:, None] if term.y_dependent else u)
    q = np.abs(fu - fu0) / (u[:, None] if term.y_dependent else u) ** term.holder_gamma
    k = float(np.max(q))
    return k, k


def check_hypotheses(term: ReactionTerm, mesh, n_samples: int = 10_000) -> HypothesisReport:
    from .cross_section import principal_eigenpair

    notes = []
    f0 = term.f(np.zeros(1))
    f1 = term.f(np.ones(1))
    h1 = bool(np.all(np.abs(f0) == 0.0) and np.all(f1 <= 0.0))
    if not h1:
        notes.append("(H1) fails: need f(0,y)=0 and f(1,y)<=0")

    # continuity of f and f_u across breakpoints, finite Holder quotient of f_u
    h2 = True
    for b in term.breakpoints[1:-1]:
        jump_f = np.max(np.abs(term.f(b, "left") - term.f(b, "right")))
        jump_fu = np.max(np.abs(term.fu(b, "left") - term.fu(b, "right")))
        if jump_f > CONTINUITY_TOL:
            h2 = False
            notes.append(f"f jumps by {jump_f:.3g} at u={b}")
        if jump_fu > CONTINUITY_TOL:
            h2 = False
            notes.append(f"f_u jumps by {jump_fu:.3g} at u={b}")
    u = u_samples(term, n_samples)
    fu = term.fu(u[:, None] if term.y_dependent else u)
    du = np.diff(u)
    dq = np.abs(np.diff(fu, axis=0)) / (du[:, None] if term.y_dependent else du) ** term.holder_gamma
    holder = float(np.max(dq))
    if not np.isfinite(holder):
        h2 = False
    notes.append("(H2) checked at sampled resolution")

    k_bar, k_under = holder_constants(term, n_samples)
    notes.append("k_bar, k_under are sampled estimates and may under-approximate")

    term = on_mesh(term, mesh)
    pot = _as_profile(term.fu(0.0), mesh)
    nu0 = principal_eigenpair(mesh, pot).nu
    return HypothesisReport(h1, h2, bool(nu0 < 0.0), float(nu0), holder, k_bar, k_under, notes)


def critical_points(term: ReactionTerm) -> list[float]:
    """Real critical points of f_u inside each piece."""
    pts = []
    for c, b0, b1 in zip(term.coeffs, term.breakpoints, term.breakpoints[1:]):
        d2 = P.polyder(c, 2)
        if d2.size == 0 or not np.any(d2):
            continue
        for r in P.polyroots(d2) if d2.size > 1 else []:
            if abs(r.imag) < 1e-12 and b0 <= r.real <= b1:
                pts.append(float(r.real))
    return pts


def q_profile(term: ReactionTerm, mesh, n_samples: int = 10_000) -> np.ndarray:
    """q(y) = max_s f_u(s, y) on the mesh's unknown nodes."""
    term = on_mesh(term, mesh)
    s = np.unique(np.concatenate([u_samples(term, n_samples), critical_points(term)]))
    s = s[:, None] if term.y_dependent else s
    q = np.maximum(term.fu(s, "left").max(axis=0), term.fu(s, "right").max(axis=0))
    return _as_profile(q, mesh)
