"""Front census at a fixed speed: collect fronts from independent routes and classify."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .aux_front import build_w, select_parameters
from .equilibria import enumerate_equilibria
from .front_solver import FrontProfile, compare_fronts, default_grid, minimize_front, richardson
from .speeds import SpeedReport, lambda_pm, speed_report

log = logging.getLogger(__name__)

MULTIPLE, UNIQUE_CERTIFIED, UNIQUE_OBSERVED, UNKNOWN = (
    "MULTIPLE", "UNIQUE_CERTIFIED", "UNIQUE_OBSERVED", "UNKNOWN",
)
DISTINCT = 1e-2
AGREE = 1e-6


class CertificationError(RuntimeError):
    """Two distinct fronts above the uniqueness threshold: the computation is wrong."""


@dataclass
class CensusEntry:
    profile: FrontProfile
    tag: dict


@dataclass
class CensusReport:
    c: float
    fronts: list[CensusEntry]
    distances: np.ndarray
    regime: str
    expected: str
    speeds: SpeedReport
    notes: list[str] = field(default_factory=list)

    @property
    def plateaus(self) -> list[float]:
        return sorted({round(e.profile.plateau_value, 9) for e in self.fronts})

    def as_dict(self) -> dict:
        return {
            "c": self.c,
            "regime": self.regime,
            "expected": self.expected,
            "plateaus": self.plateaus,
            "fronts": [{**e.tag, **e.profile.summary()} for e in self.fronts],
            "distances": self.distances.tolist(),
            "speeds": self.speeds.as_dict(),
            "notes": list(self.notes),
        }


def expected_regime(c: float, sp: SpeedReport) -> str:
    if c > sp.c_sharp:
        return UNIQUE_CERTIFIED
    if sp.c_star is not None and sp.c_dag_v1 is not None and sp.c_star < c < sp.c_dag_v1:
        return MULTIPLE
    return UNKNOWN


def classify(c: float, sp: SpeedReport, distances: np.ndarray) -> tuple[str, list[str]]:
    """Regime from the speed and the pairwise distance matrix alone."""
    n = len(distances)
    notes = []
    if n == 0:
        return UNKNOWN, ["no fronts computed"]
    # single-linkage clusters at the DISTINCT threshold
    label = list(range(n))
    for i in range(n):
        for j in range(i + 1, n):
            if distances[i, j] <= DISTINCT:
                old, new = label[j], label[i]
                label = [new if x == old else x for x in label]
    clusters = len(set(label))
    spread = max((distances[i, j] for i in range(n) for j in range(n) if label[i] == label[j]), default=0.0)
    if clusters >= 2:
        if c > sp.c_sharp:
            raise CertificationError(f"{clusters} distinct fronts at c={c} > c_sharp={sp.c_sharp}")
        if spread > AGREE:
            notes.append(f"fronts within a cluster differ by {spread:.3g}")
        return MULTIPLE, notes
    if spread > AGREE:
        notes.append(f"fronts differ by {spread:.3g}, between the agreement and distinctness thresholds")
        return UNKNOWN, notes
    return (UNIQUE_CERTIFIED if c > sp.c_sharp else UNIQUE_OBSERVED), notes


def distance_matrix(entries: list[CensusEntry]) -> np.ndarray:
    n = len(entries)
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d[i, j] = d[j, i] = compare_fronts(entries[i].profile, entries[j].profile)
    return d


def _variational(c, term, mesh, bands, dz, scale, refine, params):
    """Minimizers for each band with one auxiliary front; optionally extrapolated from dz and dz/2."""
    grid = default_grid(c, term, mesh, dz, a=params[0])
    aux = build_w(c, term, mesh, grid, boundary_scale=scale, params=params)
    out = []
    fine_aux = build_w(c, term, mesh, grid.refined(), boundary_scale=scale, params=params) if refine else None
    for band in bands:
        p = minimize_front(c, aux, band, term, mesh)
        if refine:
            pf = minimize_front(c, fine_aux, band, term, mesh)
            p = richardson(p, pf)
        out.append(p)
    return out


def shooting_fronts(c, term, eqs, top):
    """Reference orbits leaving each y-stable equilibrium toward 0 (point cross-section)."""
    from .shooting import PLATEAU, plateau_front

    found = []
    for e in eqs:
        v = e.level
        if not e.resolved or e.nu_tilde <= 0 or v > top:
            continue
        res = plateau_front(c, term, v, z_lo=-60.0)
        if res.kind == PLATEAU:
            prof = res.profile(c, source="shooting")
            prof.plateau, prof.plateau_value = e, v
            found.append(prof)
    return found


def b_scan(c, term, eqs, top, n_scan=41, level=1e-4):
    """Backward tail shooting with a = 1: bracket the fast coefficient b of each connecting orbit.

    Returns a list of dicts {target, b_under, b_over, kinds}.  Ill conditioned
    when lambda_+ - lambda_- is large, so it is only used as supporting evidence.
    """
    from .shooting import overshoots, scan_b, bisect_b

    lm, lp = lambda_pm(c, -float(term.fu(0.0)))
    z0 = np.log(1.0 / level) / lm
    span = (z0 - 40.0 / lm - 40.0, z0)
    scale = level * np.exp(lp * z0)
    betas = np.linspace(-0.5, 0.5, n_scan)
    scans = scan_b(c, term, betas * scale, 1.0, span)
    targets = sorted(e.level for e in eqs if e.resolved and e.nu_tilde > 0 and e.level <= top)
    out = []
    for v in targets:
        under = [b for b, r in scans if not overshoots(r, v)]
        over = [b for b, r in scans if overshoots(r, v)]
        if not under or not over:
            continue
        b_u, b_o = max(under), min([b for b in over if b > max(under)] or [np.inf])
        if not np.isfinite(b_o):
            continue
        b_u, b_o = bisect_b(c, term, v, b_u, b_o, 1.0, span)
        out.append({"target": v, "b_under": b_u, "b_over": b_o, "z0": z0})
    return out


def front_census(c, term, mesh, config: dict | None = None, speeds: SpeedReport | None = None) -> CensusReport:
    """Variational fronts for bands (0, v1) and (0, top), a second auxiliary front above
    c_sharp, and shooting orbits for a point cross-section; deduplicated and classified.

    The second auxiliary front uses the tail amplitude a * second_amplitude, which
    any factor in (0, 1] keeps admissible.
    """
    cfg = {"dz": 0.02, "richardson": True, "shooting": True, "second_amplitude": 0.5, "b_scan": True}
    cfg.update(config or {})
    sp = speeds if speeds is not None else speed_report(term, mesh, with_thresholds=c <= 0)
    eqs = enumerate_equilibria(term, mesh)
    resolved = [e for e in eqs if e.resolved]
    v1 = next((e for e in eqs if e.is_v1), None)
    top = max(float(np.max(e.v)) for e in resolved)
    params = select_parameters(c, term, mesh)
    point = mesh.dim == 0
    refine = bool(cfg["richardson"] and point and cfg["shooting"])

    bands, tags = [], []
    if v1 is not None and float(np.max(v1.v)) < top:
        bands.append((0.0, v1.v if mesh.dim else v1.level))
        tags.append({"route": "variational", "band": [0.0, v1.level], "w": "primary"})
    bands.append((0.0, top))
    tags.append({"route": "variational", "band": [0.0, top], "w": "primary"})
    entries = [
        CensusEntry(p, t) for p, t in zip(_variational(c, term, mesh, bands, cfg["dz"], 2.0, refine, params), tags)
    ]
    if c > sp.c_sharp:
        params2 = (params[0] * cfg["second_amplitude"], params[1])
        p2 = _variational(c, term, mesh, [(0.0, top)], cfg["dz"], 2.0, refine, params2)[0]
        entries.append(CensusEntry(p2, {"route": "variational", "band": [0.0, top], "w": "secondary",
                                        "amplitude": params2[0]}))
    notes = []
    if point and cfg["shooting"]:
        for p in shooting_fronts(c, term, resolved, top):
            entries.append(CensusEntry(p, {"route": "shooting", "from": p.plateau_value}))
        if cfg["b_scan"] and c <= sp.c_sharp:
            try:
                scan = b_scan(c, term, resolved, top)
                notes.append("b-scan connecting orbits: " + ", ".join(
                    f"plateau {s['target']:.6g} at b in [{s['b_under']:.17g}, {s['b_over']:.17g}]" for s in scan))
            except Exception as exc:  # evidence only; the census does not depend on it
                notes.append(f"b-scan failed: {exc}")
    d = distance_matrix(entries)
    regime, more = classify(c, sp, d)
    exp = expected_regime(c, sp)
    if exp != UNKNOWN and exp != regime:
        more.append(f"observed {regime} but the speed thresholds predict {exp}")
    return CensusReport(c, entries, d, regime, exp, sp, notes + more)
