"""Command-line entry point: `frontlab <command> --config path [--out dir] [--seed n]`."""
from __future__ import annotations

import argparse
import hashlib
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .aux_front import aux_residual, build_w, select_parameters, write_aux_csv
from .config import ConfigError, RunConfig, canonical_json
from .cross_section import mesh_from_dict, write_eigen_csv
from .equilibria import enumerate_equilibria, write_equilibria_csv
from .front_solver import build_variational_front, default_grid, level_position, write_front_csv, z_derivative_max
from .multiplicity import front_census
from .nonlinearity import check_hypotheses, q_profile, term_from_dict
from .speeds import SubcriticalError, principal_nu0, speed_report, threshold_speeds
from .stability import bump, evolve, predicted_rate, write_history_csv

log = logging.getLogger("frontlab")

COMMANDS = ("speeds", "eigen", "equilibria", "aux", "front", "census", "stability", "verify-example")
EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_COMPUTE = 0, 1, 2, 3


class Run:
    """Output directory with a manifest of everything written."""

    def __init__(self, out: Path, command: str, cfg: RunConfig):
        self.out = out
        self.command = command
        self.cfg = cfg
        self.files: list[str] = []
        out.mkdir(parents=True, exist_ok=True)

    def write_text(self, name: str, text: str) -> Path:
        path = self.out / name
        with open(path, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)
        self.files.append(name)
        return path

    def json(self, name: str, obj) -> Path:
        return self.write_text(name, canonical_json(obj))

    def track(self, name: str) -> None:
        self.files.append(name)

    def manifest(self, status: str) -> None:
        entries = []
        for name in sorted(set(self.files)):
            digest = hashlib.sha256((self.out / name).read_bytes()).hexdigest()
            entries.append({"file": name, "sha256": digest})
        self.json("manifest.json", {
            "command": self.command, "version": __version__, "status": status,
            "config": self.cfg.data, "files": entries,
        })


def _plot_script(csv_names: list[str], title: str, ylabel: str = "u") -> str:
    lines = [
        "# gnuplot script; run from this directory: gnuplot -p " + "plot.gp",
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set title '{title}'",
        "set xlabel 'z'",
        f"set ylabel '{ylabel}'",
    ]
    plots = [f"'{n}' using 1:2 with lines" for n in csv_names]
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"


def _setup(cfg: RunConfig):
    term = term_from_dict(cfg["term"])
    mesh = mesh_from_dict(cfg["mesh"])
    return term, mesh


def _brackets(cfg):
    sp = cfg["speeds"]
    out = {}
    for key, name in (("c_star_bracket", "c_star"), ("c1_star_bracket", "c1_star"), ("c_dag_bracket", "c_dag")):
        if sp[key]:
            out[name] = tuple(sp[key])
    return out


# -- commands -----------------------------------------------------------------
def cmd_speeds(cfg, run):
    term, mesh = _setup(cfg)
    hyp = check_hypotheses(term, mesh)
    rep = speed_report(term, mesh, brackets=_brackets(cfg), tol=cfg["speeds"]["tol"],
                       with_thresholds=cfg["speeds"]["thresholds"])
    d = rep.as_dict()
    run.json("speeds.json", {"speeds": d, "hypotheses": {
        "H1": hyp.h1, "H2": hyp.h2, "U": hyp.u, "nu0": hyp.nu0, "k_bar": hyp.k_bar, "k_under": hyp.k_under,
        "holder_estimate": hyp.holder_estimate, "notes": hyp.notes}})
    keys = ["c0", "c_sharp", "c_star", "c1_star", "c_dag_v1", "c_dag_shooting"]
    row = ",".join("" if d[k] is None else format(d[k], ".17g") for k in keys)
    run.write_text("speeds.csv", ",".join(keys) + "\n" + row + "\n")
    print(canonical_json(d), end="")
    return EXIT_OK


def cmd_eigen(cfg, run):
    term, mesh = _setup(cfg)
    pair = principal_nu0(term, mesh)
    from .cross_section import principal_eigenpair

    hat = principal_eigenpair(mesh, q_profile(term, mesh))
    write_eigen_csv(run.out / "eigen.csv", mesh, pair)
    run.track("eigen.csv")
    write_eigen_csv(run.out / "eigen_hat.csv", mesh, hat)
    run.track("eigen_hat.csv")
    run.json("eigen.json", {"nu0": pair.nu, "nu_hat": hat.nu, "iterations": pair.iterations,
                            "iterations_hat": hat.iterations})
    print(f"nu0 = {pair.nu:.17g}\nnu_hat = {hat.nu:.17g}")
    return EXIT_OK


def cmd_equilibria(cfg, run):
    term, mesh = _setup(cfg)
    eqs = enumerate_equilibria(term, mesh)
    write_equilibria_csv(run.out / "equilibria.csv", eqs)
    run.track("equilibria.csv")
    run.json("equilibria.json", [{
        "v": e.v, "energy": e.energy, "nu_tilde_left": e.nu_tilde_left, "nu_tilde_right": e.nu_tilde_right,
        "is_v1": e.is_v1, "resolved": e.resolved, "residual": e.residual, "notes": e.notes} for e in eqs])
    for e in eqs:
        print(f"v={np.min(e.v):.12g}  E={e.energy:.12g}  nu~={e.nu_tilde_left:.6g}/{e.nu_tilde_right:.6g}"
              f"{'  v1' if e.is_v1 else ''}")
    return EXIT_OK


def cmd_aux(cfg, run):
    term, mesh = _setup(cfg)
    c = cfg["aux"]["c"]
    a, delta = select_parameters(c, term, mesh)
    grid = default_grid(c, term, mesh, cfg["zgrid"]["dz"], a=a)
    aux = build_w(c, term, mesh, grid, boundary_scale=cfg["aux"]["boundary_scale"], params=(a, delta))
    write_aux_csv(run.out / "aux.csv", aux, mesh)
    run.track("aux.csv")
    r = aux_residual(aux, term, mesh)
    sel = (grid.z > 3.0) & (grid.z < grid.z_max - 2.0)
    run.json("aux.json", {**aux.as_dict(), "residual_inf": float(np.max(np.abs(r[sel])))})
    run.write_text("plot.gp", _plot_script(["aux.csv"], f"auxiliary front, c={c}", "w"))
    print(f"a = {a:.17g}\ndelta = {delta:.17g}\niterations = {aux.iterations}")
    return EXIT_OK


def _front_meta(p, term, mesh):
    from .front_solver import left_plateau_energy

    return {**p.summary(), "dz_u_max": z_derivative_max(p),
            "plateau_energy": left_plateau_energy(p, term, mesh)}


def cmd_front(cfg, run):
    term, mesh = _setup(cfg)
    fc = cfg["front"]
    p = build_variational_front(fc["c"], term, mesh, tuple(fc["band"]), dz=cfg["zgrid"]["dz"],
                                boundary_scale=fc["boundary_scale"])
    write_front_csv(run.out / "front.csv", p)
    run.track("front.csv")
    run.json("front.json", _front_meta(p, term, mesh))
    run.write_text("plot.gp", _plot_script(["front.csv"], f"front, c={fc['c']}"))
    print(f"plateau = {p.plateau_value:.12g}\na_fit = {p.a_fit:.12g}\nlambda_fit = {p.lambda_fit:.12g}"
          f"\nresidual = {p.residual_inf:.3g}")
    return EXIT_OK


def _census(cfg, term, mesh, speeds, run, c, prefix):
    rep = front_census(c, term, mesh, config={k: cfg["census"][k] for k in
                                              ("richardson", "shooting", "second_amplitude", "b_scan")}
                       | {"dz": cfg["zgrid"]["dz"]}, speeds=speeds)
    names = []
    for i, e in enumerate(rep.fronts):
        name = f"{prefix}front{i}.csv"
        write_front_csv(run.out / name, e.profile)
        run.track(name)
        names.append(name)
    run.json(f"{prefix}census.json", rep.as_dict())
    run.write_text(f"{prefix}plot.gp", _plot_script(names, f"fronts at c={c}"))
    return rep


def cmd_census(cfg, run):
    term, mesh = _setup(cfg)
    sp = speed_report(term, mesh, brackets=_brackets(cfg), tol=cfg["speeds"]["tol"],
                      with_thresholds=cfg["speeds"]["thresholds"])
    for c in cfg["census"]["c_list"]:
        rep = _census(cfg, term, mesh, sp, run, c, f"c{c:g}_")
        print(f"c={c:g}: {rep.regime} (expected {rep.expected}), plateaus {rep.plateaus}")
    return EXIT_OK


def cmd_stability(cfg, run):
    term, mesh = _setup(cfg)
    sc = cfg["stability"]
    c, cp = sc["c"], sc["c_prime"]
    p = build_variational_front(c, term, mesh, tuple(sc["band"]), dz=cfg["zgrid"]["dz"])
    _, cs = threshold_speeds(term, mesh)
    nu_hat = -(cs / 2.0) ** 2
    rate = predicted_rate(c, cp, nu_hat)
    zc = level_position(p, 0.5 * p.plateau_value)
    win = (zc - sc["window"], zc + sc["window"])
    w0 = bump(p.z, zc, sc["bump_width"], sc["amplitude"])
    w0 = np.broadcast_to(w0[:, None] * (p.psi0[None, :] if mesh.dim else 1.0), p.u.shape)
    dt = sc["dt_factor"] * p.dz**2
    st = evolve(p, w0, cp, dt, sc["t_end"], term, mesh, window=win, record_every=10)
    write_history_csv(run.out / "stability.csv", st)
    run.track("stability.csv")
    run.json("stability.json", {"c": c, "c_prime": cp, "nu_hat": nu_hat, "predicted_rate": rate,
                                "sigma_measured": st.sigma_measured, "clip_events": st.clip_events,
                                "dt": dt, "t_end": st.t})
    run.write_text("plot.gp", "set datafile separator ','\nset key autotitle columnhead\nset logscale y\n"
                   "set xlabel 't'\nset ylabel 'weighted norm'\nplot 'stability.csv' using 1:2 with lines\n")
    print(f"predicted rate >= {rate:.6g}\nmeasured rate = {st.sigma_measured:.6g}\nclip events = {st.clip_events}")
    return EXIT_OK


def tanh_front_error(term, c):
    """Sup distance between the orbit leaving u = 1 and 3/4 - tanh(sqrt(5/2) z)/4, aligned at u = 3/4."""
    from .shooting import plateau_front

    r = plateau_front(c, term, 1.0, z_lo=-10.0, z_hi=15.0)
    i = int(np.argmax(r.u < 0.75))
    z_mid = np.interp(0.75, [r.u[i], r.u[i - 1]], [r.z[i], r.z[i - 1]])
    exact = 0.75 - 0.25 * np.tanh(np.sqrt(2.5) * (r.z - z_mid))
    return float(np.max(np.abs(r.u - exact)))


def cmd_verify(cfg, run):
    """Reference example: thresholds, exact heteroclinic, multiplicity at 2.25, uniqueness at 6."""
    from .nonlinearity import example61
    from .cross_section import CrossSectionMesh

    term, mesh = example61(), CrossSectionMesh.point()
    rows = []

    def check(name, value, target, tol):
        ok = value is not None and abs(value - target) <= tol
        rows.append({"quantity": name, "value": value, "target": target, "tol": tol, "pass": bool(ok)})

    c_dag = 9.0 / np.sqrt(10.0)
    sp = speed_report(term, mesh)
    check("c0", sp.c0, 2.0, 1e-12)
    check("c_sharp", sp.c_sharp, np.sqrt(127.0 / 5.0), 1e-6)
    check("c_star", sp.c_star, 2.0, 0.05)
    check("c1_star", sp.c1_star, 2.0, 0.05)
    check("c_dag (functional)", sp.c_dag_v1, c_dag, 0.01)
    check("c_dag (shooting)", sp.c_dag_shooting, c_dag, 0.01)
    err = tanh_front_error(term, c_dag)
    check("tanh front sup error", err, 0.0, 1e-5)
    low = _census(cfg, term, mesh, sp, run, 2.25, "c2.25_")
    rows.append({"quantity": "regime at c=2.25", "value": low.regime, "target": "MULTIPLE",
                 "pass": low.regime == "MULTIPLE"})
    pl = low.plateaus
    check("lower plateau at c=2.25", pl[0] if pl else None, 0.5, 1e-3)
    check("upper plateau at c=2.25", pl[-1] if pl else None, 1.0, 1e-3)
    high = _census(cfg, term, mesh, sp, run, 6.0, "c6_")
    rows.append({"quantity": "regime at c=6", "value": high.regime, "target": "UNIQUE_CERTIFIED",
                 "pass": high.regime == "UNIQUE_CERTIFIED"})
    check("plateau at c=6", high.plateaus[0] if len(high.plateaus) == 1 else None, 0.5, 1e-3)
    run.json("verify.json", {"rows": rows})
    width = max(len(r["quantity"]) for r in rows)
    print(f"{'quantity':<{width}}  {'value':>22}  {'target':>18}  result")
    for r in rows:
        v, t = r["value"], r["target"]
        vs = f"{v:.12g}" if isinstance(v, float) else str(v)
        ts = f"{t:.12g}" if isinstance(t, float) else str(t)
        print(f"{r['quantity']:<{width}}  {vs:>22}  {ts:>18}  {'PASS' if r['pass'] else 'FAIL'}")
    return EXIT_OK if all(r["pass"] for r in rows) else EXIT_FAIL


HANDLERS = {
    "speeds": cmd_speeds, "eigen": cmd_eigen, "equilibria": cmd_equilibria, "aux": cmd_aux,
    "front": cmd_front, "census": cmd_census, "stability": cmd_stability, "verify-example": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="frontlab", description="Travelling fronts of reaction-diffusion equations in cylinders.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="TOML run configuration (defaults are used when omitted)")
    ap.add_argument("--out", help="output directory (overrides the config)")
    ap.add_argument("--seed", type=int, help="random seed (overrides the config)")
    ap.add_argument("-v", "--verbose", action="store_true")
    ap.add_argument("--version", action="version", version=f"frontlab {__version__}")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig.load(args.config) if args.config else RunConfig.from_dict({})
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.out:
        cfg.data["output"] = args.out
    if args.seed is not None:
        cfg.data["seed"] = args.seed
    np.random.seed(cfg["seed"])
    run = Run(Path(cfg["output"]), args.command, cfg)
    t0 = time.perf_counter()
    try:
        status = HANDLERS[args.command](cfg, run)
    except (SubcriticalError, ValueError, RuntimeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        run.manifest("error")
        return EXIT_COMPUTE
    log.info("%s finished in %.2f s", args.command, time.perf_counter() - t0)
    run.manifest("ok" if status == EXIT_OK else "fail")
    return status


if __name__ == "__main__":
    sys.exit(main())
