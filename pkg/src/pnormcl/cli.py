"""Command-line front end.

Subcommands: ``solve``, ``sweep``, ``compare-local``, ``limit-p0``,
``diagnose`` and ``repro-figures``. Exit codes: 0 success, 1 internal
failure, 2 invalid input, 3 invariant violation under ``--strict``.
"""

from __future__ import annotations

import argparse
from concurrent.futures import ProcessPoolExecutor
import json
import logging
import math
from pathlib import Path
import sys

import numpy as np

from . import __version__
from .diagnostics import build_report, convergence_table
from .errors import InvalidScenarioError, InvariantViolation, PicardNonConvergence
from .fields import Grid, VelocityModel, field_from_datum, riemann
from .io import (sha256_file, write_convergence_csv, write_json, write_metadata,
                 write_report, write_spacetime_csv, write_trajectory_csv, read_trajectory)
from .kernels import Kernel
from .local import LocalScenario, solve_godunov
from .scenario import Scenario, exponent_label, parse_exponent, scenario_from_dict
from .solver import SolverConfig, solve

log = logging.getLogger("pnormcl")

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT, EXIT_INVARIANT = 0, 1, 2, 3

# figure presets
PRESET_ETA = 0.5
PRESET_T = 0.5
PRESET_GRID = Grid(-4.0, 4.0, 1600)
ORIENTATIONS = {"increasing": (0.5, 1.0), "decreasing": (1.0, 0.5)}
FIGURE_P = {
    1: (0.25, 0.5, 1, 2, 4),
    2: (1, 0.5, 0.25, 0.1, 0.05, "zero"),
    3: (1, 2, 4, 8, 16, "infinity"),
    4: (1, 4, 16),
}
SPACETIME_FRAMES = 51


def preset_scenario(kernel: str, orientation: str, p, record_times=()) -> Scenario:
    a, b = ORIENTATIONS[orientation]
    d = riemann(a, b, 0.0)
    return Scenario(field_from_datum(d, PRESET_GRID), VelocityModel.linear(),
                    Kernel(kernel), p, PRESET_ETA, PRESET_T, tuple(record_times), d)


def _config_for(s: Scenario, base: SolverConfig) -> SolverConfig:
    # the weighted supremum is only integrated with the flux-form scheme
    if math.isinf(s.p) and base.scheme != "upwind_fv":
        return SolverConfig("upwind_fv", base.cfl, base.time_integrator,
                            strict_invariants=base.strict_invariants)
    return base


def _solve_job(job):
    s, c = job
    return solve(s, c)


def run_many(scenarios, config: SolverConfig, jobs: int) -> list:
    work = [(s, _config_for(s, config)) for s in scenarios]
    if jobs <= 1 or len(work) <= 1:
        return [_solve_job(w) for w in work]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(_solve_job, work))


class Outputs:
    """Tracks files written by one invocation and emits the hashed manifest."""

    def __init__(self, root, preset: str | None = None):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.files: list[Path] = []
        self.preset = preset
        self.scenarios: list = []
        self.notes: list[str] = []
        self.solver: dict | None = None

    def add(self, *paths):
        self.files.extend(Path(p) for p in paths)

    def run_dir(self, name: str) -> Path:
        d = self.root / name
        d.mkdir(parents=True, exist_ok=True)
        return d

    def save_run(self, traj, name: str, report: bool = True) -> Path:
        d = self.run_dir(name)
        write_trajectory_csv(traj, d / "trajectory.csv")
        write_metadata(traj, d / "metadata.json")
        self.add(d / "trajectory.csv", d / "metadata.json")
        if report and isinstance(traj.scenario, Scenario):
            self.add(*write_report(build_report(traj), d))
        self.scenarios.append({"name": name, "scenario": traj.scenario.to_dict()})
        return d

    def write_manifest(self) -> Path:
        manifest = {
            "version": __version__,
            "preset": self.preset,
            "output_dir": str(self.root),
            "solver": self.solver,
            "scenarios": self.scenarios,
            "determinism": "no randomness anywhere; reruns produce byte-identical CSVs",
            "notes": self.notes,
            "files": {str(p.relative_to(self.root)): sha256_file(p)
                      for p in sorted(set(self.files))},
        }
        path = self.root / "manifest.json"
        write_json(manifest, path)
        return path


def load_config(path):
    """Scenario dict plus an optional ``"solver"`` block."""
    try:
        d = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidScenarioError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(d, dict):
        raise InvalidScenarioError("config must be a JSON object")
    return scenario_from_dict(d), SolverConfig.from_dict(d.get("solver"))


def _with_strict(c: SolverConfig, strict: bool) -> SolverConfig:
    if not strict:
        return c
    d = c.to_dict()
    d["strict_invariants"] = True
    return SolverConfig.from_dict(d)


def _parse_values(raw, param: str) -> list:
    vals = []
    for item in raw:
        for tok in str(item).split(","):
            tok = tok.strip()
            if tok:
                vals.append(parse_exponent(tok) if param == "p" else float(tok))
    if not vals:
        raise InvalidScenarioError("no sweep values given")
    return vals


def _window(args, runs_and_ref) -> tuple[float, float]:
    if args.window:
        return tuple(args.window)
    g = runs_and_ref[0].snapshots[0].q.grid
    c = max(t.metadata.get("contamination_distance", 0.0) for t in runs_and_ref)
    return (g.x_min + c, g.x_max - c)


# --- subcommands -------------------------------------------------------------

def cmd_solve(args) -> int:
    s, c = load_config(args.config)
    c = _with_strict(c, args.strict)
    out = Outputs(args.out)
    out.solver = c.to_dict()
    traj = solve(s, c)
    out.save_run(traj, "run")
    out.write_manifest()
    return EXIT_OK


def _sweep(args, s: Scenario, c: SolverConfig, param: str, values, out: Outputs):
    scenarios = [s.with_changes(**{param: v}) for v in values]
    runs = run_many(scenarios, c, args.jobs)
    if param == "eta":
        fine = s.grid.refine(args.ref_factor)
        reference = solve_godunov(LocalScenario.from_nonlocal(s, fine))
        ref_name = "reference_local"
    else:
        reference = solve(s.with_changes(p=0.0), c)
        ref_name = "reference_p_zero"
    labels = [f"{param}_{exponent_label(v) if param == 'p' else f'{v:g}'}" for v in values]
    for lab, traj in zip(labels, runs):
        out.save_run(traj, lab)
    out.save_run(reference, ref_name, report=isinstance(reference.scenario, Scenario))
    window = _window(args, runs + [reference])
    table = convergence_table(list(zip(values, runs)), reference, window)
    path = out.root / "convergence.csv"
    write_convergence_csv(table, path)
    out.add(path)
    out.notes.append(f"window {window}")
    return table


def cmd_sweep(args) -> int:
    s, c = load_config(args.config)
    c = _with_strict(c, args.strict)
    out = Outputs(args.out, preset=f"sweep-{args.param}")
    out.solver = c.to_dict()
    _sweep(args, s, c, args.param, _parse_values(args.values, args.param), out)
    out.write_manifest()
    return EXIT_OK


def cmd_limit_p0(args) -> int:
    args.param = "p"
    return cmd_sweep(args)


def cmd_compare_local(args) -> int:
    s, c = load_config(args.config)
    c = _with_strict(c, args.strict)
    out = Outputs(args.out, preset="compare-local")
    out.solver = c.to_dict()
    traj = solve(s, c)
    reference = solve_godunov(LocalScenario.from_nonlocal(s, s.grid.refine(args.ref_factor)))
    out.save_run(traj, "nonlocal")
    out.save_run(reference, "local", report=False)
    table = convergence_table([(s.eta, traj)], reference, _window(args, [traj, reference]))
    write_convergence_csv(table, out.root / "convergence.csv")
    out.add(out.root / "convergence.csv")
    out.write_manifest()
    return EXIT_OK


def cmd_diagnose(args) -> int:
    d = Path(args.run_dir)
    if not (d / "trajectory.csv").exists() or not (d / "metadata.json").exists():
        raise InvalidScenarioError(f"{d} does not hold trajectory.csv and metadata.json")
    traj = read_trajectory(d / "trajectory.csv", d / "metadata.json")
    out = Outputs(args.out, preset="diagnose")
    out.add(*write_report(build_report(traj), out.root))
    out.write_manifest()
    return EXIT_OK


def _write_profiles(items, path) -> None:
    """Final-time profiles of several runs: ``p,t,x,q,W`` per edge."""
    with open(path, "w", newline="") as fh:
        fh.write("p,t,x,q,W\n")
        for label, traj in items:
            s = traj.final()
            x = s.q.grid.edges
            q = np.append(s.q.values, s.q.values[-1])
            for xi, qi, wi in zip(x, q, s.W.W_values):
                fh.write(f"{label},{s.t:.17g},{xi:.17g},{qi:.17g},{wi:.17g}\n")


def cmd_repro_figures(args) -> int:
    fig = args.figure
    out = Outputs(args.out, preset=f"figure-{fig}")
    base = _with_strict(SolverConfig(), args.strict)
    out.solver = base.to_dict()
    out.notes.append(f"grid [{PRESET_GRID.x_min}, {PRESET_GRID.x_max}] with "
                     f"{PRESET_GRID.n_cells} cells, eta {PRESET_ETA}, T {PRESET_T}, V(x) = 1 - x")
    ps = [parse_exponent(p) for p in FIGURE_P[fig]]
    kernels = ("exponential", "constant") if fig == 1 else ("constant",)
    if fig == 3:
        out.notes.append("p = infinity is exploratory and integrated with upwind_fv")
    for kernel in kernels:
        for orient in ORIENTATIONS:
            rt = np.linspace(0, PRESET_T, SPACETIME_FRAMES) if fig == 4 else ()
            scen = [preset_scenario(kernel, orient, p, rt) for p in ps]
            runs = run_many(scen, base, args.jobs)
            for s in scen:
                out.scenarios.append({"name": f"{kernel}_{orient}_p{exponent_label(s.p)}",
                                      "scenario": s.to_dict()})
            if fig == 4:
                for p, traj in zip(ps, runs):
                    path = out.root / f"figure4_{kernel}_{orient}_p{exponent_label(p)}.csv"
                    write_spacetime_csv(traj, path)
                    out.add(path)
            else:
                path = out.root / f"figure{fig}_{kernel}_{orient}.csv"
                _write_profiles([(exponent_label(p), t) for p, t in zip(ps, runs)], path)
                out.add(path)
    out.write_manifest()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pnormcl", description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--strict", action="store_true",
                    help="abort (exit 3) on invariant violations")
    ap.add_argument("--jobs", type=int, default=1, help="parallel runs")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="integrate one scenario")
    p.add_argument("config")
    p.set_defaults(func=cmd_solve)

    for name, func, help_ in (("sweep", cmd_sweep, "parameter sweep with convergence table"),
                              ("limit-p0", cmd_limit_p0, "p sweep against the p = 0 law")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config")
        if name == "sweep":
            p.add_argument("--param", choices=("eta", "p"), required=True)
        p.add_argument("--values", nargs="+", required=True)
        p.add_argument("--window", nargs=2, type=float, metavar=("LO", "HI"))
        p.add_argument("--ref-factor", type=int, default=5,
                       help="refinement of the local reference grid (eta sweeps)")
        p.set_defaults(func=func)

    p = sub.add_parser("compare-local", help="distance to the local entropy solution")
    p.add_argument("config")
    p.add_argument("--window", nargs=2, type=float, metavar=("LO", "HI"))
    p.add_argument("--ref-factor", type=int, default=5)
    p.set_defaults(func=cmd_compare_local)

    p = sub.add_parser("diagnose", help="recompute the report of a saved run")
    p.add_argument("run_dir")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("repro-figures", help="plot-ready CSVs for the figure presets")
    p.add_argument("--figure", type=int, choices=sorted(FIGURE_P), required=True)
    p.set_defaults(func=cmd_repro_figures)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.jobs < 1:
        log.error("--jobs must be >= 1")
        return EXIT_INPUT
    try:
        return args.func(args)
    except (InvariantViolation, PicardNonConvergence) as exc:
        log.error("invariant violation: %s", exc)
        return EXIT_INVARIANT
    except (InvalidScenarioError, NotImplementedError) as exc:
        log.error("invalid input: %s", exc)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        log.exception("internal failure: %s", exc)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
