"""
Command-line front end.

Exit codes: 0 success, 1 a check failed (or the run aborted), 2 bad input.
"""

import argparse
import dataclasses
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis, presets
from .control import validate_gains
from .errors import IBVSError, NeverCrossed, NeverEntered, ParseError, ScenarioInvalid, SegmentMissing
from .perception import flow_from_sphere_samples
from .simulator import read_scenario, run_scenario, stop_reason, validate_scenario
from .trajectory import read_log_csv, write_log_csv

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

# acceptance thresholds used by `run`, `sweep` and `check`
CROSSING_RATE_MAX = -0.05
EDGE_MARGIN = 0.05


class InputError(Exception):
    pass


def _load(spec):
    """Scenario from a file path, or a bundled scenario by name."""
    p = Path(spec)
    if not p.exists() and spec in presets.BUNDLED:
        return presets.load_bundled(spec)
    if not p.exists():
        raise InputError(f"no such scenario file: {spec}")
    return read_scenario(p)


# ---------------------------------------------------------------------------
# checks shared by run / sweep / check
# ---------------------------------------------------------------------------


def run_checks(log, scenario):
    """Assertions appropriate for the scenario's mission kind."""
    kind = scenario.gains.mission.kind
    out = []
    reason = stop_reason(log)
    ok_stop = reason in ("touchdown", "ramp_complete", "window_done", "duration")
    if kind == "full":
        ok_stop = reason in ("touchdown", "ramp_complete")
    out.append(
        analysis.Assertion("run.completed", 1.0 if ok_stop else 0.0, 1.0, ">=", ok_stop, f"stop={reason}")
    )
    if kind in ("full", "window"):
        try:
            rep = analysis.check_crossing(
                log, scenario.scene.window, scenario.gains.window.eps, CROSSING_RATE_MAX, EDGE_MARGIN
            )
            out += rep.assertions
        except (NeverCrossed, NeverEntered) as exc:
            out.append(analysis.Assertion("crossing.found", 0.0, 1.0, ">=", False, str(exc)))
    if kind in ("full", "landing"):
        try:
            out += analysis.check_landing(log, scenario.scene.pad).assertions
        except SegmentMissing as exc:
            out.append(analysis.Assertion("landing.segment", 0.0, 1.0, ">=", False, str(exc)))
    return out


def log_integrity(log):
    """Structural assertions that hold for any log written by the simulator."""
    out = []
    finite = bool(np.all(np.isfinite(log.data)))
    out.append(analysis.Assertion("log.finite", float(finite), 1.0, ">=", finite))
    t = log.t
    if len(t) > 1:
        steps = np.diff(t)
        spread = float(np.max(np.abs(steps - steps[0])))
        ok = bool(steps[0] > 0 and spread <= 1e-6 * max(1.0, float(t[-1])))
        out.append(analysis.Assertion("log.constant_step", spread, 1e-6, "<=", ok))
    modes = log.mode
    mono = bool(np.all(np.diff(modes) >= 0) and np.all((modes >= 1) & (modes <= 4)))
    out.append(analysis.Assertion("log.mode_monotone", float(mono), 1.0, ">=", mono))
    return out


def _summary_row(start, log, scenario):
    row = {"x0": start[0], "y0": start[1], "z0": start[2]}
    ev = log.events
    row["t_w"] = math.nan
    row["t_lim"] = math.nan
    row["d_o_rate"] = math.nan
    if scenario.scene.window is not None:
        try:
            rep = analysis.check_crossing(log, scenario.scene.window, scenario.gains.window.eps)
            row.update(t_w=rep.t_w, t_lim=rep.t_lim, d_o_rate=rep.d_o_rate)
        except (NeverCrossed, NeverEntered):
            pass
    row["touchdown_error"] = math.nan
    if scenario.scene.pad is not None and np.any(log.mode == 3):
        rep = analysis.check_landing(log, scenario.scene.pad)
        row["touchdown_error"] = rep.terminal_lateral
    row["T4"] = ev.get("T4", math.nan)
    return row


# ---------------------------------------------------------------------------
# plots
# ---------------------------------------------------------------------------


def write_plots(log, out_dir, stem):
    """Static SVG figures; byte-stable for a given log."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "ibvsquad"
    matplotlib.rcParams["svg.fonttype"] = "none"
    panels = {
        "position": [("xi", "position [m]")],
        "velocity": [("v", "velocity [m/s]")],
        "features": [("q_t", "q_t"), ("q_w", "q_w")],
        "flow": [("phi_t", "phi_t [1/s]"), ("phi_w", "phi_w [1/s]")],
    }
    t = log.t
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, series in panels.items():
        fig, axes = plt.subplots(len(series), 1, figsize=(6, 2.6 * len(series)), sharex=True, squeeze=False)
        for ax, (prefix, label) in zip(axes[:, 0], series):
            V = log.vec(prefix)
            for j, c in enumerate("xyz"):
                ax.plot(t, V[:, j], lw=1.0, label=f"{prefix}_{c}")
            ax.set_ylabel(label)
            ax.grid(True, lw=0.3)
            ax.legend(loc="best", fontsize=7)
        axes[-1, 0].set_xlabel("t [s]")
        fig.tight_layout()
        p = Path(out_dir) / f"{stem}_{name}.svg"
        fig.savefig(p, format="svg", metadata={"Date": None})
        plt.close(fig)
        paths.append(p)
    return paths


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_run(args):
    s = _load(args.scenario)
    if args.seed is not None:
        s.seed = args.seed
        s.noise.seed = args.seed
    if args.mode2_literal:
        s.gains.mission.mode2_literal = True
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.scenario).stem
    log = run_scenario(s)
    csv = out / f"{stem}.csv"
    write_log_csv(log, csv)
    assertions = run_checks(log, s)
    analysis.write_report(out / f"{stem}.report", assertions, [f"scenario: {args.scenario}", f"stop: {stop_reason(log)}"])
    if args.plots:
        write_plots(log, out, stem)
    for a in assertions:
        print(a.line())
    for note in log.notes:
        print(f"note: {note}")
    print(f"wrote {csv}")
    if args.no_checks:
        return EXIT_OK
    return EXIT_OK if all(a.passed for a in assertions) else EXIT_FAIL


def read_sweep(path):
    """Parse a sweep file: base scenario plus a list or grid of start positions."""
    path = Path(path)
    try:
        d = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    allowed = {"base", "starts", "grid", "seed_policy"}
    extra = set(d) - allowed
    if extra:
        raise ParseError(f"unknown key '{sorted(extra)[0]}'", key=sorted(extra)[0])
    if "base" not in d:
        raise ParseError("missing required key 'base'", key="base")
    base = d["base"]
    if not Path(base).is_absolute() and (path.parent / base).exists():
        base = str(path.parent / base)
    starts = [list(map(float, p)) for p in d.get("starts", [])]
    if "grid" in d:
        g = d["grid"]
        for x in g["x"]:
            for y in g["y"]:
                for z in g["z"]:
                    starts.append([float(x), float(y), float(z)])
    if not starts:
        raise ParseError("sweep needs at least one start position", key="starts")
    policy = d.get("seed_policy", "fixed")
    if policy not in ("fixed", "increment"):
        raise ParseError("seed_policy must be 'fixed' or 'increment'", key="seed_policy")
    return base, starts, policy


def _sweep_one(job):
    scenario, start, out_dir, stem = job
    log = run_scenario(scenario)
    assertions = run_checks(log, scenario)
    write_log_csv(log, Path(out_dir) / f"{stem}.csv")
    analysis.write_report(Path(out_dir) / f"{stem}.report", assertions)
    row = _summary_row(start, log, scenario)
    row["pass"] = all(a.passed for a in assertions)
    row["failed"] = ";".join(a.name for a in assertions if not a.passed)
    return row


def sweep_scenarios(base, starts, policy):
    jobs = []
    for i, start in enumerate(starts):
        s = dataclasses.replace(base)
        s.initial = dataclasses.replace(base.initial, position=np.array(start, dtype=float))
        if policy == "increment":
            s.seed = base.seed + i
            s.noise = dataclasses.replace(base.noise, seed=s.seed)
        try:
            validate_scenario(s)
        except ScenarioInvalid as exc:
            raise ScenarioInvalid(f"start {i} {start}: {exc}") from None
        jobs.append(s)
    return jobs


def cmd_sweep(args):
    base_path, starts, policy = read_sweep(args.sweep)
    base = _load(base_path)
    scenarios = sweep_scenarios(base, starts, policy)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(s, st, out, f"run{i:03d}") for i, (s, st) in enumerate(zip(scenarios, starts))]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            rows = list(ex.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(j) for j in jobs]
    cols = ["x0", "y0", "z0", "t_w", "t_lim", "d_o_rate", "touchdown_error", "T4", "pass", "failed"]
    lines = [",".join(cols)]
    for r in rows:
        lines.append(",".join(f"{r[c]:.6g}" if isinstance(r[c], float) else str(r[c]) for c in cols))
    n_ok = sum(r["pass"] for r in rows)
    lines.append(f"# passed: {n_ok}/{len(rows)}")
    (out / "summary.csv").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK if n_ok == len(rows) else EXIT_FAIL


def cmd_validate_gains(args):
    s = _load(args.scenario)
    r_w = args.r_w if args.r_w is not None else (s.scene.window.r_w if s.scene.window is not None else None)
    if r_w is None:
        raise InputError("scenario has no window; pass --r-w")
    accel = np.abs(s.disturbance.amplitude) / s.vehicle.mass if s.disturbance.kind != "zero" else 0.0
    eta_t = s.scene.pad.normal if s.scene.pad is not None else np.array([0.0, 0.0, 1.0])
    eta_w = s.scene.window.normal if s.scene.window is not None else np.array([1.0, 0.0, 0.0])
    rep = validate_gains(s.gains.window, s.gains.landing, r_w, accel, eta_t, eta_w)
    for line in rep.lines():
        print(line)
    return EXIT_OK if rep.passed else EXIT_FAIL


def flow_oracle_trials(n_samples, cap_deg, trials, seed):
    """Relative errors of the sphere-sampled flow against ``v / d`` for random ``(v, d)``."""
    rng = np.random.default_rng(seed)
    cap = math.radians(cap_deg)
    rows = []
    for _ in range(trials):
        v = rng.uniform(-1.0, 1.0, 3)
        d = float(rng.uniform(0.5, 3.0))
        xi = np.array([0.0, 0.0, -d])
        est = flow_from_sphere_samples(xi, v, np.array([0.0, 0.0, 1.0]), 0.0, cap, n_samples, rng)
        truth = v / d
        rows.append((v, d, float(np.linalg.norm(est - truth) / np.linalg.norm(truth))))
    return rows


def cmd_flow_oracle(args):
    rows = flow_oracle_trials(args.samples, args.cap_deg, args.trials, args.seed)
    print("trial  |v|      d      rel_err")
    worst = 0.0
    for i, (v, d, e) in enumerate(rows):
        print(f"{i:5d}  {np.linalg.norm(v):.3f}  {d:.3f}  {e:.4%}")
        worst = max(worst, e)
    ok = worst <= args.tolerance
    status = "PASS" if ok else "FAIL"
    print(f"{status} max relative error {worst:.3%} <= {args.tolerance:.0%} ({args.samples} samples, cap {args.cap_deg:g} deg)")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_check(args):
    try:
        log = read_log_csv(args.log)
    except FileNotFoundError:
        raise InputError(f"no such log file: {args.log}") from None
    assertions = log_integrity(log)
    if all(a.passed for a in assertions):
        s = _load(args.scenario)
        assertions += run_checks(log, s)
    for a in assertions:
        print(a.line())
    if args.report:
        analysis.write_report(args.report, assertions)
    return EXIT_OK if all(a.passed for a in assertions) else EXIT_FAIL


def build_parser():
    p = argparse.ArgumentParser(prog="ibvsquad", description=__doc__.strip().splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one scenario and check it")
    r.add_argument("scenario", help="scenario JSON file or bundled name")
    r.add_argument("--out", default="out")
    r.add_argument("--seed", type=int)
    r.add_argument("--plots", action="store_true")
    r.add_argument("--no-checks", action="store_true")
    r.add_argument("--mode2-literal", action="store_true")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run a base scenario from many start positions")
    s.add_argument("sweep", help="sweep JSON file")
    s.add_argument("--out", default="out")
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_sweep)

    g = sub.add_parser("validate-gains", help="check the sufficient gain conditions")
    g.add_argument("scenario")
    g.add_argument("--r-w", type=float, dest="r_w")
    g.set_defaults(func=cmd_validate_gains)

    f = sub.add_parser("flow-oracle", help="Monte-Carlo check of the flow calibration")
    f.add_argument("--samples", type=int, default=100_000)
    f.add_argument("--cap-deg", type=float, default=30.0)
    f.add_argument("--trials", type=int, default=10)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--tolerance", type=float, default=0.02)
    f.set_defaults(func=cmd_flow_oracle)

    c = sub.add_parser("check", help="re-run the checks on a logged trajectory")
    c.add_argument("log")
    c.add_argument("--scenario", default="nominal", help="scenario the log came from")
    c.add_argument("--report")
    c.set_defaults(func=cmd_check)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioInvalid, InputError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except IBVSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
