"""Command-line driver: generate fleets, run the solvers, write artifacts.

Commands
--------
generate      draw a scenario and write it as JSON
solve-central solve the epigraph LP, write the optimum
solve-sync    run synchronous ADMM, write a trace CSV and summary
solve-async   run asynchronous ADMM, write a trace CSV and summary
compare       run baseline + all three solvers, write a comparison report
all           generate then compare, one consolidated output directory

Exit codes: 0 success, 1 solver failure, 2 invalid input.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .async_admm import DelayModel, run_async
from .centralized import solve_centralized
from .io import (_f, _fv, load_scenario, save_report, save_scenario,
                 write_trace_csv)
from .metrics import compare
from .model import HyperParams, Scenario, ScenarioError, SolverError
from .scenario import GenConfig, baseline_schedule, generate
from .sync_admm import run_sync

EXIT_OK = 0
EXIT_SOLVER = 1
EXIT_INVALID = 2


def _add_common(p: argparse.ArgumentParser, scenario_input: bool):
    if scenario_input:
        p.add_argument("--scenario", required=True, help="scenario JSON path")
    p.add_argument("--out", required=True,
                   help="output file (generate) or directory (other commands)")
    p.add_argument("--rho", type=float, help="sync ADMM penalty override")
    p.add_argument("--gamma", type=float, help="async penalty override")
    p.add_argument("--eta", type=float, help="async relaxation step override")
    p.add_argument("--tol", type=float,
                   help="absolute residual tolerance override (eps_abs)")
    p.add_argument("--max-iter", type=int, help="sync iteration cap override")
    p.add_argument("--max-events", type=int, help="async event cap override")


def _add_gen_flags(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=0, help="generation RNG seed")
    p.add_argument("--n-prosumers", type=int, help="fleet size override")
    p.add_argument("--horizon", type=int, help="slot count override")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="peakramp",
        description="Peak-ramp minimization for prosumer fleets.")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic scenario")
    _add_gen_flags(g)
    _add_common(g, scenario_input=False)

    for name in ("solve-central", "solve-sync", "solve-async", "compare"):
        s = sub.add_parser(name)
        _add_common(s, scenario_input=True)
        if name in ("solve-async", "compare"):
            s.add_argument("--seed", type=int, default=0,
                           help="delay model / simulated-time seed")

    a = sub.add_parser("all", help="generate then run everything")
    _add_gen_flags(a)
    _add_common(a, scenario_input=False)

    return ap


def _apply_overrides(sc: Scenario, args) -> Scenario:
    hp = sc.hyper
    updates = {}
    for flag, field_name in (("rho", "rho"), ("gamma", "gamma"), ("eta", "eta"),
                             ("tol", "eps_abs"), ("max_iter", "max_iter"),
                             ("max_events", "max_events")):
        v = getattr(args, flag, None)
        if v is not None:
            updates[field_name] = v
    if updates:
        hp = replace(hp, **updates)
    return Scenario(prosumers=sc.prosumers, horizon=sc.horizon,
                    prev_net_load=sc.prev_net_load, hyper=hp)


def _generate_scenario(args) -> Scenario:
    kwargs = {"rng_seed": args.seed}
    if args.n_prosumers is not None:
        kwargs["n_prosumers"] = args.n_prosumers
    if args.horizon is not None:
        T = args.horizon
        kwargs["horizon"] = T
        # rescale the default 24-slot peak and renewable windows
        kwargs["peak_hours"] = (round(8 * T / 24), round(22 * T / 24))
        kwargs["renewable_hours"] = (round(10 * T / 24), round(20 * T / 24))
    sc = generate(GenConfig(**kwargs))
    return _apply_overrides(sc, args)


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_solution_summary(path: Path, objective: float, net_load) -> None:
    doc = {"objective": _f(objective), "net_load": _fv(net_load)}
    path.write_text(json.dumps(doc, indent=2) + "\n")


def _run_compare(sc: Scenario, out: Path, seed: int) -> None:
    base = baseline_schedule(sc)
    sol_c, obj_c = solve_centralized(sc)
    sol_s, trace_s = run_sync(sc, time_seed=seed)
    sol_a, trace_a = run_async(sc, DelayModel(seed=seed))
    write_trace_csv(trace_s, out / "sync_trace.csv")
    write_trace_csv(trace_a, out / "async_trace.csv")
    _write_solution_summary(out / "central.json", obj_c, sol_c.net_load)
    report = compare(base, sol_c, obj_c, traces=[trace_s, trace_a])
    save_report(report, out / "report.json")


def run(args) -> int:
    cmd = args.command
    if cmd == "generate":
        sc = _generate_scenario(args)
        save_scenario(sc, args.out)
        return EXIT_OK

    if cmd == "all":
        sc = _generate_scenario(args)
        out = _outdir(args)
        save_scenario(sc, out / "scenario.json")
        _run_compare(sc, out, args.seed)
        return EXIT_OK

    sc = _apply_overrides(load_scenario(args.scenario), args)
    out = _outdir(args)
    if cmd == "solve-central":
        sol, obj = solve_centralized(sc)
        _write_solution_summary(out / "central.json", obj, sol.net_load)
    elif cmd == "solve-sync":
        sol, trace = run_sync(sc)
        write_trace_csv(trace, out / "sync_trace.csv")
        _write_solution_summary(out / "sync.json", sol.peak_ramp, sol.net_load)
    elif cmd == "solve-async":
        sol, trace = run_async(sc, DelayModel(seed=args.seed))
        write_trace_csv(trace, out / "async_trace.csv")
        _write_solution_summary(out / "async.json", sol.peak_ramp, sol.net_load)
    elif cmd == "compare":
        _run_compare(sc, out, args.seed)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
