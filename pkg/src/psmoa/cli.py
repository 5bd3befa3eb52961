"""Command-line entry point: ``psmoa {run,compare,daycycle,scale,scenario}``.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import asdict
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import __version__, experiments, formats
from .experiments import OBJECTIVE_KEYS, SCATTER_PAIRS
from .model import SCALES, generate_scenario
from .moea import ALGORITHMS, EvolutionConfig
from .runner import run_algorithm

logger = logging.getLogger("psmoa")


class UsageError(Exception):
    pass


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def parse_seeds(text: str) -> List[int]:
    """``"3"``, ``"0..9"`` (inclusive) or ``"1,4,7"``."""
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            lo, hi = int(a), int(b)
            if hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed list {text!r}; use N, A..B or A,B,C")


class Manifest:
    """Run manifest; written before any result file and finalised at the end."""

    def __init__(self, out: Path, argv: Sequence[str], config: dict, scenario_text: str,
                 policy_text: str, seeds: Sequence[int], artifacts: Sequence[str]):
        self.path = out / "manifest.json"
        self.data = {
            "tool": "psmoa",
            "version": __version__,
            "command_line": list(argv),
            "config_hash": _sha(json.dumps(config, sort_keys=True)),
            "config": config,
            "scenario_hash": _sha(scenario_text),
            "policy_hash": _sha(policy_text),
            "seeds": list(seeds),
            "artifacts": sorted(set(artifacts) | {"manifest.json"}),
            "status": "running",
        }
        self.write()

    def write(self):
        formats.atomic_write(self.path, json.dumps(self.data, indent=1, sort_keys=True) + "\n")

    def finish(self, status: str = "complete"):
        self.data["status"] = status
        self.write()


def _evo_config(pop_size, generations, seed, algorithm) -> EvolutionConfig:
    try:
        return EvolutionConfig(pop_size, generations, seed=seed, algorithm=algorithm)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _write(out: Path, name: str, text: str) -> None:
    formats.atomic_write(out / name, text)


def _load_inputs(args):
    if getattr(args, "scenario", None):
        scenario = formats.load_scenario(args.scenario)
    else:
        scenario = generate_scenario(args.scale, args.scenario_seed)
    policy = formats.load_policy(args.policy) if getattr(args, "policy", None) else None
    schedule = formats.load_schedule(args.schedule) if getattr(args, "schedule", None) else None
    return scenario, policy, schedule


def _echo_policy(policy, stream=sys.stderr):
    if policy is not None:
        print("# effective policy (normalized)", file=stream)
        print(formats.dumps_policy(policy), file=stream, end="")


def _config_dict(args, **extra) -> dict:
    keep = {k: v for k, v in vars(args).items() if k not in ("func", "out", "verbose")}
    keep.update(extra)
    return json.loads(json.dumps(keep, default=str))


# ----------------------------------------------------------------------------
# commands


def cmd_run(args, argv) -> int:
    scenario, policy, schedule = _load_inputs(args)
    _echo_policy(policy)
    if schedule is not None and args.algorithm != "psmoa":
        raise UsageError("--schedule only applies to --algorithm psmoa")
    config = _evo_config(args.pop_size, args.generations, args.seed, args.algorithm)
    out = Path(args.out)
    front_name = "front.csv" if args.format == "csv" else "front.json"
    manifest = Manifest(out, argv, _config_dict(args), formats.dumps_scenario(scenario),
                        formats.dumps_policy(policy) if policy else "", [args.seed],
                        [front_name, "trace.jsonl"])
    res = run_algorithm(scenario, config, policy, schedule)
    _write(out, "trace.jsonl", formats.jsonl(res.trace))
    text = formats.front_csv(res.archive.points) if args.format == "csv" else formats.front_json(res.archive.points)
    _write(out, front_name, text)
    manifest.finish()
    print(f"{args.algorithm}: {len(res.archive)} non-dominated plans"
          f"{'' if res.archive.feasible else ' (no feasible plan found)'} -> {out / front_name}")
    return 0


def cmd_compare(args, argv) -> int:
    scenario, policy, _ = _load_inputs(args)
    _echo_policy(policy)
    _evo_config(args.pop_size, args.generations, 0, "psmoa")
    out = Path(args.out)
    label = args.scale if not args.scenario else Path(args.scenario).stem
    table = "results.csv" if args.format == "csv" else "results.json"
    fronts = [f"fronts/{a}_seed{s}.csv" for a in ALGORITHMS for s in args.seeds]
    manifest = Manifest(out, argv, _config_dict(args), formats.dumps_scenario(scenario),
                        formats.dumps_policy(policy) if policy else "", args.seeds,
                        [table, "results_raw.csv", "summary.json", "truth.csv"] + fronts)
    res = experiments.compare(scenario, args.seeds, args.pop_size, args.generations, policy, label=label)
    for alg, archs in res.archives.items():
        for seed, arch in zip(args.seeds, archs):
            _write(out, f"fronts/{alg}_seed{seed}.csv", formats.front_csv(arch.points))
    _write(out, "truth.csv", formats.front_csv(res.truth.points))
    cols = formats.RESULT_COLUMNS
    if args.format == "csv":
        _write(out, table, formats.csv_text(cols, ([r[c] for c in cols] for r in res.rows)))
    else:
        _write(out, table, json.dumps([{c: r[c] for c in cols} for r in res.rows], indent=1) + "\n")
    _write(out, "results_raw.csv", formats.csv_text(
        ("algorithm", "scenario", "seed", "GD_raw", "IGD_raw", "front_size"),
        ([r["algorithm"], r["scenario"], r["seed"], r["GD_raw"], r["IGD_raw"], r["front_size"]] for r in res.rows)))
    summary = dict(res.summary)
    summary.update({
        "scenario": label,
        "seeds": list(args.seeds),
        "truth_size": len(res.truth),
        "hv_reference": [float(x) for x in res.hv_reference],
        "normalization": {"min": [float(x) for x in res.bounds[0]], "max": [float(x) for x in res.bounds[1]]},
    })
    _write(out, "summary.json", json.dumps(summary, indent=1, sort_keys=True) + "\n")
    manifest.finish()
    med = res.summary["medians"]
    print("algorithm      HV        GD        IGD")
    for alg in ALGORITHMS:
        m = med[alg]
        print(f"{alg:<10} {m['HV']:9.4f} {m['GD']:9.4f} {m['IGD']:9.4f}")
    print("GD ordering:", " < ".join(res.summary["orderings"]["GD"]))
    print("IGD ordering:", " < ".join(res.summary["orderings"]["IGD"]))
    return 0


def cmd_daycycle(args, argv) -> int:
    scenario, policy, _ = _load_inputs(args)
    _echo_policy(policy)
    _evo_config(args.pop_size, args.generations, args.seed, "psmoa")
    out = Path(args.out)
    series = [f"weight_{k}.csv" for k in OBJECTIVE_KEYS] + [f"performance_{k}.csv" for k in OBJECTIVE_KEYS]
    manifest = Manifest(out, argv, _config_dict(args), formats.dumps_scenario(scenario),
                        formats.dumps_policy(policy) if policy else "", [args.seed],
                        series + ["signals.csv", "summary.json", "trace.jsonl"])
    res = experiments.daycycle(scenario, args.seed, args.pop_size, args.generations, policy)
    for j, key in enumerate(OBJECTIVE_KEYS):
        _write(out, f"weight_{key}.csv", formats.csv_text(("hour", "value"), zip(res.hours, res.alpha[:, j])))
        _write(out, f"performance_{key}.csv",
               formats.csv_text(("hour", "value"), zip(res.hours, res.performance[key])))
    _write(out, "signals.csv", formats.csv_text(
        ("hour", "utilization_rate", "budget_proximity", "access_frequency"),
        ([h, s.utilization_rate, s.budget_proximity, s.access_frequency] for h, s in zip(res.hours, res.signals))))
    _write(out, "trace.jsonl", formats.jsonl(res.trace))
    warm = args.warmup
    summary = {
        "seed": args.seed,
        "warmup_hours": warm,
        "alpha": res.alpha.tolist(),
        "performance": {k: v.tolist() for k, v in res.performance.items()},
        "after_warmup_min": {k: float(v[warm:].min()) for k, v in res.performance.items()},
        "after_warmup_max": {k: float(v[warm:].max()) for k, v in res.performance.items()},
    }
    _write(out, "summary.json", json.dumps(summary, indent=1, sort_keys=True) + "\n")
    manifest.finish()
    for k in OBJECTIVE_KEYS:
        v = res.performance[k][warm:]
        print(f"{k:<11} weight {res.alpha[:, OBJECTIVE_KEYS.index(k)].min():.4f}-"
              f"{res.alpha[:, OBJECTIVE_KEYS.index(k)].max():.4f}  performance {v.min():6.1f}%-{v.max():6.1f}%")
    return 0


def cmd_scale(args, argv) -> int:
    _evo_config(args.pop_size, args.generations, args.seed, "psmoa")
    out = Path(args.out)
    scales = args.scales
    names = [f"scatter_{s}_{SCATTER_PAIRS[s][0]}_{SCATTER_PAIRS[s][1]}.csv" for s in scales]
    scen = {s: generate_scenario(s, args.scenario_seed) for s in scales}
    manifest = Manifest(out, argv, _config_dict(args),
                        "".join(formats.dumps_scenario(scen[s]) for s in scales), "", [args.seed],
                        names + ["summary.json"])
    summary = {"scales": {}, "evaluation_seconds": {}}
    started = time.perf_counter()
    for s, name in zip(scales, names):
        xk, yk = SCATTER_PAIRS[s]
        rows = []
        timings = {}
        for alg in ALGORITHMS:
            t0 = time.perf_counter()
            res = run_algorithm(scen[s], EvolutionConfig(args.pop_size, args.generations, seed=args.seed,
                                                         algorithm=alg))
            timings[alg] = time.perf_counter() - t0
            cols = experiments.objective_columns(res.archive.points)
            rows.extend([alg, x, y] for x, y in zip(cols[xk], cols[yk]))
            if s == "small" and alg == "psmoa":
                summary["small_psmoa_cost_range"] = [float(cols["cost"].min()), float(cols["cost"].max())]
                summary["small_psmoa_time_range"] = [float(cols["time"].min()), float(cols["time"].max())]
        _write(out, name, formats.csv_text(("algorithm", xk, yk), rows))
        summary["scales"][s] = {"nodes": SCALES[s][0], "objects": SCALES[s][1], "run_seconds": timings}
        summary["evaluation_seconds"][s] = experiments.evaluation_seconds(scen[s], args.pop_size)
    elapsed = time.perf_counter() - started
    if len(scales) >= 2:
        summary["evaluation_loglog_slope"] = experiments.scaling_slope(summary["evaluation_seconds"])
    summary["wall_clock_seconds"] = elapsed
    summary["budget_seconds"] = args.budget
    summary["within_budget"] = elapsed <= args.budget
    _write(out, "summary.json", json.dumps(summary, indent=1, sort_keys=True) + "\n")
    manifest.finish()
    for s in scales:
        print(f"{s:<7} " + "  ".join(f"{a} {t:6.1f}s" for a, t in summary["scales"][s]["run_seconds"].items()))
    if "evaluation_loglog_slope" in summary:
        print(f"evaluation time log-log slope vs nodes: {summary['evaluation_loglog_slope']:.2f}")
    if not summary["within_budget"]:
        print(f"error: scale study took {elapsed:.0f}s, over the {args.budget:.0f}s budget", file=sys.stderr)
        return 1
    return 0


def cmd_scenario(args, argv) -> int:
    sc = generate_scenario(args.scale, args.scenario_seed)
    if args.out == "-":
        sys.stdout.write(formats.dumps_scenario(sc))
    else:
        formats.save_scenario(sc, args.out)
    return 0


# ----------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="psmoa", description="Policy-aware replica placement optimizer and simulator.")
    p.add_argument("--version", action="version", version=f"psmoa {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def scenario_flags(sp, with_policy=True, with_schedule=False):
        src = sp.add_mutually_exclusive_group()
        src.add_argument("--scale", choices=sorted(SCALES), default="small")
        src.add_argument("--scenario", metavar="FILE", help="psmoa-scenario/1 file")
        sp.add_argument("--scenario-seed", type=int, default=0, help="seed for the generated scenario")
        if with_policy:
            sp.add_argument("--policy", metavar="FILE", help="psmoa-policy/1 file")
        if with_schedule:
            sp.add_argument("--schedule", metavar="FILE", help="psmoa-schedule/1 file")

    def evo_flags(sp, generations=200):
        sp.add_argument("--pop-size", type=int, default=100)
        sp.add_argument("--generations", type=int, default=generations)
        sp.add_argument("--out", required=True, metavar="DIR")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")

    r = sub.add_parser("run", help="one algorithm run")
    scenario_flags(r, with_schedule=True)
    r.add_argument("--algorithm", choices=ALGORITHMS, default="psmoa")
    r.add_argument("--seed", type=int, default=0)
    evo_flags(r)
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="all algorithms over a seed list")
    scenario_flags(c)
    c.add_argument("--seeds", type=parse_seeds, default=list(range(10)))
    c.add_argument("--seed", type=int, dest="seeds_single")
    evo_flags(c)
    c.set_defaults(func=cmd_compare)

    d = sub.add_parser("daycycle", help="24-hour adaptation scenario")
    scenario_flags(d)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--warmup", type=int, default=3, help="hours excluded from after-warm-up statistics")
    evo_flags(d, generations=240)
    d.set_defaults(func=cmd_daycycle)

    s = sub.add_parser("scale", help="small/medium/large scatter study")
    s.add_argument("--scales", type=lambda t: t.split(","), default=list(SCALES))
    s.add_argument("--scenario-seed", type=int, default=0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--budget", type=float, default=600.0, help="wall-clock budget in seconds")
    evo_flags(s)
    s.set_defaults(func=cmd_scale)

    g = sub.add_parser("scenario", help="write a generated scenario file")
    g.add_argument("--scale", choices=sorted(SCALES), default="small")
    g.add_argument("--scenario-seed", type=int, default=0)
    g.add_argument("--out", default="-")
    g.set_defaults(func=cmd_scenario)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "seeds_single", None) is not None:
        args.seeds = [args.seeds_single]
    if hasattr(args, "scales"):
        bad = [s for s in args.scales if s not in SCALES]
        if bad:
            print(f"psmoa: error: unknown scale(s) {bad}; choose from {sorted(SCALES)}", file=sys.stderr)
            return 2
    try:
        return args.func(args, ["psmoa"] + argv)
    except (formats.ConfigError, UsageError) as exc:
        print(f"psmoa: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        logger.debug("run failed", exc_info=True)
        print(f"psmoa: runtime failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
