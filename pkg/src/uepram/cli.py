"""Command-line driver: solve, simulate and sweep experiments from a config file.

Exit codes: 0 success, 2 invalid configuration, 3 infeasible instance,
4 exhaustive-search cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from uepram.config import ConfigError, Experiment, build_experiment, load_config
from uepram.optimizer import (
    EvaluatedPolicy,
    InfeasibleError,
    SearchSpaceTooLarge,
    solve_exact,
    solve_heuristic,
    solve_mrt,
)
from uepram.packet_sim import SimulationReport, run_simulation
from uepram.scenario import sinr_all

log = logging.getLogger("uepram")

COMMANDS = ("solve-exact", "solve-heuristic", "solve-mrt", "simulate", "sweep-distance")

EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_SEARCH_CAP = 2, 3, 4

MRT_NOTE = ("MrT baseline reconstructed: every source packet sent once uncoded, "
            "per-layer MCS chosen front to back to maximise users reaching each level")


def _num(x):
    return float(f"{float(x):.12g}")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    return obj


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonable(obj), indent=2) + "\n")


def _fmt(x) -> str:
    return f"{float(x):.12g}"


def _header_comment(exp: Experiment, seed: int) -> str:
    return f"# config_hash={exp.hash} seed={seed}\n"


def coverage_table(exp: Experiment, ev: EvaluatedPolicy, report: SimulationReport | None = None) -> str:
    sc = exp.scenario
    L = exp.message.num_layers
    sinr_db = 10.0 * np.log10(sinr_all(sc))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    loc = ["distance_m"] if sc.kind == "single_cell" else ["grid_row", "grid_col"]
    header = ["user", "x_m", "y_m"] + loc + ["sinr_db"]
    header += [f"P_win{i + 1}" for i in range(L)] + [f"delta_level{i + 1}" for i in range(L)] + ["qos_level"]
    if report is not None:
        header += [f"emp_win{i + 1}" for i in range(L)] + [f"emp_level{i + 1}" for i in range(L)]
    w.writerow(header)
    levels = ev.qos_levels
    for u in range(sc.num_users):
        loc_vals = ([_fmt(sc.user_labels["distance_m"][u])] if sc.kind == "single_cell"
                    else [int(sc.user_labels["grid_row"][u]), int(sc.user_labels["grid_col"][u])])
        row = [u, _fmt(sc.users[u, 0]), _fmt(sc.users[u, 1])] + loc_vals + [_fmt(sinr_db[u])]
        row += [_fmt(x) for x in ev.win_probs[u]] + [int(x) for x in ev.qos[u]] + [int(levels[u])]
        if report is not None:
            row += [_fmt(x) for x in report.window_freq[u]] + [_fmt(x) for x in report.level_freq[u]]
        w.writerow(row)
    return buf.getvalue()


def level_summary(ev: EvaluatedPolicy, targets) -> list[dict]:
    return [
        {"level": i + 1, "coverage": cov, "target": t, "users": n, "required": r}
        for i, (cov, t, n, r) in enumerate(zip(ev.coverage, targets, ev.users_per_level, ev.required))
    ]


def summary_dict(command: str, exp: Experiment, ev: EvaluatedPolicy, seed: int) -> dict:
    out = {
        "command": command,
        "config_hash": exp.hash,
        "seed": seed,
        "scenario": exp.scenario.kind,
        "num_users": exp.scenario.num_users,
        "field_size": exp.q,
        "strategy": ev.strategy,
        "profit": ev.profit,
        "cost": ev.cost,
        "ratio": ev.ratio,
        "feasible": ev.feasible,
        "levels": level_summary(ev, exp.sla.coverage_targets),
    }
    if ev.strategy == "mrt":
        out["note"] = MRT_NOTE
    return out


def _attainment_probs(ev: EvaluatedPolicy) -> np.ndarray:
    """Probability of reaching each QoS level, as plotted against distance."""
    if ev.strategy == "mrt":
        return ev.win_probs
    return np.maximum.accumulate(ev.win_probs[:, ::-1], axis=1)[:, ::-1]


def sweep_table(exp: Experiment, uep: EvaluatedPolicy, mrt: EvaluatedPolicy) -> str:
    sc = exp.scenario
    L = exp.message.num_layers
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if sc.kind == "single_cell":
        w.writerow(["distance_m"] + [f"uep_prob_level{i + 1}" for i in range(L)]
                   + [f"mrt_prob_level{i + 1}" for i in range(L)]
                   + [f"uep_delta_level{i + 1}" for i in range(L)]
                   + [f"mrt_delta_level{i + 1}" for i in range(L)])
        pu, pm = _attainment_probs(uep), _attainment_probs(mrt)
        for u in range(sc.num_users):
            w.writerow([_fmt(sc.user_labels["distance_m"][u])] + [_fmt(x) for x in pu[u]]
                       + [_fmt(x) for x in pm[u]] + [int(x) for x in uep.qos[u]]
                       + [int(x) for x in mrt.qos[u]])
    else:
        w.writerow(["grid_row", "grid_col", "x_m", "y_m", "uep_qos_level", "mrt_qos_level"])
        lu, lm = uep.qos_levels, mrt.qos_levels
        for u in range(sc.num_users):
            w.writerow([int(sc.user_labels["grid_row"][u]), int(sc.user_labels["grid_col"][u]),
                        _fmt(sc.users[u, 0]), _fmt(sc.users[u, 1]), int(lu[u]), int(lm[u])])
    return buf.getvalue()


def _solve_uep(exp: Experiment, method: str) -> EvaluatedPolicy:
    if method == "exact":
        solver = exp.config["solver"]
        return solve_exact(exp.message, exp.profile, exp.sla, exp.q,
                           solver["mcs_candidates"], solver["search_cap"])
    return solve_heuristic(exp.message, exp.profile, exp.sla, exp.q)


def run(command: str, config_path: str, output_dir: str, trials: int | None = None,
        seed: int | None = None, cap: int | None = None, timing: bool = False) -> int:
    """Execute one command; returns the process exit status."""
    if command not in COMMANDS:
        print(f"unknown command {command!r}; choose from {', '.join(COMMANDS)}", file=sys.stderr)
        return EXIT_CONFIG
    started = time.perf_counter()
    try:
        cfg = load_config(config_path, {"simulation.trials": trials, "simulation.seed": seed,
                                        "solver.search_cap": cap})
        exp = build_experiment(cfg)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    seed_used = int(cfg["simulation"]["seed"])
    out = Path(output_dir)
    report = None
    extra: dict = {}
    try:
        if command == "solve-exact":
            ev = _solve_uep(exp, "exact")
        elif command == "solve-heuristic":
            ev = _solve_uep(exp, "heuristic")
        elif command == "solve-mrt":
            ev = solve_mrt(exp.message, exp.profile, exp.sla)
        elif command == "simulate":
            ev = _solve_uep(exp, cfg["simulation"]["policy"])
            report = run_simulation(ev.policy, exp.message, exp.profile, exp.q,
                                    cfg["simulation"]["trials"], seed_used)
        else:
            ev = _solve_uep(exp, "heuristic")
            mrt = solve_mrt(exp.message, exp.profile, exp.sla)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        print(json.dumps(_jsonable(exc.report), indent=2), file=sys.stderr)
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "infeasibility.json",
                   {"config_hash": exp.hash, "seed": seed_used, **exc.report})
        return EXIT_INFEASIBLE
    except SearchSpaceTooLarge as exc:
        print(f"search cap exceeded: {exc}", file=sys.stderr)
        return EXIT_SEARCH_CAP

    out.mkdir(parents=True, exist_ok=True)
    policy = {"config_hash": exp.hash, "seed": seed_used, **ev.to_dict()}
    summary = summary_dict(command, exp, ev, seed_used)
    if report is not None:
        agree = report.binomial_agreement(0.99)
        summary["simulation"] = {
            "trials": report.trials,
            "window_agreement_fraction_99": float(agree.mean()),
            "max_abs_error": float(np.abs(report.window_freq - report.analytical).max()),
            "empirical_level_coverage": report.level_freq.mean(axis=0).tolist(),
        }
    if command == "sweep-distance":
        policy["baseline"] = mrt.to_dict()
        policy["baseline"]["note"] = MRT_NOTE
        summary["comparison"] = {
            "uep_ram_coverage": ev.coverage,
            "mrt_coverage": mrt.coverage,
            "margin": [a - b for a, b in zip(ev.coverage, mrt.coverage)],
            "mrt_note": MRT_NOTE,
        }
        name = "sweep.csv" if exp.scenario.kind == "single_cell" else "qos_map.csv"
        extra[name] = _header_comment(exp, seed_used) + sweep_table(exp, ev, mrt)
    if timing:
        summary["wall_clock_s"] = time.perf_counter() - started

    write_json(out / "policy.json", policy)
    (out / "coverage.csv").write_text(_header_comment(exp, seed_used) + coverage_table(exp, ev, report))
    write_json(out / "summary.json", summary)
    for name, text in extra.items():
        (out / name).write_text(text)
    log.info("%s finished in %.2f s", command, time.perf_counter() - started)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uepram", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True,
                        help="YAML config path, or a bundled name: single_cell.default, sfn.default")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--trials", type=int, help="override simulation.trials")
    parser.add_argument("--seed", type=int, help="override simulation.seed")
    parser.add_argument("--cap", type=int, help="override solver.search_cap")
    parser.add_argument("--timing", action="store_true",
                        help="record wall-clock time in summary.json (breaks byte-identical reruns)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return run(args.command, args.config, args.out, args.trials, args.seed, args.cap, args.timing)


if __name__ == "__main__":
    sys.exit(main())
