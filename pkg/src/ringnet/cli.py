"""Config ingestion, pipeline orchestration and machine-readable reporting."""

import argparse
import csv
import json
import sys
from pathlib import Path

from . import __version__
from .core import ConfigError, ForceParams, NetworkConfig, RadioParams
from .planner import build_plan
from .sim import (UNIFORM_DIRECT, WU_GEOMETRIC, WU_PUBLISHED_K6, deploy,
                  run_baseline, run_vfem)

SCHEMA_VERSION = 1

_TOP_KEYS = {
    "radius": "radius",
    "nodes": "node_count",
    "annuli": "annulus_count",
    "bits": "bits_per_round",
    "initial_energy": "initial_energy",
    "death_threshold": "death_threshold",
    "variance_threshold": "variance_threshold",
    "seed": "rng_seed",
}
_RADIO_KEYS = {"e_elec": "e_elec", "eps_fs": "eps_fs", "eps_amp": "eps_amp"}
_FORCE_KEYS = {
    "eta": "eta",
    "lambda": "lam",
    "beta": "beta",
    "tau": "tau",
    "friction": "friction",
    "d0": "d0",
    "delta_l": "delta_l",
    "step_scale": "step_scale",
    "max_iters": "max_iters",
    "convergence_eps": "convergence_eps",
}


def load_config(path=None, overrides=None):
    """Build a NetworkConfig from a flat JSON key/value file plus overrides.

    An empty or missing file yields the full default parameter set. Unknown
    keys are rejected by name; constraint violations raise ConfigError.
    """
    raw = {}
    if path is not None:
        text = Path(path).read_text()
        if text.strip():
            try:
                raw = json.loads(text)
            except json.JSONDecodeError as e:
                raise ConfigError(f"cannot parse config file {path}: {e}") from e
            if not isinstance(raw, dict):
                raise ConfigError(f"config file {path} must hold a JSON object")
    if overrides:
        raw = {**raw, **{k: v for k, v in overrides.items() if v is not None}}
    unknown = set(raw) - set(_TOP_KEYS) - set(_RADIO_KEYS) - set(_FORCE_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    radio_kwargs = {_RADIO_KEYS[k]: raw[k] for k in _RADIO_KEYS if k in raw}
    force_kwargs = {_FORCE_KEYS[k]: raw[k] for k in _FORCE_KEYS if k in raw}
    top_kwargs = {_TOP_KEYS[k]: raw[k] for k in _TOP_KEYS if k in raw}
    if "max_iters" in force_kwargs:
        force_kwargs["max_iters"] = int(force_kwargs["max_iters"])
    for key in ("node_count", "annulus_count", "bits_per_round", "rng_seed"):
        if key in top_kwargs:
            top_kwargs[key] = int(top_kwargs[key])
    return NetworkConfig(radio=RadioParams(**radio_kwargs),
                         force=ForceParams(**force_kwargs), **top_kwargs)


def config_to_dict(config):
    """Flat, fully resolved key/value form of a config; feeding it back to
    load_config reproduces the run exactly."""
    return {
        "radius": config.radius,
        "nodes": config.node_count,
        "annuli": config.annulus_count,
        "bits": config.bits_per_round,
        "initial_energy": config.initial_energy,
        "death_threshold": config.death_threshold,
        "variance_threshold": config.variance_threshold,
        "seed": config.rng_seed,
        "e_elec": config.radio.e_elec,
        "eps_fs": config.radio.eps_fs,
        "eps_amp": config.radio.eps_amp,
        "eta": config.force.eta,
        "lambda": config.force.lam,
        "beta": config.force.beta,
        "tau": config.force.tau,
        "friction": config.force.friction,
        "d0": config.force.d0,
        "delta_l": config.force.delta_l,
        "step_scale": config.force.step_scale,
        "max_iters": config.force.max_iters,
        "convergence_eps": config.force.convergence_eps,
    }


def _write_json(path, record):
    record = {"schema_version": SCHEMA_VERSION, **record}
    with open(path, "w") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_metrics(path, metrics, k):
    header = (["schema", "round", "delivered", "alive_sensing", "alive_relay",
               "total_residual_j", "deaths"]
              + [f"residual_j_c{m}" for m in range(k)]
              + [f"pct_c{m}" for m in range(k)])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in metrics:
            writer.writerow(
                [SCHEMA_VERSION, row.round_index, row.delivered, row.alive_sensing,
                 row.alive_relay, repr(row.total_residual),
                 ";".join(str(i) for i in row.deaths)]
                + [repr(x) for x in row.residual_by_annulus]
                + [repr(x) for x in row.pct_by_annulus])


def _write_positions_before(path, positions):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["schema", "id", "x", "y"])
        for i, (x, y) in enumerate(positions):
            writer.writerow([SCHEMA_VERSION, i, repr(float(x)), repr(float(y))])


def _write_positions_after(path, relaxed, nodes):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["schema", "id", "x_relaxed", "y_relaxed", "x", "y",
                         "role", "annulus"])
        for node in nodes:
            rx, ry = relaxed[node.id]
            writer.writerow([SCHEMA_VERSION, node.id, repr(float(rx)), repr(float(ry)),
                             repr(float(node.position[0])), repr(float(node.position[1])),
                             node.role, node.annulus])


def _summary_record(summary, config):
    return {
        "strategy": summary.strategy,
        "planned_streams": summary.planned_streams,
        "first_death_round": summary.first_death_round,
        "lifetime_round": summary.lifetime_round,
        "rounds_run": summary.rounds_run,
        "truncated": summary.truncated,
        "final_pct_by_annulus": summary.final_pct_by_annulus,
        "final_mean_residual_by_annulus": summary.final_mean_residual_by_annulus,
        "annulus_counts": summary.annulus_counts,
        "seed": config.rng_seed,
    }


def _manifest(command, config, outputs, stages):
    return {
        "tool_version": __version__,
        "command": command,
        "config": config_to_dict(config),
        "outputs": sorted(outputs),
        "stages": stages,
    }


def _deploy_stages(dep):
    return {
        "relaxation": {
            "iterations": dep.relaxation.iterations_used,
            "converged": dep.relaxation.converged,
            "final_max_displacement": dep.relaxation.final_max_displacement,
        },
        "plan": {
            "sensing_counts": dep.plan.sensing_counts,
            "relay_counts": dep.plan.relay_counts,
            "reachable": dep.plan.reachable,
        },
        "assignment": {
            "mean_displacement": dep.assignment.mean_displacement,
            "max_displacement": dep.assignment.max_displacement,
        },
    }


def cmd_plan(config, out):
    plan = build_plan(config)
    record = plan.to_dict()
    record["relay_counts_closed_form_inner"] = plan.relay_inner_formula
    if config.annulus_count == 6:
        record["wu_published_counts"] = list(WU_PUBLISHED_K6)
    _write_json(out / "plan.json", record)
    _write_json(out / "manifest.json",
                _manifest("plan", config, ["plan.json"],
                          {"plan": {"sensing_counts": plan.sensing_counts,
                                    "relay_counts": plan.relay_counts,
                                    "reachable": plan.reachable}}))
    return 0


def cmd_deploy(config, out):
    dep = deploy(config)
    _write_json(out / "plan.json", dep.plan.to_dict())
    _write_positions_before(out / "positions_before.csv", dep.initial_positions)
    _write_positions_after(out / "positions_after.csv", dep.relaxed_positions, dep.nodes)
    outputs = ["plan.json", "positions_before.csv", "positions_after.csv", "manifest.json"]
    _write_json(out / "manifest.json",
                _manifest("deploy", config, outputs, _deploy_stages(dep)))
    return 0


def cmd_simulate(config, out, strategy="vfem", rounds_cap=None, emit_every=100):
    cap = rounds_cap if rounds_cap is not None else 1_000_000
    if strategy == "vfem":
        summary, metrics, dep, _ = run_vfem(config, rounds_cap=cap, emit_every=emit_every)
        _write_json(out / "plan.json", dep.plan.to_dict())
        _write_positions_before(out / "positions_before.csv", dep.initial_positions)
        _write_positions_after(out / "positions_after.csv", dep.relaxed_positions, dep.nodes)
        stages = _deploy_stages(dep)
        outputs = ["plan.json", "positions_before.csv", "positions_after.csv",
                   "metrics.csv", "summary.json", "manifest.json"]
    elif strategy in (UNIFORM_DIRECT, WU_GEOMETRIC):
        summary, metrics = run_baseline(strategy, config, rounds_cap=cap,
                                        emit_every=emit_every)
        stages = {}
        outputs = ["metrics.csv", "summary.json", "manifest.json"]
    else:
        raise ConfigError(f"unknown strategy {strategy!r}")
    _write_metrics(out / "metrics.csv", metrics, config.annulus_count)
    _write_json(out / "summary.json", _summary_record(summary, config))
    stages["simulation"] = {"strategy": strategy, "rounds_cap": cap,
                            "emit_every": emit_every}
    _write_json(out / "manifest.json", _manifest("simulate", config, outputs, stages))
    return 0


def cmd_compare(config, out, rounds_cap=None, emit_every=100, per_strategy_nodes=None):
    """Run the planned strategy and both baselines on the same master seed."""
    cap = rounds_cap if rounds_cap is not None else 1_000_000
    per_strategy_nodes = per_strategy_nodes or {}
    rows = []
    outputs = ["compare.csv", "manifest.json"]
    for strategy in ("vfem", UNIFORM_DIRECT, WU_GEOMETRIC):
        cfg = config
        n_override = per_strategy_nodes.get(strategy)
        if n_override:
            cfg = load_config(None, {**config_to_dict(config), "nodes": n_override})
        if strategy == "vfem":
            summary, metrics, _, _ = run_vfem(cfg, rounds_cap=cap, emit_every=emit_every)
        else:
            summary, metrics = run_baseline(strategy, cfg, rounds_cap=cap,
                                            emit_every=emit_every)
        record = _summary_record(summary, cfg)
        if strategy == WU_GEOMETRIC and cfg.annulus_count == 6:
            record["published_reference_counts"] = list(WU_PUBLISHED_K6)
        name = f"summary_{strategy}.json"
        _write_json(out / name, record)
        _write_metrics(out / f"metrics_{strategy}.csv", metrics, cfg.annulus_count)
        outputs += [name, f"metrics_{strategy}.csv"]
        rows.append((strategy, summary, cfg))
    with open(out / "compare.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["schema", "strategy", "nodes", "seed", "planned_streams",
                         "first_death_round", "lifetime_round", "truncated",
                         "mean_residual_by_annulus_j"])
        for strategy, summary, cfg in rows:
            writer.writerow([SCHEMA_VERSION, strategy, cfg.node_count, cfg.rng_seed,
                             summary.planned_streams, summary.first_death_round,
                             summary.lifetime_round, summary.truncated,
                             ";".join(repr(x) for x in
                                      summary.final_mean_residual_by_annulus)])
    _write_json(out / "manifest.json",
                _manifest("compare", config, outputs,
                          {"simulation": {"rounds_cap": cap, "emit_every": emit_every}}))
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="ringnet",
        description="Ring-structured sensor network deployment, routing and "
                    "lifetime simulation")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
            ("plan", "emit the annulus plan"),
            ("deploy", "run placement (relax + assign) and emit positions"),
            ("simulate", "run the full pipeline and the round simulation"),
            ("compare", "run all strategies on shared seeds")]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, help="JSON key/value config file")
        p.add_argument("--seed", type=int, help="master seed override")
        p.add_argument("--annuli", type=int, help="annulus count override")
        p.add_argument("--nodes", type=int, help="node count override")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        if name in ("simulate", "compare"):
            p.add_argument("--rounds-cap", type=int, default=None)
            p.add_argument("--emit-every", type=int, default=100)
        if name == "simulate":
            p.add_argument("--strategy", choices=["vfem", UNIFORM_DIRECT, WU_GEOMETRIC],
                           default="vfem")
        if name == "compare":
            p.add_argument("--nodes-vfem", type=int, default=None)
            p.add_argument("--nodes-uniform", type=int, default=None)
            p.add_argument("--nodes-wu", type=int, default=None)
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        config = load_config(args.config, {
            "seed": args.seed, "annuli": args.annuli, "nodes": args.nodes})
        out = args.out
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "plan":
            return cmd_plan(config, out)
        if args.command == "deploy":
            return cmd_deploy(config, out)
        if args.command == "simulate":
            return cmd_simulate(config, out, strategy=args.strategy,
                                rounds_cap=args.rounds_cap,
                                emit_every=args.emit_every)
        if args.command == "compare":
            per_strategy = {"vfem": args.nodes_vfem,
                            UNIFORM_DIRECT: args.nodes_uniform,
                            WU_GEOMETRIC: args.nodes_wu}
            return cmd_compare(config, out, rounds_cap=args.rounds_cap,
                               emit_every=args.emit_every,
                               per_strategy_nodes=per_strategy)
    except (ConfigError, OSError) as exc:
        print(f"error ({args.command}): {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
