"""Command-line front end.

Subcommands: ``simulate`` (single-run JSON), ``sweep`` (CSV over a delay
grid), ``mfpt`` (distance summary of a graph file), ``fit`` (miner-share
model selection), ``gen-graph`` (write a topology as an edge list).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from . import harness
from .engine import SimConfig, run
from .fitting import likelihood_ratio_test
from .hashpower import load_miner_shares, normalize_rates
from .metrics import compute_metrics
from .topology import (
    branching_threshold,
    generate_ba,
    generate_complete,
    generate_er,
    generate_tree,
    load_edge_list,
    save_edge_list,
)


class ConfigError(Exception):
    pass


def _load_json_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def _write_json(doc, path: str | None) -> None:
    text = json.dumps(doc, indent=2)
    if path is None:
        print(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


def _single_run_spec(doc: dict, seed_override: int | None) -> tuple[harness.SweepSpec, float]:
    doc = dict(doc)
    try:
        tau_nd = float(doc.pop("tau_nd"))
    except KeyError:
        raise ConfigError("missing config key 'tau_nd'") from None
    seed = int(doc.pop("seed", 0))
    if seed_override is not None:
        seed = seed_override
    doc.setdefault("t_sim", 20000.0)
    doc["tau_nd_grid"] = [tau_nd]
    doc["replicates"] = 1
    doc["base_seed"] = seed
    try:
        return harness.SweepSpec.from_dict(doc), tau_nd
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _cmd_simulate(args) -> int:
    spec, tau_nd = _single_run_spec(_load_json_config(args.config), args.seed)
    graph_seed, power_seed, run_seed = harness.replicate_seeds(spec.base_seed, 0)
    graph = spec.build_graph(graph_seed)
    powers = spec.sample_powers(power_seed)
    profile = normalize_rates(powers, spec.tau)
    config = SimConfig(
        graph=graph, profile=profile, tau_nd=tau_nd,
        t_sim=spec.t_sim, seed=run_seed,
    )
    tree, trace = run(config, record_events=not args.no_events)
    report = compute_metrics(tree, trace, profile)
    doc = {
        "config": {**spec.to_dict(), "tau_nd": tau_nd},
        "seed": spec.base_seed,
        "run_seed": run_seed,
        "consensus_time": trace.consensus_time,
        "final_heads": [int(h) for h in trace.final_heads],
        "n_events": trace.n_events,
        "metrics": dataclasses.asdict(report),
        "blocks": tree.to_records(),
    }
    if trace.recorded:
        doc["head_history"] = {
            "time": [float(t) for t in trace.times],
            "kind": [int(k) for k in trace.kinds],
            "actor": [int(a) for a in trace.actors],
            "block": [int(b) for b in trace.blocks],
        }
    if args.trace is not None:
        if not trace.recorded:
            raise ConfigError("--trace requires event recording (drop --no-events)")
        trace.to_structured().tofile(args.trace)
    _write_json(doc, args.out)
    return 0


def _cmd_sweep(args) -> int:
    doc = _load_json_config(args.config)
    if args.seed is not None:
        doc["base_seed"] = args.seed
    try:
        spec = harness.SweepSpec.from_dict(doc)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    result = harness.run_sweep(spec, threads=args.threads)
    result.write_csv(args.out)
    if args.summary is not None:
        result.write_summary_csv(args.summary)
    failures = sum(1 for r in result.rows if r.error is not None)
    if failures:
        print(f"warning: {failures} run(s) failed; see error column", file=sys.stderr)
    return 0


def _cmd_mfpt(args) -> int:
    graph = load_edge_list(args.graph)
    summary = branching_threshold(graph, tau=args.tau)
    _write_json(dataclasses.asdict(summary), args.out)
    return 0


def _cmd_fit(args) -> int:
    reports = []
    for path in args.shares:
        _, blocks = load_miner_shares(path)
        data = blocks[blocks > 0]  # fitting families live on positive support
        report = likelihood_ratio_test(data, xmin=args.xmin)
        reports.append((path, report))
    if len(reports) > 1:
        header = f"{'file':<32} {'n':>7} {'R':>12} {'p':>6} {'alpha':>8} {'lambda':>10}"
        print(header)
        print("-" * len(header))
        for path, r in reports:
            print(
                f"{path:<32} {r.n:>7d} {r.r:>12.2f} {r.p_value:>6.3f} "
                f"{r.alpha_hat:>8.3f} {r.lambda_hat:>10.5f}"
            )
    doc = [
        {"file": path, **dataclasses.asdict(r), "preferred": r.preferred}
        for path, r in reports
    ]
    _write_json(doc[0] if len(doc) == 1 else doc, args.out)
    return 0


def _cmd_gen_graph(args) -> int:
    if args.kind == "er":
        if args.mean_degree is None:
            raise ConfigError("er topology needs --mean-degree")
        g = generate_er(args.n, args.mean_degree, args.seed)
    elif args.kind == "ba":
        if args.m is None:
            raise ConfigError("ba topology needs --m")
        g = generate_ba(args.n, args.m, args.seed)
    elif args.kind == "complete":
        g = generate_complete(args.n)
    else:
        if args.branching is None:
            raise ConfigError("tree topology needs --branching")
        g = generate_tree(args.n, args.branching)
    save_edge_list(g, args.out)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blocktree",
        description="Longest-chain consensus simulator on P2P graphs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="single run, JSON output")
    p.add_argument("--config", required=True, help="run config (JSON)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--trace", help="also write the binary event trace here")
    p.add_argument(
        "--no-events", action="store_true",
        help="skip event recording (omits head_history)",
    )
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("sweep", help="replicated runs over a tau_nd grid, CSV output")
    p.add_argument("--config", required=True, help="sweep spec (JSON)")
    p.add_argument("--seed", type=int, help="override the base seed")
    p.add_argument("--out", required=True, help="per-run CSV path")
    p.add_argument("--summary", help="also write per-grid-point mean/std CSV here")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("mfpt", help="distance summary of an edge-list graph")
    p.add_argument("graph", help="edge-list file ('# nodes=N' header)")
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--out", help="output path (default: stdout)")
    p.set_defaults(fn=_cmd_mfpt)

    p = sub.add_parser("fit", help="power-law vs exponential model selection")
    p.add_argument("shares", nargs="+", help="miner-share CSV file(s)")
    p.add_argument("--xmin", type=float, help="lower support bound (default: sample min)")
    p.add_argument("--out", help="JSON output path (default: stdout)")
    p.set_defaults(fn=_cmd_fit)

    p = sub.add_parser("gen-graph", help="generate a topology as an edge list")
    p.add_argument("--kind", required=True, choices=["er", "ba", "complete", "tree"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--mean-degree", type=float)
    p.add_argument("--m", type=int)
    p.add_argument("--branching", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_gen_graph)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
