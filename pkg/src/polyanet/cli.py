"""Command-line interface.

Subcommands: ``gen`` (write a preferential-attachment network), ``inspect``
(structural analysis as JSON), ``exact`` (small-instance oracles), ``init-run``
/ ``cure-run`` (Monte Carlo experiments from a config file), ``game`` (the
curing/infection equilibrium), and ``compare`` (multi-arm experiments).

Exit status: 0 on success, 1 on usage errors, 2 on runtime failures.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import graph, harness, optimize
from .engine import UrnState
from .oracle import average_infection_rate, expected_exposure


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; we use 1
        raise UsageError(message)


def _alloc(text: str, n: int) -> np.ndarray:
    """Parse a per-node mass vector: ``uniform:V`` (V per node), ``budget:V``
    (V split evenly), or an explicit comma list."""
    if text.startswith("uniform:"):
        return np.full(n, float(text.split(":", 1)[1]))
    if text.startswith("budget:"):
        return np.full(n, float(text.split(":", 1)[1]) / n)
    values = np.array([float(tok) for tok in text.split(",")], dtype=float)
    if values.shape[0] != n:
        raise ValueError(f"expected {n} values, got {values.shape[0]}")
    return values


def _emit_json(payload, out):
    text = json.dumps(payload, indent=2) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _add_output_flags(p):
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> _Parser:
    parser = _Parser(prog="polyanet", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a preferential-attachment network")
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--m", type=int, required=True, help="edges per arriving node")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("matrix", "edges"), default="matrix")

    p = sub.add_parser("inspect", help="inner/outer nodes, centralities, target sets")
    p.add_argument("--net", required=True)
    p.add_argument("--largest-component", action="store_true",
                   help="keep the largest component of a disconnected input")
    p.add_argument("--out")

    p = sub.add_parser("exact", help="exact infection rate / expected exposure oracles")
    p.add_argument("--net", required=True)
    p.add_argument("--red", required=True, help="red init, e.g. 'uniform:1' or '1,0,1'")
    p.add_argument("--black", required=True, help="black init, same forms")
    p.add_argument("--n", type=int, default=1, help="time index for the infection rate")
    p.add_argument("--delta", type=float, default=0.0,
                   help="constant reinforcement per node, both colours")
    p.add_argument("--cap", type=int, default=24, help="enumeration cap in bits")
    p.add_argument("--exposure", action="store_true",
                   help="also report one-step expected exposure for --x/--y")
    p.add_argument("--x", help="curing step for --exposure")
    p.add_argument("--y", help="infection step for --exposure")
    p.add_argument("--out")

    for name, vary in (("init-run", "init"), ("cure-run", "cure")):
        p = sub.add_parser(name, help=f"run {vary}-strategy experiment arms from a config file")
        p.add_argument("--config", required=True)
        p.add_argument("--arm", help="run only the named arm")
        p.add_argument("--seed", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--steps", type=int)
        p.add_argument("--jobs", type=int, default=1)
        _add_output_flags(p)
        p.set_defaults(vary=vary)

    p = sub.add_parser("game", help="solve the curing/infection game on expected exposure")
    p.add_argument("--net", required=True)
    p.add_argument("--red", required=True)
    p.add_argument("--black", required=True)
    p.add_argument("--budget-b", type=float, required=True, help="curing budget")
    p.add_argument("--budget-r", type=float, required=True, help="infection budget")
    p.add_argument("--rounds", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--out")

    p = sub.add_parser("compare", help="run all arms of a config with shared randomness")
    p.add_argument("--config", required=True)
    p.add_argument("--vary", choices=("init", "cure"), default="init")
    p.add_argument("--independent", action="store_true",
                   help="independent streams per arm instead of common random numbers")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--jobs", type=int, default=1)
    _add_output_flags(p)
    return parser


def _load_config_network(spec: dict) -> graph.Network:
    if "file" in spec:
        return graph.load_network(spec["file"])
    if "ba_nodes" in spec:
        return graph.generate_barabasi_albert(
            int(spec["ba_nodes"]), int(spec.get("ba_m", 1)), int(spec.get("ba_seed", 0)))
    raise ValueError("[network] section needs 'file' or 'ba_nodes'")


def _cmd_gen(args):
    net = graph.generate_barabasi_albert(args.nodes, args.m, args.seed)
    graph.save_network(net, args.out, args.format)
    print(f"wrote {net.node_count} nodes, {net.edge_count} edges to {args.out}")


def _cmd_inspect(args):
    net = graph.load_network(args.net, largest_component=args.largest_component)
    layered = graph.target_set_layered(net)
    dense = graph.target_set_dense(net, prune=False)
    pruned = graph.target_set_dense(net, prune=True)
    payload = {
        "nodes": net.node_count,
        "edges": net.edge_count,
        "outer": (graph.outer_nodes(net) + 1).tolist(),
        "inner": (graph.inner_nodes(net) + 1).tolist(),
        "closeness": [float(c) for c in graph.closeness_centrality(net)],
        "layered_targets": [i + 1 for i in layered.nodes],
        "dense_targets": [i + 1 for i in dense.nodes],
        "dense_targets_pruned": [i + 1 for i in pruned.nodes],
    }
    _emit_json(payload, args.out)


def _cmd_exact(args):
    net = graph.load_network(args.net)
    red = _alloc(args.red, net.node_count)
    black = _alloc(args.black, net.node_count)
    schedule = (args.delta, args.delta)
    payload = {
        "n": args.n,
        "infection_rate": average_infection_rate(net, red, black, schedule, args.n, args.cap),
    }
    if args.exposure:
        if args.x is None or args.y is None:
            raise UsageError("--exposure needs --x and --y")
        state = UrnState(net, red, black)
        x = _alloc(args.x, net.node_count)
        y = _alloc(args.y, net.node_count)
        value, gx, gy = expected_exposure(state, x, y)
        payload["expected_exposure"] = value
        payload["exposure_grad_curing"] = [float(v) for v in gx]
        payload["exposure_grad_infection"] = [float(v) for v in gy]
    _emit_json(payload, args.out)


def _cmd_run(args):
    net_spec, run, arms = harness.load_config_file(args.config)
    if args.arm is not None:
        arms = [a for a in arms if a[0] == args.arm]
        if not arms:
            raise ValueError(f"no arm named {args.arm!r} in {args.config}")
    net = _load_config_network(net_spec)
    configs = harness.build_configs(run, arms, seed=args.seed,
                                    trials=args.trials, steps=args.steps)
    series = [harness.run_experiment(net, cfg, n_jobs=args.jobs) for cfg in configs]
    result = harness.emit(series, args.format, args.out)
    if args.out:
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(result)


def _cmd_game(args):
    net = graph.load_network(args.net)
    red = _alloc(args.red, net.node_count)
    black = _alloc(args.black, net.node_count)
    state = UrnState(net, red, black)
    solution = optimize.nash_solve(net, state, args.budget_b, args.budget_r,
                                   rounds=args.rounds, tol=args.tol)
    payload = {
        "curing": [float(v) for v in solution.curing],
        "infection": [float(v) for v in solution.infection],
        "value": solution.value,
        "exploitability": solution.exploitability,
        "rounds": solution.rounds,
        "converged": solution.converged,
    }
    _emit_json(payload, args.out)


def _cmd_compare(args):
    net_spec, run, arms = harness.load_config_file(args.config)
    net = _load_config_network(net_spec)
    configs = harness.build_configs(run, arms, seed=args.seed,
                                    trials=args.trials, steps=args.steps)
    series = []
    for k, cfg in enumerate(configs):
        arm_offset = 0 if not args.independent else k
        series.append(harness.run_experiment(net, cfg, n_jobs=args.jobs, arm=arm_offset))
    result = harness.emit(series, args.format, args.out)
    if args.out:
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(result)


_COMMANDS = {
    "gen": _cmd_gen,
    "inspect": _cmd_inspect,
    "exact": _cmd_exact,
    "init-run": _cmd_run,
    "cure-run": _cmd_run,
    "game": _cmd_game,
    "compare": _cmd_compare,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        parser.print_usage(sys.stderr)
        return 1
    try:
        _COMMANDS[args.command](args)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return 1
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
