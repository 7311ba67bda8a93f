"""Command line entry point.

    greedygossip {topology,run,bounds,sweep,stale,multihop} --config PATH
                 [--seed U64] [--out DIR] [--plot] [--workers N]

Exit status: 0 on success, 2 on configuration errors, 1 on runtime errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .config import ConfigError, load_config
from . import experiments as ex

COMMANDS = ("topology", "run", "bounds", "sweep", "stale", "multihop")


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="greedygossip",
                                description="Eavesdropping-based greedy gossip experiments")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="experiment config file")
    p.add_argument("--seed", type=_u64, help="override the base seed")
    p.add_argument("--out", help="output directory (default: print a summary only)")
    p.add_argument("--plot", action="store_true", help="also render PNG figures into --out")
    p.add_argument("--workers", type=int, default=1, help="worker processes for runs")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _summary(command: str, result) -> str:
    if command == "topology":
        return "".join(result) if len(result) == 1 else f"{len(result)} graphs\n"
    if command in ("run", "stale", "multihop"):
        lines = []
        for name, c in result.curves().items():
            reach = c.tx_to_reach(1e-2)
            lines.append(f"{name}: final mean rel_err {c.mean[-1]:.4g}, "
                         f"tx to 1e-2: {reach if reach is not None else '>budget'}")
        return "\n".join(lines) + "\n"
    if command == "bounds":
        return "".join(f"[graph {i}]\n{r.to_kv()}" for i, r in enumerate(result))
    return "".join(f"n={r.n}: A_mean={r.A_mean:.6f} T_ave/n={r.tave_mean:.3f} "
                   f"bound/n={r.bound_mean:.3f}\n" for r in result)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    try:
        if args.command == "topology":
            result = ex.cmd_topology(cfg, args.out)
        elif args.command == "run":
            result = ex.cmd_run(cfg, args.out, args.workers, args.plot)
        elif args.command == "stale":
            result = ex.cmd_stale(cfg, args.out, args.workers, args.plot)
        elif args.command == "multihop":
            result = ex.cmd_multihop(cfg, args.out, args.workers, args.plot)
        elif args.command == "bounds":
            result = ex.cmd_bounds(cfg, args.out)
        else:
            result = ex.cmd_sweep(cfg, args.out, args.plot)
    except Exception as e:  # noqa: BLE001
        print(f"error: {e}", file=sys.stderr)
        return 1
    sys.stdout.write(_summary(args.command, result))
    return 0


if __name__ == "__main__":
    sys.exit(main())
