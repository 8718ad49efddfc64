"""Command line driver: nodal-lab <subcommand> --config <path>."""

from __future__ import annotations

import argparse
import os
import sys

from .config import ConfigError, load_config
from .experiments import DRIVERS, resolve_workers


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nodal-lab",
        description="Discretisation laboratory for level sets of planar Gaussian fields")
    parser.add_argument("subcommand", choices=sorted(DRIVERS))
    parser.add_argument("--config", required=True, help="TOML experiment config")
    parser.add_argument("--seed", type=int, default=None, help="master seed override")
    parser.add_argument("--out", default=None, help="output directory override")
    parser.add_argument("--workers", type=int, default=None,
                        help="worker processes (default: hardware, or NODAL_LAB_WORKERS)")
    args = parser.parse_args(argv)

    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out"] = args.out
    if args.workers is not None:
        overrides["workers"] = args.workers
    try:
        cfg = load_config(args.config, overrides)
    except (ConfigError, OSError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    record = DRIVERS[args.subcommand](cfg)
    out_dir = os.path.join(cfg.out, f"{args.subcommand}-{record.config_hash}")
    record.write(out_dir)
    print(f"{args.subcommand}: wrote {out_dir} "
          f"(wall {record.wall_seconds:.1f}s, workers {resolve_workers(cfg)})")
    for key, val in record.summary.items():
        print(f"  {key}: {val}")
    if record.indeterminate_rate > 0.01:
        print(f"indeterminate-oracle rate {record.indeterminate_rate:.3%} exceeds 1%",
              file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
