"""Command-line entry point: ``policy-embed <command> [options]``."""

from __future__ import annotations

import argparse
import sys

from numpy.linalg import LinAlgError

from ..lattice import LatticeFormatError
from . import commands
from .config import ConfigError, load_config

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2

_HELP = {
    "discretize": (
        "Roll out the configured policy, bin states and actions, and write lattice.txt, "
        "visitation.txt and discretize.csv.",
        commands.DISCRETIZE_COLUMNS,
    ),
    "prune": (
        "Replace unvisited lattice rows by the uniform distribution; writes pruned.txt and prune.csv.",
        commands.PRUNE_COLUMNS,
    ),
    "embed": (
        "Project the (pruned) lattice onto a truncated basis for every K; writes "
        "embedding_<basis>_K<K>.txt, reconstruction_<basis>_K<K>.txt and embed.csv.",
        commands.EMBED_COLUMNS,
    ),
    "evaluate": (
        "Roll out the continuous policy, its lattice and every K-term reconstruction; writes evaluate.csv.",
        commands.EVALUATE_COLUMNS,
    ),
    "bound": (
        "Compare return-gap bounds with measured gaps (chain, random) or report discretization "
        "volume terms (simulated envs); writes bound.csv.",
        commands.BOUND_COLUMNS,
    ),
}

EXPERIMENTS = ("turntable", "pendulum", "cmc", "chain")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI file with a [run] section")
    p.add_argument("--seed", help="seed or list such as 0,1,2 or 0-9")
    p.add_argument("--out", help="output directory (default: out)")
    p.add_argument("--basis", help="dft, haar, db4, svd or gmm")
    p.add_argument("--k", help="number of components, e.g. 5 or 1,2,5")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="policy-embed",
        description="Discretize continuous policies, compress them in spectral bases and bound the return gap.",
        epilog="Exit codes: 0 success, 1 configuration error, 2 numerical error. "
        "CSV files end with '# config-hash', '# seed' and '# version' comment lines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (text, columns) in _HELP.items():
        p = sub.add_parser(name, help=text.split(";")[0], description=text,
                           epilog="CSV columns: " + ", ".join(columns))
        _common(p)
    p = sub.add_parser("experiment", help="run a packaged experiment and write <name>.csv",
                       description="Run one of the packaged experiments.")
    p.add_argument("name", choices=EXPERIMENTS)
    _common(p)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {"seeds": args.seed, "out": args.out, "basis": args.basis, "k": args.k}
    try:
        cfg = load_config(args.config, overrides)
        if args.command == "experiment":
            written = commands.cmd_experiment(cfg, args.name)
        else:
            written = getattr(commands, f"cmd_{args.command}")(cfg)
    except ConfigError as exc:
        print(f"policy-embed: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (LatticeFormatError, LinAlgError, ArithmeticError, ValueError) as exc:
        where = f" (config {args.config})" if args.config else ""
        print(f"policy-embed: error{where}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for path in written:
        print(path)
    return EXIT_OK


__all__ = ["main", "build_parser", "ConfigError", "load_config"]
