# main.py

import argparse
import logging
import sys

import config
from cli.commands import COMMANDS, execute


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=config.APP_NAME,
                                     description="Doubly periodic SU(N+1) Chern-Simons-Higgs solver suite")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub = subparsers.add_parser(name)
        sub.add_argument("--config", required=True, help="JSON run configuration")
        sub.add_argument("--lambda-multiple", type=float, dest="lambda_multiple",
                         help="Coupling as a multiple of lambda0; replaces any lambda in the config")
        sub.add_argument("--resolution", type=int)
        sub.add_argument("--seed", type=int)
        sub.add_argument("--out", default=config.DEFAULT_OUTPUT_DIR)
        sub.add_argument("--fields", choices=["csv", "binary"], help="Field dump format")
        sub.add_argument("--verbose", action="store_true")
        if name == "solve-mp":
            sub.add_argument("--minimum", help="Output directory of an earlier solve-min run")
        if name == "verify":
            sub.add_argument("fields_dir", help="Directory holding v_j field dumps")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logger = config.setup_logging(logging.DEBUG if args.verbose else None)
    logger.info(f"Running {args.command} with {args.config}")
    return execute(args)


if __name__ == "__main__":
    sys.exit(main())
