"""
zkcnn - verifiable split-CNN testing

Command-line entry point. Proves that a committed split CNN classified a
tester's batch as claimed: PriorNet over ring-shaped data through a
matrix-program SNARK, LaterNet through commit-and-prove gadgets, every
layer linked to the next, and gadget proofs of many testers aggregated.

Exit codes: 0 success or accept, 1 reject or prover failure, 2 usage or
artifact error.
"""

import argparse
import sys
from typing import List, Optional

from dotenv import load_dotenv
from pydantic import ValidationError

from api import bench_commands, commands
from utils.config import Settings, get_settings
from utils.errors import ArtifactError, ConfigError, ProverError, ShapeError
from utils.logger import set_log_level, setup_logger

# Load environment variables
load_dotenv()

# Initialize logger
logger = setup_logger()

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def common_flags() -> argparse.ArgumentParser:
    """Flags every command accepts; each overrides its ZKCNN_* variable."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int)
    common.add_argument("--log-level")
    common.add_argument("--ring-degree", type=int)
    common.add_argument("--ring-modulus-bits", type=int)
    common.add_argument("--relu-bits", type=int)
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zkcnn",
        description="Prove and verify split-CNN inference on tester batches.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = common_flags()
    commands.register(sub, common)
    bench_commands.register(sub, common)
    return parser


def resolve_settings(args: argparse.Namespace) -> Settings:
    """
    Apply CLI flags on top of environment settings.

    Raises:
        ConfigError: If a flag value is out of range
    """
    try:
        return get_settings().override(
            seed=args.seed,
            log_level=args.log_level,
            ring_degree=args.ring_degree,
            ring_modulus_bits=args.ring_modulus_bits,
            relu_bits=args.relu_bits,
        )
    except ValidationError as e:
        raise ConfigError("; ".join(err["msg"] for err in e.errors())) from e


def run(argv: Optional[List[str]] = None) -> int:
    """
    Run one command and map its outcome to an exit code.

    Args:
        argv: Arguments without the program name (defaults to sys.argv)

    Returns:
        Exit code
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK

    try:
        settings = resolve_settings(args)
        set_log_level(settings.log_level)
        logger.debug(f"command {args.command} with {settings.model_dump()}")
        return args.handler(args, settings)
    except ProverError as e:
        logger.error(f"prover failed in {e.relation}: {e}")
        return EXIT_FAILURE
    except ValidationError as e:
        logger.error(f"invalid input file: {e.error_count()} errors\n{e}")
        return EXIT_USAGE
    except (ArtifactError, ConfigError, ShapeError) as e:
        logger.error(str(e))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(run())
