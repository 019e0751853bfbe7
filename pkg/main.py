"""
Main entry point for the operator-valued convolution engine.
"""
import logging
import sys

from modules.cli import EXIT_USAGE, build_parser, job_from_args, run
from modules.config import config
from modules.guardrails import UsageException

logger = logging.getLogger(__name__)


def setup_logging(verbose: bool = False):
    """Set up logging configuration based on verbose flag.

    Args:
        verbose: If True, show INFO level logs. If False, show WARNING and above only.
    """
    log_level = logging.INFO if verbose else logging.WARNING
    logging.basicConfig(
        level=log_level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
        force=True  # Force reconfiguration if already configured
    )


def parse_arguments(argv=None):
    """Parse command-line arguments."""
    return build_parser().parse_args(argv)


def main(argv=None) -> int:
    """Run one CLI command and return its exit code."""
    args = parse_arguments(argv)
    setup_logging(verbose=args.verbose)
    logger.info(f"Engine settings: {config}")

    try:
        job = job_from_args(args)
    except UsageException as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    return run(job)


if __name__ == "__main__":
    sys.exit(main())
