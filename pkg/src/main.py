import logging
import sys
from typing import Optional, Sequence

from pydantic import ValidationError

from src.cli.commands import build_parser
from src.core.errors import PivotStabilityError

logger = logging.getLogger(__name__)


def configure_logging(verbose: bool) -> None:
    """Diagnostics go to stderr; stdout carries results only."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Runs one command.

    Returns:
        0 on success, 1 on a computation or verification failure,
        2 on a usage error (bad flags, invalid parameters or configuration).
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2

    configure_logging(args.verbose)
    try:
        args.handler(args)
    except PivotStabilityError as e:
        logger.debug("%s failed", args.command, exc_info=True)
        print(f"error: {e.detail}", file=sys.stderr)
        return e.exit_code
    except ValidationError as e:
        print(f"error: invalid parameters: {e}", file=sys.stderr)
        return 2
    return 0


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
