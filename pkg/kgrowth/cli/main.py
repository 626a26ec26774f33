"""
Command-line entry point: kgrowth <mode> [--config FILE] [--out DIR] [--key=value ...]
"""

import argparse
import json
import logging
import sys
from typing import Any, Dict, List, Optional

from ..interfaces import ConfigValidationException, RunMode
from .logging_setup import configure_logging
from .models import parse_config
from .runner import EXIT_INVALID, execute

logger = logging.getLogger(__name__)


def _coerce(raw: str) -> Any:
    """Parse an override value as JSON when possible, else keep the string"""
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def parse_overrides(extra: List[str]) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {}
    pending: Optional[str] = None
    for token in extra:
        if pending is not None:
            overrides[pending] = _coerce(token)
            pending = None
        elif token.startswith("--") and "=" in token:
            key, raw = token[2:].split("=", 1)
            overrides[key] = _coerce(raw)
        elif token.startswith("--"):
            pending = token[2:]
        else:
            raise ConfigValidationException([f"{token}: unexpected argument"])
    if pending is not None:
        raise ConfigValidationException([f"{pending}: missing value"])
    return overrides


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kgrowth",
        allow_abbrev=False,
        description="Knowledge-growth mean-field solvers",
        epilog="Any other --key=value pair overrides the matching configuration field.",
    )
    parser.add_argument("mode", choices=[mode.value for mode in RunMode])
    parser.add_argument("--config", default=None, help="JSON configuration file")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    parser.add_argument("--plain-logs", action="store_true", help="human-readable log lines")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    configure_logging(args.log_level, json_logs=not args.plain_logs)

    try:
        overrides = parse_overrides(extra)
        overrides["mode"] = args.mode
        if args.out is not None:
            overrides["out"] = args.out
        spec = parse_config(args.config, overrides)
    except ConfigValidationException as e:
        for message in e.errors:
            print(f"error: {message}", file=sys.stderr)
        logger.error("Configuration rejected", extra={"errors": e.errors})
        return EXIT_INVALID

    logger.info(f"Starting {spec.mode.value} run", extra={"out": spec.out})
    return execute(spec)


if __name__ == "__main__":
    sys.exit(main())
