"""sandbox-runner: execute one candidate solver over the stdio protocol.

Usage::

    sandbox-runner --source <file> [--timeout <sec>] [--memory-mb <MB>]

The request object is read from stdin; the response object is written to
stdout, newline terminated. Exit code 0 means a well-formed response
(success or structured error) was written; 2 means a protocol or usage
error before any response could be produced.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .protocol import ProtocolError, parse_request
from .runner import Limits, run_candidate


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sandbox-runner",
        description="Run one candidate solver on one instance, JSON over stdio",
    )
    parser.add_argument("--source", type=Path, required=True,
                        help="file holding the candidate's Python source")
    parser.add_argument("--timeout", type=float, default=30.0,
                        help="wall-clock limit in seconds")
    parser.add_argument("--memory-mb", type=int, default=1024,
                        help="candidate memory budget in MB")
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse's own exit (usage error or --help)
        return int(exc.code) if exc.code else 0
    try:
        source = args.source.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read source: {exc}", file=sys.stderr)
        return 2
    try:
        request = parse_request(sys.stdin.read())
    except ProtocolError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    response = run_candidate(
        source, request, Limits(wall_seconds=args.timeout, memory_mb=args.memory_mb)
    )
    sys.stdout.write(response.to_json() + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
