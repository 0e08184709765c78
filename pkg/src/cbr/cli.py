"""Command line: ``cbr solve FILE --target LABEL``.

Exit codes: 0 target reachable, 1 unreachable, 2 budget exceeded,
3 input error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Optional, Sequence

from .expr import ParseError
from .program import parse_program
from .reach import BUDGET, FOUND, solve_reachability
from .ssa import UnsupportedTarget
from .store import Config

EXIT_CODES = {FOUND: 0, "exhausted": 1, BUDGET: 2}
INPUT_ERROR = 3


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cbr", description="Constraint-based reachability.")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", help="find inputs reaching a labelled statement")
    s.add_argument("file")
    s.add_argument("--target", required=True, help="statement label")
    s.add_argument("--consistency", choices=("bound", "domain", "poly"), default="bound")
    s.add_argument("--relax", choices=("drop", "envelope", "corner"), default="envelope")
    s.add_argument("--join", choices=("weak", "hull"), default="weak")
    s.add_argument("--widen-delay", type=int, default=3)
    s.add_argument("--max-unroll", type=int, default=2000)
    s.add_argument("--max-rounds", type=int, default=50)
    s.add_argument("--limit", type=int, default=None, help="maximum number of backtracks")
    s.add_argument("--dump-invariants", action="store_true")
    s.add_argument("--format", choices=("text", "json"), default="text")
    return ap


def _text(ans, dump: bool) -> str:
    lines = [f"status: {ans.status}"]
    if ans.witness is not None:
        lines.append("witness: " + ", ".join(f"{k}={v}" for k, v in ans.witness.items()))
    lines.append("stats: " + ", ".join(f"{k}={v}" for k, v in ans.stats.as_dict().items()))
    if dump:
        for inv in ans.invariants:
            lines.append(f"loop {inv['label']} (unrolling {inv['depth']}):")
            lines.append("  P:")
            lines.extend("    " + ln for ln in inv["P"].splitlines())
            if inv["Q"] is not None:
                lines.append("  Q:")
                lines.extend("    " + ln for ln in inv["Q"].splitlines())
    return "\n".join(lines)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with open(args.file, encoding="utf-8") as fh:
            prog = parse_program(fh.read())
        config = Config(args.consistency, args.relax, args.widen_delay, args.max_unroll,
                        args.max_rounds, args.join)
        ans = solve_reachability(prog, args.target, config, limit=args.limit)
    except (OSError, ParseError, UnsupportedTarget, KeyError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"cbr: error: {msg}", file=sys.stderr)
        return INPUT_ERROR
    if args.format == "json":
        print(json.dumps(ans.as_dict(args.dump_invariants), indent=2))
    else:
        print(_text(ans, args.dump_invariants))
    return EXIT_CODES[ans.status]


if __name__ == "__main__":
    sys.exit(main())
