"""Command line interface: ``mqtc solve | shapes | verify``.

Exit status: 0 success, 1 usage error, 2 input error, 3 size ceiling hit.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .errors import InputFormatError, InvalidTreeError, ResourceLimitError
from .exact import solve_exact
from .hill import NEIGHBORHOODS, SearchConfig, solve_hill_climbing
from .io import FORMATS, RunReport, input_digest, parse_distance_matrix
from .quartet import cost_bounds, normalized_score, tree_cost
from .shapes import DEFAULT_MAX_N as SHAPE_MAX_N
from .shapes import generate_shapes
from .tree import parse_newick, to_newick

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_RESOURCE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mqtc", description="Minimum quartet tree cost solver")
    parser.add_argument("--version", action="version", version=f"mqtc {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    solve = sub.add_parser("solve", help="find a minimum-cost tree")
    solve.add_argument("--input", required=True, type=Path)
    solve.add_argument("--format", choices=FORMATS, default="csv")
    solve.add_argument("--mode", choices=("exact", "hill"), default="exact")
    solve.add_argument("--seed", type=int, default=1)
    solve.add_argument("--restarts", type=int, default=20)
    solve.add_argument("--max-steps", type=int, default=500)
    solve.add_argument("--neighborhood", choices=NEIGHBORHOODS, default="both")
    solve.add_argument("--workers", type=int, default=1)
    solve.add_argument("--output-tree", type=Path, help="write the Newick tree here")
    solve.add_argument("--output-report", type=Path, help="write the JSON report here (default: stdout)")

    shapes = sub.add_parser("shapes", help="count tree shapes with N leaves")
    shapes.add_argument("--n", type=int, required=True)
    shapes.add_argument("--list", action="store_true", help="print every shape as JSON")

    verify = sub.add_parser("verify", help="cost and score of a given tree")
    verify.add_argument("--input", required=True, type=Path)
    verify.add_argument("--format", choices=FORMATS, default="csv")
    verify.add_argument("--tree", required=True, help="Newick text or a file holding it")
    return parser


def _read_matrix(path: Path, fmt: str):
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputFormatError(f"cannot read {path}: {exc.strerror}") from None
    return parse_distance_matrix(text, fmt)


def _cmd_solve(args) -> int:
    D = _read_matrix(args.input, args.format)
    if args.mode == "exact":
        res = solve_exact(D, workers=args.workers)
        seed = None
    else:
        try:
            cfg = SearchConfig(args.seed, args.restarts, args.max_steps, args.neighborhood)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        res = solve_hill_climbing(D, cfg, workers=args.workers)
        seed = args.seed
    report = RunReport(
        n=D.n,
        mode=args.mode,
        input_digest=input_digest(D),
        best_cost=res.best_cost,
        normalized_score=res.normalized_score,
        newick=res.newick,
        shapes_evaluated=res.shapes_evaluated,
        assignments_evaluated=res.assignments_evaluated,
        elapsed_ms=res.elapsed * 1000.0,
        seed=seed,
        tool_version=__version__,
    )
    if args.output_tree:
        args.output_tree.write_text(res.newick + "\n", encoding="utf-8")
    if args.output_report:
        args.output_report.write_text(report.to_json(), encoding="utf-8")
    else:
        sys.stdout.write(report.to_json())
    return EXIT_OK


def _cmd_shapes(args) -> int:
    if args.n < 4:
        raise UsageError("--n must be at least 4")
    limit = max(SHAPE_MAX_N, int(os.environ.get("MQTC_MAX_N") or 0))
    shapes = generate_shapes(args.n, max_n=limit)
    if not args.list:
        print(len(shapes))
        return EXIT_OK
    doc = {
        "n": args.n,
        "count": len(shapes),
        "shapes": [
            {
                "code": s.code.hex(),
                "internal_edges": [list(e) for e in s.internal_edges],
                "leaf_slots": list(s.leaf_slots),
            }
            for s in shapes
        ],
    }
    print(json.dumps(doc, indent=2))
    return EXIT_OK


def _cmd_verify(args) -> int:
    D = _read_matrix(args.input, args.format)
    text = args.tree
    if not text.strip().endswith(";") and Path(text).is_file():
        text = Path(text).read_text(encoding="utf-8")
    t = parse_newick(text)
    if set(t.leaf_labels) != set(D.labels):
        raise InputFormatError("tree labels do not match the matrix labels")
    cost = tree_cost(t, D)
    m, M = cost_bounds(D)
    doc = {
        "newick": to_newick(t),
        "cost": cost,
        "normalized_score": normalized_score(cost, m, M),
        "lower_bound": m,
        "upper_bound": M,
    }
    print(json.dumps(doc, indent=2))
    return EXIT_OK


def run_cli(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required: solve, shapes or verify")
        if args.verbose:
            logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s")
        handler = {"solve": _cmd_solve, "shapes": _cmd_shapes, "verify": _cmd_verify}[args.command]
        return handler(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (InputFormatError, InvalidTreeError) as exc:
        print(f"mqtc: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ResourceLimitError as exc:
        print(f"mqtc: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
