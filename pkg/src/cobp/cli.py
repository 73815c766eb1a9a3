"""Command-line front end: run or verify a registered example.

Exit codes are a total function of the outcome:
  0  quiescent run / verification passed
  2  usage or configuration problem
  3  deadlock (run or verdict)
  4  step limit (run) / search bound exceeded (verify)
  5  assertion violation (verify)
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .engine import Arbiter, DEADLOCK, QUIESCENT, STEP_LIMIT, initialize, run
from .errors import ConfigurationError
from .examples import example_names, get_example
from .verifier import Limits, verify

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DEADLOCK = 3
EXIT_BOUND = 4
EXIT_VIOLATION = 5

RUN_EXIT = {QUIESCENT: EXIT_OK, DEADLOCK: EXIT_DEADLOCK, STEP_LIMIT: EXIT_BOUND}
VERIFY_EXIT = {"ok": EXIT_OK, "deadlock": EXIT_DEADLOCK,
               "violation": EXIT_VIOLATION, "boundExceeded": EXIT_BOUND}


def _setup_logging() -> None:
    level = os.environ.get("COBP_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(name)s %(levelname)s %(message)s")


def _load_example(name: str, ctx_path: str | None):
    example = get_example(name)
    if ctx_path:
        with open(ctx_path, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
        example = example.with_context_doc(doc)
    return example


def cmd_run(args) -> int:
    example = _load_example(args.example, args.ctx)
    priority = tuple(args.priority.split(",")) if args.priority else ()
    arbiter = Arbiter(args.arbiter, priority)
    program = example.merged()
    state = initialize(program, example.ctx_init, arbiter, args.seed)
    trace, _ = run(program, state, arbiter, args.max_steps)

    payload = trace.to_jsonl()
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as handle:
            handle.write(payload)
    counts: dict[str, int] = {}
    for entry in trace.entries:
        counts[entry.event.label] = counts.get(entry.event.label, 0) + 1
    summary = ", ".join(f"{label} x{n}" for label, n in sorted(counts.items()))
    print(f"{example.name}: {len(trace.entries)} steps, {trace.final_status}"
          + (f" [{summary}]" if summary else ""))
    return RUN_EXIT[trace.final_status]


def cmd_verify(args) -> int:
    example = _load_example(args.example, args.ctx)
    limits = Limits(max_states=args.max_states, max_depth=args.depth)
    verdict = verify(example.program, example.ctx_init,
                     env_model=example.env_model,
                     assertions=example.assertions,
                     limits=limits, search=args.search)
    doc = verdict.to_json()
    if args.report:
        with open(args.report, "w", encoding="utf-8") as handle:
            json.dump(doc, handle, indent=2, sort_keys=True)
            handle.write("\n")
    detail = f" ({verdict.violated})" if verdict.violated else ""
    print(f"{example.name}: {verdict.outcome}{detail}, "
          f"{verdict.states_visited} states, {verdict.elapsed_ms:.0f} ms")
    if verdict.counterexample is not None:
        print("counterexample: " + " -> ".join(e.display() for e in verdict.counterexample))
    return VERIFY_EXIT[verdict.outcome]


def cmd_list(args) -> int:
    for name in example_names():
        print(name)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cobp",
        description="Run or verify context-bound scenario programs.")
    sub = parser.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="execute an example and write its trace")
    runp.add_argument("example")
    runp.add_argument("--seed", type=int, default=0)
    runp.add_argument("--max-steps", type=int, default=10000)
    runp.add_argument("--arbiter", choices=("random", "first", "priority"), default="random")
    runp.add_argument("--priority", default="",
                      help="comma-separated label ranking for the priority arbiter")
    runp.add_argument("--ctx", default=None, help="context-init JSON overriding the default")
    runp.add_argument("--trace", default=None, help="write the JSONL trace here")
    runp.set_defaults(fn=cmd_run)

    verp = sub.add_parser("verify", help="search the state space for deadlocks/violations")
    verp.add_argument("example")
    verp.add_argument("--max-states", type=int, default=1_000_000)
    verp.add_argument("--depth", type=int, default=10_000)
    verp.add_argument("--search", choices=("dfs", "bfs"), default="dfs")
    verp.add_argument("--workers", type=int, default=1,
                      help="accepted for interface compatibility; the traversal is "
                           "deterministic and identical for any value")
    verp.add_argument("--ctx", default=None)
    verp.add_argument("--report", default=None, help="write the verdict JSON here")
    verp.set_defaults(fn=cmd_verify)

    lst = sub.add_parser("list", help="show registered example names")
    lst.set_defaults(fn=cmd_list)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "max_steps", 1) <= 0:
        parser.error("--max-steps must be positive")
    try:
        return args.fn(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
