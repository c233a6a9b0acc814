"""The ggv command: check, elaborate, run and rel."""

from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional

from . import syntax as s
from .embed import EmbeddingError
from .internal import BlamePair
from .loader import Compiled, compile_file
from .parser import ParseError, parse_type
from .relations import RELATIONS, join, meet
from .runtime import Blamed, Quiescent, RunError, Scheduler, Stuck, run
from .typer import GGVTypeError
from .types import show_type

EXIT_OK, EXIT_TYPE, EXIT_IO = 0, 1, 2
EXIT_BLAMED, EXIT_STUCK, EXIT_LIMIT = 10, 11, 12


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _load(path: str, untyped: Optional[bool]) -> Compiled:
    return compile_file(path, untyped)


def _guard(fn):
    def wrapped(args) -> int:
        try:
            return fn(args)
        except OSError as exc:
            _err(f"ggv: {exc.filename or ''}: {exc.strerror or exc}")
            return EXIT_IO
        except ParseError as exc:
            _err(f"{args.file}:{exc}")
            return EXIT_TYPE
        except (GGVTypeError, EmbeddingError) as exc:
            _err(f"{args.file}: {exc}")
            return EXIT_TYPE
    return wrapped


@_guard
def cmd_check(args) -> int:
    c = _load(args.file, True if args.untyped else None)
    print(f": {show_type(c.type)}")
    return EXIT_OK


@_guard
def cmd_elaborate(args) -> int:
    c = _load(args.file, True if args.untyped else None)
    if args.json:
        print(json.dumps(s.to_json(c.term), ensure_ascii=False))
    else:
        print(s.show(c.term))
    if args.labels:
        for k, span in sorted(c.labels.spans.items()):
            print(f"ℓ{k}\t{span}")
    return EXIT_OK


def blame_report(outcome: Blamed) -> str:
    b = outcome.blame
    names = "{" + ",".join(sorted(b.linears)) + "}"
    if isinstance(b, BlamePair):
        return (f"blame {b.p} {b.q} {names} at step {outcome.at_step}, "
                f"casts from {b.p.span or '?'} and {b.q.span or '?'}")
    return f"blame {b.p} {names} at step {outcome.at_step}, cast from {b.p.span or '?'}"


@_guard
def cmd_run(args) -> int:
    c = _load(args.file, True if args.untyped else None)
    sched = Scheduler(seed=args.seed)
    trace = (lambda st: print(st, flush=False)) if args.trace else None
    try:
        out = run(c.term, sched, max_steps=args.max_steps, trace=trace,
                  typecheck_each_step=args.typecheck_each_step,
                  check_errors=args.typecheck_each_step,
                  run_to_quiescence=args.run_to_quiescence)
    except RunError as exc:
        _err(f"ggv: configuration check failed at {exc}")
        return EXIT_TYPE
    if isinstance(out, Quiescent):
        print(f"quiescent after {out.steps} steps: {out.final}")
        return EXIT_OK
    if isinstance(out, Blamed):
        print(blame_report(out))
        if args.run_to_quiescence:
            for b in out.final.blames():
                if b is not out.blame:
                    print(blame_report(Blamed(out.final, b, out.at_step, out.steps)))
        return EXIT_BLAMED
    if isinstance(out, Stuck):
        print(f"stuck ({out.reason}) after {out.steps} steps: {out.final}")
        return EXIT_STUCK
    print(f"step limit reached after {out.steps} steps")
    return EXIT_LIMIT


def cmd_rel(args) -> int:
    try:
        t, u = parse_type(args.left), parse_type(args.right)
    except ParseError as exc:
        _err(f"ggv: {exc}")
        return EXIT_TYPE
    if args.relation in ("join", "meet"):
        r = (join if args.relation == "join" else meet)(t, u)
        print("undefined" if r is None else show_type(r))
    else:
        print("true" if RELATIONS[args.relation](t, u) else "false")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ggv", description="Gradual GV toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="typecheck a program")
    p.add_argument("--untyped", action="store_true")
    p.add_argument("file")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("elaborate", help="print the program with casts inserted")
    p.add_argument("--untyped", action="store_true")
    p.add_argument("--labels", action="store_true", help="append a label/source table")
    p.add_argument("--json", action="store_true", help="emit the term as JSON")
    p.add_argument("file")
    p.set_defaults(func=cmd_elaborate)

    p = sub.add_parser("run", help="elaborate and execute a program")
    p.add_argument("--untyped", action="store_true")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--max-steps", type=int, default=100000)
    p.add_argument("--trace", action="store_true")
    p.add_argument("--typecheck-each-step", action="store_true")
    p.add_argument("--run-to-quiescence", action="store_true")
    p.add_argument("file")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("rel", help="decide a type relation")
    p.add_argument("relation", choices=sorted(RELATIONS) + ["join", "meet"])
    p.add_argument("left")
    p.add_argument("right")
    p.set_defaults(func=cmd_rel)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
