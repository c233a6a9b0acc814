"""Shared helpers for the test suite."""

import contextlib
import pathlib

from ggv.loader import compile_file
from ggv.runtime import Scheduler, run

ROOT = pathlib.Path(__file__).resolve().parent.parent
PROGRAMS = ROOT / "programs"
GOLDEN = pathlib.Path(__file__).parent / "golden"

verdicts = {}


@contextlib.contextmanager
def criterion(number: int, title: str):
    """Record a pass/fail verdict for one acceptance criterion."""
    key = (number, title)
    verdicts.setdefault(key, True)
    try:
        yield
    except BaseException:
        verdicts[key] = False
        raise


def load(name: str, untyped=None):
    return compile_file(str(PROGRAMS / name), untyped)


def traced_run(compiled, seed=None, **kw):
    steps = []
    out = run(compiled.term, Scheduler(seed=seed), trace=steps.append, **kw)
    return out, steps
