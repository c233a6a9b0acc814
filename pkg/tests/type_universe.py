"""Enumeration of the type universe used by the relation property tests."""

from __future__ import annotations

import itertools
import random
from functools import lru_cache
from typing import List

from ggv.types import (DC, LIN, UN, Dyn, EndIn, EndOut, Fn, Int, Offer, Prod, Recv, Select, Send,
                       Sess, Unit)

LABELS = ("a", "b")
BASE_TYPES = (Unit, Int, Dyn)
BASE_SESSIONS = (EndOut, EndIn, DC)


def _label_sets():
    for k in range(1, len(LABELS) + 1):
        yield from itertools.combinations(LABELS, k)


@lru_cache(maxsize=None)
def sessions(depth: int) -> tuple:
    if depth == 0:
        return BASE_SESSIONS
    ts, ss = types(depth - 1), sessions(depth - 1)
    out: List = list(BASE_SESSIONS)
    out += [k(t, r) for k in (Send, Recv) for t in ts for r in ss]
    for ls in _label_sets():
        for bodies in itertools.product(ss, repeat=len(ls)):
            for k in (Select, Offer):
                out.append(k(dict(zip(ls, bodies))))
    return tuple(dict.fromkeys(out))


@lru_cache(maxsize=None)
def types(depth: int) -> tuple:
    if depth == 0:
        return BASE_TYPES + tuple(Sess(s) for s in BASE_SESSIONS)
    ts = types(depth - 1)
    out: List = list(BASE_TYPES)
    out += [k(m, t, u) for k in (Fn, Prod) for m in (UN, LIN) for t in ts for u in ts]
    out += [Sess(s) for s in sessions(depth)]
    return tuple(dict.fromkeys(out))


def random_type(rng: random.Random, depth: int):
    """A type of depth at most `depth`, drawn without building the full level."""
    if depth == 0 or rng.random() < 0.25:
        return rng.choice(types(0))
    k = rng.randrange(5)
    if k < 2:
        ctor = (Fn, Prod)[k]
        return ctor(rng.choice((UN, LIN)), random_type(rng, depth - 1), random_type(rng, depth - 1))
    return Sess(random_session(rng, depth))


def random_session(rng: random.Random, depth: int):
    if depth == 0 or rng.random() < 0.25:
        return rng.choice(BASE_SESSIONS)
    k = rng.randrange(4)
    if k < 2:
        return (Send, Recv)[k](random_type(rng, depth - 1), random_session(rng, depth - 1))
    ls = rng.choice(list(_label_sets()))
    return (Select, Offer)[k - 2]({l: random_session(rng, depth - 1) for l in ls})
