"""Program corpus for the metatheory tests.

Base programs live in tests/corpus. Each annotation site (lambda parameter or
`new`) is loosened one step toward Dyn/DC to produce less precise variants;
variants that still typecheck join the corpus.
"""

from __future__ import annotations

import dataclasses
import pathlib
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional

from ggv import syntax as s
from ggv.parser import parse_program
from ggv.typer import GGVTypeError, LabelAllocator, Typer, check_program
from ggv.types import (DC, Dyn, Fn, Offer, Prod, Recv, Select, Send, Sess, SessionType, Type)

CORPUS_DIR = pathlib.Path(__file__).parent / "corpus"


@dataclass
class Entry:
    name: str
    source: s.Term
    type: Type
    term: s.Term
    static: bool


def looser_session(t: SessionType) -> List[SessionType]:
    if t == DC:
        return []
    out: List[SessionType] = [DC]
    if isinstance(t, (Send, Recv)):
        out += [type(t)(c, t.rest) for c in looser(t.carried)]
        out += [type(t)(t.carried, r) for r in looser_session(t.rest)]
    elif isinstance(t, (Select, Offer)):
        for i, (l, b) in enumerate(t.branches):
            for b2 in looser_session(b):
                bs = list(t.branches)
                bs[i] = (l, b2)
                out.append(type(t)(bs))
    return out


def looser(t: Type) -> List[Type]:
    """Types one loosening step less precise than t."""
    if t == Dyn:
        return []
    out: List[Type] = [Dyn]
    if isinstance(t, Fn):
        out += [Fn(t.mult, d, t.cod) for d in looser(t.dom)]
        out += [Fn(t.mult, t.dom, c) for c in looser(t.cod)]
    elif isinstance(t, Prod):
        out += [Prod(t.mult, a, t.snd) for a in looser(t.fst)]
        out += [Prod(t.mult, t.fst, b) for b in looser(t.snd)]
    elif isinstance(t, Sess):
        out += [Sess(r) for r in looser_session(t.s)]
    return out


def _sites(e: s.Term) -> List[s.Term]:
    return [x for x in s.subterms(e) if isinstance(x, (s.Lam, s.New)) and x.ann is not None]


def _replace(e: s.Term, target: s.Term, new: s.Term) -> s.Term:
    if e is target:
        return new
    if isinstance(e, s.CaseE):
        bs = tuple((l, x, _replace(b, target, new)) for l, x, b in e.branches)
        return dataclasses.replace(e, scrutinee=_replace(e.scrutinee, target, new), branches=bs)
    if isinstance(e, s.Arith):
        return dataclasses.replace(e, args=tuple(_replace(a, target, new) for a in e.args))
    changes = {f.name: _replace(getattr(e, f.name), target, new) for f in dataclasses.fields(e)
               if isinstance(getattr(e, f.name), s.Term)}
    return dataclasses.replace(e, **changes) if changes else e


def variants(e: s.Term) -> List[s.Term]:
    out = []
    for site in _sites(e):
        alts = looser_session(site.ann) if isinstance(site, s.New) else looser(site.ann)
        for a in alts:
            out.append(_replace(e, site, dataclasses.replace(site, ann=a)))
    return out


def is_static_type(t) -> bool:
    if t == Dyn or t == DC:
        return False
    if isinstance(t, (Fn, Prod)):
        return is_static_type(t.dom if isinstance(t, Fn) else t.fst) and \
            is_static_type(t.cod if isinstance(t, Fn) else t.snd)
    if isinstance(t, Sess):
        return is_static_type(t.s)
    if isinstance(t, (Send, Recv)):
        return is_static_type(t.carried) and is_static_type(t.rest)
    if isinstance(t, (Select, Offer)):
        return all(is_static_type(b) for _, b in t.branches)
    return True


def is_static(e: s.Term) -> bool:
    return all(is_static_type(x.ann) for x in _sites(e))


def elaborate(name: str, e: s.Term) -> Optional[Entry]:
    try:
        t = check_program(e)
    except GGVTypeError:
        return None
    _, _, term = Typer(LabelAllocator(name)).go({}, e)
    return Entry(name, e, t, term, is_static(e))


@lru_cache(maxsize=None)
def base_programs():
    progs = []
    for path in sorted(CORPUS_DIR.glob("*.ggv")):
        progs.append((path.stem, parse_program(path.read_text()).body))
    return tuple(progs)


@lru_cache(maxsize=None)
def corpus(max_variants_per_program: int = 4) -> tuple:
    entries = []
    for name, body in base_programs():
        base = elaborate(name, body)
        assert base is not None, f"base program {name} must typecheck"
        entries.append(base)
        kept = 0
        for k, v in enumerate(variants(body)):
            if kept >= max_variants_per_program:
                break
            ent = elaborate(f"{name}~{k}", v)
            if ent is not None:
                entries.append(ent)
                kept += 1
    return tuple(entries)
