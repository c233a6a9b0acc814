"""Cast insertion from the external language into the internal calculus."""

from __future__ import annotations

import dataclasses
from typing import Dict, Optional, Tuple

from . import syntax as s
from .relations import consistent_sub, sub
from .typer import LabelAllocator, Typer
from .types import BlameLabel, Type, show_type


def smart_cast(e: s.Term, t: Type, u: Type, p: BlameLabel) -> s.Term:
    if not consistent_sub(t, u):
        raise ValueError(f"inconsistent cast {show_type(t)} => {show_type(u)}")
    return e if sub(t, u) else s.Cast(e, t, u, p)


def insert_casts(env: Dict[str, Type], e: s.Term,
                 labels: Optional[LabelAllocator] = None) -> Tuple[s.Term, Type]:
    labels = labels if labels is not None else LabelAllocator()
    t, _, f = Typer(labels).go(dict(env), e)
    return f, t


def erase(e: s.Term) -> s.Term:
    """Drop the annotations on lambdas and new."""
    if isinstance(e, s.Lam):
        return dataclasses.replace(e, ann=None, body=erase(e.body))
    if isinstance(e, s.New):
        return dataclasses.replace(e, ann=None)
    if isinstance(e, s.CaseE):
        bs = tuple((l, x, erase(b)) for l, x, b in e.branches)
        return dataclasses.replace(e, scrutinee=erase(e.scrutinee), branches=bs)
    if isinstance(e, s.Arith):
        return dataclasses.replace(e, args=tuple(erase(a) for a in e.args))
    changes = {f.name: erase(getattr(e, f.name)) for f in dataclasses.fields(e)
               if isinstance(getattr(e, f.name), s.Term)}
    return dataclasses.replace(e, **changes) if changes else e
