"""Abstract syntax shared by the external language, the internal cast
calculus and the untyped language.

External programs use the subset without Cast, Let, Chan and Ref.  Internal
terms keep the binder annotations so they can be typechecked again; the
printer leaves them out by default.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Iterator, Optional, Tuple

from . import types as ty
from .types import BlameLabel, Mult, SessionType, Type, show_session, show_type

Pos = Optional[Tuple[int, int]]


class Term:
    __slots__ = ()

    def __str__(self) -> str:
        return show(self)


def _pos():
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Var(Term):
    name: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class Chan(Term):
    """A channel endpoint name created at run time."""

    name: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class Ref(Term):
    """A handle to a linearity cell."""

    name: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class UnitLit(Term):
    pos: Pos = _pos()


@dataclass(frozen=True)
class IntLit(Term):
    value: int
    pos: Pos = _pos()


@dataclass(frozen=True)
class Lam(Term):
    mult: Mult
    var: str
    ann: Optional[Type]
    body: Term
    pos: Pos = _pos()


@dataclass(frozen=True)
class App(Term):
    fn: Term
    arg: Term
    pos: Pos = _pos()


@dataclass(frozen=True)
class Pair(Term):
    mult: Mult
    fst: Term
    snd: Term
    pos: Pos = _pos()


@dataclass(frozen=True)
class LetPair(Term):
    x: str
    y: str
    bound: Term
    body: Term
    pos: Pos = _pos()


@dataclass(frozen=True)
class Let(Term):
    x: str
    bound: Term
    body: Term
    pos: Pos = _pos()


@dataclass(frozen=True)
class Fork(Term):
    body: Term
    pos: Pos = _pos()


@dataclass(frozen=True)
class New(Term):
    ann: Optional[SessionType]
    pos: Pos = _pos()


@dataclass(frozen=True)
class Send(Term):
    payload: Term
    chan: Term
    pos: Pos = _pos()


@dataclass(frozen=True)
class Receive(Term):
    chan: Term
    pos: Pos = _pos()


@dataclass(frozen=True)
class SelectE(Term):
    label: str
    chan: Term
    pos: Pos = _pos()


@dataclass(frozen=True)
class CaseE(Term):
    scrutinee: Term
    branches: Tuple[Tuple[str, str, Term], ...]
    pos: Pos = _pos()

    def branch(self, label: str):
        for l, x, e in self.branches:
            if l == label:
                return x, e
        return None

    @property
    def labels(self):
        return [l for l, _, _ in self.branches]


@dataclass(frozen=True)
class CloseE(Term):
    chan: Term
    pos: Pos = _pos()


@dataclass(frozen=True)
class WaitE(Term):
    chan: Term
    pos: Pos = _pos()


@dataclass(frozen=True)
class Arith(Term):
    """Integer primitives: add, sub, eq (binary) and neg (unary)."""

    op: str
    args: Tuple[Term, ...]
    pos: Pos = _pos()


@dataclass(frozen=True)
class If(Term):
    cond: Term
    then: Term
    else_: Term
    pos: Pos = _pos()


@dataclass(frozen=True)
class Cast(Term):
    body: Term
    src: Type
    tgt: Type
    label: BlameLabel
    pos: Pos = _pos()


ARITY = {"add": 2, "sub": 2, "eq": 2, "neg": 1}


# ------------------------------------------------------------- traversal


def children(e: Term) -> Iterator[Term]:
    for f in dataclasses.fields(e):
        v = getattr(e, f.name)
        if isinstance(v, Term):
            yield v
        elif f.name == "args":
            yield from v
        elif f.name == "branches":
            for _, _, b in v:
                yield b


def subterms(e: Term) -> Iterator[Term]:
    yield e
    for c in children(e):
        yield from subterms(c)


def flv(e: Term) -> frozenset:
    """Channel endpoints occurring in e; they are the only linear names at run time."""
    return frozenset(t.name for t in subterms(e) if isinstance(t, Chan))


def refs(e: Term) -> frozenset:
    return frozenset(t.name for t in subterms(e) if isinstance(t, Ref))


def casts(e: Term) -> list:
    return [t for t in subterms(e) if isinstance(t, Cast)]


def free_vars(e: Term) -> frozenset:
    if isinstance(e, Var):
        return frozenset([e.name])
    if isinstance(e, Lam):
        return free_vars(e.body) - {e.var}
    if isinstance(e, LetPair):
        return free_vars(e.bound) | (free_vars(e.body) - {e.x, e.y})
    if isinstance(e, Let):
        return free_vars(e.bound) | (free_vars(e.body) - {e.x})
    if isinstance(e, CaseE):
        out = free_vars(e.scrutinee)
        for _, x, b in e.branches:
            out |= free_vars(b) - {x}
        return out
    out = frozenset()
    for c in children(e):
        out |= free_vars(c)
    return out


def subst(e: Term, x: str, v: Term) -> Term:
    """Replace free occurrences of variable x.  v is closed, so no capture."""
    if isinstance(e, Var):
        return v if e.name == x else e
    if isinstance(e, Lam):
        if e.var == x:
            return e
        return dataclasses.replace(e, body=subst(e.body, x, v))
    if isinstance(e, LetPair):
        body = e.body if x in (e.x, e.y) else subst(e.body, x, v)
        return dataclasses.replace(e, bound=subst(e.bound, x, v), body=body)
    if isinstance(e, Let):
        body = e.body if x == e.x else subst(e.body, x, v)
        return dataclasses.replace(e, bound=subst(e.bound, x, v), body=body)
    if isinstance(e, CaseE):
        bs = tuple((l, y, b if y == x else subst(b, x, v)) for l, y, b in e.branches)
        return dataclasses.replace(e, scrutinee=subst(e.scrutinee, x, v), branches=bs)
    if isinstance(e, Arith):
        return dataclasses.replace(e, args=tuple(subst(a, x, v) for a in e.args))
    changes = {}
    for f in dataclasses.fields(e):
        c = getattr(e, f.name)
        if isinstance(c, Term):
            changes[f.name] = subst(c, x, v)
    return dataclasses.replace(e, **changes) if changes else e


# --------------------------------------------------------------- printing

_LOW, _APP, _ATOM = 0, 1, 2


def show(e: Term, annotate: bool = False) -> str:
    return _show(e, _LOW, annotate)


def _wrap(s: str, level: int, need: int) -> str:
    return f"({s})" if level < need else s


def _cast_chain(e: Cast, annotate: bool) -> str:
    parts = []
    while True:
        parts.append(f"=> {e.label} {show_type(e.tgt)}")
        inner = e.body
        if isinstance(inner, Cast) and inner.tgt == e.src:
            e = inner
            continue
        break
    head = _show(inner, _ATOM, annotate)
    return f"{head} : {show_type(e.src)} " + " ".join(reversed(parts))


def _show(e: Term, need: int, annotate: bool) -> str:
    a = annotate
    if isinstance(e, (Var, Chan, Ref)):
        return e.name
    if isinstance(e, UnitLit):
        return "()"
    if isinstance(e, IntLit):
        return str(e.value) if e.value >= 0 else _wrap(str(e.value), _APP, need)
    if isinstance(e, Lam):
        if e.ann is not None and (annotate or e.mult is None):
            head = f"lambda_{e.mult} {e.var}: {show_type(e.ann)}."
        else:
            head = f"lambda_{e.mult} {e.var}."
        return _wrap(f"{head} {_show(e.body, _LOW, a)}", _LOW, need)
    if isinstance(e, App):
        s = f"{_show(e.fn, _APP, a)} {_show(e.arg, _ATOM, a)}"
        return _wrap(s, _APP, need)
    if isinstance(e, Pair):
        return f"({_show(e.fst, _LOW, a)}, {_show(e.snd, _LOW, a)})@{e.mult}"
    if isinstance(e, LetPair):
        s = f"let {e.x}, {e.y} = {_show(e.bound, _LOW, a)} in {_show(e.body, _LOW, a)}"
        return _wrap(s, _LOW, need)
    if isinstance(e, Let):
        s = f"let {e.x} = {_show(e.bound, _LOW, a)} in {_show(e.body, _LOW, a)}"
        return _wrap(s, _LOW, need)
    if isinstance(e, Fork):
        return _wrap(f"fork {_show(e.body, _ATOM, a)}", _APP, need)
    if isinstance(e, New):
        if annotate and e.ann is not None:
            return _wrap(f"new {show_session(e.ann)}", _APP, need)
        return "new"
    if isinstance(e, Send):
        s = f"send {_show(e.payload, _ATOM, a)} {_show(e.chan, _ATOM, a)}"
        return _wrap(s, _APP, need)
    if isinstance(e, Receive):
        return _wrap(f"receive {_show(e.chan, _ATOM, a)}", _APP, need)
    if isinstance(e, SelectE):
        return _wrap(f"select {e.label} {_show(e.chan, _ATOM, a)}", _APP, need)
    if isinstance(e, CaseE):
        bs = ", ".join(f"{l}: {x}. {_show(b, _LOW, a)}" for l, x, b in e.branches)
        return _wrap(f"case {_show(e.scrutinee, _LOW, a)} of {{{bs}}}", _APP, need)
    if isinstance(e, CloseE):
        return _wrap(f"close {_show(e.chan, _ATOM, a)}", _APP, need)
    if isinstance(e, WaitE):
        return _wrap(f"wait {_show(e.chan, _ATOM, a)}", _APP, need)
    if isinstance(e, Arith):
        if e.op == "neg":
            return _wrap(f"-{_show(e.args[0], _ATOM, a)}", _APP, need)
        sym = {"add": "+", "sub": "-", "eq": "=="}[e.op]
        l, r = e.args
        return _wrap(f"{_show(l, _APP, a)} {sym} {_show(r, _APP, a)}", _LOW, need)
    if isinstance(e, If):
        s = (f"if {_show(e.cond, _LOW, a)} then {_show(e.then, _LOW, a)} "
             f"else {_show(e.else_, _LOW, a)}")
        return _wrap(s, _LOW, need)
    if isinstance(e, Cast):
        return f"({_cast_chain(e, a)})"
    raise TypeError(f"not a term: {e!r}")


# ------------------------------------------------------------------- JSON


def type_to_json(t) -> object:
    if t is None:
        return None
    if isinstance(t, SessionType):
        return {"session": session_to_json(t)}
    if isinstance(t, ty.Fn):
        return {"fn": str(t.mult), "dom": type_to_json(t.dom), "cod": type_to_json(t.cod)}
    if isinstance(t, ty.Prod):
        return {"prod": str(t.mult), "fst": type_to_json(t.fst), "snd": type_to_json(t.snd)}
    if isinstance(t, ty.Sess):
        return {"session": session_to_json(t.s)}
    return repr(t)


def session_to_json(s: SessionType) -> object:
    if isinstance(s, ty.Send):
        return {"send": type_to_json(s.carried), "rest": session_to_json(s.rest)}
    if isinstance(s, ty.Recv):
        return {"recv": type_to_json(s.carried), "rest": session_to_json(s.rest)}
    if isinstance(s, ty.Select):
        return {"select": {l: session_to_json(r) for l, r in s.branches}}
    if isinstance(s, ty.Offer):
        return {"offer": {l: session_to_json(r) for l, r in s.branches}}
    return show_session(s)


_ATOMS = {"Unit": ty.Unit, "Int": ty.Int, "Dyn": ty.Dyn}
_SATOMS = {"End!": ty.EndOut, "End?": ty.EndIn, "DC": ty.DC}


def type_from_json(j) -> Optional[Type]:
    if j is None:
        return None
    if isinstance(j, str):
        return _ATOMS[j]
    if "fn" in j:
        return ty.Fn(Mult(j["fn"]), type_from_json(j["dom"]), type_from_json(j["cod"]))
    if "prod" in j:
        return ty.Prod(Mult(j["prod"]), type_from_json(j["fst"]), type_from_json(j["snd"]))
    return ty.Sess(session_from_json(j["session"]))


def session_from_json(j) -> SessionType:
    if isinstance(j, str):
        return _SATOMS[j]
    if "send" in j:
        return ty.Send(type_from_json(j["send"]), session_from_json(j["rest"]))
    if "recv" in j:
        return ty.Recv(type_from_json(j["recv"]), session_from_json(j["rest"]))
    if "select" in j:
        return ty.Select({l: session_from_json(r) for l, r in j["select"].items()})
    return ty.Offer({l: session_from_json(r) for l, r in j["offer"].items()})


_NODES = {cls.__name__: cls for cls in (
    Var, Chan, Ref, UnitLit, IntLit, Lam, App, Pair, LetPair, Let, Fork, New,
    Send, Receive, SelectE, CaseE, CloseE, WaitE, Arith, If, Cast)}


def to_json(e: Term) -> dict:
    out = {"node": type(e).__name__}
    for f in dataclasses.fields(e):
        if f.name == "pos":
            continue
        v = getattr(e, f.name)
        if isinstance(v, Term):
            out[f.name] = to_json(v)
        elif f.name == "args":
            out[f.name] = [to_json(a) for a in v]
        elif f.name == "branches":
            out[f.name] = [[l, x, to_json(b)] for l, x, b in v]
        elif isinstance(v, Mult):
            out[f.name] = str(v)
        elif isinstance(v, BlameLabel):
            out[f.name] = {"id": v.id, "negative": v.negative, "span": v.span}
        elif f.name == "ann" and isinstance(e, New):
            out[f.name] = None if v is None else session_to_json(v)
        elif f.name in ("ann", "src", "tgt"):
            out[f.name] = type_to_json(v)
        else:
            out[f.name] = v
    return out


def from_json(j: dict) -> Term:
    cls = _NODES[j["node"]]
    kw = {}
    for f in dataclasses.fields(cls):
        if f.name == "pos":
            continue
        v = j[f.name]
        if f.name == "args":
            kw[f.name] = tuple(from_json(a) for a in v)
        elif f.name == "branches":
            kw[f.name] = tuple((l, x, from_json(b)) for l, x, b in v)
        elif f.name == "mult":
            kw[f.name] = Mult(v)
        elif f.name == "label" and cls is Cast:
            kw[f.name] = BlameLabel(v["id"], v["negative"], v.get("span", ""))
        elif f.name == "ann" and cls is New:
            kw[f.name] = None if v is None else session_from_json(v)
        elif f.name in ("ann", "src", "tgt"):
            kw[f.name] = type_from_json(v)
        elif isinstance(v, dict):
            kw[f.name] = from_json(v)
        else:
            kw[f.name] = v
    return cls(**kw)
