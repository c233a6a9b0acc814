"""The internal cast calculus: values, typing of terms and configurations,
and the safe-for predicate used by the blame theorems."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, Optional, Tuple

from . import syntax as s
from .relations import consistent_sub, join, neg_sub, pos_sub, sub
from .types import (
    DC, Dyn, EndIn, EndOut, Fn, Int, LIN, Offer, Prod, Recv, Select, Send, Sess,
    Type, UN, Unit, BlameLabel, dual, is_ground_session, is_ground_type, is_lin,
    is_un, show_type,
)


class InternalTypeError(Exception):
    pass


# ------------------------------------------------------------------ values


def is_value(e: s.Term) -> bool:
    if isinstance(e, (s.UnitLit, s.IntLit, s.Lam, s.Chan, s.Ref)):
        return True
    if isinstance(e, s.Pair):
        return is_value(e.fst) and is_value(e.snd)
    if isinstance(e, s.Cast):
        return is_value(e.body) and is_value_cast(e.src, e.tgt)
    return False


def is_value_cast(t: Type, u: Type) -> bool:
    """Whether a cast T => U around a value is itself a value."""
    if u == Dyn:
        return is_ground_type(t) and is_un(t)
    if isinstance(t, Fn) and isinstance(u, Fn):
        return True
    if isinstance(t, Sess) and isinstance(u, Sess):
        if u.s == DC:
            return t.s != DC and is_ground_session(t.s)
        return t.s != DC
    return False


# ---------------------------------------------------------- internal typing


def _fail(msg: str, e: Optional[s.Term] = None):
    where = f" at {e.pos[0]}:{e.pos[1]}" if e is not None and e.pos else ""
    raise InternalTypeError(msg + where)


def _disjoint(a, b, e):
    both = a & b
    if both:
        _fail(f"linear variable {sorted(both)[0]} used twice", e)


def _need_sess(t: Type, kind, what: str, e):
    if isinstance(t, Sess) and isinstance(t.s, kind):
        return t.s
    _fail(f"{what} expects a {kind.__name__.lower()} session, got {show_type(t)}", e)


def tc_internal(env: Dict[str, Type], e: s.Term) -> Tuple[Type, FrozenSet[str]]:
    """Algorithmic typing of internal terms.

    Returns the type and the set of linear names the term uses.  Channel
    endpoints, cell references and variables all live in env.
    """
    E = frozenset()
    if isinstance(e, (s.Var, s.Chan)):
        if e.name not in env:
            _fail(f"unbound name {e.name}", e)
        t = env[e.name]
        return t, (frozenset([e.name]) if is_lin(t) else E)
    if isinstance(e, s.Ref):
        if e.name not in env:
            _fail(f"unbound reference {e.name}", e)
        return Dyn, E
    if isinstance(e, s.UnitLit):
        return Unit, E
    if isinstance(e, s.IntLit):
        return Int, E
    if isinstance(e, s.Lam):
        if e.ann is None:
            _fail("lambda without annotation", e)
        t1 = e.ann
        t2, y = tc_internal({**env, e.var: t1}, e.body)
        if is_lin(t1):
            if e.var not in y:
                _fail(f"linear variable {e.var} is not used", e)
            y = y - {e.var}
        if e.mult is UN and y:
            _fail(f"unrestricted lambda captures linear {', '.join(sorted(y))}", e)
        return Fn(e.mult, t1, t2), y
    if isinstance(e, s.App):
        t1, x = tc_internal(env, e.fn)
        t2, y = tc_internal(env, e.arg)
        _disjoint(x, y, e)
        if not isinstance(t1, Fn):
            _fail(f"applying a term of type {show_type(t1)}", e)
        if not sub(t2, t1.dom):
            _fail(f"argument type {show_type(t2)} is not a subtype of {show_type(t1.dom)}", e)
        return t1.cod, x | y
    if isinstance(e, s.Pair):
        t1, x = tc_internal(env, e.fst)
        t2, y = tc_internal(env, e.snd)
        _disjoint(x, y, e)
        if e.mult is UN and (is_lin(t1) or is_lin(t2)):
            _fail("unrestricted pair holds a linear component", e)
        return Prod(e.mult, t1, t2), x | y
    if isinstance(e, s.LetPair):
        t, x = tc_internal(env, e.bound)
        if not isinstance(t, Prod):
            _fail(f"pair destructor on {show_type(t)}", e)
        u, z = tc_internal({**env, e.x: t.fst, e.y: t.snd}, e.body)
        for v, vt in ((e.x, t.fst), (e.y, t.snd)):
            if is_lin(vt):
                if v not in z:
                    _fail(f"linear variable {v} is not used", e)
                z = z - {v}
        _disjoint(x, z, e)
        return u, x | z
    if isinstance(e, s.Let):
        t, x = tc_internal(env, e.bound)
        u, z = tc_internal({**env, e.x: t}, e.body)
        if is_lin(t):
            if e.x not in z:
                _fail(f"linear variable {e.x} is not used", e)
            z = z - {e.x}
        _disjoint(x, z, e)
        return u, x | z
    if isinstance(e, s.Fork):
        t, x = tc_internal(env, e.body)
        if not sub(t, Unit):
            _fail(f"forked term has type {show_type(t)}", e)
        return Unit, x
    if isinstance(e, s.New):
        if e.ann is None:
            _fail("new without a session type", e)
        return Prod(LIN, Sess(e.ann), Sess(dual(e.ann))), E
    if isinstance(e, s.Send):
        t1, x = tc_internal(env, e.payload)
        t2, y = tc_internal(env, e.chan)
        _disjoint(x, y, e)
        m = _need_sess(t2, Send, "send", e)
        if not sub(t1, m.carried):
            _fail(f"payload {show_type(t1)} is not a subtype of {show_type(m.carried)}", e)
        return Sess(m.rest), x | y
    if isinstance(e, s.Receive):
        t, x = tc_internal(env, e.chan)
        m = _need_sess(t, Recv, "receive", e)
        return Prod(LIN, m.carried, Sess(m.rest)), x
    if isinstance(e, s.SelectE):
        t, x = tc_internal(env, e.chan)
        m = _need_sess(t, Select, "select", e)
        r = m.get(e.label)
        if r is None:
            _fail(f"label {e.label} not offered by {m}", e)
        return Sess(r), x
    if isinstance(e, s.CaseE):
        t, x = tc_internal(env, e.scrutinee)
        m = _need_sess(t, Offer, "case", e)
        if not m.labels <= set(e.labels):
            _fail(f"case does not handle all labels of {m}", e)
        types, sets = [], []
        for l, v, body in e.branches:
            r = m.get(l) or DC
            u, y = tc_internal({**env, v: Sess(r)}, body)
            if v not in y:
                _fail(f"linear variable {v} is not used", e)
            types.append(u)
            sets.append(y - {v})
        if any(y != sets[0] for y in sets):
            _fail("case branches use different linear variables", e)
        u = types[0]
        for w in types[1:]:
            u = join(u, w, gradual=False) if u is not None else None
        if u is None:
            _fail("case branch types have no join", e)
        _disjoint(x, sets[0], e)
        return u, x | sets[0]
    if isinstance(e, s.CloseE):
        t, x = tc_internal(env, e.chan)
        if not sub(t, Sess(EndOut)):
            _fail(f"close on {show_type(t)}", e)
        return Unit, x
    if isinstance(e, s.WaitE):
        t, x = tc_internal(env, e.chan)
        if not sub(t, Sess(EndIn)):
            _fail(f"wait on {show_type(t)}", e)
        return Unit, x
    if isinstance(e, s.Arith):
        out = E
        for a in e.args:
            t, x = tc_internal(env, a)
            if not sub(t, Int):
                _fail(f"arithmetic on {show_type(t)}", e)
            _disjoint(out, x, e)
            out |= x
        return Int, out
    if isinstance(e, s.If):
        t, x = tc_internal(env, e.cond)
        if not sub(t, Int):
            _fail(f"condition of type {show_type(t)}", e)
        t1, y1 = tc_internal(env, e.then)
        t2, y2 = tc_internal(env, e.else_)
        if y1 != y2:
            _fail("if branches use different linear variables", e)
        u = join(t1, t2, gradual=False)
        if u is None:
            _fail("if branch types have no join", e)
        _disjoint(x, y1, e)
        return u, x | y1
    if isinstance(e, s.Cast):
        t, x = tc_internal(env, e.body)
        if not sub(t, e.src):
            _fail(f"cast source {show_type(e.src)} does not match body type {show_type(t)}", e)
        if not consistent_sub(e.src, e.tgt):
            _fail(f"inconsistent cast {show_type(e.src)} => {show_type(e.tgt)}", e)
        return e.tgt, x
    raise InternalTypeError(f"unknown term {e!r}")


# ---------------------------------------------------------- configurations


class ProcessBody:
    __slots__ = ()


@dataclass(frozen=True)
class Expr(ProcessBody):
    term: s.Term


@dataclass(frozen=True)
class Cell(ProcessBody):
    """a |-> payload : ground => label Dyn"""

    ref: str
    payload: s.Term
    ground: Type
    label: BlameLabel


@dataclass(frozen=True)
class LockedCell(ProcessBody):
    ref: str
    label: BlameLabel


@dataclass(frozen=True)
class BlamePair(ProcessBody):
    p: BlameLabel
    q: BlameLabel
    linears: FrozenSet[str]


@dataclass(frozen=True)
class BlameGC(ProcessBody):
    p: BlameLabel
    linears: FrozenSet[str]


@dataclass(frozen=True)
class ChannelPair:
    """Endpoints end1 : session and end2 : dual(session)."""

    end1: str
    end2: str
    session: object

    def type_of(self, name: str):
        return self.session if name == self.end1 else dual(self.session)

    def other(self, name: str) -> str:
        return self.end2 if name == self.end1 else self.end1


@dataclass(frozen=True)
class Configuration:
    channel_pairs: Tuple[ChannelPair, ...] = ()
    cell_binders: Tuple[str, ...] = ()
    processes: Tuple[ProcessBody, ...] = ()
    next_chan: int = 0
    next_ref: int = 0

    @staticmethod
    def initial(term: s.Term) -> "Configuration":
        return Configuration(processes=(Expr(term),))

    def pair_of(self, name: str) -> Optional[ChannelPair]:
        for cp in self.channel_pairs:
            if name in (cp.end1, cp.end2):
                return cp
        return None

    def cell(self, ref: str):
        for i, p in enumerate(self.processes):
            if isinstance(p, (Cell, LockedCell)) and p.ref == ref:
                return i, p
        return None

    def blames(self):
        return [p for p in self.processes if isinstance(p, (BlamePair, BlameGC))]

    def __str__(self) -> str:
        return show_config(self)


def show_process(p: ProcessBody) -> str:
    if isinstance(p, Expr):
        return f"⟨{s.show(p.term)}⟩"
    if isinstance(p, Cell):
        return f"{p.ref} ↦ {s.show(s.Cast(p.payload, p.ground, Dyn, p.label))[1:-1]}"
    if isinstance(p, LockedCell):
        return f"{p.ref} ↦ locked {p.label}"
    if isinstance(p, BlamePair):
        return f"blame {p.p} {p.q} {_names(p.linears)}"
    if isinstance(p, BlameGC):
        return f"blame {p.p} {_names(p.linears)}"
    raise TypeError(p)


def _names(xs) -> str:
    return "{" + ",".join(sorted(xs, key=_name_key)) + "}"


def _name_key(n: str):
    head = n.rstrip("0123456789")
    tail = n[len(head):]
    return (head, int(tail) if tail else -1)


def show_config(cfg: Configuration) -> str:
    binders = "".join(f"(ν{cp.end1},{cp.end2})" for cp in cfg.channel_pairs)
    binders += "".join(f"(ν{a})" for a in cfg.cell_binders)
    body = " | ".join(show_process(p) for p in cfg.processes) or "∅"
    return f"{binders}({body})" if binders else body


def config_env(cfg: Configuration) -> Dict[str, Type]:
    env: Dict[str, Type] = {}
    for cp in cfg.channel_pairs:
        env[cp.end1] = Sess(cp.session)
        env[cp.end2] = Sess(dual(cp.session))
    for a in cfg.cell_binders:
        env[a] = Dyn
    return env


def tc_config(cfg: Configuration, env: Optional[Dict[str, Type]] = None) -> None:
    """Check a configuration; raises InternalTypeError naming the failing process."""
    env = {**(env or {}), **config_env(cfg)}
    live = {n for cp in cfg.channel_pairs for n in (cp.end1, cp.end2)}
    used: set = set()
    cells_seen = []
    for i, p in enumerate(cfg.processes):
        try:
            if isinstance(p, Expr):
                t, x = tc_internal(env, p.term)
                if not is_un(t):
                    raise InternalTypeError(f"process has linear type {show_type(t)}")
            elif isinstance(p, Cell):
                if not (is_value(p.payload) and is_ground_type(p.ground) and is_lin(p.ground)):
                    raise InternalTypeError("cell must hold a value of linear ground type")
                t, x = tc_internal(env, p.payload)
                if not sub(t, p.ground):
                    raise InternalTypeError(f"cell payload has type {show_type(t)}")
                cells_seen.append(p.ref)
            elif isinstance(p, LockedCell):
                x = frozenset()
                cells_seen.append(p.ref)
            else:
                x = p.linears
        except InternalTypeError as exc:
            raise InternalTypeError(f"process {i} ({show_process(p)}): {exc}") from None
        if used & x:
            raise InternalTypeError(
                f"process {i}: endpoint {sorted(used & x)[0]} also used by another process")
        used |= x
    missing = live - used
    if missing:
        raise InternalTypeError(f"endpoint {sorted(missing)[0]} is not used by any process")
    if sorted(cells_seen) != sorted(cfg.cell_binders):
        raise InternalTypeError("cell binders and cell processes disagree")


# --------------------------------------------------------------- safe for


def safe_for(x, p: BlameLabel) -> bool:
    """Whether a term, process or configuration is safe for blame label p."""
    if isinstance(x, Configuration):
        return all(safe_for(q, p) for q in x.processes)
    if isinstance(x, Expr):
        return safe_for(x.term, p)
    if isinstance(x, Cell):
        return safe_for(s.Cast(x.payload, x.ground, Dyn, x.label), p)
    if isinstance(x, LockedCell):
        # reading it again blames the complement of its label
        return x.label != p.complement()
    if isinstance(x, BlamePair):
        return p not in (x.p, x.q)
    if isinstance(x, BlameGC):
        return x.p != p
    if isinstance(x, s.Cast):
        if x.label == p and not pos_sub(x.src, x.tgt):
            return False
        if x.label == p.complement() and not neg_sub(x.src, x.tgt):
            return False
        return safe_for(x.body, p)
    return all(safe_for(c, p) for c in s.children(x))


def unsafe_labels(x) -> set:
    """Every label p for which safe_for(x, p) fails, in one traversal."""
    out: set = set()
    if isinstance(x, Configuration):
        for q in x.processes:
            out |= unsafe_labels(q)
    elif isinstance(x, Expr):
        out |= unsafe_labels(x.term)
    elif isinstance(x, Cell):
        out |= unsafe_labels(s.Cast(x.payload, x.ground, Dyn, x.label))
    elif isinstance(x, LockedCell):
        out.add(x.label.complement())
    elif isinstance(x, BlamePair):
        out |= {x.p, x.q}
    elif isinstance(x, BlameGC):
        out.add(x.p)
    else:
        if isinstance(x, s.Cast):
            if not pos_sub(x.src, x.tgt):
                out.add(x.label)
            if not neg_sub(x.src, x.tgt):
                out.add(x.label.complement())
        for c in s.children(x):
            out |= unsafe_labels(c)
    return out
