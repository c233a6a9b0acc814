"""Algorithmic typechecking of the external language.

One traversal computes the minimal type and the set of free linear variables
of every subterm.  Given a label allocator it also produces the elaborated
internal term, inserting a cast wherever a consistent subtype is used where
a subtype is not available.
"""

from __future__ import annotations

from typing import Dict, FrozenSet, Optional, Tuple

from . import syntax as s
from .relations import MatchError, consistent, consistent_sub, join, match_case, match_fun
from .relations import match_prod, match_recv, match_select, match_send, sub
from .types import (
    BlameLabel, EndIn, EndOut, Fn, Int, LIN, Prod, Sess, Type, UN, Unit, dual, is_lin,
    is_un, show_type,
)


class GGVTypeError(Exception):
    def __init__(self, msg: str, pos=None):
        where = f"{pos[0]}:{pos[1]}: " if pos else ""
        super().__init__(where + msg)
        self.msg, self.pos = msg, pos


class LabelAllocator:
    """Hands out fresh positive labels numbered from 1 and remembers their spans."""

    def __init__(self, source: str = "", start: int = 1):
        self.source = source
        self.counter = start - 1
        self.spans: Dict[int, str] = {}

    def fresh(self, pos=None, source: Optional[str] = None) -> BlameLabel:
        self.counter += 1
        src = self.source if source is None else source
        span = f"{src}:{pos[0]}:{pos[1]}" if pos else src or "?"
        self.spans[self.counter] = span
        return BlameLabel(self.counter, False, span)


Names = FrozenSet[str]
_E: Names = frozenset()


class Typer:
    def __init__(self, labels: Optional[LabelAllocator] = None):
        self.labels = labels

    def cast(self, f: s.Term, t: Type, u: Type, at: s.Term) -> s.Term:
        """Cast f from t to u, skipping it when t is already a subtype of u."""
        if self.labels is None or sub(t, u):
            return f
        assert consistent_sub(t, u), (t, u)
        return s.Cast(f, t, u, self.labels.fresh(at.pos), pos=at.pos)

    def _match(self, fn, t, e, *args):
        try:
            return fn(t, *args)
        except MatchError as exc:
            raise GGVTypeError(str(exc), e.pos) from None

    @staticmethod
    def _disjoint(x: Names, y: Names, e):
        both = x & y
        if both:
            raise GGVTypeError(f"linear variable {sorted(both)[0]} used twice", e.pos)

    def _consistent_arg(self, t, u, what, e):
        if not consistent_sub(t, u):
            raise GGVTypeError(
                f"inconsistent {what}: {show_type(t)} is not a consistent subtype of {show_type(u)}",
                e.pos)

    def go(self, env: Dict[str, Type], e: s.Term) -> Tuple[Type, Names, s.Term]:
        if isinstance(e, s.Var):
            if e.name not in env:
                raise GGVTypeError(f"unbound variable {e.name}", e.pos)
            t = env[e.name]
            return t, (frozenset([e.name]) if is_lin(t) else _E), e
        if isinstance(e, s.UnitLit):
            return Unit, _E, e
        if isinstance(e, s.IntLit):
            return Int, _E, e
        if isinstance(e, s.Lam):
            return self._lam(env, e)
        if isinstance(e, s.App):
            t1, x, f1 = self.go(env, e.fn)
            t2, y, f2 = self.go(env, e.arg)
            self._disjoint(x, y, e)
            fn = self._match(match_fun, t1, e)
            self._consistent_arg(t2, fn.dom, "argument", e)
            g1 = self.cast(f1, t1, fn, e.fn)
            g2 = self.cast(f2, t2, fn.dom, e.arg)
            return fn.cod, x | y, s.App(g1, g2, pos=e.pos)
        if isinstance(e, s.Pair):
            t1, x, f1 = self.go(env, e.fst)
            t2, y, f2 = self.go(env, e.snd)
            self._disjoint(x, y, e)
            if e.mult is UN and not (is_un(t1) and is_un(t2)):
                raise GGVTypeError("unrestricted pair holds a linear component", e.pos)
            return Prod(e.mult, t1, t2), x | y, s.Pair(e.mult, f1, f2, pos=e.pos)
        if isinstance(e, s.LetPair):
            t, x, f1 = self.go(env, e.bound)
            p = self._match(match_prod, t, e)
            g1 = self.cast(f1, t, p, e.bound)
            u, z, f2 = self.go({**env, e.x: p.fst, e.y: p.snd}, e.body)
            for v, vt in ((e.x, p.fst), (e.y, p.snd)):
                if is_lin(vt):
                    if v not in z:
                        raise GGVTypeError(f"linear variable {v} is not used", e.pos)
                    z = z - {v}
            self._disjoint(x, z, e)
            return u, x | z, s.LetPair(e.x, e.y, g1, f2, pos=e.pos)
        if isinstance(e, s.Fork):
            t, x, f = self.go(env, e.body)
            self._consistent_arg(t, Unit, "forked term", e)
            return Unit, x, s.Fork(self.cast(f, t, Unit, e.body), pos=e.pos)
        if isinstance(e, s.New):
            if e.ann is None:
                raise GGVTypeError("new needs a session type", e.pos)
            return Prod(LIN, Sess(e.ann), Sess(dual(e.ann))), _E, e
        if isinstance(e, s.Send):
            t1, x, f1 = self.go(env, e.payload)
            t2, y, f2 = self.go(env, e.chan)
            self._disjoint(x, y, e)
            m = self._match(match_send, t2, e)
            self._consistent_arg(t1, m.carried, "payload", e)
            g1 = self.cast(f1, t1, m.carried, e.payload)
            g2 = self.cast(f2, t2, Sess(m), e.chan)
            return Sess(m.rest), x | y, s.Send(g1, g2, pos=e.pos)
        if isinstance(e, s.Receive):
            t, x, f = self.go(env, e.chan)
            m = self._match(match_recv, t, e)
            g = self.cast(f, t, Sess(m), e.chan)
            return Prod(LIN, m.carried, Sess(m.rest)), x, s.Receive(g, pos=e.pos)
        if isinstance(e, s.SelectE):
            t, x, f = self.go(env, e.chan)
            m = self._match(match_select, t, e, e.label)
            g = self.cast(f, t, Sess(m), e.chan)
            return Sess(m.get(e.label)), x, s.SelectE(e.label, g, pos=e.pos)
        if isinstance(e, s.CaseE):
            return self._case(env, e)
        if isinstance(e, (s.CloseE, s.WaitE)):
            end = EndOut if isinstance(e, s.CloseE) else EndIn
            t, x, f = self.go(env, e.chan)
            self._consistent_arg(t, Sess(end), "endpoint", e)
            return Unit, x, type(e)(self.cast(f, t, Sess(end), e.chan), pos=e.pos)
        if isinstance(e, s.Arith):
            out, args = _E, []
            for a in e.args:
                t, x, f = self.go(env, a)
                if not consistent(t, Int):
                    raise GGVTypeError(f"arithmetic on {show_type(t)}", a.pos or e.pos)
                self._disjoint(out, x, e)
                out |= x
                args.append((f, t, a))
            fs = tuple(self.cast(f, t, Int, a) for f, t, a in args)
            return Int, out, s.Arith(e.op, fs, pos=e.pos)
        if isinstance(e, s.If):
            t, x, f = self.go(env, e.cond)
            if not consistent(t, Int):
                raise GGVTypeError(f"condition of type {show_type(t)}", e.pos)
            g = self.cast(f, t, Int, e.cond)
            t1, y1, f1 = self.go(env, e.then)
            t2, y2, f2 = self.go(env, e.else_)
            if y1 != y2:
                raise GGVTypeError("if branches use different linear variables", e.pos)
            u = join(t1, t2)
            if u is None:
                raise GGVTypeError(
                    f"no join of branch types {show_type(t1)} and {show_type(t2)}", e.pos)
            self._disjoint(x, y1, e)
            h1 = self.cast(f1, t1, u, e.then)
            h2 = self.cast(f2, t2, u, e.else_)
            return u, x | y1, s.If(g, h1, h2, pos=e.pos)
        raise GGVTypeError(f"{type(e).__name__} is not part of the external language", e.pos)

    def _lam(self, env, e: s.Lam):
        if e.ann is None:
            raise GGVTypeError(f"parameter {e.var} needs a type", e.pos)
        t1 = e.ann
        t2, y, f = self.go({**env, e.var: t1}, e.body)
        out = s.Lam(e.mult, e.var, t1, f, pos=e.pos)
        if is_lin(t1):
            if e.var not in y:
                raise GGVTypeError(f"linear variable {e.var} is not used", e.pos)
            y = y - {e.var}
        if e.mult is UN and y:
            raise GGVTypeError(
                f"unrestricted lambda captures linear variable {sorted(y)[0]}", e.pos)
        return Fn(e.mult, t1, t2), y, out

    def _case(self, env, e: s.CaseE):
        t, x, f = self.go(env, e.scrutinee)
        m = self._match(match_case, t, e, e.labels)
        g = self.cast(f, t, Sess(m), e.scrutinee)
        results = []
        for l, v, body in e.branches:
            u, y, h = self.go({**env, v: Sess(m.get(l))}, body)
            if v not in y:
                raise GGVTypeError(f"linear variable {v} is not used", body.pos or e.pos)
            results.append((l, v, u, y - {v}, h, body))
        sets = {r[3] for r in results}
        if len(sets) > 1:
            raise GGVTypeError("case branches use different linear variables", e.pos)
        u = results[0][2]
        for r in results[1:]:
            u = join(u, r[2]) if u is not None else None
        if u is None:
            shown = ", ".join(show_type(r[2]) for r in results)
            raise GGVTypeError(f"no join of case branch types {shown}", e.pos)
        y = results[0][3]
        self._disjoint(x, y, e)
        branches = tuple((l, v, self.cast(h, ub, u, body)) for l, v, ub, _, h, body in results)
        return u, x | y, s.CaseE(g, branches, pos=e.pos)


def tcexp(env: Dict[str, Type], e: s.Term) -> Tuple[Type, FrozenSet[str]]:
    t, x, _ = Typer().go(dict(env), e)
    return t, x


def check_program(e: s.Term, env: Optional[Dict[str, Type]] = None) -> Type:
    """Type of a whole program: closed, using no linear names, unrestricted result."""
    t, x = tcexp(env or {}, e)
    if x:
        raise GGVTypeError(f"linear variable {sorted(x)[0]} is left unused")
    if not is_un(t):
        raise GGVTypeError(f"result type {show_type(t)} is linear")
    return t
