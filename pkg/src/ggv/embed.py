"""Embedding of untyped code into the internal calculus at type Dyn."""

from __future__ import annotations

from typing import Dict, Iterable, Optional

from . import syntax as s
from .internal import tc_internal
from .typer import LabelAllocator
from .types import DC, Dyn, EndIn, EndOut, Fn, Int, LIN, Offer, Prod, Recv, Select, Send, Sess, UN, Unit

_DC = Sess(DC)


class EmbeddingError(Exception):
    pass


class _Embedder:
    def __init__(self, labels: LabelAllocator):
        self.labels = labels

    def cast(self, e: s.Term, t, u, at: s.Term) -> s.Term:
        return s.Cast(e, t, u, self.labels.fresh(at.pos), pos=at.pos)

    def go(self, e: s.Term) -> s.Term:
        c = self.cast
        if isinstance(e, s.Var):
            return e
        if isinstance(e, s.UnitLit):
            return c(e, Unit, Dyn, e)
        if isinstance(e, s.IntLit):
            return c(e, Int, Dyn, e)
        if isinstance(e, s.Lam):
            lam = s.Lam(UN, e.var, Dyn, self.go(e.body), pos=e.pos)
            return c(lam, Fn(UN, Dyn, Dyn), Dyn, e)
        if isinstance(e, s.Pair):
            pair = s.Pair(UN, self.go(e.fst), self.go(e.snd), pos=e.pos)
            return c(pair, Prod(UN, Dyn, Dyn), Dyn, e)
        if isinstance(e, s.App):
            fn = c(self.go(e.fn), Dyn, Fn(LIN, Dyn, Dyn), e.fn)
            return s.App(fn, self.go(e.arg), pos=e.pos)
        if isinstance(e, s.LetPair):
            bound = c(self.go(e.bound), Dyn, Prod(LIN, Dyn, Dyn), e.bound)
            return s.LetPair(e.x, e.y, bound, self.go(e.body), pos=e.pos)
        if isinstance(e, s.Let):
            return s.Let(e.x, self.go(e.bound), self.go(e.body), pos=e.pos)
        if isinstance(e, s.Fork):
            body = c(self.go(e.body), Dyn, Unit, e.body)
            return c(s.Fork(body, pos=e.pos), Unit, Dyn, e)
        if isinstance(e, s.New):
            return c(s.New(DC, pos=e.pos), Prod(LIN, _DC, _DC), Dyn, e)
        if isinstance(e, s.Send):
            payload = self.go(e.payload)
            chan = c(self.go(e.chan), Dyn, Sess(Send(Dyn, DC)), e.chan)
            return c(s.Send(payload, chan, pos=e.pos), _DC, Dyn, e)
        if isinstance(e, s.Receive):
            chan = c(self.go(e.chan), Dyn, Sess(Recv(Dyn, DC)), e.chan)
            return c(s.Receive(chan, pos=e.pos), Prod(LIN, Dyn, _DC), Dyn, e)
        if isinstance(e, s.SelectE):
            chan = c(self.go(e.chan), Dyn, Sess(Select({e.label: DC})), e.chan)
            return c(s.SelectE(e.label, chan, pos=e.pos), _DC, Dyn, e)
        if isinstance(e, s.CaseE):
            offer = Sess(Offer({l: DC for l in e.labels}))
            scrut = c(self.go(e.scrutinee), Dyn, offer, e.scrutinee)
            branches = []
            for l, x, body in e.branches:
                y = f"{x}%"
                rebind = c(s.Var(y, pos=body.pos), _DC, Dyn, body)
                branches.append((l, y, s.Let(x, rebind, self.go(body), pos=body.pos)))
            return s.CaseE(scrut, tuple(branches), pos=e.pos)
        if isinstance(e, (s.CloseE, s.WaitE)):
            end = EndOut if isinstance(e, s.CloseE) else EndIn
            chan = c(self.go(e.chan), Dyn, Sess(end), e.chan)
            return c(type(e)(chan, pos=e.pos), Unit, Dyn, e)
        if isinstance(e, s.Arith):
            args = tuple(c(self.go(a), Dyn, Int, a) for a in e.args)
            return c(s.Arith(e.op, args, pos=e.pos), Int, Dyn, e)
        if isinstance(e, s.If):
            cond = c(self.go(e.cond), Dyn, Int, e.cond)
            return s.If(cond, self.go(e.then), self.go(e.else_), pos=e.pos)
        raise EmbeddingError(f"{type(e).__name__} is not untyped source")


def embed(e: s.Term, labels: Optional[LabelAllocator] = None) -> s.Term:
    return _Embedder(labels if labels is not None else LabelAllocator()).go(e)


def check_embedding(e: s.Term, free: Iterable[str] = (), labels=None) -> s.Term:
    """Embed e and confirm the result types at Dyn; returns the embedded term."""
    f = embed(e, labels)
    env: Dict[str, object] = {x: Dyn for x in set(free) | set(s.free_vars(e))}
    try:
        t, _ = tc_internal(env, f)
    except Exception as exc:
        raise EmbeddingError(f"embedded term does not typecheck: {exc}") from None
    if t != Dyn:
        raise EmbeddingError(f"embedded term has type {t}, not Dyn")
    return f
