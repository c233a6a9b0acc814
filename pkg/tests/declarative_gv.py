"""A declarative checker for static GV, used only as a test oracle.

Rules are applied in checking mode with subsumption at the leaves. Linear
context splitting is enumerated explicitly, and the intermediate types a
declarative derivation would guess (argument types, pair types, channel
types) are drawn from a finite pool built out of the program's annotations.
"""

from __future__ import annotations

import itertools
from typing import Dict, FrozenSet, Iterable, Set

from ggv import syntax as s
from ggv.relations import sub
from ggv.types import (LIN, UN, EndIn, EndOut, Fn, Int, Offer, Prod, Recv, Select, Send, Sess,
                       Type, Unit, dual, is_un)


def type_pool(e: s.Term, extra: Iterable[Type] = ()) -> tuple:
    seeds: Set = {Unit, Int, *extra}
    for x in s.subterms(e):
        if isinstance(x, s.Lam) and x.ann is not None:
            seeds.add(x.ann)
        if isinstance(x, s.New) and x.ann is not None:
            seeds.add(Sess(x.ann))
            seeds.add(Prod(LIN, Sess(x.ann), Sess(dual(x.ann))))
    pool: Set = set()
    todo = list(seeds)
    while todo:
        t = todo.pop()
        if t in pool:
            continue
        pool.add(t)
        if isinstance(t, Fn):
            todo += [t.dom, t.cod]
        elif isinstance(t, Prod):
            todo += [t.fst, t.snd]
        elif isinstance(t, Sess):
            r = t.s
            todo.append(Sess(dual(r)))
            if isinstance(r, (Send, Recv)):
                todo += [r.carried, Sess(r.rest)]
                if isinstance(r, Recv):
                    todo.append(Prod(LIN, r.carried, Sess(r.rest)))
            elif isinstance(r, (Select, Offer)):
                todo += [Sess(b) for _, b in r.branches]
    return tuple(sorted(pool, key=repr))


class Declarative:
    def __init__(self, pool: tuple):
        self.pool = pool
        self.memo: Dict = {}

    def check(self, env: Dict[str, Type], e: s.Term, t: Type) -> bool:
        fv = s.free_vars(e)
        for x, u in env.items():
            if x not in fv and not is_un(u):
                return False
        gamma = frozenset((x, u) for x, u in env.items() if x in fv)
        if any(x not in env for x in fv):
            return False
        key = (gamma, id(e), t)
        if key not in self.memo:
            self.memo[key] = False
            self.memo[key] = self._check(dict(gamma), e, t)
        return self.memo[key]

    def _splits(self, env, *parts):
        """Every way to hand each linear variable to one part that mentions it."""
        lin = [x for x, u in env.items() if not is_un(u)]
        fvs = [_fv(p) for p in parts]
        choices = [[i for i, fv in enumerate(fvs) if x in fv] for x in lin]
        for pick in itertools.product(*choices):
            envs = [{x: u for x, u in env.items() if is_un(u)} for _ in parts]
            for x, i in zip(lin, pick):
                envs[i][x] = env[x]
            yield envs

    def _two(self, env, a, ta_options, b, tb):
        for ea, eb in self._splits(env, a, b):
            for ta in ta_options:
                if self.check(ea, a, ta) and self.check(eb, b, tb(ta)):
                    return True
        return False

    def _check(self, env, e, t) -> bool:
        c = self.check
        if isinstance(e, s.Var):
            return all(is_un(u) for x, u in env.items() if x != e.name) and sub(env[e.name], t)
        if isinstance(e, s.UnitLit):
            return sub(Unit, t)
        if isinstance(e, s.IntLit):
            return sub(Int, t)
        if isinstance(e, s.Lam):
            if not isinstance(t, Fn):
                return False
            if e.mult == LIN and t.mult == UN:
                return False
            if e.mult == UN and not all(is_un(u) for u in env.values()):
                return False
            return sub(t.dom, e.ann) and c({**env, e.var: e.ann}, e.body, t.cod)
        if isinstance(e, s.App):
            for m in (UN, LIN):
                for ef, ea in self._splits(env, e.fn, e.arg):
                    for u in self.pool:
                        if c(ea, e.arg, u) and c(ef, e.fn, Fn(m, u, t)):
                            return True
            return False
        if isinstance(e, s.Pair):
            if not isinstance(t, Prod) or (e.mult == LIN and t.mult == UN):
                return False
            if e.mult == UN and not (is_un(t.fst) and is_un(t.snd)):
                return False
            return self._two(env, e.fst, [t.fst], e.snd, lambda _: t.snd)
        if isinstance(e, s.LetPair):
            prods = [p for p in self.pool if isinstance(p, Prod)]
            for eb, ebody in self._splits(env, e.bound, e.body):
                for p in prods:
                    if c(eb, e.bound, p) and c({**ebody, e.x: p.fst, e.y: p.snd}, e.body, t):
                        return True
            return False
        if isinstance(e, s.Fork):
            return sub(Unit, t) and c(env, e.body, Unit)
        if isinstance(e, s.New):
            return sub(Prod(LIN, Sess(e.ann), Sess(dual(e.ann))), t)
        if isinstance(e, s.Send):
            if not isinstance(t, Sess):
                return False
            return self._two(env, e.payload, self.pool, e.chan,
                             lambda u: Sess(Send(u, t.s)))
        if isinstance(e, s.Receive):
            if not (isinstance(t, Prod) and t.mult == LIN and isinstance(t.snd, Sess)):
                return False
            return c(env, e.chan, Sess(Recv(t.fst, t.snd.s)))
        if isinstance(e, s.SelectE):
            if not isinstance(t, Sess):
                return False
            return any(isinstance(p, Sess) and isinstance(p.s, Select) and p.s.get(e.label) is not None
                       and sub(Sess(p.s.get(e.label)), t) and c(env, e.chan, p)
                       for p in self.pool)
        if isinstance(e, s.CaseE):
            for es, eb in self._splits(env, e.scrutinee, _Branches(e)):
                for p in self.pool:
                    if not (isinstance(p, Sess) and isinstance(p.s, Offer)):
                        continue
                    if p.s.labels != frozenset(e.labels) or not c(es, e.scrutinee, p):
                        continue
                    if all(c({**eb, x: Sess(p.s.get(l))}, body, t) for l, x, body in e.branches):
                        return True
            return False
        if isinstance(e, s.CloseE):
            return sub(Unit, t) and c(env, e.chan, Sess(EndOut))
        if isinstance(e, s.WaitE):
            return sub(Unit, t) and c(env, e.chan, Sess(EndIn))
        if isinstance(e, s.Arith):
            if not sub(Int, t):
                return False
            if len(e.args) == 1:
                return c(env, e.args[0], Int)
            return self._two(env, e.args[0], [Int], e.args[1], lambda _: Int)
        if isinstance(e, s.If):
            for ec, eb in self._splits(env, e.cond, _Branches(e)):
                if c(ec, e.cond, Int) and c(eb, e.then, t) and c(eb, e.else_, t):
                    return True
            return False
        raise TypeError(f"not a static GV term: {type(e).__name__}")


class _Branches:
    """Stand-in for the branches of a case or conditional during splitting.

    Every branch must use the same linear variables, so the branches share
    one context whose variables are the union of the branches' free ones.
    """

    def __init__(self, e):
        self.e = e


def _fv(e) -> FrozenSet[str]:
    if not isinstance(e, _Branches):
        return s.free_vars(e)
    if isinstance(e.e, s.If):
        return s.free_vars(e.e.then) | s.free_vars(e.e.else_)
    out = frozenset()
    for _, x, body in e.e.branches:
        out |= s.free_vars(body) - {x}
    return out


def derivable(e: s.Term, t: Type, pool: tuple) -> bool:
    return Declarative(pool).check({}, e, t)
