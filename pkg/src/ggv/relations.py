"""Binary relations on types, matching, and the partial join/meet."""

from __future__ import annotations

from typing import Callable, Iterable, Optional

from .types import (
    DC, Dyn, EndIn, EndOut, Fn, Int, LIN, Mult, Offer, Prod, Recv, Select,
    Send, Sess, SessionType, Type, Unit, as_type, mult_join, mult_le,
    mult_meet,
)


def mult_sub(m: Mult, n: Mult) -> bool:
    return mult_le(m, n)


def _structural(rel: Callable, rel_flip: Callable, t, u, srel: Callable) -> bool:
    """Shared congruence rules; `rel_flip` is used in contravariant positions."""
    if isinstance(t, Fn) and isinstance(u, Fn):
        return mult_le(t.mult, u.mult) and rel_flip(u.dom, t.dom) and rel(t.cod, u.cod)
    if isinstance(t, Prod) and isinstance(u, Prod):
        return mult_le(t.mult, u.mult) and rel(t.fst, u.fst) and rel(t.snd, u.snd)
    if isinstance(t, Sess) and isinstance(u, Sess):
        return srel(t.s, u.s)
    return t == u and t in (Unit, Int, Dyn)


def _structural_session(rel: Callable, rel_flip: Callable, srel: Callable, s, r) -> bool:
    if isinstance(s, Send) and isinstance(r, Send):
        return rel_flip(r.carried, s.carried) and srel(s.rest, r.rest)
    if isinstance(s, Recv) and isinstance(r, Recv):
        return rel(s.carried, r.carried) and srel(s.rest, r.rest)
    if isinstance(s, Select) and isinstance(r, Select):
        # the subtype may offer more choices to its user
        sb = dict(s.branches)
        return all(l in sb and srel(sb[l], x) for l, x in r.branches)
    if isinstance(s, Offer) and isinstance(r, Offer):
        rb = dict(r.branches)
        return all(l in rb and srel(x, rb[l]) for l, x in s.branches)
    return s == r and s in (EndOut, EndIn, DC)


# --- subtyping


def sub(t, u) -> bool:
    t, u = as_type(t), as_type(u)
    return _structural(sub, sub, t, u, sub_session)


def sub_session(s: SessionType, r: SessionType) -> bool:
    return _structural_session(sub, sub, sub_session, s, r)


# --- consistent subtyping


def consistent_sub(t, u) -> bool:
    t, u = as_type(t), as_type(u)
    if t == Dyn or u == Dyn:
        return True
    return _structural(consistent_sub, consistent_sub, t, u, consistent_sub_session)


def consistent_sub_session(s: SessionType, r: SessionType) -> bool:
    if s == DC or r == DC:
        return True
    return _structural_session(consistent_sub, consistent_sub, consistent_sub_session, s, r)


def consistent(t, u) -> bool:
    return consistent_sub(t, u) and consistent_sub(u, t)


# --- positive and negative subtyping


def pos_sub(t, u) -> bool:
    t, u = as_type(t), as_type(u)
    if u == Dyn:
        return True
    return _structural(pos_sub, neg_sub, t, u, pos_sub_session)


def pos_sub_session(s: SessionType, r: SessionType) -> bool:
    if r == DC:
        return True
    return _structural_session(pos_sub, neg_sub, pos_sub_session, s, r)


def neg_sub(t, u) -> bool:
    t, u = as_type(t), as_type(u)
    if t == Dyn:
        return True
    return _structural(neg_sub, pos_sub, t, u, neg_sub_session)


def neg_sub_session(s: SessionType, r: SessionType) -> bool:
    if s == DC:
        return True
    return _structural_session(neg_sub, pos_sub, neg_sub_session, s, r)


# --- naive subtyping (precision)


def precision(t, u) -> bool:
    t, u = as_type(t), as_type(u)
    if u == Dyn:
        return True
    if isinstance(t, Fn) and isinstance(u, Fn):
        return t.mult == u.mult and precision(t.dom, u.dom) and precision(t.cod, u.cod)
    if isinstance(t, Prod) and isinstance(u, Prod):
        return t.mult == u.mult and precision(t.fst, u.fst) and precision(t.snd, u.snd)
    if isinstance(t, Sess) and isinstance(u, Sess):
        return precision_session(t.s, u.s)
    return t == u and t in (Unit, Int)


def precision_session(s: SessionType, r: SessionType) -> bool:
    if r == DC:
        return True
    if isinstance(s, Send) and isinstance(r, Send) or isinstance(s, Recv) and isinstance(r, Recv):
        return precision(s.carried, r.carried) and precision_session(s.rest, r.rest)
    if (isinstance(s, Select) and isinstance(r, Select)) or (isinstance(s, Offer) and isinstance(r, Offer)):
        if s.labels != r.labels:
            return False
        rb = dict(r.branches)
        return all(precision_session(x, rb[l]) for l, x in s.branches)
    return s == r and s in (EndOut, EndIn)


RELATIONS = {
    "sub": sub,
    "csub": consistent_sub,
    "pos": pos_sub,
    "neg": neg_sub,
    "prec": precision,
}


# ---------------------------------------------------------------- matching


class MatchError(Exception):
    """Raised when a type does not match the requested shape."""


def match_fun(t) -> Fn:
    t = as_type(t)
    if isinstance(t, Fn):
        return t
    if t == Dyn:
        return Fn(LIN, Dyn, Dyn)
    raise MatchError(f"expected a function, got {t}")


def match_prod(t) -> Prod:
    t = as_type(t)
    if isinstance(t, Prod):
        return t
    if t == Dyn:
        return Prod(LIN, Dyn, Dyn)
    raise MatchError(f"expected a pair, got {t}")


def _session_or_dyn(t):
    t = as_type(t)
    if t == Dyn or t == Sess(DC):
        return None
    if isinstance(t, Sess):
        return t.s
    return t


def match_send(t) -> Send:
    s = _session_or_dyn(t)
    if s is None:
        return Send(Dyn, DC)
    if isinstance(s, Send):
        return s
    raise MatchError(f"expected a send type, got {as_type(t)}")


def match_recv(t) -> Recv:
    s = _session_or_dyn(t)
    if s is None:
        return Recv(Dyn, DC)
    if isinstance(s, Recv):
        return s
    raise MatchError(f"expected a receive type, got {as_type(t)}")


def match_select(t, label: str) -> Select:
    """Match an internal choice for one requested label."""
    s = _session_or_dyn(t)
    if s is None:
        return Select({label: DC})
    if isinstance(s, Select):
        r = s.get(label)
        if r is None:
            raise MatchError(f"label {label} not selectable from {s}")
        return Select({label: r})
    raise MatchError(f"expected an internal choice, got {as_type(t)}")


def match_case(t, labels: Iterable[str]) -> Offer:
    """Match an external choice against the labels a case expression handles."""
    labels = list(labels)
    s = _session_or_dyn(t)
    if s is None:
        return Offer({l: DC for l in labels})
    if isinstance(s, Offer):
        if not s.labels <= set(labels):
            missing = sorted(s.labels - set(labels))
            raise MatchError(f"case does not handle label(s) {', '.join(missing)} of {s}")
        own = dict(s.branches)
        return Offer({l: own.get(l, DC) for l in labels})
    raise MatchError(f"expected an external choice, got {as_type(t)}")


# ------------------------------------------------------------ join and meet

# Both operations return None when undefined.  With gradual=False the four
# clauses for Dyn and DC are left out, giving the lattice of plain subtyping.


def join(t, u, gradual: bool = True) -> Optional[Type]:
    return _lub(as_type(t), as_type(u), True, gradual)


def meet(t, u, gradual: bool = True) -> Optional[Type]:
    return _lub(as_type(t), as_type(u), False, gradual)


def _lub(t: Type, u: Type, up: bool, gradual: bool) -> Optional[Type]:
    if gradual and t == Dyn:
        return u
    if gradual and u == Dyn:
        return t
    if t == u and t in (Unit, Int, Dyn):
        return t
    mj = mult_join if up else mult_meet
    if isinstance(t, Fn) and isinstance(u, Fn):
        d = _lub(t.dom, u.dom, not up, gradual)
        c = _lub(t.cod, u.cod, up, gradual)
        return None if d is None or c is None else Fn(mj(t.mult, u.mult), d, c)
    if isinstance(t, Prod) and isinstance(u, Prod):
        a = _lub(t.fst, u.fst, up, gradual)
        b = _lub(t.snd, u.snd, up, gradual)
        return None if a is None or b is None else Prod(mj(t.mult, u.mult), a, b)
    if isinstance(t, Sess) and isinstance(u, Sess):
        s = _lub_session(t.s, u.s, up, gradual)
        return None if s is None else Sess(s)
    return None


def _lub_session(s: SessionType, r: SessionType, up: bool, gradual: bool) -> Optional[SessionType]:
    if gradual and s == DC:
        return r
    if gradual and r == DC:
        return s
    if s == r and s in (EndOut, EndIn, DC):
        return s
    if isinstance(s, Send) and isinstance(r, Send):
        c = _lub(s.carried, r.carried, not up, gradual)
        k = _lub_session(s.rest, r.rest, up, gradual)
        return None if c is None or k is None else Send(c, k)
    if isinstance(s, Recv) and isinstance(r, Recv):
        c = _lub(s.carried, r.carried, up, gradual)
        k = _lub_session(s.rest, r.rest, up, gradual)
        return None if c is None or k is None else Recv(c, k)
    for kind, narrow_on_up in ((Select, True), (Offer, False)):
        if isinstance(s, kind) and isinstance(r, kind):
            sb, rb = dict(s.branches), dict(r.branches)
            if narrow_on_up == up:
                # intersection; labels whose residuals do not combine are dropped
                out = {}
                for l in sorted(sb.keys() & rb.keys()):
                    x = _lub_session(sb[l], rb[l], up, gradual)
                    if x is not None:
                        out[l] = x
            else:
                # union; common labels must combine
                out = {}
                for l in sorted(sb.keys() | rb.keys()):
                    if l in sb and l in rb:
                        x = _lub_session(sb[l], rb[l], up, gradual)
                        if x is None:
                            return None
                        out[l] = x
                    else:
                        out[l] = sb.get(l, rb.get(l))
            return kind(out) if out else None
    return None


def join_session(s: SessionType, r: SessionType, gradual: bool = True):
    return _lub_session(s, r, True, gradual)


def meet_session(s: SessionType, r: SessionType, gradual: bool = True):
    return _lub_session(s, r, False, gradual)
