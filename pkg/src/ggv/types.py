"""Types, session types, multiplicities and ground types of Gradual GV."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Tuple, Union


class Mult(Enum):
    UN = "un"
    LIN = "lin"

    def __str__(self) -> str:
        return self.value


UN = Mult.UN
LIN = Mult.LIN


def mult_le(m: Mult, n: Mult) -> bool:
    """Multiplicity ordering: un below lin."""
    return m is UN or n is LIN


def mult_join(m: Mult, n: Mult) -> Mult:
    return UN if (m is UN and n is UN) else LIN


def mult_meet(m: Mult, n: Mult) -> Mult:
    return LIN if (m is LIN and n is LIN) else UN


# ---------------------------------------------------------------- sessions


class SessionType:
    __slots__ = ()

    def __str__(self) -> str:
        return show_session(self)


@dataclass(frozen=True, repr=False)
class Send(SessionType):
    carried: "Type"
    rest: SessionType

    def __repr__(self) -> str:
        return f"Send({self.carried!r}, {self.rest!r})"


@dataclass(frozen=True, repr=False)
class Recv(SessionType):
    carried: "Type"
    rest: SessionType

    def __repr__(self) -> str:
        return f"Recv({self.carried!r}, {self.rest!r})"


Branches = Tuple[Tuple[str, SessionType], ...]


def _canon(branches) -> Branches:
    if isinstance(branches, Mapping):
        items = list(branches.items())
    else:
        items = list(branches)
    labels = [l for l, _ in items]
    if not items:
        raise ValueError("a choice type needs at least one label")
    if len(set(labels)) != len(labels):
        raise ValueError(f"duplicate labels in choice: {labels}")
    return tuple(sorted(items, key=lambda kv: kv[0]))


@dataclass(frozen=True, repr=False)
class Select(SessionType):
    """Internal choice; branches are kept sorted by label."""

    branches: Branches

    def __init__(self, branches):
        object.__setattr__(self, "branches", _canon(branches))

    @property
    def labels(self) -> frozenset:
        return frozenset(l for l, _ in self.branches)

    def get(self, label: str):
        return dict(self.branches).get(label)

    def __repr__(self) -> str:
        return f"Select({dict(self.branches)!r})"


@dataclass(frozen=True, repr=False)
class Offer(SessionType):
    """External choice; branches are kept sorted by label."""

    branches: Branches

    def __init__(self, branches):
        object.__setattr__(self, "branches", _canon(branches))

    @property
    def labels(self) -> frozenset:
        return frozenset(l for l, _ in self.branches)

    def get(self, label: str):
        return dict(self.branches).get(label)

    def __repr__(self) -> str:
        return f"Offer({dict(self.branches)!r})"


@dataclass(frozen=True, repr=False)
class EndOutT(SessionType):
    def __repr__(self) -> str:
        return "EndOut"


@dataclass(frozen=True, repr=False)
class EndInT(SessionType):
    def __repr__(self) -> str:
        return "EndIn"


@dataclass(frozen=True, repr=False)
class DCT(SessionType):
    def __repr__(self) -> str:
        return "DC"


EndOut = EndOutT()
EndIn = EndInT()
DC = DCT()


# ------------------------------------------------------------------- types


class Type:
    __slots__ = ()

    def __str__(self) -> str:
        return show_type(self)


@dataclass(frozen=True, repr=False)
class UnitT(Type):
    def __repr__(self) -> str:
        return "Unit"


@dataclass(frozen=True, repr=False)
class IntT(Type):
    def __repr__(self) -> str:
        return "Int"


@dataclass(frozen=True, repr=False)
class DynT(Type):
    def __repr__(self) -> str:
        return "Dyn"


Unit = UnitT()
Int = IntT()
Dyn = DynT()


@dataclass(frozen=True, repr=False)
class Fn(Type):
    mult: Mult
    dom: Type
    cod: Type

    def __repr__(self) -> str:
        return f"Fn({self.mult}, {self.dom!r}, {self.cod!r})"


@dataclass(frozen=True, repr=False)
class Prod(Type):
    mult: Mult
    fst: Type
    snd: Type

    def __repr__(self) -> str:
        return f"Prod({self.mult}, {self.fst!r}, {self.snd!r})"


@dataclass(frozen=True, repr=False)
class Sess(Type):
    s: SessionType

    def __post_init__(self):
        if not isinstance(self.s, SessionType):
            raise TypeError(f"Sess wraps a session type, got {self.s!r}")

    def __repr__(self) -> str:
        return f"Sess({self.s!r})"


AnyType = Union[Type, SessionType]


def as_type(t: AnyType) -> Type:
    """Inject a session type into the type grammar; types pass through."""
    return Sess(t) if isinstance(t, SessionType) else t


# ------------------------------------------------------------------ duality


def dual(s: SessionType) -> SessionType:
    if isinstance(s, Send):
        return Recv(s.carried, dual(s.rest))
    if isinstance(s, Recv):
        return Send(s.carried, dual(s.rest))
    if isinstance(s, Select):
        return Offer([(l, dual(r)) for l, r in s.branches])
    if isinstance(s, Offer):
        return Select([(l, dual(r)) for l, r in s.branches])
    if s == EndOut:
        return EndIn
    if s == EndIn:
        return EndOut
    if s == DC:
        return DC
    raise TypeError(f"not a session type: {s!r}")


# ------------------------------------------------------------ multiplicity


def mult_of(t: AnyType) -> Mult:
    if isinstance(t, SessionType) or isinstance(t, Sess):
        return LIN
    if isinstance(t, (Fn, Prod)):
        return t.mult
    if t in (Unit, Int, Dyn):
        return UN
    raise TypeError(f"not a type: {t!r}")


def mult_at_most(t: AnyType, n: Mult) -> bool:
    return mult_le(mult_of(t), n)


def is_lin(t: AnyType) -> bool:
    return mult_of(t) is LIN


def is_un(t: AnyType) -> bool:
    return mult_of(t) is UN


# ------------------------------------------------------------- ground types


def is_ground_session(s: SessionType) -> bool:
    if isinstance(s, (Send, Recv)):
        return s.carried == Dyn and s.rest == DC
    if isinstance(s, (Select, Offer)):
        return all(r == DC for _, r in s.branches)
    return s in (EndOut, EndIn)


def is_ground_type(t: Type) -> bool:
    """Ground types proper: the targets of factoring casts into Dyn."""
    if t in (Unit, Int):
        return True
    if isinstance(t, (Fn, Prod)):
        a, b = (t.dom, t.cod) if isinstance(t, Fn) else (t.fst, t.snd)
        return a == Dyn and b == Dyn
    return t == Sess(DC)


def is_ground(t: AnyType) -> bool:
    """Ground types together with (wrapped) ground session types."""
    if isinstance(t, SessionType):
        return t == DC or is_ground_session(t)
    if isinstance(t, Sess):
        return t.s == DC or is_ground_session(t.s)
    return is_ground_type(t)


def ground_session_of(s: SessionType) -> SessionType:
    if isinstance(s, Send):
        return Send(Dyn, DC)
    if isinstance(s, Recv):
        return Recv(Dyn, DC)
    if isinstance(s, Select):
        return Select([(l, DC) for l, _ in s.branches])
    if isinstance(s, Offer):
        return Offer([(l, DC) for l, _ in s.branches])
    if s in (EndOut, EndIn):
        return s
    raise ValueError("DC has no ground session type")


def ground_of(t: AnyType) -> Type:
    """The unique ground type consistent with t (t must not be Dyn).

    Every session type, DC included, has the ground type DC.
    """
    t = as_type(t)
    if t in (Unit, Int):
        return t
    if isinstance(t, Fn):
        return Fn(t.mult, Dyn, Dyn)
    if isinstance(t, Prod):
        return Prod(t.mult, Dyn, Dyn)
    if isinstance(t, Sess):
        return Sess(DC)
    raise ValueError("Dyn has no ground type")


def all_ground_types(labels: Iterable[str] = ("a", "b")) -> list:
    """Every ground type and wrapped ground session type over a label alphabet."""
    out = [Unit, Int, Sess(DC)]
    for m in (UN, LIN):
        out += [Fn(m, Dyn, Dyn), Prod(m, Dyn, Dyn)]
    out += [Sess(Send(Dyn, DC)), Sess(Recv(Dyn, DC)), Sess(EndOut), Sess(EndIn)]
    labels = sorted(labels)
    subsets = []
    for mask in range(1, 1 << len(labels)):
        subsets.append([l for i, l in enumerate(labels) if mask >> i & 1])
    for ls in subsets:
        out.append(Sess(Select([(l, DC) for l in ls])))
        out.append(Sess(Offer([(l, DC) for l in ls])))
    return out


# ---------------------------------------------------------------- printing

_ARROW, _PROD, _ATOM = 0, 1, 2


def _prec(t: AnyType) -> int:
    if isinstance(t, Fn):
        return _ARROW
    if isinstance(t, Prod):
        return _PROD
    return _ATOM


def _paren(t: AnyType, need: int) -> str:
    s = show_type(t)
    return f"({s})" if _prec(t) < need else s


def show_type(t: AnyType) -> str:
    if isinstance(t, SessionType):
        return show_session(t)
    if isinstance(t, Sess):
        return show_session(t.s)
    if isinstance(t, Fn):
        return f"{_paren(t.dom, _PROD)} -{t.mult}> {_paren(t.cod, _ARROW)}"
    if isinstance(t, Prod):
        return f"{_paren(t.fst, _ATOM)} *{t.mult} {_paren(t.snd, _PROD)}"
    return repr(t)


def _payload(t: Type) -> str:
    if isinstance(t, Sess) and isinstance(t.s, (Send, Recv)):
        return f"({show_type(t)})"
    return _paren(t, _ATOM)


def show_session(s: SessionType) -> str:
    if isinstance(s, Send):
        return f"!{_payload(s.carried)}.{show_session(s.rest)}"
    if isinstance(s, Recv):
        return f"?{_payload(s.carried)}.{show_session(s.rest)}"
    if isinstance(s, (Select, Offer)):
        sym = "+" if isinstance(s, Select) else "&"
        inner = ", ".join(f"{l}: {show_session(r)}" for l, r in s.branches)
        return f"{sym}{{{inner}}}"
    if s == EndOut:
        return "End!"
    if s == EndIn:
        return "End?"
    if s == DC:
        return "DC"
    raise TypeError(f"not a session type: {s!r}")


# ------------------------------------------------------------ blame labels


@dataclass(frozen=True)
class BlameLabel:
    """A cast identifier with a polarity; the source span is informational."""

    id: int
    negative: bool = False
    span: str = field(default="", compare=False, hash=False)

    def complement(self) -> "BlameLabel":
        return BlameLabel(self.id, not self.negative, self.span)

    @property
    def positive(self) -> bool:
        return not self.negative

    def __str__(self) -> str:
        return f"ℓ{self.id}" + ("⁻" if self.negative else "")


def complement(p: BlameLabel) -> BlameLabel:
    return p.complement()
