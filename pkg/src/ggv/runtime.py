"""Small-step execution of internal configurations.

Each Expr process is decomposed into an evaluation context and a redex.
Purely local redexes are stepped in place; communication redexes pair two
processes blocked on the two ends of one channel.  Unreachable cells are
collected eagerly after every step.
"""

from __future__ import annotations

import dataclasses
import random
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

from . import syntax as s
from .internal import (
    BlameGC, BlamePair, Cell, ChannelPair, Configuration, Expr, LockedCell,
    ProcessBody, is_value, tc_config,
)
from .relations import sub, sub_session
from .types import (
    DC, Dyn, Fn, Int, LIN, Prod, Recv, Send, Sess,
    Unit, dual, ground_of, ground_session_of, is_ground_session, is_ground_type,
)

# --------------------------------------------------------------- contexts

# A frame is (node, field, index); index is set for Arith arguments.
Frame = Tuple[s.Term, str, Optional[int]]


def _eval_slots(e: s.Term):
    if isinstance(e, s.App):
        return [("fn", None), ("arg", None)]
    if isinstance(e, s.Pair):
        return [("fst", None), ("snd", None)]
    if isinstance(e, (s.LetPair, s.Let)):
        return [("bound", None)]
    if isinstance(e, s.Send):
        return [("payload", None), ("chan", None)]
    if isinstance(e, (s.Receive, s.SelectE, s.CloseE, s.WaitE)):
        return [("chan", None)]
    if isinstance(e, s.CaseE):
        return [("scrutinee", None)]
    if isinstance(e, s.Cast):
        return [("body", None)]
    if isinstance(e, s.Arith):
        return [("args", i) for i in range(len(e.args))]
    if isinstance(e, s.If):
        return [("cond", None)]
    return []


def _get(e, fld, idx):
    v = getattr(e, fld)
    return v[idx] if idx is not None else v


def plug(frames: List[Frame], t: s.Term) -> s.Term:
    for node, fld, idx in reversed(frames):
        if idx is None:
            t = dataclasses.replace(node, **{fld: t})
        else:
            args = list(node.args)
            args[idx] = t
            t = dataclasses.replace(node, args=tuple(args))
    return t


def _is_collapse_site(e: s.Term) -> bool:
    """(v : G => Dyn) : Dyn => H, the one place a linear injection is not allocated."""
    if not (isinstance(e, s.Cast) and e.src == Dyn and is_ground_type(e.tgt)):
        return False
    inner = e.body
    return (isinstance(inner, s.Cast) and inner.tgt == Dyn and is_ground_type(inner.src)
            and is_value(inner.body))


def decompose(e: s.Term):
    """Split a non-value into (frames, redex); None for values."""
    frames: List[Frame] = []
    while True:
        if is_value(e):
            return None if not frames else (frames, e)
        if _is_collapse_site(e):
            return frames, e
        for fld, idx in _eval_slots(e):
            c = _get(e, fld, idx)
            if not is_value(c):
                frames.append((e, fld, idx))
                e = c
                break
        else:
            return frames, e


def context_flv(frames: List[Frame]) -> frozenset:
    return s.flv(plug(frames, s.UnitLit()))


# ---------------------------------------------------------------- redexes


@dataclass(frozen=True)
class Redex:
    rule: str
    procs: Tuple[int, ...]
    data: tuple = ()

    @property
    def index(self) -> int:
        return min(self.procs)


BLOCKING = (s.Send, s.Receive, s.SelectE, s.CaseE, s.CloseE, s.WaitE)


def _subject(r: s.Term) -> Optional[str]:
    """The endpoint a blocked communication primitive waits on."""
    if isinstance(r, BLOCKING):
        ch = r.scrutinee if isinstance(r, s.CaseE) else r.chan
        if isinstance(ch, s.Chan):
            return ch.name
    if isinstance(r, s.Cast) and r.src == Sess(DC) and isinstance(r.body, s.Chan):
        if isinstance(r.tgt, Sess) and is_ground_session(r.tgt.s):
            return r.body.name
    return None


def _agree(r1: s.Term, r2: s.Term) -> Optional[str]:
    """The communication rule two ready redexes on dual ends enable, if any."""
    a, b = type(r1), type(r2)
    if {a, b} == {s.Send, s.Receive}:
        return "comm"
    if {a, b} == {s.SelectE, s.CaseE}:
        sel, case = (r1, r2) if a is s.SelectE else (r2, r1)
        return "choose" if sel.label in case.labels else None
    if {a, b} == {s.CloseE, s.WaitE}:
        return "close"
    if a is s.Cast and b is s.Cast:
        return "sync"
    return None


_ID_TYPES = (Dyn, Unit, Int, Sess(DC))


def classify(cfg: Configuration, i: int, frames, r: s.Term) -> Optional[Redex]:
    """The local rule enabled at redex r of process i (None if blocked)."""
    if isinstance(r, s.App):
        if isinstance(r.fn, s.Lam):
            return Redex("beta", (i,))
        if isinstance(r.fn, s.Cast) and isinstance(r.fn.src, Fn):
            return Redex("wrap", (i,))
        return Redex("error-apply", (i,))
    if isinstance(r, s.LetPair):
        return Redex("let-pair", (i,)) if isinstance(r.bound, s.Pair) else Redex("error-split", (i,))
    if isinstance(r, s.Let):
        return Redex("let", (i,))
    if isinstance(r, s.Fork):
        return Redex("fork", (i,))
    if isinstance(r, s.New):
        return Redex("new", (i,))
    if isinstance(r, s.Arith):
        if all(isinstance(a, s.IntLit) for a in r.args):
            return Redex("arith", (i,))
        return Redex("error-arith", (i,))
    if isinstance(r, s.If):
        return Redex("if", (i,)) if isinstance(r.cond, s.IntLit) else Redex("error-arith", (i,))
    if isinstance(r, BLOCKING):
        ch = r.scrutinee if isinstance(r, s.CaseE) else r.chan
        if isinstance(ch, s.Cast):
            name = {s.Send: "send", s.Receive: "receive", s.SelectE: "select",
                    s.CaseE: "case", s.CloseE: "close", s.WaitE: "wait"}[type(r)]
            return Redex(f"cast-{name}", (i,))
        return None
    if isinstance(r, s.Var):
        return Redex("error-open", (i,))
    if isinstance(r, s.Cast):
        return _classify_cast(cfg, i, r)
    return Redex("error-stuck", (i,))


def _classify_cast(cfg, i, r: s.Cast) -> Optional[Redex]:
    t, u, v = r.src, r.tgt, r.body
    if t == u and t in _ID_TYPES:
        return Redex("cast-id", (i,))
    if isinstance(t, Prod) and isinstance(u, Prod):
        return Redex("cast-pair", (i,))
    if u == Dyn:
        if is_ground_type(t):
            return Redex("cell-alloc", (i,))
        return Redex("factor-out", (i,))
    if t == Dyn:
        if not is_ground_type(u):
            return Redex("factor-in", (i,))
        if isinstance(v, s.Ref):
            found = cfg.cell(v.name)
            if found is None:
                return Redex("error-open", (i,))
            if isinstance(found[1], Cell):
                return Redex("cell-read", (i, found[0]))
            return Redex("cell-locked", (i,))
        inner = v
        if isinstance(inner, s.Cast) and inner.tgt == Dyn:
            return Redex("collapse" if sub(inner.src, u) else "collide", (i,))
        return Redex("error-stuck", (i,))
    if u == Sess(DC):
        return Redex("factor-out", (i,))
    if t == Sess(DC):
        if not is_ground_session(u.s):
            return Redex("factor-in", (i,))
        if isinstance(v, s.Chan):
            return None  # waits for its partner
        if isinstance(v, s.Cast) and v.tgt == Sess(DC):
            return Redex("collapse" if sub(v.src, u) else "collide", (i,))
        return Redex("error-stuck", (i,))
    return Redex("error-stuck", (i,))


def _decomposed(cfg: Configuration):
    out = {}
    for i, p in enumerate(cfg.processes):
        if isinstance(p, Expr):
            d = decompose(p.term)
            if d is not None:
                out[i] = d
    return out


def enumerate_redexes(cfg: Configuration, include_errors: bool = False) -> List[Redex]:
    """Every enabled rule instance, sorted by lowest process index."""
    out: List[Redex] = []
    dec = _decomposed(cfg)
    waiting = {}
    for i, (frames, r) in dec.items():
        rx = classify(cfg, i, frames, r)
        if rx is None:
            subj = _subject(r)
            if subj is not None:
                waiting[subj] = (i, r)
        elif include_errors or not rx.rule.startswith("error"):
            out.append(rx)
    for cp in cfg.channel_pairs:
        a, b = waiting.get(cp.end1), waiting.get(cp.end2)
        if a and b and a[0] != b[0]:
            rule = _agree(a[1], b[1])
            if rule is not None:
                if rule == "sync" and not sub_session(dual(a[1].tgt.s), b[1].tgt.s):
                    rule = "sync-blame"
                out.append(Redex(rule, tuple(sorted((a[0], b[0])))))
    out.sort(key=lambda rx: (rx.index, rx.rule))
    return out


# ---------------------------------------------------------------- stepping


def _complement(p):
    return p.complement()


def step_expr(r: s.Term) -> s.Term:
    """One expression step on a local redex (no process-level effects)."""
    if isinstance(r, s.App):
        f = r.fn
        if isinstance(f, s.Lam):
            return s.subst(f.body, f.var, r.arg)
        # wrap
        t, u = f.src, f.tgt
        arg = s.Cast(r.arg, u.dom, t.dom, _complement(f.label))
        return s.Cast(s.App(f.body, arg), t.cod, u.cod, f.label)
    if isinstance(r, s.LetPair):
        return s.subst(s.subst(r.body, r.x, r.bound.fst), r.y, r.bound.snd)
    if isinstance(r, s.Let):
        return s.subst(r.body, r.x, r.bound)
    if isinstance(r, s.Arith):
        a = [x.value for x in r.args]
        val = {"add": lambda: a[0] + a[1], "sub": lambda: a[0] - a[1],
               "neg": lambda: -a[0], "eq": lambda: int(a[0] == a[1])}[r.op]()
        return s.IntLit(val)
    if isinstance(r, s.If):
        return r.then if r.cond.value != 0 else r.else_
    if isinstance(r, s.Send):
        c = r.chan
        t, u = c.src.s, c.tgt.s
        payload = s.Cast(r.payload, u.carried, t.carried, _complement(c.label))
        return s.Cast(s.Send(payload, c.body), Sess(t.rest), Sess(u.rest), c.label)
    if isinstance(r, s.Receive):
        c = r.chan
        t, u = c.src.s, c.tgt.s
        return s.Cast(s.Receive(c.body), Prod(LIN, t.carried, Sess(t.rest)),
                      Prod(LIN, u.carried, Sess(u.rest)), c.label)
    if isinstance(r, s.SelectE):
        c = r.chan
        t, u = c.src.s, c.tgt.s
        return s.Cast(s.SelectE(r.label, c.body), Sess(t.get(r.label)), Sess(u.get(r.label)), c.label)
    if isinstance(r, s.CaseE):
        c = r.scrutinee
        t, u = c.src.s, c.tgt.s
        branches = []
        for l, x, body in r.branches:
            rt = t.get(l)
            if rt is None:
                continue
            bound = s.Cast(s.Var(x), Sess(rt), Sess(u.get(l)), c.label)
            branches.append((l, x, s.Let(x, bound, body)))
        return s.CaseE(c.body, tuple(branches))
    if isinstance(r, s.CloseE):
        return s.CloseE(r.chan.body)
    if isinstance(r, s.WaitE):
        return s.WaitE(r.chan.body)
    if isinstance(r, s.Cast):
        return _step_cast(r)
    raise ValueError(f"no expression step for {s.show(r)}")


def _step_cast(r: s.Cast) -> s.Term:
    t, u, v, p = r.src, r.tgt, r.body, r.label
    if t == u:
        return v
    if isinstance(t, Prod) and isinstance(u, Prod):
        return s.Pair(u.mult, s.Cast(v.fst, t.fst, u.fst, p), s.Cast(v.snd, t.snd, u.snd, p))
    if u == Dyn:
        g = ground_of(t)
        return s.Cast(s.Cast(v, t, g, p), g, Dyn, p)
    if t == Dyn:
        g = ground_of(u)
        return s.Cast(s.Cast(v, Dyn, g, p), g, u, p)
    if u == Sess(DC):
        g = Sess(ground_session_of(t.s))
        return s.Cast(s.Cast(v, t, g, p), g, Sess(DC), p)
    # t is DC and u a non-ground session
    g = Sess(ground_session_of(u.s))
    return s.Cast(s.Cast(v, Sess(DC), g, p), g, u, p)


EXPR_RULES = {"beta", "wrap", "let-pair", "let", "arith", "if", "cast-send", "cast-receive",
              "cast-select", "cast-case", "cast-close", "cast-wait", "cast-id", "cast-pair",
              "factor-out", "factor-in", "collapse"}


def _replace(procs, i, new):
    procs = list(procs)
    procs[i] = new
    return procs


def _fresh_chan(cfg: Configuration):
    k = cfg.next_chan
    return f"c{k}", f"c{k + 1}", dataclasses.replace(cfg, next_chan=k + 2)


def _set_pair(cfg, cp: ChannelPair, session) -> Tuple[ChannelPair, ...]:
    pairs = []
    for x in cfg.channel_pairs:
        if x is cp:
            if session is not None:
                pairs.append(ChannelPair(cp.end1, cp.end2, session))
        else:
            pairs.append(x)
    return tuple(pairs)


def _residual(st, label=None):
    if isinstance(st, (Send, Recv)):
        return st.rest
    return st.get(label)


def apply_redex(cfg: Configuration, rx: Redex) -> Configuration:
    procs = list(cfg.processes)
    rule = rx.rule
    if rule in ("cell-gc", "cell-gc-blame"):
        i = rx.procs[0]
        cell = procs[i]
        binders = tuple(a for a in cfg.cell_binders if a != cell.ref)
        if rule == "cell-gc":
            del procs[i]
        else:
            procs[i] = BlameGC(cell.label.complement(), s.flv(cell.payload))
        return dataclasses.replace(cfg, processes=tuple(procs), cell_binders=binders)

    if len(rx.procs) == 2 and rule in ("comm", "choose", "close", "sync", "sync-blame"):
        return _apply_comm(cfg, rx)

    i = rx.procs[0]
    frames, r = decompose(procs[i].term)
    if rule in EXPR_RULES:
        new = r.body.body if rule == "collapse" else step_expr(r)
        procs[i] = Expr(plug(frames, new))
        return dataclasses.replace(cfg, processes=tuple(procs))
    if rule == "collide":
        inner = r.body
        flv = context_flv(frames) | s.flv(inner.body)
        procs[i] = BlamePair(inner.label.complement(), r.label, flv)
        return dataclasses.replace(cfg, processes=tuple(procs))
    if rule == "fork":
        procs[i] = Expr(plug(frames, s.UnitLit()))
        procs.append(Expr(r.body))
        return dataclasses.replace(cfg, processes=tuple(procs))
    if rule == "new":
        c, d, cfg = _fresh_chan(cfg)
        procs[i] = Expr(plug(frames, s.Pair(LIN, s.Chan(c), s.Chan(d))))
        pairs = cfg.channel_pairs + (ChannelPair(c, d, r.ann),)
        return dataclasses.replace(cfg, processes=tuple(procs), channel_pairs=pairs)
    if rule == "cell-alloc":
        a = f"a{cfg.next_ref}"
        procs[i] = Expr(plug(frames, s.Ref(a)))
        procs.append(Cell(a, r.body, r.src, r.label))
        return dataclasses.replace(cfg, processes=tuple(procs), next_ref=cfg.next_ref + 1,
                                   cell_binders=cfg.cell_binders + (a,))
    if rule == "cell-read":
        j = rx.procs[1]
        cell = procs[j]
        stored = s.Cast(cell.payload, cell.ground, Dyn, cell.label)
        procs[i] = Expr(plug(frames, dataclasses.replace(r, body=stored)))
        procs[j] = LockedCell(cell.ref, cell.label)
        return dataclasses.replace(cfg, processes=tuple(procs))
    if rule == "cell-locked":
        _, locked = cfg.cell(r.body.name)
        procs[i] = BlamePair(locked.label.complement(), r.label, context_flv(frames))
        return dataclasses.replace(cfg, processes=tuple(procs))
    raise ValueError(f"cannot apply {rule}")


def _apply_comm(cfg: Configuration, rx: Redex) -> Configuration:
    procs = list(cfg.processes)
    i, j = rx.procs
    fi, ri = decompose(procs[i].term)
    fj, rj = decompose(procs[j].term)
    ci = _subject(ri)
    cp = cfg.pair_of(ci)
    end1_is_i = ci == cp.end1
    rule = rx.rule
    if rule == "comm":
        (fs, rs, ks), (fr, rr, kr) = sorted(
            [(fi, ri, i), (fj, rj, j)], key=lambda x: not isinstance(x[1], s.Send))
        procs[ks] = Expr(plug(fs, rs.chan))
        procs[kr] = Expr(plug(fr, s.Pair(LIN, rs.payload, rr.chan)))
        pairs = _set_pair(cfg, cp, _residual(cp.session))
    elif rule == "choose":
        (fs, rs, ks), (fc, rc, kc) = sorted(
            [(fi, ri, i), (fj, rj, j)], key=lambda x: not isinstance(x[1], s.SelectE))
        x, body = rc.branch(rs.label)
        procs[ks] = Expr(plug(fs, rs.chan))
        procs[kc] = Expr(plug(fc, s.subst(body, x, rc.scrutinee)))
        pairs = _set_pair(cfg, cp, _residual(cp.session, rs.label))
    elif rule == "close":
        procs[i] = Expr(plug(fi, s.UnitLit()))
        procs[j] = Expr(plug(fj, s.UnitLit()))
        pairs = _set_pair(cfg, cp, None)
    elif rule == "sync":
        procs[i] = Expr(plug(fi, ri.body))
        procs[j] = Expr(plug(fj, rj.body))
        gs = ri.tgt.s
        pairs = _set_pair(cfg, cp, gs if end1_is_i else dual(gs))
    else:  # sync-blame
        flv = context_flv(fi) | context_flv(fj) | {cp.end1, cp.end2}
        procs[i] = BlamePair(ri.label, rj.label, frozenset(flv))
        del procs[j]
        pairs = _set_pair(cfg, cp, None)
    return dataclasses.replace(cfg, processes=tuple(procs), channel_pairs=pairs)


# ---------------------------------------------------------------------- GC


def gc_scan(cfg: Configuration) -> List[Redex]:
    """Cells whose reference occurs in no term and no other cell."""
    held = set()
    for p in cfg.processes:
        if isinstance(p, Expr):
            held |= s.refs(p.term)
        elif isinstance(p, Cell):
            held |= s.refs(p.payload)
    out = []
    for i, p in enumerate(cfg.processes):
        if isinstance(p, LockedCell) and p.ref not in held:
            out.append(Redex("cell-gc", (i,)))
        elif isinstance(p, Cell) and p.ref not in held:
            out.append(Redex("cell-gc-blame", (i,)))
    return out


# ------------------------------------------------------------------ errors


def detect_error(cfg: Configuration) -> Optional[str]:
    """Name the run-time error shape present in cfg, if any."""
    dec = _decomposed(cfg)
    subjects = {}
    for i, (frames, r) in dec.items():
        if isinstance(r, s.App) and not (isinstance(r.fn, s.Lam) or (
                isinstance(r.fn, s.Cast) and isinstance(r.fn.src, Fn))):
            return "case 1: applying a non-abstraction"
        if isinstance(r, s.LetPair) and not isinstance(r.bound, s.Pair):
            return "case 2: splitting a non-pair"
        if isinstance(r, BLOCKING):
            subj = _subject(r)
            if subj is not None:
                if subj in subjects:
                    return f"case 3: endpoint {subj} is the subject of two processes"
                subjects[subj] = r
    for cp in cfg.channel_pairs:
        a, b = subjects.get(cp.end1), subjects.get(cp.end2)
        if a is not None and b is not None and _agree(a, b) is None:
            return f"case 4: operations on {cp.end1} and {cp.end2} do not agree"
    return None


# --------------------------------------------------------------- scheduling


@dataclass
class Scheduler:
    """round_robin when seed is None, otherwise seeded random choice."""

    seed: Optional[int] = None
    cursor: int = 0
    step_count: int = 0
    rng: Optional[random.Random] = None

    def __post_init__(self):
        if self.seed is not None:
            self.rng = random.Random(self.seed)

    @property
    def policy(self) -> str:
        return "round_robin" if self.seed is None else "seeded_random"

    def choose(self, redexes: List[Redex], nprocs: int) -> Redex:
        if self.rng is not None:
            return self.rng.choice(redexes)
        n = max(nprocs, 1)
        best = min(redexes, key=lambda rx: ((rx.index - self.cursor) % n, rx.rule))
        self.cursor = best.index + 1
        return best


# --------------------------------------------------------------- outcomes


@dataclass
class Quiescent:
    final: Configuration
    steps: int
    code = 0


@dataclass
class Blamed:
    final: Configuration
    blame: ProcessBody
    at_step: int
    steps: int
    code = 10

    @property
    def kind(self) -> str:
        return "pair" if isinstance(self.blame, BlamePair) else "gc"


@dataclass
class Stuck:
    final: Configuration
    reason: str
    steps: int
    code = 11


@dataclass
class StepLimit:
    final: Configuration
    steps: int
    code = 12


@dataclass
class TraceStep:
    number: int
    rule: str
    config: Configuration

    def __str__(self) -> str:
        return f"#{self.number}  {self.rule}  {self.config}"


class RunError(Exception):
    """Raised when a checked run finds an ill-typed or erroneous configuration."""


def step_config(cfg: Configuration, sched: Scheduler):
    """Apply one scheduled redex; returns (rule, new config) or None if none is enabled."""
    redexes = enumerate_redexes(cfg)
    if not redexes:
        return None
    rx = sched.choose(redexes, len(cfg.processes))
    return rx.rule, apply_redex(cfg, rx)


def run(term, sched: Optional[Scheduler] = None, max_steps: int = 100000,
        trace: Optional[Callable[[TraceStep], None]] = None,
        typecheck_each_step: bool = False, check_errors: bool = False,
        run_to_quiescence: bool = False, env=None):
    """Run a closed term (or a configuration) to an outcome."""
    sched = sched or Scheduler()
    cfg = term if isinstance(term, Configuration) else Configuration.initial(term)
    step = 0
    first_blame = None

    def check(c):
        if typecheck_each_step:
            try:
                tc_config(c, env)
            except Exception as exc:
                raise RunError(f"step {step}: {exc}") from None
        if check_errors:
            err = detect_error(c)
            if err:
                raise RunError(f"step {step}: {err}")

    def emit(rule, c):
        if trace is not None:
            trace(TraceStep(step, rule, c))

    emit("init", cfg)
    check(cfg)
    while True:
        if step >= max_steps:
            return StepLimit(cfg, step)
        res = step_config(cfg, sched)
        if res is None:
            break
        pending = [res]
        # eager collection of unreachable cells follows every step
        while pending:
            rule, new = pending.pop()
            before = cfg.blames()
            step += 1
            cfg = new
            emit(rule, cfg)
            check(cfg)
            fresh = [b for b in cfg.blames() if b not in before]
            if fresh and first_blame is None:
                first_blame = (fresh[0], step)
                if not run_to_quiescence:
                    return Blamed(cfg, fresh[0], step, step)
            gcs = gc_scan(cfg)
            if gcs:
                pending.append((gcs[0].rule, apply_redex(cfg, gcs[0])))
    if first_blame is not None:
        return Blamed(cfg, first_blame[0], first_blame[1], step)
    if cfg.blames():
        b = cfg.blames()[0]
        return Blamed(cfg, b, 0, step)
    live = [p for p in cfg.processes if isinstance(p, Expr) and not is_value(p.term)]
    if live:
        reason = "deadlock"
        for p in live:
            if s.free_vars(p.term):
                reason = "open_name"
        return Stuck(cfg, reason, step)
    return Quiescent(cfg, step)

