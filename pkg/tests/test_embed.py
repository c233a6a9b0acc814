from hypothesis import given, settings, strategies as st

from ggv import syntax as s
from ggv.embed import check_embedding, embed
from ggv.internal import tc_internal
from ggv.parser import parse_expr, parse_type
from ggv.runtime import Blamed, Quiescent, Stuck, run
from ggv.typer import LabelAllocator
from ggv.types import Dyn
from helpers import PROGRAMS

T = parse_type


def U(src):
    return parse_expr(src, untyped=True)


def test_new_is_cast_to_dyn():
    e = embed(U("new"))
    assert isinstance(e, s.Cast) and e.body == s.New(T("DC").s)
    assert (str(e.src), str(e.tgt)) == ("DC *lin DC", "Dyn")


def test_send_shape():
    e = embed(U("send x y"))
    assert isinstance(e, s.Cast) and (str(e.src), str(e.tgt)) == ("DC", "Dyn")
    inner = e.body
    assert isinstance(inner, s.Send) and inner.payload == s.Var("x")
    assert (str(inner.chan.src), str(inner.chan.tgt)) == ("Dyn", "!Dyn.DC")


def test_variables_are_left_alone():
    assert embed(U("x")) == s.Var("x")


def test_case_rebinds_each_branch_endpoint():
    e = embed(U("case c of {a: k. k}"))
    (label, y, body), = e.branches
    assert y == "k%"
    assert isinstance(body, s.Let) and body.x == "k"
    assert (str(body.bound.src), str(body.bound.tgt)) == ("DC", "Dyn")


def test_every_cast_gets_its_own_label():
    e = embed(U("lambda c. let v, c = receive c in close (send v c)"), LabelAllocator())
    ids = [c.label.id for c in s.casts(e)]
    assert sorted(ids) == list(range(1, len(ids) + 1))


def test_check_embedding_examples():
    assert tc_internal({}, check_embedding(U("lambda x. x")))[0] == Dyn
    src = (PROGRAMS / "dynamic_channel.ugv").read_text()
    assert tc_internal({}, check_embedding(U(src)))[0] == Dyn
    assert tc_internal({"x": Dyn, "y": Dyn}, check_embedding(U("send x y"), free=["x", "y"]))[0] == Dyn


def test_arithmetic_misuse_blames_instead_of_getting_stuck():
    out = run(check_embedding(U("let c, d = new in (lambda x. ()) d; c + 1")))
    assert isinstance(out, Blamed)
    assert isinstance(run(check_embedding(U("2 + 3"))), Quiescent)


_leaf = st.sampled_from(["x", "y", "()", "1", "new"])


def _node(inner):
    return st.one_of(
        st.builds(lambda b: f"(lambda x. {b})", inner),
        st.builds(lambda a, b: f"({a} {b})", inner, inner),
        st.builds(lambda a, b: f"({a}, {b})", inner, inner),
        st.builds(lambda a, b: f"(let x, y = {a} in {b})", inner, inner),
        st.builds(lambda a, b: f"(send {a} {b})", inner, inner),
        st.builds(lambda a: f"(receive {a})", inner),
        st.builds(lambda a: f"(close {a})", inner),
        st.builds(lambda a: f"(wait {a})", inner),
        st.builds(lambda a: f"(fork {a})", inner),
        st.builds(lambda a: f"(select l {a})", inner),
        st.builds(lambda a, b: f"(case {a} of {{l: x. {b}}})", inner, inner),
        st.builds(lambda a, b: f"({a} + {b})", inner, inner),
        st.builds(lambda a, b, c: f"(if {a} then {b} else {c})", inner, inner, inner),
    )


@settings(max_examples=200, deadline=None)
@given(st.recursive(_leaf, _node, max_leaves=8))
def test_every_untyped_term_embeds_at_dyn(src):
    e = U(src)
    f = check_embedding(e, free=["x", "y"])
    assert tc_internal({"x": Dyn, "y": Dyn}, f)[0] == Dyn


@settings(max_examples=60, deadline=None)
@given(st.recursive(_leaf, _node, max_leaves=6))
def test_closed_untyped_terms_never_hit_a_runtime_error(src):
    e = U(f"let x = () in let y = 1 in {src}")
    out = run(check_embedding(e), max_steps=400, typecheck_each_step=True, check_errors=True)
    assert not isinstance(out, Stuck) or out.reason == "deadlock"
