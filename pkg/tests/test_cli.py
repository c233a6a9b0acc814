import json
import shutil
import subprocess

import pytest

from ggv import syntax as s
from ggv.cli import main
from ggv.loader import compile_file
from helpers import GOLDEN, PROGRAMS

LAMBDA = "lambda_un o: Dyn. lambda_un c: DC. close (send o c)\n"


@pytest.fixture
def lam_file(tmp_path):
    f = tmp_path / "lam.ggv"
    f.write_text(LAMBDA)
    return f


def ggv(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_check_prints_the_type(capsys, lam_file):
    assert ggv(capsys, "check", lam_file) == (0, ": Dyn -un> DC -un> Unit\n", "")


def test_check_reports_linearity_errors(capsys, tmp_path):
    f = tmp_path / "twice.ggv"
    f.write_text("let c, d = new End! in fork (wait d); (c, c)@lin")
    code, out, err = ggv(capsys, "check", f)
    assert code == 1 and out == "" and "linear variable c used twice" in err


def test_missing_file(capsys, tmp_path):
    code, out, err = ggv(capsys, "check", tmp_path / "nope.ggv")
    assert code == 2 and err


def test_parse_error_exit_code(capsys, tmp_path):
    f = tmp_path / "bad.ggv"
    f.write_text("lambda_un x. x")
    code, _, err = ggv(capsys, "check", f)
    assert code == 1 and "1:12" in err


def test_elaborate_lambda(capsys, lam_file):
    code, out, _ = ggv(capsys, "elaborate", "--labels", lam_file)
    lines = out.splitlines()
    assert code == 0
    assert lines[0] == ("lambda_un o. lambda_un c. close ((send o (c : DC => ℓ1 !Dyn.DC)) "
                        ": DC => ℓ2 End!)")
    assert lines[1:] == ["ℓ1\tlam.ggv:1:50", "ℓ2\tlam.ggv:1:43"]


def test_elaborate_static_file_has_no_casts(capsys):
    code, out, _ = ggv(capsys, "elaborate", PROGRAMS.parent / "tests" / "corpus" / "choice.ggv")
    assert code == 0 and "=>" not in out


def test_elaborate_untyped(capsys):
    code, out, _ = ggv(capsys, "elaborate", "--untyped", PROGRAMS / "dynamic_channel.ugv")
    assert code == 0 and "new : DC *lin DC => ℓ" in out and "Dyn => ℓ" in out


def test_elaborate_json_round_trips(capsys):
    code, out, _ = ggv(capsys, "elaborate", "--json", PROGRAMS / "soc.ggv")
    assert code == 0
    assert s.from_json(json.loads(out)) == compile_file(str(PROGRAMS / "soc.ggv")).term


@pytest.mark.parametrize("name, code, start", [
    ("soc.ggv", 0, "quiescent after 14 steps: ⟨()⟩ | ⟨()⟩"),
    ("soc_bad.ggv", 10, "blame ℓ4⁻ ℓ2 {c0} at step 14"),
    ("bar.ggv", 10, "blame ℓ3⁻ ℓ1 {} at step 15"),
    ("deadlock.ggv", 11, "stuck (deadlock)"),
    ("compute.ggv", 0, "quiescent after 102 steps: ⟨-5⟩ | ⟨()⟩"),
    ("compute_mistake.ggv", 10, "blame ℓ2⁻ ℓ26 {c0}"),
    ("gg_imprecise.ggv", 10, "blame ℓ5⁻ ℓ4 {}"),
])
def test_run_outcomes(capsys, name, code, start):
    got, out, _ = ggv(capsys, "run", PROGRAMS / name)
    assert got == code and out.startswith(start)


def test_step_limit(capsys):
    code, out, _ = ggv(capsys, "run", "--max-steps", "3", PROGRAMS / "soc.ggv")
    assert code == 12 and out.startswith("step limit reached")


@pytest.mark.parametrize("name", ["soc", "soc_bad", "foo", "bar"])
def test_trace_matches_golden_file(capsys, name):
    _, out, _ = ggv(capsys, "run", "--trace", PROGRAMS / f"{name}.ggv")
    assert out == (GOLDEN / f"{name}.trace").read_text()


def test_typecheck_each_step_flag(capsys):
    code, _, _ = ggv(capsys, "run", "--typecheck-each-step", "--seed", "3",
                     PROGRAMS / "compute.ggv")
    assert code == 0


def test_untyped_run(capsys):
    code, out, _ = ggv(capsys, "run", "--untyped", PROGRAMS / "dynamic_channel.ugv")
    assert code == 0 and out.startswith("quiescent")


@pytest.mark.parametrize("rel, a, b, want", [
    ("sub", "Unit -un> Unit", "Unit -lin> Unit", "true"),
    ("csub", "?Unit.DC", "End!", "false"),
    ("pos", "!Int.End!", "DC", "true"),
    ("neg", "Dyn", "Int", "true"),
    ("prec", "Int", "Dyn", "true"),
    ("join", "+{a: End!}", "+{b: End!}", "undefined"),
    ("join", "Dyn", "End!", "End!"),
    ("meet", "&{a: End!}", "&{b: End!}", "undefined"),
    ("meet", "+{a: End!}", "+{b: End!}", "+{a: End!, b: End!}"),
])
def test_rel(capsys, rel, a, b, want):
    code, out, _ = ggv(capsys, "rel", rel, a, b)
    assert code == 0 and out.strip() == want


def test_rel_bad_type(capsys):
    code, _, err = ggv(capsys, "rel", "sub", "Int ->", "Int")
    assert code == 1 and err


@pytest.mark.skipif(shutil.which("ggv") is None, reason="console script not installed")
def test_console_script_splits_streams():
    r = subprocess.run(["ggv", "run", str(PROGRAMS / "soc_bad.ggv")], capture_output=True,
                       text=True)
    assert r.returncode == 10 and r.stdout.startswith("blame") and r.stderr == ""
