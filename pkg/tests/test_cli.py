from __future__ import annotations

import shutil
from pathlib import Path

import pytest

from semshift import data_path
from semshift.cli import main
from semshift.vit import parse_vit

from test_runtime import GOLDEN_BEI

FIXTURES = Path(__file__).parent / "fixtures"
RULES = str(data_path("demo_rules.trl"))
SORTS = str(data_path("demo.sorts"))
EX_BEI = str(data_path("passen_bei.vit"))
BASE = ["--rules", RULES, "--direction", "fwd", "--sorts", SORTS]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_compile_demo(capsys):
    code, out, err = run(capsys, "compile", *BASE)
    assert code == 0
    assert out == "11 rules, 1 class, 8 index keys (fwd)\n"


def test_compile_dump(capsys):
    code, out, _ = run(capsys, "compile", *BASE, "--dump-trie")
    assert code == 0
    assert out.split("\n", 1)[1] == (FIXTURES / "demo_fwd.trie").read_text()


def test_compile_empty_slsem(capsys, tmp_path):
    f = tmp_path / "bad.trl"
    f.write_text("[] -> [l:x(i)].\n")
    code, _, err = run(capsys, "compile", "--rules", str(f), "--direction", "fwd")
    assert code == 1 and "empty SLSem" in err


def test_compile_duplicate_warns(capsys, tmp_path):
    f = tmp_path / "dup.trl"
    f.write_text("[L:a(I)] <-> [L:b(I)].\n[L:a(I)] <-> [L:b(I)].\n")
    code, out, err = run(capsys, "compile", "--rules", str(f), "--direction", "fwd")
    assert code == 0 and out.startswith("1 rules")
    assert "uniqueness reduction" in err


def test_compile_unknown_sort_with_hierarchy(capsys, tmp_path):
    f = tmp_path / "s.sorts"
    f.write_text("other isa top.\n")
    code, _, err = run(capsys, "compile", "--rules", RULES, "--direction", "fwd", "--sorts", str(f))
    assert code == 1 and "unknown sort" in err


def test_usage_errors_exit_1(capsys):
    with pytest.raises(SystemExit) as ei:
        main(["compile", "--rules", RULES])
    assert ei.value.code == 1
    with pytest.raises(SystemExit) as ei:
        main(["frobnicate"])
    assert ei.value.code == 1
    code, _, _ = run(capsys, "translate", *BASE, "--jobs", "0", EX_BEI)
    assert code == 1


def test_translate_golden(capsys):
    code, out, _ = run(capsys, "translate", *BASE, "--trace", EX_BEI)
    assert code == 0
    assert out == (FIXTURES / "passen_bei.golden").read_text()
    assert parse_vit(out).sem == GOLDEN_BEI


def test_translate_output_file_and_stats(capsys, tmp_path):
    dest = tmp_path / "out.vit"
    code, out, err = run(capsys, "translate", *BASE, "--stats", "-o", str(dest), EX_BEI)
    assert code == 0 and out == ""
    assert "fired=3" in err and "fallbacks=2" in err
    assert parse_vit(dest.read_text()).sem == GOLDEN_BEI


def test_translate_empty_extras(capsys, tmp_path):
    f = tmp_path / "a.vit"
    f.write_text("vit { sem: [l1:echt(l2), l2:gut(i1)] }\n")
    code, out, _ = run(capsys, "translate", *BASE, str(f))
    assert code == 0 and "extras" not in out
    assert parse_vit(out).extras == {}


def test_translate_error_policy_exit_2(capsys):
    code, out, err = run(capsys, "translate", *BASE, "--fallback", "error", EX_BEI)
    assert code == 2 and out == ""
    assert "l4:pron(i2)" in err


def test_translate_bad_input_exit_1(capsys, tmp_path):
    f = tmp_path / "bad.vit"
    f.write_text("vit { sem: [L:echt(i1)] }\n")
    code, _, err = run(capsys, "translate", *BASE, str(f))
    assert code == 1 and "variable in ground input" in err
    code, _, err = run(capsys, "translate", *BASE, str(tmp_path / "missing.vit"))
    assert code == 1


def make_batch(tmp_path: Path) -> Path:
    d = tmp_path / "in"
    d.mkdir()
    shutil.copy(EX_BEI, d / "b.vit")
    (d / "a.vit").write_text("vit { sem: [l1:termin(i1)] }\n")
    (d / "c.vit").write_text("vit { sem: [l1:noch(l2,h1), l2:x(i1)] }\n")
    (d / "ignored.txt").write_text("not a vit")
    return d


def test_batch_directory(capsys, tmp_path):
    d = make_batch(tmp_path)
    code, out, err = run(capsys, "translate", *BASE, str(d))
    assert code == 0
    headers = [line for line in out.splitlines() if line.startswith("# ")]
    assert headers == [f"# {d / n}" for n in ("a.vit", "b.vit", "c.vit")]
    assert "3 files: 3 translated, 0 transfer failures, 0 unreadable" in err


def test_batch_parallel_matches_serial_and_writes_dir(capsys, tmp_path):
    d = make_batch(tmp_path)
    _, serial, _ = run(capsys, "translate", *BASE, str(d))
    _, parallel, _ = run(capsys, "translate", *BASE, "--jobs", "3", str(d))
    assert serial == parallel
    outdir = tmp_path / "out"
    code, _, _ = run(capsys, "translate", *BASE, "--jobs", "2", "-o", str(outdir), str(d))
    assert code == 0
    assert sorted(p.name for p in outdir.iterdir()) == ["a.vit", "b.vit", "c.vit"]
    assert parse_vit((outdir / "b.vit").read_text()).sem == GOLDEN_BEI


def test_batch_with_failure(capsys, tmp_path):
    d = make_batch(tmp_path)
    code, _, err = run(capsys, "translate", *BASE, "--fallback", "error", str(d))
    assert code == 2
    assert "3 files: 1 translated, 2 transfer failures, 0 unreadable" in err


def test_outputs_are_byte_identical_across_runs(capsys):
    first = run(capsys, "translate", *BASE, "--trace", EX_BEI)
    second = run(capsys, "translate", *BASE, "--trace", EX_BEI)
    assert first == second


def test_derive(capsys):
    code, out, _ = run(capsys, "derive", *BASE, EX_BEI)
    assert code == 0
    assert "# result 1 of 2" in out and "# result 2 of 2" in out
    assert "l2:bad(i1)" in out
    code, _, err = run(capsys, "derive", *BASE, "--fallback", "error", EX_BEI)
    assert code == 2


def test_check(capsys, tmp_path):
    code, out, _ = run(capsys, "check", *BASE, EX_BEI)
    assert code == 0 and out.endswith("11 rules ok\n")
    f = tmp_path / "bad.vit"
    f.write_text("vit { sem: [l1:a(i1)] sorts: {i1: nonsense} }\n")
    code, _, err = run(capsys, "check", *BASE, str(f))
    assert code == 1 and "nonsense" in err


def test_bench_small(capsys):
    code, out, _ = run(capsys, "bench", "-n", "0", "-m", "5", "--repeats", "1")
    assert code == 0
    assert "0 generated, 0 compiled" in out and "rules fired: 0" in out
    code, _, _ = run(capsys, "bench", "-n", "10", "-m", "0")
    assert code == 1


def test_module_entry_point():
    import subprocess
    import sys

    proc = subprocess.run([sys.executable, "-m", "semshift", "compile", *BASE], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("11 rules")
