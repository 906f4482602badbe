import json
import math
import subprocess
import sys

import numpy as np
import pytest

from fmci import ci
from fmci.cli import PLAN_KEYS, QUERY_KEYS, main
from fmci.sketch import Sketch, sketch_of
from oracles import hp_mp

LN2 = math.log(2)


def run(*args, stdin=b""):
    return subprocess.run([sys.executable, "-m", "fmci", *args], input=stdin, capture_output=True)


def query_json(capsys, *args):
    assert main(["query", *args]) == 0
    return json.loads(capsys.readouterr().out)


def plan_json(capsys, *args):
    assert main(["plan", *args]) == 0
    return json.loads(capsys.readouterr().out)


# --- build / merge ----------------------------------------------------------


def test_build_from_stdin_and_counts(tmp_path):
    out = tmp_path / "a.fmci"
    r = run("build", "--out", str(out), stdin=b"x\ny\nx\n")
    assert r.returncode == 0
    assert b"tokens processed: 3" in r.stderr
    assert Sketch.load(out) == sketch_of([b"x", b"y"])


def test_build_duplicate_lines_idempotent(tmp_path):
    a, b = tmp_path / "a.fmci", tmp_path / "b.fmci"
    assert run("build", "--out", str(a), stdin=b"same\nsame\n").returncode == 0
    assert run("build", "--out", str(b), stdin=b"same\n").returncode == 0
    assert a.read_bytes() == b.read_bytes()


def test_build_empty_input_is_fresh(tmp_path):
    out = tmp_path / "e.fmci"
    assert run("build", "--r0", "2", "--c0", "3", "--z0", "5", "--out", str(out)).returncode == 0
    assert out.read_bytes() == Sketch.new(2, 3, 5).to_bytes()


def test_token_rules(tmp_path):
    src = tmp_path / "t.txt"
    src.write_bytes(b"a \n\nb\r\nlast")
    out = tmp_path / "t.fmci"
    assert main(["build", "--out", str(out), str(src)]) == 0
    assert Sketch.load(out) == sketch_of([b"a ", b"", b"b\r", b"last"])


def test_build_golden(tmp_path, fixtures_dir):
    out = tmp_path / "g.fmci"
    assert main(["build", "--out", str(out), str(fixtures_dir / "corpus10.txt")]) == 0
    assert out.read_bytes() == (fixtures_dir / "golden10.fmci").read_bytes()


def test_merge_identity_commutative_split(tmp_path):
    rng = np.random.default_rng(9)
    toks = [rng.bytes(5).hex().encode() for _ in range(400)]
    s1, s2 = toks[:250], toks[150:]
    (tmp_path / "s1").write_bytes(b"\n".join(s1) + b"\n")
    (tmp_path / "s2").write_bytes(b"\n".join(s2) + b"\n")
    (tmp_path / "all").write_bytes(b"\n".join(s1 + s2) + b"\n")
    p = lambda n: str(tmp_path / n)  # noqa: E731
    for name in ("s1", "s2", "all"):
        assert main(["build", "--out", p(name + ".fmci"), p(name)]) == 0
    assert main(["build", "--out", p("fresh.fmci"), p("empty")]) == 2
    (tmp_path / "empty").write_bytes(b"")
    assert main(["build", "--out", p("fresh.fmci"), p("empty")]) == 0
    assert main(["merge", "--out", p("ab.fmci"), p("s1.fmci"), p("s2.fmci")]) == 0
    assert main(["merge", "--out", p("ba.fmci"), p("s2.fmci"), p("s1.fmci")]) == 0
    assert main(["merge", "--out", p("af.fmci"), p("s1.fmci"), p("fresh.fmci")]) == 0
    read = lambda n: (tmp_path / n).read_bytes()  # noqa: E731
    assert read("ab.fmci") == read("ba.fmci") == read("all.fmci")
    assert read("af.fmci") == read("s1.fmci")


def test_merge_mismatch_exit_3(tmp_path):
    a, b = tmp_path / "a.fmci", tmp_path / "b.fmci"
    Sketch.new(4, 4, 4).save(a)
    Sketch.new(4, 4, 3).save(b)
    assert main(["merge", "--out", str(tmp_path / "c"), str(a), str(b)]) == 3


def test_merge_needs_two(tmp_path):
    a = tmp_path / "a.fmci"
    Sketch.new().save(a)
    assert main(["merge", "--out", str(tmp_path / "c"), str(a)]) == 1


# --- exit codes -------------------------------------------------------------


def test_exit_codes(tmp_path):
    bad = tmp_path / "bad.fmci"
    bad.write_bytes(b"not a sketch")
    assert run("query", str(bad)).returncode == 2
    assert run("query", str(tmp_path / "missing")).returncode == 2
    assert run("build", "--out", str(tmp_path / "nodir" / "x"), stdin=b"a\n").returncode == 2
    assert run("build", "--r0", "17", "--out", str(tmp_path / "x")).returncode == 1
    assert run("frobnicate").returncode == 1
    assert run("query", "--alpha", "1.5", str(bad)).returncode == 1
    assert run("plan", "--alpha", "0").returncode == 1
    assert run("plan", "--r0", "x").returncode == 1
    assert run("validate", "--suite", "nope").returncode == 1
    assert run("validate", "--suite", "coverage", "--mode", "weird").returncode == 1
    assert run().returncode == 1


# --- query ------------------------------------------------------------------


def test_query_schema_and_golden(capsys, fixtures_dir):
    out = query_json(capsys, "--alpha", "0.9", "--mode", "two-sided", str(fixtures_dir / "golden10.fmci"))
    assert tuple(out) == QUERY_KEYS
    want = json.loads((fixtures_dir / "golden10_query.json").read_text())
    assert out == want
    # the endpoints satisfy their defining equations under an mpmath H_p
    c = LN2 * out["mean_y"]
    assert float(hp_mp(out["p0"], out["upper"])) == pytest.approx(c + out["h_u"] + 2**-4, rel=1e-10)
    assert float(hp_mp(out["p0"], out["lower"])) == pytest.approx(c - out["h_d"], rel=1e-10)


def test_query_fresh_upper(capsys, tmp_path):
    f = tmp_path / "f.fmci"
    Sketch.new().save(f)
    out = query_json(capsys, str(f))
    assert out["lower"] == 0.0 and math.isfinite(out["upper"]) and out["h_d"] is None
    assert out["alpha"] == 0.95 and out["mode"] == "upper"


def test_query_lower_mode_null_upper(capsys, fixtures_dir):
    out = query_json(capsys, "--mode", "lower", str(fixtures_dir / "golden10.fmci"))
    assert out["upper"] is None and out["h_u"] is None


def test_query_nesting(capsys, fixtures_dir):
    f = str(fixtures_dir / "golden10.fmci")
    for mode in ci.MODES:
        a = query_json(capsys, "--alpha", "0.9", "--mode", mode, f)
        b = query_json(capsys, "--alpha", "0.99", "--mode", mode, f)
        up = lambda v: math.inf if v is None else v  # noqa: E731
        assert b["lower"] <= a["lower"] and up(b["upper"]) >= up(a["upper"])


def test_query_options(capsys, fixtures_dir):
    f = str(fixtures_dir / "golden10.fmci")
    base = query_json(capsys, "--alpha", "0.9", "--mode", "two-sided", f)
    slack = query_json(capsys, "--alpha", "0.9", "--mode", "two-sided", "--lower-slack", f)
    split = query_json(capsys, "--alpha", "0.9", "--mode", "two-sided", "--split", "0.2", f)
    assert slack["lower"] < base["lower"] and slack["upper"] == base["upper"]
    assert split["h_d"] > base["h_d"] and split["h_u"] < base["h_u"]


def test_json_is_locale_independent(fixtures_dir):
    import os

    env = dict(os.environ, LC_ALL="de_DE.UTF-8", LANG="de_DE.UTF-8")
    r = subprocess.run([sys.executable, "-m", "fmci", "query", str(fixtures_dir / "golden10.fmci")],
                       capture_output=True, env=env)
    assert r.returncode == 0
    out = json.loads(r.stdout)
    assert "," not in repr(out["upper"])


# --- plan -------------------------------------------------------------------


def test_plan_schema_and_checks(capsys):
    eq = plan_json(capsys, "--alpha", "0.9", "--r0", "4", "--c0", "1")
    mn = plan_json(capsys, "--alpha", "0.9", "--r0", "4", "--c0", "1", "--minlen")
    assert tuple(mn) == PLAN_KEYS and mn["minlen"] is True and eq["minlen"] is False
    assert mn["a0"] == 16
    assert mn["h_d"] + mn["h_u"] <= eq["h_d"] + eq["h_u"]
    for pl in (eq, mn):
        tails = ci.tail_from_halfwidth(pl["h_d"], 16, "plus") + ci.tail_from_halfwidth(pl["h_u"], 16, "minus")
        assert abs(tails - 0.1) <= 1e-9
    big = plan_json(capsys, "--alpha", "0.9", "--r0", "4", "--c0", "2")
    assert big["h_d"] < eq["h_d"] and big["h_u"] < eq["h_u"]


# --- validate ---------------------------------------------------------------


def test_validate_replay_and_domination(tmp_path):
    args = ["validate", "--suite", "pvalues", "--seed", "3", "--samples", "40",
            "--r0-list", "0,2", "--c0-list", "1,2", "--F0", "300"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--csv", str(a)]) == 0
    assert main(args + ["--csv", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert len(lines) == 1 + 8
    header = lines[0].split(",")
    assert all(row.split(",")[header.index("dominated")] == "True" for row in lines[1:])


def test_validate_coverage(tmp_path):
    out = tmp_path / "c.csv"
    rc = main(["validate", "--suite", "coverage", "--samples", "100", "--r0-list", "0", "--c0-list", "1",
               "--F0", "500", "--alpha", "0.9", "--csv", str(out)])
    assert rc == 0
    import csv

    (row,) = list(csv.DictReader(out.open()))
    assert float(row["ci3sigma_hi"]) >= 0.9 and row["ok"] == "True"


def test_validate_gumbel_stdout(capsys):
    assert main(["validate", "--suite", "gumbel", "--samples", "1000", "--F0", "100", "--t", "0,0.3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 3 and lines[0].startswith("label,")
