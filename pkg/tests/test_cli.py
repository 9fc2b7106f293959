import csv
import hashlib
import io
import json
import subprocess
import sys

import pytest

from mpshuffle.cli import main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_shuffle_deterministic(capsys, tmp_path):
    code, a, _ = run(["shuffle", "--n", "8", "--seed", "1"], capsys)
    assert code == 0
    _, b, _ = run(["shuffle", "--n", "8", "--seed", "1"], capsys)
    assert a == b
    d = json.loads(a)
    assert d["manifest"]["params"]["n"] == 8 and d["manifest"]["seed"] == 1
    assert sorted(d["outcome"]["permutation"]) == list(range(1, 9))
    assert d["outcome"]["rounds"] == 19


def test_shuffle_two_and_files(capsys, tmp_path):
    out, tr = tmp_path / "r.json", tmp_path / "t.jsonl"
    code, _, _ = run(["shuffle", "--protocol", "two", "--n1", "4", "--n2", "2", "--p", "257",
                      "--inputs", "5,6,7,8,9,10,11,12", "--out", str(out), "--transcript", str(tr)], capsys)
    assert code == 0
    d = json.loads(out.read_text())
    assert sorted(int(v) for v in d["outcome"]["outputs"]) == list(range(5, 13))
    lines = tr.read_text().splitlines()
    assert lines and all({"round", "tag", "from", "to"} <= set(json.loads(x)) for x in lines[:20])


def test_usage_errors(capsys):
    assert run(["shuffle", "--n", "8", "--t", "3"], capsys)[0] == 2
    assert run(["shuffle", "--protocol", "two", "--n1", "4"], capsys)[0] == 2
    assert run(["shuffle", "--n", "4", "--inputs", "1,2"], capsys)[0] == 2
    assert run(["shuffle", "--n", "8", "--crash", "bad"], capsys)[0] == 2
    assert run(["shuffle", "--bogus"], capsys)[0] == 2
    assert run(["analyze", "dist", "--family", "npi"], capsys)[0] == 2


def test_crash_gives_abort_exit(capsys):
    code, text, _ = run(["shuffle", "--n", "8", "--t", "2", "--corrupt", "3", "--crash", "3:4"], capsys)
    assert code == 3
    assert json.loads(text)["outcome"]["aborted"] is True


def test_analyze_dist_table(capsys):
    code, text, _ = run(["analyze", "dist", "--d", "3", "--format", "csv"], capsys)
    assert code == 0
    lines = text.splitlines()
    assert lines[0].startswith("# manifest: ")
    rows = list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))
    assert len(rows) == 7
    assert {int(r["occurrences"]): int(r["permutations"]) for r in rows} == \
        {8: 8192, 16: 14336, 32: 12288, 40: 2048, 64: 2816, 128: 512, 256: 128}
    assert all(r["reference"] == r["permutations"] for r in rows)


def test_analyze_budget_exit(capsys):
    assert run(["analyze", "dist", "--d", "3", "--budget", "10"], capsys)[0] == 4


def test_analyze_birthday_fpi_zeta_stats(capsys):
    code, text, _ = run(["analyze", "birthday"], capsys)
    rows = json.loads(text)["rows"]
    assert code == 0 and [r["n"] for r in rows] == [32, 64, 128, 256]
    assert [r["flag"] != "" for r in rows] == [False, True, False, False]
    _, text, _ = run(["analyze", "fpi", "--max", "16"], capsys)
    rows = json.loads(text)["rows"]
    assert len(rows) == 16 and rows[5]["f_pi"] == "48"
    _, text, _ = run(["analyze", "zeta"], capsys)
    rows = json.loads(text)["rows"]
    assert {(r["protocol"], r["n"], r["t"]): r["zeta"] for r in rows}[("one", 128, 42)] == 433
    assert all("reference" in r and "zeta" in r for r in rows)
    _, text, _ = run(["analyze", "zeta", "--n", "8", "--n1", "4", "--n2", "2", "--t", "0"], capsys)
    assert json.loads(text)["rows"][0]["zeta"] == 13
    _, text, _ = run(["analyze", "stats", "--d", "3"], capsys)
    row = json.loads(text)["rows"][0]
    assert abs(row["mean"] - 26.0063) <= 1e-4


def test_adversary_verdicts(capsys):
    base = ["adversary", "--n", "8", "--t", "2", "--p", "257", "--trials", "100"]
    code, text, _ = run(base, capsys)
    assert code == 0
    rep = json.loads(text)["report"]
    assert rep["verdict"] == "pass" and rep["corrupted"] == [1, 2]
    assert {"trials", "alpha", "threshold", "slots_tested", "min_p_value", "worst", "note"} <= set(rep)
    code, _, _ = run(base + ["--negative-control"], capsys)
    assert code == 1


def test_topology_dot(capsys):
    code, text, _ = run(["topology", "--d", "2"], capsys)
    assert code == 0 and text.startswith('digraph "benes4"')
    code, text, _ = run(["topology", "--family", "reduced", "--n1", "4", "--n2", "2"], capsys)
    assert code == 0 and "reduced4x2" in text


@pytest.mark.parametrize("argv", [
    ["shuffle", "--n", "8", "--seed", "7"],
    ["shuffle", "--n", "8", "--t", "2", "--corrupt", "3", "--crash", "3:4"],
    ["analyze", "birthday", "--format", "csv"],
    ["analyze", "zeta"],
])
def test_replay_is_byte_identical(argv, capsys, tmp_path):
    path = tmp_path / "result"
    main(argv + ["--out", str(path)])
    capsys.readouterr()
    original = path.read_bytes()
    again = tmp_path / "again"
    code = main(["replay", str(path), "--out", str(again), "--check"])
    assert code in (0, 3)
    assert hashlib.sha256(again.read_bytes()).hexdigest() == hashlib.sha256(original).hexdigest()


def test_replay_mismatch_and_bad_file(capsys, tmp_path):
    path = tmp_path / "result"
    main(["shuffle", "--n", "4", "--out", str(path)])
    path.write_text(path.read_text().replace('"rounds"', '"rounds_x"'))
    assert main(["replay", str(path), "--check"]) == 1
    bad = tmp_path / "bad"
    bad.write_text("not json")
    assert main(["replay", str(bad)]) == 2


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "mpshuffle.cli", "analyze", "fpi", "--max", "8", "--format", "csv"],
                         capture_output=True, text=True, check=True)
    assert out.stdout.splitlines()[-1].startswith("8,40320,40320")
