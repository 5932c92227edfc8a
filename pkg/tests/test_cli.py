import json
import subprocess
import sys

import pytest

from cfboltz.cli import main

BINARY5 = """\
A(A(A(A(z) A(z)) A(z)) A(A(z) A(z)))
A(A(A(z) A(z)) A(A(A(z) A(z)) A(z)))
A(A(A(A(A(z) A(z)) A(z)) A(z)) A(z))
"""


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_sample_golden(capsys):
    code, out, _ = run(capsys, "sample", "--model", "binary", "-n", "5", "-c", "3",
                       "--seed", "42")
    assert code == 0 and out == BINARY5


def test_toy_golden(capsys):
    code, out, _ = run(capsys, "sample", "--model", "toy", "-n", "8", "-c", "3", "--seed", "42")
    assert code == 0 and out.split() == ["+-0+0-00", "0+00+-0-", "00-+00-+"]


def test_critical(capsys):
    code, out, _ = run(capsys, "critical", "--model", "binary")
    assert code == 0 and out.splitlines()[:2] == ["z* 0.25", "A* 0.5"]
    code, out, _ = run(capsys, "critical", "--model", "rhv", "-v")
    vals = dict(line.split() for line in out.splitlines())
    assert float(vals["z*"]) == pytest.approx(0.1868943725402038464, abs=1e-12)
    assert float(vals["Aneq"]) == pytest.approx(0.5262686391779401435, abs=1e-12)


def test_count(capsys):
    code, out, _ = run(capsys, "count", "--model", "binary", "-n", "6")
    assert [int(l.split()[1]) for l in out.splitlines()] == [1, 1, 2, 5, 14, 42]
    code, out, _ = run(capsys, "count", "--model", "toy", "-n", "3")
    assert out.split()[1::2] == ["2", "6", "20"]


def test_jsonl_and_bridge(capsys):
    code, out, _ = run(capsys, "sample", "--model", "rhv", "-n", "30", "-c", "2",
                       "--format", "jsonl", "--mode", "bridge")
    docs = [json.loads(l) for l in out.splitlines()]
    assert code == 0 and len(docs) == 2 and all("bridge" in d for d in docs)


def test_jobs_deterministic(capsys):
    args = ("sample", "--model", "rhv", "-n", "60", "-c", "4", "--seed", "7", "-j", "2")
    _, a, _ = run(capsys, *args)
    _, b, _ = run(capsys, *args)
    _, single, _ = run(capsys, "sample", "--model", "rhv", "-n", "60", "-c", "4", "--seed", "7")
    assert a == b and len(a.splitlines()) == 4 and a != single


def test_verify(capsys):
    code, out, _ = run(capsys, "verify", "--model", "binary", "-n", "2")
    assert code == 0 and out.rstrip().endswith("pass")
    code, out, _ = run(capsys, "verify", "--model", "toy", "-n", "3", "--seed", "1")
    assert code == 0 and "pass" in out


def test_bench(capsys):
    code, out, err = run(capsys, "bench", "--model", "rhv", "--sizes", "100,1000", "-c", "5")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "size,time_ns,restarts,bits,reach,racc"
    assert [l.split(",")[0] for l in lines[1:]] == ["100", "1000"]
    assert "per decade" in err


def test_svg(tmp_path, capsys):
    path = tmp_path / "r.svg"
    code, out, _ = run(capsys, "sample", "--model", "rhv", "-n", "12", "--svg", str(path))
    assert code == 0 and path.read_text().count("<rect") == 12


@pytest.mark.parametrize("argv, code", [
    (["sample", "--model", "binary", "-n", "0"], 3),
    (["sample", "--model", "binary", "-n", "3", "-c", "0"], 3),
    (["sample", "--model", "binary", "-n", "3", "--seed", "-1"], 3),
    (["sample", "--spec", "/nonexistent/spec.txt", "-n", "3"], 2),
    (["verify", "--model", "rhv", "-n", "40", "--cap", "10"], 3),
])
def test_exit_codes(capsys, argv, code):
    assert main(argv) == code


def test_spec_file_errors(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("A = z + B^2;")
    assert main(["parse", "--spec", str(bad)]) == 2
    lin = tmp_path / "lin.txt"
    lin.write_text("A = z + A;")
    assert main(["sample", "--spec", str(lin), "-n", "3"]) == 3
    ter = tmp_path / "ter.txt"
    ter.write_text("A = z + A^3;")
    assert main(["sample", "--spec", str(ter), "-n", "4"]) == 4


def test_entry_point():
    out = subprocess.run(["cfboltz", "count", "--model", "binary", "-n", "3"],
                         capture_output=True, text=True, check=True).stdout
    assert out == "1 1\n2 1\n3 2\n"
