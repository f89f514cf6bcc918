"""Command-line interface: exit codes, JSON determinism, smoke coverage."""
import json

import pytest

from kolmo.cli import main

DECIDE_BOUNDARY = {
    "family": "mm",
    "r": 2,
    "k": [0, 1, 2],
    "M": [1.0, 2.0, 2.0],
}


def run(capsys, argv, stdin=None, monkeypatch=None):
    if stdin is not None:
        import io
        import sys

        monkeypatch.setattr(sys, "stdin", io.StringIO(json.dumps(stdin)))
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


class TestDecide:
    def test_boundary_tuple(self, capsys, monkeypatch, tmp_path):
        path = tmp_path / "in.json"
        path.write_text(json.dumps(DECIDE_BOUNDARY))
        code, out, err = run(capsys, ["decide", "-i", str(path)])
        assert code == 0
        doc = json.loads(out)
        assert doc["status"] == "admissible_boundary"
        assert doc["witness"] is not None
        assert doc["trace"]

    def test_not_admissible(self, capsys, monkeypatch):
        doc = dict(DECIDE_BOUNDARY, M=[0.5, 2.0, 2.0])
        code, out, _ = run(capsys, ["decide"], stdin=doc, monkeypatch=monkeypatch)
        assert code == 0
        assert json.loads(out)["status"] == "not_admissible"

    def test_reads_stdin_writes_file(self, capsys, monkeypatch, tmp_path):
        out_path = tmp_path / "out.json"
        code, _, _ = run(
            capsys,
            ["decide", "-o", str(out_path)],
            stdin=DECIDE_BOUNDARY,
            monkeypatch=monkeypatch,
        )
        assert code == 0
        assert json.loads(out_path.read_text())["status"] == "admissible_boundary"


class TestClassify:
    def test_interior(self, capsys, monkeypatch):
        doc = {"k": [0, 1, 2], "c": [2.0, 3.0, 5.0]}
        code, out, _ = run(capsys, ["classify"], stdin=doc, monkeypatch=monkeypatch)
        assert code == 0
        parsed = json.loads(out)
        assert parsed["kind"] == "interior"
        assert len(parsed["witness"]["atoms"]) == 2

    def test_exterior_with_oracle(self, capsys, monkeypatch):
        doc = {"k": [0, 1, 2], "c": [1.0, 2.0, 3.0]}
        code, out, _ = run(
            capsys, ["classify", "--oracle"], stdin=doc, monkeypatch=monkeypatch
        )
        assert code == 0
        parsed = json.loads(out)
        assert parsed["kind"] == "exterior"
        assert parsed["oracle"]["feasible"] is False


class TestRepresent:
    def test_principal(self, capsys, monkeypatch):
        doc = {"k": [0, 1, 2], "c": [2.0, 3.0, 5.0]}
        code, out, _ = run(
            capsys, ["represent", "--principal"], stdin=doc, monkeypatch=monkeypatch
        )
        assert code == 0
        parsed = json.loads(out)
        assert parsed["index"] == 1.5
        assert parsed["atoms"][0]["node"] == 0.0

    def test_canonical_requires_root(self, capsys, monkeypatch):
        doc = {"k": [0, 1, 2], "c": [2.0, 3.0, 5.0]}
        code, _, err = run(
            capsys, ["represent", "--canonical"], stdin=doc, monkeypatch=monkeypatch
        )
        assert code == 2
        assert "root" in err

    def test_canonical_worked_example(self, capsys, monkeypatch):
        doc = {"k": [0, 1, 2], "c": [2.0, 3.0, 5.0]}
        code, out, _ = run(
            capsys,
            ["represent", "--canonical", "--root", "1.0"],
            stdin=doc,
            monkeypatch=monkeypatch,
        )
        assert code == 0
        atoms = json.loads(out)["atoms"]
        assert atoms[0]["node"] == 1.0
        assert atoms[1]["node"] == pytest.approx(2.0, abs=1e-8)


class TestInvalidInput:
    def test_decreasing_exponents_exit_2(self, capsys, monkeypatch):
        doc = {"k": [2, 1], "c": [1.0, 1.0]}
        code, _, err = run(capsys, ["classify"], stdin=doc, monkeypatch=monkeypatch)
        assert code == 2
        assert "error" in err

    def test_missing_field_exit_2(self, capsys, monkeypatch):
        code, _, _ = run(
            capsys, ["decide"], stdin={"family": "mm"}, monkeypatch=monkeypatch
        )
        assert code == 2

    def test_malformed_json_exit_2(self, capsys, monkeypatch):
        import io
        import sys

        monkeypatch.setattr(sys, "stdin", io.StringIO("not json"))
        code = main(["classify"])
        capsys.readouterr()
        assert code == 2

    def test_bad_tol_exit_2(self, capsys, monkeypatch):
        code, _, _ = run(
            capsys,
            ["classify", "--tol", "-1"],
            stdin={"k": [0], "c": [1.0]},
            monkeypatch=monkeypatch,
        )
        assert code == 2


class TestDeterminism:
    def test_byte_identical_output(self, capsys, monkeypatch, tmp_path):
        path = tmp_path / "in.json"
        path.write_text(json.dumps(DECIDE_BOUNDARY))
        outputs = []
        for _ in range(2):
            code, out, _ = run(capsys, ["decide", "-i", str(path)])
            assert code == 0
            outputs.append(out)
        assert outputs[0] == outputs[1]


class TestOtherCommands:
    def test_random_is_seed_deterministic(self, capsys):
        code, out1, _ = run(capsys, ["random", "--seed", "5", "--order", "3"])
        assert code == 0
        code, out2, _ = run(capsys, ["random", "--seed", "5", "--order", "3"])
        assert out1 == out2
        doc = json.loads(out1)
        assert doc["family"] == "mm"
        assert len(doc["knots"]) == 2

    def test_spline_norms(self, capsys, monkeypatch):
        doc = {
            "spline": {
                "family": "mm",
                "r": 2,
                "knots": [1.0],
                "weights": [2.0],
                "constant": 0.0,
            },
            "k": [0, 1, 2],
        }
        code, out, _ = run(
            capsys, ["spline-norms"], stdin=doc, monkeypatch=monkeypatch
        )
        assert code == 0
        assert json.loads(out)["M"] == pytest.approx([1.0, 2.0, 2.0])

    def test_sweep_csv(self, capsys, monkeypatch):
        code, out, _ = run(
            capsys,
            [
                "sweep", "--component", "1",
                "--from", "0.5", "--to", "1.5", "--steps", "3",
            ],
            stdin=DECIDE_BOUNDARY,
            monkeypatch=monkeypatch,
        )
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "M,status"
        statuses = [ln.split(",")[1] for ln in lines[1:]]
        assert statuses == [
            "not_admissible", "admissible_boundary", "admissible_interior",
        ]

    def test_sweep_component_out_of_range(self, capsys, monkeypatch):
        code, _, _ = run(
            capsys,
            ["sweep", "--component", "9", "--from", "0", "--to", "1", "--steps", "2"],
            stdin=DECIDE_BOUNDARY,
            monkeypatch=monkeypatch,
        )
        assert code == 2

    def test_verify_small_suite(self, capsys):
        code, out, _ = run(
            capsys, ["verify", "--suite", "correspondence", "--cases", "5"]
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["ok"] is True
        assert doc["passed"] == 5
