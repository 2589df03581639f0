from __future__ import annotations

import json
import os

import pytest

from motivic.cli import main

from conftest import GOLDEN, SCENARIOS

ALL = sorted(SCENARIOS.glob("*.mot"))
# set MOTIVIC_UPDATE_GOLDEN=1 to rewrite the golden files after an intended output change
UPDATE = os.environ.get("MOTIVIC_UPDATE_GOLDEN") == "1"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def _golden(name: str, text: str):
    path = GOLDEN / name
    if UPDATE:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    assert path.exists(), f"missing golden file {path}; rerun with MOTIVIC_UPDATE_GOLDEN=1"
    assert text == path.read_text()


class TestGolden:
    @pytest.mark.parametrize("path", ALL, ids=lambda p: p.stem)
    def test_commutativity_report(self, capsys, path):
        code, out, _ = run(capsys, "check-commutativity", "--scenario", path, "--json", "--no-timing")
        assert code == 0
        _golden(f"{path.stem}.json", out)

    @pytest.mark.parametrize("path", ALL, ids=lambda p: p.stem)
    def test_normalize(self, capsys, path):
        code, out, _ = run(capsys, "normalize", "--scenario", path)
        assert code == 0
        _golden(f"{path.stem}.normalized.mot", out)

    @pytest.mark.parametrize("path", ALL, ids=lambda p: p.stem)
    def test_push_forward_output(self, capsys, path):
        code, out, _ = run(capsys, "push", "--scenario", path, "--no-timing")
        # embed pushes a function that is not integrable on its own
        assert code == (1 if path.stem == "embed" else 0)
        _golden(f"{path.stem}.push.txt", out)

    def test_sum_of_geometric_series(self, capsys):
        code, out, _ = run(capsys, "sum", "--scenario", SCENARIOS / "geo.mot")
        assert (code, out) == (0, "1/(1-L^-1)\n")


class TestDeterminism:
    @pytest.mark.parametrize("stem", ["geo", "ball_family", "extension_mixed"])
    def test_reports_are_byte_identical(self, capsys, stem):
        args = ("check-commutativity", "--scenario", SCENARIOS / f"{stem}.mot", "--no-timing", "--json")
        first = run(capsys, *args)[1]
        assert run(capsys, *args)[1] == first

    def test_timing_is_reported_unless_suppressed(self, capsys):
        path = SCENARIOS / "geo.mot"
        timed = json.loads(run(capsys, "check-commutativity", "--scenario", path, "--json")[1])
        quiet = json.loads(run(capsys, "check-commutativity", "--scenario", path, "--json", "--no-timing")[1])
        assert "timing" in timed and "timing" not in quiet


class TestCommands:
    def test_flags_from_the_command_line(self, capsys):
        code, out, _ = run(capsys, "check-commutativity", "--scenario", SCENARIOS / "square_root.mot",
                           "--q", "2", "--q", "3", "--prime", "5", "--level", "4", "--json", "--no-timing")
        assert code == 0
        report = json.loads(out)
        assert report["ok"] and {"scenario", "checks", "integrability"} <= set(report)

    def test_push_and_pull(self, capsys):
        code, out, _ = run(capsys, "push", "--scenario", SCENARIOS / "geo.mot", "--forget", "n")
        assert code == 0 and out.strip() == "1/(1-L^-1)"
        code, out, _ = run(capsys, "pull", "--scenario", SCENARIOS / "sum_map.mot")
        assert code == 0 and "L^" in out

    def test_axioms_and_oracle(self, capsys):
        assert run(capsys, "check-axioms", "--scenario", SCENARIOS / "sum_map.mot", "--no-timing")[0] == 0
        code, out, _ = run(capsys, "oracle", "--scenario", SCENARIOS / "geo.mot", "--json", "--no-timing")
        assert code == 0 and json.loads(out)["ok"]

    def test_not_integrable(self, capsys, tmp_path):
        path = tmp_path / "diverge.mot"
        path.write_text("scenario diverge\nspace P = point\nspace X = int(n) where [n >= 0]\n"
                        "map id : P -> P = {}\nfunction phi on P * X = L^n\n"
                        "roles W=P Wp=P X=X gamma=id phi=phi\n")
        code, out, _ = run(capsys, "oracle", "--scenario", path, "--json", "--no-timing")
        report = json.loads(out)
        assert code == 1
        assert report["integrability"]["phi"] is False and report["error"]
        code, out, _ = run(capsys, "sum", "--scenario", path, "--json")
        assert code == 1 and "error" in json.loads(out)


class TestInputErrors:
    def test_parse_error(self, capsys, tmp_path):
        path = tmp_path / "bad.mot"
        path.write_text("scenario bad\nspcae X = int(n)\n")
        code, _, err = run(capsys, "normalize", "--scenario", path)
        assert code == 2
        assert f"{path}:2:1:" in err and "expected one of" in err

    def test_validation_error(self, capsys, tmp_path):
        path = tmp_path / "arity.mot"
        path.write_text("scenario arity\nspace X = int(n)\nspace Y = int(a, b)\nmap g : X -> Y = { a := n }\n")
        code, _, err = run(capsys, "check-commutativity", "--scenario", path)
        assert code == 2 and "map g" in err

    def test_missing_file(self, capsys, tmp_path):
        assert run(capsys, "sum", "--scenario", tmp_path / "nope.mot")[0] == 2
