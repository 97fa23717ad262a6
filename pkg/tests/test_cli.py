"""Tests for the command line entry point."""

from __future__ import annotations

import csv
import json
from unittest.mock import patch

from app.cli import main
from app.core.checks import CheckResult, SelftestReport


def _report(passed: bool) -> SelftestReport:
    return SelftestReport([CheckResult("relations", passed)], [], {"q": 0.5})


class TestSelftest:

    def test_exit_code_follows_report(self, capsys):
        with patch("app.cli.run_selftest", return_value=_report(True)):
            assert main(["selftest", "--quick"]) == 0
        assert json.loads(capsys.readouterr().out)["passed"] is True

        with patch("app.cli.run_selftest", return_value=_report(False)):
            assert main(["selftest"]) == 1

    def test_only_is_forwarded(self):
        with patch("app.cli.run_selftest", return_value=_report(True)) as run:
            main(["selftest", "--quick", "--only", "relations", "index"])
        assert run.call_args.kwargs["only"] == ("relations", "index")
        assert run.call_args.kwargs["quick"] is True

    def test_quick_selftest_runs_for_real(self, capsys):
        only = ["relations", "series", "reduction", "closed_form", "phi1_routes", "index", "gauge_shift"]
        code = main(["selftest", "--quick", "--q", "0.5", "--m-max", "40", "--only", *only])
        out = json.loads(capsys.readouterr().out)
        assert code == 0
        names = [c["name"] for c in out["checks"]]
        assert names == ["relations", "closed_form", "F_H_series", "phi1_routes", "index", "gauge_shift", "reduction"]
        assert out["passed"] is True


class TestInputErrors:

    def test_bad_q(self, capsys):
        assert main(["relations", "--q", "1.5"]) == 2
        assert "error" in capsys.readouterr().err

    def test_bad_expression(self, capsys):
        assert main(["residues", "((a"]) == 2
        assert "column 3" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["action", str(tmp_path / "absent.json")]) == 2


class TestCommands:

    def test_relations(self, capsys):
        assert main(["relations", "--q", "0.3", "--m-max", "10", "--guard", "2"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert max(out["residuals"].values()) < 1e-12

    def test_residues_with_csv(self, capsys, tmp_path):
        path = tmp_path / "shells.csv"
        code = main(["residues", "a* a", "--q", "0", "--m-max", "24", "--guard", "2", "--csv", str(path)])
        assert code == 0
        out = json.loads(capsys.readouterr().out)
        assert out["symbol_mean"] == [1.0, 0.0]
        # tr(alpha* alpha) on shell m is m^2 at q = 0
        wres = {y: complex(re, im) for y, re, im in out["wres"]}
        assert abs(wres[-3] - 1) < 1e-8
        rows = list(csv.reader(path.open(encoding="utf-8")))
        assert rows[0] == ["m", "re", "im", "boundary"]
        assert len(rows) == 25

    def test_action_from_coefficients(self, capsys, tmp_path):
        path = tmp_path / "coeffs.json"
        path.write_text(json.dumps({"K": 1, "re": [[1, 1, 1, 0], [-1, -1, 1, 0]], "im": [[1, 1, 1, 0], [-1, -1, -1, 0]]}))
        out_path = tmp_path / "out" / "action.json"
        assert main(["action", str(path), "--q", "0", "--m-max", "40", "--out", str(out_path)]) == 0
        out = json.loads(capsys.readouterr().out)
        assert abs(out["phi3_part"][0] + 1.0 / 18.0) < 1e-12
        assert json.loads(out_path.read_text()) == out

    def test_dlsv_residues(self, capsys):
        assert main(["dlsv-residues", "--j-max", "20"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert abs(out["all"][0] - 2) < 1e-6
