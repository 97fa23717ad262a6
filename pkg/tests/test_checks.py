"""Tests for the verification suite runner and selected checks."""

from __future__ import annotations

import math
from unittest.mock import patch

import pytest

from app.core import checks
from app.core.checks import CheckResult, LedgerEntry, SuiteSizes, dlsv_report, run_selftest
from app.core.config import Config


@pytest.fixture
def cfg():
    return Config(q=0.0, m_max=40, guard=8, seed=0)


def check_alpha(cfg, sizes):
    return CheckResult("alpha", True, {"m_max": sizes.relations})


def check_boom(cfg, sizes):
    raise RuntimeError("no shells")


def ledger_note(cfg, sizes):
    return LedgerEntry("note", "a claim", {"x": 1}, "agree")


class TestRunner:

    def test_failing_check_is_reported(self, cfg):
        with patch.object(checks, "ALL_CHECKS", (check_alpha, check_boom)), patch.object(checks, "ALL_LEDGER", ()):
            report = run_selftest(cfg, quick=True)
        assert not report.passed
        by_name = {c.name: c for c in report.checks}
        assert by_name["alpha"].passed
        assert by_name["alpha"].value == {"m_max": 40}
        assert by_name["boom"].detail == "RuntimeError: no shells"

    def test_results_keep_declared_order(self, cfg):
        with patch.object(checks, "ALL_CHECKS", (check_boom, check_alpha)), patch.object(checks, "ALL_LEDGER", ()):
            report = run_selftest(cfg, quick=True)
        assert [c.name for c in report.checks] == ["boom", "alpha"]

    def test_only_skips_ledger(self, cfg):
        with patch.object(checks, "ALL_CHECKS", (check_alpha, check_boom)), patch.object(checks, "ALL_LEDGER", (ledger_note,)):
            report = run_selftest(cfg, quick=True, only=("alpha",))
        assert report.passed
        assert report.ledger == []
        assert len(report.checks) == 1

    def test_ledger_included_without_only(self, cfg):
        with patch.object(checks, "ALL_CHECKS", (check_alpha,)), patch.object(checks, "ALL_LEDGER", (ledger_note,)):
            report = run_selftest(cfg, quick=True)
        assert [e.topic for e in report.ledger] == ["note"]
        assert report.to_json()["passed"] is True

    def test_unknown_check(self, cfg):
        with pytest.raises(ValueError, match="unknown checks"):
            run_selftest(cfg, quick=True, only=("nonexistent",))

    def test_acceptance_sizes(self):
        sizes = SuiteSizes()
        assert sizes.index == (40, 60, 80)
        assert SuiteSizes.quick(10).dlsv_j2 == 20


class TestChecks:

    def test_trace_identity(self, cfg):
        result = checks.check_trace_identity(cfg, SuiteSizes.quick(40))
        assert result.passed
        assert abs(result.value["oracle"] - 4.4915) < 1e-3

    def test_dlsv(self, cfg):
        assert checks.check_dlsv(cfg, SuiteSizes.quick(20)).passed

    def test_closed_form(self, cfg):
        assert checks.check_closed_form(cfg, SuiteSizes.quick(20)).passed

    def test_dlsv_report(self):
        rep = dlsv_report(20)
        assert abs(complex(*rep["all"]) - 2) < 1e-6
        assert abs(complex(*rep["up"]) - 1) < 1e-6
        assert math.isfinite(rep["hurwitz_s4"])

    def test_dlsv_report_needs_enough_shells(self):
        with pytest.raises(ValueError):
            dlsv_report(10)

    def test_relations(self, cfg):
        assert checks.check_relations(cfg, SuiteSizes.quick(40)).passed

    def test_symbol_residues(self, cfg):
        result = checks.check_symbol_residues(cfg, SuiteSizes.quick(60))
        assert result.passed, result.detail

    def test_dimension_spectrum(self, cfg):
        assert checks.check_dimension_spectrum(cfg, SuiteSizes.quick(60)).passed

    def test_phi3_routes(self, cfg):
        assert checks.check_phi3_routes(cfg, SuiteSizes.quick(40)).passed

    def test_phi1_routes(self, cfg):
        result = checks.check_phi1_routes(cfg, SuiteSizes.quick(40))
        assert result.passed, result.detail
        assert result.value["closed_value_error"] < 1e-9

    def test_series(self, cfg):
        assert checks.check_series(cfg, SuiteSizes.quick(40)).passed

    def test_index(self, cfg):
        result = checks.check_index(cfg, SuiteSizes.quick(24))
        assert result.passed
        assert result.value["runs"][0]["normalized"] == pytest.approx(-1, abs=0.05)

    def test_gauge_shift(self, cfg):
        result = checks.check_gauge_shift(cfg, SuiteSizes.quick(24))
        assert result.passed, result.value
        assert result.value["index"] == -1

    def test_optimizer(self, cfg):
        assert checks.check_optimizer(cfg, SuiteSizes.quick(20)).passed

    def test_reduction(self, cfg):
        assert checks.check_reduction(cfg, SuiteSizes.quick(20)).passed


class TestLedger:

    def test_tau0_offset(self, cfg):
        entry = checks.ledger_tau0_offset(cfg, SuiteSizes.quick(20))
        assert entry.observed["max_error"] < 1e-10
        assert set(entry.observed) >= {"k=1", "k=2", "k=3"}

    def test_index(self, cfg):
        entry = checks.ledger_index(cfg, SuiteSizes.quick(24))
        assert entry.observed["normalized"] == pytest.approx(entry.observed["numeric_index"], abs=0.05)
        assert entry.observed["index_normalization"] == -0.5

    def test_phi1_closed_weights(self, cfg):
        entry = checks.ledger_phi1_closed(cfg, SuiteSizes.quick(20))
        exact = [complex(*w) for w in entry.observed["q=0.0"]["exact"]]
        assert exact[4] == pytest.approx(-0.75)

    def test_phi0_reading(self, cfg):
        entry = checks.ledger_phi0(cfg, SuiteSizes.quick(30))
        assert "explicit phi0" in entry.adjudication
