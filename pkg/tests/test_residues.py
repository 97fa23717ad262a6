"""Tests for shell traces, pole fits and residue functionals."""

from __future__ import annotations

import csv

import numpy as np
import pytest
from scipy.special import zeta

from app.core.ncpoly import ALPHA, ALPHA_STAR, BETA, BETA_STAR, NCPoly
from app.core.representation import Truncation, poly_operator, word_operator
from app.core.residues import (
    F_k,
    FitModel,
    H_k,
    ResidueError,
    ShellSeries,
    convergent_trace,
    disk_functionals,
    dlsv_hurwitz_trace,
    exact_identity_residues,
    fit_poles,
    phi0_reg,
    residue,
    residue_report,
    shell_traces,
    tau0_pi,
    tau0_pi_minus,
    write_shell_csv,
)


def _series(fn, n=40, flags=()):
    x = np.arange(1, n + 1, dtype=float)
    return ShellSeries(x, fn(x).astype(complex), frozenset(flags), "synthetic")


@pytest.fixture
def identity_op():
    return poly_operator(NCPoly.one(), 0.0, Truncation(30, 2))


class TestShellTraces:

    def test_identity_shells(self, identity_op):
        s = shell_traces(identity_op)
        assert np.allclose(s.t.real, (s.x + 1) ** 2)
        assert not s.boundary_flags

    def test_reach_flags_top_shells(self):
        s = shell_traces(word_operator(("a*", "a"), 0.0, Truncation(12, 2)))
        assert s.boundary_flags == frozenset({11.0, 12.0})
        x, t = s.valid()
        assert np.allclose(t.real, x**2)

    def test_csv_export(self, tmp_path):
        s = _series(lambda x: x**2, n=5, flags=(5.0,))
        path = write_shell_csv(s, tmp_path / "sub" / "shells.csv")
        rows = list(csv.reader(path.open(encoding="utf-8")))
        assert rows[0] == ["m", "re", "im", "boundary"]
        assert len(rows) == 6
        assert rows[-1][-1] == "True"


class TestFitPoles:

    def test_recovers_polynomial_and_inverse_powers(self):
        fit = fit_poles(_series(lambda x: 3 * x**2 + 2 * x + 1 + 5 / x**2))
        assert abs(fit.c2 - 3) < 1e-6
        assert abs(fit.c1 - 2) < 1e-6
        assert abs(fit.c0 - 1) < 1e-6
        assert abs(fit.c_neg1) < 1e-5
        assert abs(fit.c_neg2 - 5) < 1e-3

    def test_flagged_shells_ignored(self):
        def poisoned(x):
            return np.where(x > 38, 1e6, x**2)
        fit = fit_poles(_series(poisoned, flags=(39.0, 40.0)))
        assert abs(fit.c2 - 1) < 1e-6
        assert fit.window[1] == 38.0

    def test_geometric_term(self):
        fit = fit_poles(_series(lambda x: x**2 + 0.5**x), FitModel(geometric=True))
        assert abs(fit.c2 - 1) < 1e-4
        assert fit.geometric is not None

    def test_too_few_shells(self):
        with pytest.raises(ResidueError):
            fit_poles(_series(lambda x: x, n=6))

    def test_everything_flagged(self):
        s = _series(lambda x: x, n=3, flags=(1.0, 2.0, 3.0))
        with pytest.raises(ResidueError, match="no unflagged"):
            fit_poles(s)


class TestResidues:

    def test_identity_residues(self, identity_op):
        exact = exact_identity_residues()
        for y in (-3, -2, -1):
            assert abs(residue(identity_op, y) - exact[-y]) < 1e-6

    def test_tau_convention_halves(self, identity_op):
        assert abs(residue(identity_op, -3, convention="tau") - 0.5) < 1e-6

    def test_higher_order_needs_tau(self, identity_op):
        with pytest.raises(ValueError):
            residue(identity_op, -3, k=1, convention="wres")
        with pytest.raises(ValueError):
            residue(identity_op, -3, k=3, convention="tau")

    def test_unknown_convention(self, identity_op):
        with pytest.raises(ValueError):
            residue(identity_op, -3, convention="dixmier")

    def test_alpha_star_alpha_leading_term(self):
        op = word_operator(("a*", "a"), 0.5, Truncation(30, 2))
        assert abs(residue(op, -3, model=FitModel(geometric=True)) - 1) < 1e-3

    def test_report_shape(self, identity_op):
        rep = residue_report(identity_op)
        data = rep.to_json()
        assert len(data["wres"]) == 3
        assert abs(rep.wres[-3] - 1) < 1e-6
        assert abs(rep.tau[(0, -3)] - 0.5) < 1e-6


class TestTraces:

    def test_regularized_identity(self, identity_op):
        # zeta(-2) + 2 zeta(-1) + zeta(0)
        assert abs(phi0_reg(identity_op) - (-2.0 / 3.0)) < 1e-6

    def test_convergent_identity(self, identity_op):
        expected = zeta(2) + 2 * zeta(3) + zeta(4)
        assert abs(convergent_trace(identity_op, 4.0) - expected) < 1e-6

    def test_trace_identity_for_projection(self):
        e = poly_operator(BETA * BETA_STAR, 0.0, Truncation(40, 2))
        expected = 2 * zeta(2) + zeta(3)
        assert abs(convergent_trace(e, 3.0) - expected) < 1e-6

    def test_divergent_sum_rejected(self, identity_op):
        with pytest.raises(ResidueError, match="diverges"):
            convergent_trace(identity_op, 2.5)

    def test_hurwitz_sectors(self):
        assert abs(dlsv_hurwitz_trace(4.0) - 2 * dlsv_hurwitz_trace(4.0, "up")) < 1e-14


class TestSpecialSeries:

    def test_F1_closed_form(self):
        q = 0.5
        assert abs(F_k(1, q) - (-q * q / (1 - q * q))) < 1e-14

    def test_F2_against_direct_sum(self):
        q = 0.3
        direct = sum((1 - q ** (2 * (1 + x))) * (1 - q ** (2 * (2 + x))) - 1 for x in range(200))
        assert abs(F_k(2, q) - direct) < 1e-14

    def test_F_vanishes_at_q_zero(self):
        assert F_k(3, 0.0) == 0.0
        with pytest.raises(ValueError):
            F_k(1, 1.0)

    def test_tau0_orderings(self):
        q = 0.5
        assert abs(tau0_pi_minus(ALPHA_STAR * ALPHA, q) - F_k(1, q)) < 1e-10
        assert abs(tau0_pi_minus(ALPHA * ALPHA_STAR, q) - (1 + F_k(1, q))) < 1e-10

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_tau0_offset(self, k):
        q = 0.5
        a_k, a_star_k = NCPoly.word(*("a",) * k), NCPoly.word(*("a*",) * k)
        assert abs(tau0_pi_minus(a_star_k * a_k, q) - (1 + F_k(k, q) - k)) < 1e-10
        assert abs(tau0_pi_minus(a_k * a_star_k, q) - (1 + F_k(k, q))) < 1e-10

    def test_tau0_sign(self):
        assert abs(tau0_pi(BETA, 0.5, sign=1) - 2) < 1e-10
        assert abs(tau0_pi(BETA, 0.5, sign=-1) + 2) < 1e-10

    def test_disk_functionals(self):
        assert disk_functionals((), 0.5, 1) == (1, 1)
        tau1, tau0 = disk_functionals(("b*", "b"), 0.5, -1)
        assert tau1 == 0
        assert abs(tau0 - 4.0 / 3.0) < 1e-10

    def test_tau0_at_q_zero(self):
        assert abs(tau0_pi_minus(ALPHA_STAR * ALPHA, 0.0)) < 1e-14
        assert abs(tau0_pi_minus(ALPHA * ALPHA_STAR, 0.0) - 1) < 1e-14
        assert abs(tau0_pi_minus(BETA, 0.0) - (-1)) < 1e-14

    def test_H1_at_q_zero(self):
        h = H_k(1, 0.0, m_max=30)
        assert abs(h.explicit - 2.0 / 3.0) < 1e-12
        assert abs(h.regularized - (-2.0 / 3.0)) < 1e-6

    def test_trivial_mode(self):
        h = H_k(0, 0.5)
        assert h.regularized == 0
        assert h.explicit is None
