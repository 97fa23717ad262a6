"""Tests for circle symbols, gradings and coefficient extraction."""

from __future__ import annotations

import numpy as np
import pytest

from app.core.forms import FormError, MatForm
from app.core.ncpoly import ALPHA, ALPHA_STAR, BETA, BETA_STAR, NCPoly
from app.core.symbols import (
    ActionCoefficients,
    FourierPoly,
    canonical_q0,
    decompose,
    degree0,
    del_derivative,
    delta,
    extract_coeffs,
    graded,
    lift,
    lifted_form,
    phi0_explicit,
    rho_q0,
    sigma_q,
    symbol_degree,
)


class TestFourierPoly:

    def test_derivative(self):
        assert FourierPoly.u(2).derivative() == FourierPoly({2: 2j})
        assert FourierPoly.u(-1).derivative(2) == FourierPoly({-1: -1})

    def test_star_and_mean(self):
        f = FourierPoly({1: 1j, 0: 3})
        assert f.star() == FourierPoly({-1: -1j, 0: 3})
        assert f.mean() == 3

    def test_product_adds_degrees(self):
        assert FourierPoly.u(2) * FourierPoly.u(-3) == FourierPoly.u(-1)

    def test_evaluation(self):
        f = FourierPoly.u(1) + FourierPoly.u(-1)
        assert abs(f(0.0) - 2) < 1e-14
        assert np.allclose(f(np.array([0.0, np.pi])), [2, -2])


class TestSymbolMap:

    def test_letters(self):
        assert sigma_q(ALPHA) == FourierPoly.u(1)
        assert sigma_q(ALPHA_STAR) == FourierPoly.u(-1)
        assert not sigma_q(BETA)
        assert not sigma_q(NCPoly.word("a+"))

    def test_multiplicative(self):
        assert sigma_q(ALPHA_STAR * ALPHA).mean() == 1
        assert sigma_q(ALPHA * ALPHA * BETA_STAR) == FourierPoly()

    def test_symbol_degree(self):
        assert symbol_degree(("a", "a", "a*")) == 1
        assert symbol_degree(("a-", "a-*")) == 0
        assert symbol_degree(("a", "b")) is None

    def test_lift(self):
        f = FourierPoly({2: 3, -1: 1})
        assert lift(f) == 3 * ALPHA * ALPHA + ALPHA_STAR
        assert sigma_q(lift(f)) == f


class TestGradings:

    def test_delta_scales_by_shell_step(self):
        assert delta(ALPHA) == NCPoly.word("a+") - NCPoly.word("a-")

    def test_gamma_degree_zero_part(self):
        d0 = degree0(ALPHA_STAR * ALPHA)
        assert d0 == NCPoly.word("a+*", "a+") + NCPoly.word("a-*", "a-")

    def test_del_degree_zero_part(self):
        x = ALPHA_STAR * ALPHA + ALPHA
        assert degree0(x, "del") == ALPHA_STAR * ALPHA

    def test_unknown_grading(self):
        with pytest.raises(ValueError):
            degree0(ALPHA, "theta")

    def test_del_derivative(self):
        assert del_derivative(ALPHA + BETA) == BETA - ALPHA

    def test_graded_word(self):
        g = graded(("a-", "b+"))
        assert (g.gamma_degree, g.del_degree) == (0, 0)
        assert graded(("a",)).gamma_degree is None
        assert g.adjoint().word == ("b+*", "a-*")


class TestQZeroCanonicalForm:

    def test_alpha_star_alpha(self):
        assert canonical_q0(ALPHA_STAR * ALPHA) == {(0, None, 0): 1, (0, 0, 0): -1}

    def test_edge_projection(self):
        assert canonical_q0(BETA * BETA_STAR) == {(0, 0, 0): 1}

    def test_split_raising_letters_vanish(self):
        assert canonical_q0(NCPoly.word("a+", "b")) == {}

    def test_phi0_explicit(self):
        assert abs(phi0_explicit(BETA * BETA_STAR) - 2.0 / 3.0) < 1e-15
        assert abs(phi0_explicit(ALPHA_STAR * ALPHA) + 2.0 / 3.0) < 1e-15
        assert phi0_explicit(NCPoly.one()) == 0
        assert abs(rho_q0(1) + 4.0 / 3.0) < 1e-15


class TestCoefficients:

    def test_cutoff_enforced(self):
        with pytest.raises(ValueError):
            ActionCoefficients(1, {(2, 0): 1.0})

    def test_arrays_round_trip(self):
        c = ActionCoefficients(1, {(1, -1): 2.0}, {(0, 1): 1j})
        re, im = c.arrays()
        assert re[2, 0] == 2.0
        assert ActionCoefficients.from_arrays(re, im) == c

    def test_from_arrays_needs_odd_square(self):
        with pytest.raises(ValueError):
            ActionCoefficients.from_arrays(np.zeros((2, 2)), np.zeros((2, 2)))

    def test_decompose_splits_off_beta_terms(self):
        A = MatForm.elementary(ALPHA_STAR, ALPHA) + MatForm.elementary(BETA, ALPHA)
        A1, A2 = decompose(A)
        assert A1 == MatForm.elementary(ALPHA_STAR, ALPHA)
        assert A2 == MatForm.elementary(BETA, ALPHA)

    def test_decompose_needs_one_form(self):
        with pytest.raises(FormError):
            decompose(MatForm.scalar(ALPHA))

    def test_extract_alpha_star_d_alpha(self):
        c = extract_coeffs(MatForm.elementary(2 * ALPHA_STAR, ALPHA))
        assert c.K == 1
        assert c.re == {(1, 1): 1, (-1, -1): 1}
        assert c.im == {(1, 1): 1, (-1, -1): -1}

    def test_extract_respects_cutoff(self):
        A1 = lifted_form({(2, 1): 1.0})
        with pytest.raises(FormError):
            extract_coeffs(A1, K=1)

    def test_extract_rejects_non_alpha_words(self):
        with pytest.raises(FormError):
            extract_coeffs(MatForm.elementary(BETA, ALPHA))

    def test_json_round_trip(self):
        c = ActionCoefficients(1, {(1, 1): 1 + 1j}, {(-1, 0): 2})
        assert ActionCoefficients.from_json(c.to_json()) == c
