"""Tests for the Chern-Simons action, its closed form and the index pairing."""

from __future__ import annotations

import math

import numpy as np
import pytest

from app.core.action import (
    ActionBreakdown,
    GaugePoly,
    action,
    action_closed_form,
    classical_prefactor,
    closed_phi1,
    closed_phi3,
    fundamental_unitary,
    gauge_fixing_eval,
    gauge_shift_check,
    index_pairing,
    mode_weight,
    phi1_weights,
    reduction_check,
    toeplitz_index,
)
from app.core.cocycles import INDEX_NORMALIZATION, phi1, phi3
from app.core.critical import StationaryProblem, action_value
from app.core.forms import FormError, MatForm, cs_form, random_form, unitarity_residual
from app.core.ncpoly import ALPHA, ALPHA_STAR, BETA
from app.core.representation import Truncation
from app.core.symbols import ActionCoefficients, FourierPoly, decompose, extract_coeffs, lifted_form


def _two_alpha_star_d_alpha() -> ActionCoefficients:
    return extract_coeffs(MatForm.elementary(2 * ALPHA_STAR, ALPHA))


class TestPrefactor:

    def test_classical_normalisation(self):
        assert abs(classical_prefactor(1) - 1 / (4 * math.pi)) < 1e-15
        assert abs(classical_prefactor(3) - 3 / (4 * math.pi)) < 1e-15

    def test_total(self):
        br = ActionBreakdown(phi3_part=1.0, phi1_part=0.5, k_level=2)
        assert abs(br.total - (12 * math.pi - 2 * math.pi)) < 1e-12


class TestClosedForm:

    def test_quadratic_and_cubic_parts(self):
        re, im = _two_alpha_star_d_alpha().arrays()
        assert abs(closed_phi3(re, im, cubic=0.0) - (-1.0 / 3.0)) < 1e-14
        assert abs(closed_phi3(re, im) - (-1.0 / 3.0 + 4.0 / 9.0)) < 1e-14

    def test_matches_direct_phi3_on_lifted_forms(self):
        A = lifted_form({(-1, 1): 1.0}).hermitize()
        re, im = extract_coeffs(decompose(A)[0]).arrays()
        direct = phi3(cs_form(A))
        assert abs(direct - (-1.0 / 36.0)) < 1e-14
        assert abs(closed_phi3(re, im) - direct) < 1e-14

    def test_phi1_weights_at_q_zero(self):
        w_re, w_im = phi1_weights(3, 0.0)
        assert w_re.shape == w_im.shape == (7,)
        assert np.array_equal(w_re, w_im)
        # phi1(alpha*^k d alpha^k) = k^3 / 4 - k at q = 0
        expected = [k**3 / 4 - k for k in range(-3, 4)]
        assert np.allclose(w_re, expected, atol=1e-12)

    @pytest.mark.parametrize("q", [0.3, 0.5])
    def test_first_mode_weight_is_q_independent(self, q):
        assert abs(mode_weight(1, q) + 0.75) < 1e-9
        assert abs(mode_weight(-1, q) - 0.75) < 1e-9
        assert mode_weight(0, q) == 0

    def test_printed_weights_kept(self):
        w_re, w_im = phi1_weights(2, 0.0, "printed")
        assert np.all(w_re == 0)
        assert w_im[2] == 0

    def test_unknown_option(self):
        with pytest.raises(ValueError):
            phi1_weights(1, 0.0, "printed", chi_constant="other")
        with pytest.raises(ValueError):
            phi1_weights(1, 0.0, "fitted")

    @pytest.mark.parametrize("q", [0.0, 0.5])
    def test_closed_phi1_matches_direct(self, q):
        A = lifted_form({(-1, 1): 1.0, (-2, 2): 0.5 - 1j, (1, -1): 2j, (-1, 2): 1.0}).hermitize()
        A1 = decompose(A)[0]
        c = extract_coeffs(A1)
        re, im = c.arrays()
        assert abs(closed_phi1(re, im, *phi1_weights(c.K, q)) - phi1(A1, q)) < 1e-9

    def test_closed_form_matches_action(self):
        A = lifted_form({(-1, 1): 1.0, (-2, 2): 0.5, (-1, 2): 1.0 - 1j}).hermitize()
        br = action(A, 0.5, k_level=2)
        closed = action_closed_form(extract_coeffs(decompose(A)[0]), 0.5, k_level=2)
        assert abs(closed.total - br.split["S_A1"]) < 1e-9

    def test_optimizer_action_matches_closed_form(self):
        c = extract_coeffs(decompose(lifted_form({(-1, 1): 1.0, (0, 1): 1j}).hermitize())[0], K=1)
        p = StationaryProblem.build(0.0, k_level=1, K=1)
        x = p.pack(*c.arrays())
        assert abs(action_value(p, x) - action_closed_form(c, 0.0).total) < 1e-12

    def test_breakdown_routes(self):
        br = action_closed_form(_two_alpha_star_d_alpha(), 0.0)
        assert br.routes == {"phi3": "closed-form", "phi1": "closed-form/exact"}
        # closed_phi3 = 1/9, rescaled by INDEX_NORMALIZATION
        assert abs(br.phi3_part + 1.0 / 18.0) < 1e-14


class TestAction:

    def test_needs_hermitian_one_form(self):
        with pytest.raises(FormError):
            action(MatForm.elementary(ALPHA_STAR, ALPHA), 0.0)
        with pytest.raises(FormError):
            action(MatForm.scalar(ALPHA), 0.0)

    def test_phi3_part_on_lifted_form(self):
        A = lifted_form({(-1, 1): 1.0}).hermitize()
        br = action(A, 0.0)
        assert abs(br.phi3_part - 1.0 / 72.0) < 1e-14
        assert abs(br.phi1_part - INDEX_NORMALIZATION * (-0.75)) < 1e-9
        assert set(br.split) == {"S_A1", "phi1_A2", "total"}

    def test_zero_form(self):
        br = action(MatForm.zero(1, 1), 0.0, split=False)
        assert br.total == 0


class TestIndex:

    def test_toeplitz(self):
        assert toeplitz_index(FourierPoly.u(1)) == -1
        assert toeplitz_index(FourierPoly.u(-2)) == 2
        assert toeplitz_index(FourierPoly.const(2.0)) == 0

    @pytest.mark.parametrize("q", [0.0, 0.3])
    def test_fundamental_unitary(self, q):
        assert unitarity_residual(fundamental_unitary(q), q, Truncation(10, 4)) < 1e-12

    def test_numeric_index(self):
        r = index_pairing(fundamental_unitary(0.2), 0.2, Truncation(16, 4), cocycle=False)
        assert r.numeric_index == -1
        assert r.kernel_dims[1] - r.kernel_dims[0] == 1

    def test_cocycle_pairing_matches_index(self):
        r = index_pairing(fundamental_unitary(0.2), 0.2, Truncation(16, 4))
        assert abs(r.phi1 - 2) < 1e-8
        assert abs(r.phi3) < 1e-12
        assert r.numeric_index == -1
        assert abs(r.normalized - r.numeric_index) < 0.05

    def test_normalization_shared_with_action(self):
        r = index_pairing(fundamental_unitary(0.2), 0.2, Truncation(16, 4))
        assert r.normalized == INDEX_NORMALIZATION * r.cocycle_value.real

    def test_non_unitary_rejected(self):
        with pytest.raises(FormError, match="not unitary"):
            index_pairing(MatForm.scalar(ALPHA), 0.5, Truncation(8, 4))

    def test_degree_checked(self):
        with pytest.raises(FormError):
            index_pairing(MatForm.elementary(ALPHA, BETA), 0.5, Truncation(8, 4))


class TestGaugeShift:

    def test_pure_gauge(self):
        U = fundamental_unitary(0.2)
        rep = gauge_shift_check(MatForm.zero(2, 1), U, 0.2, 1, Truncation(12, 4), index=-1)
        assert abs(rep.delta_action + 2 * math.pi) < 1e-7
        assert rep.relative < 1e-7

    def test_small_hermitian_forms(self):
        rng = np.random.default_rng(0)
        U = fundamental_unitary(0.2)
        for _ in range(3):
            A = (random_form(rng, 1, 2, n_terms=2, max_len=1) * 0.05).hermitize()
            rep = gauge_shift_check(A, U, 0.2, 2, Truncation(12, 4), index=-1)
            assert rep.expected == -4 * math.pi
            assert rep.relative <= 0.02


class TestGaugeFixing:

    def test_negative_variable_rejected(self):
        with pytest.raises(ValueError):
            GaugePoly({(-1,): 1.0})

    def test_linear_gauge_poly(self):
        h = GaugePoly({(0,): 1.0})
        A = MatForm.elementary(ALPHA_STAR, ALPHA)
        # alpha* delta(alpha) = alpha* a+ - alpha* a-
        out = gauge_fixing_eval(h, A)
        assert out.coeff(("a-*", "a-")) == -1
        assert out.coeff(("a+*", "a+")) == 1

    def test_reduction_is_exact(self):
        h = GaugePoly({(0,): 1.0, (0, 1): 2.0})
        A = MatForm.elementary(ALPHA_STAR, ALPHA) + MatForm.elementary(BETA, ALPHA)
        rep = reduction_check(h, A)
        assert rep.exact
        assert abs(rep.full - rep.reduced) < 1e-14

    def test_scalar_forms_only(self):
        with pytest.raises(FormError):
            reduction_check(GaugePoly({(0,): 1.0}), MatForm.elementary(ALPHA, ALPHA_STAR, N=2))
