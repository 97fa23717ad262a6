"""Tests for matrix-valued universal differential forms."""

from __future__ import annotations

import numpy as np
import pytest

from app.core.forms import (
    FormError,
    MatForm,
    curvature,
    cs_form,
    gauge,
    random_form,
    represent,
)
from app.core.ncpoly import ALPHA, ALPHA_STAR, BETA, BETA_STAR, NCPoly
from app.core.representation import Truncation, commute_diagonal, dirac, word_operator


@pytest.fixture
def rng():
    return np.random.default_rng(7)


class TestNormalForm:

    def test_d_of_unit_vanishes(self):
        assert MatForm.one(1).d().is_zero()
        assert MatForm.one(2).d().is_zero()

    def test_empty_word_in_d_slot_dropped_for_scalars(self):
        assert MatForm.elementary(ALPHA, 1.0).is_zero()

    def test_degree_mismatch_rejected(self):
        with pytest.raises(FormError):
            MatForm(1, 1, {((0, 0, ()),): 1.0})

    def test_index_out_of_range(self):
        with pytest.raises(FormError):
            MatForm(1, 0, {((0, 1, ("a",)),): 1.0})

    def test_cannot_add_different_degrees(self):
        with pytest.raises(FormError):
            MatForm.scalar(ALPHA) + MatForm.elementary(ALPHA, BETA)


class TestOperators:

    def test_hochschild_boundary_of_one_form(self):
        w = MatForm.elementary(ALPHA, BETA)
        assert w.b() == MatForm.scalar(ALPHA * BETA - BETA * ALPHA)

    def test_star_of_one_form(self):
        w = MatForm.elementary(ALPHA, BETA)
        expected = MatForm.elementary(BETA_STAR, ALPHA_STAR) - MatForm.elementary(1.0, BETA_STAR * ALPHA_STAR)
        assert w.star() == expected

    @pytest.mark.parametrize("N", [1, 2])
    def test_complex_identities(self, rng, N):
        for degree in (1, 2):
            w = random_form(rng, degree, N)
            assert w.d().d().is_zero()
            assert w.B().B().is_zero()
            assert (w.B().b() + w.b().B()).is_zero()
            assert w.star().star() == w
        w2 = random_form(rng, 2, N)
        assert w2.b().b().is_zero()

    def test_graded_leibniz(self, rng):
        for deg in (0, 1, 2):
            w = random_form(rng, deg, 2)
            v = random_form(rng, 1, 2)
            assert (w * v).d() == w.d() * v + (w * v.d()) * (-1) ** deg

    def test_hermitize(self, rng):
        A = random_form(rng, 1, 2).hermitize()
        assert A.is_hermitian()

    def test_trace(self):
        m = MatForm.from_matrix([[ALPHA, 1.0], [0.0, BETA]])
        assert m.trace() == MatForm.scalar(ALPHA + BETA)

    def test_from_matrix_requires_square(self):
        with pytest.raises(FormError):
            MatForm.from_matrix([[ALPHA, BETA]])

    def test_random_form_is_seeded(self):
        a = random_form(np.random.default_rng(3), 1, 2)
        b = random_form(np.random.default_rng(3), 1, 2)
        assert a == b


class TestConnections:

    def test_curvature_needs_one_form(self):
        with pytest.raises(FormError):
            curvature(MatForm.scalar(ALPHA))

    def test_curvature_and_cs_degrees(self, rng):
        A = random_form(rng, 1, 1).hermitize()
        assert curvature(A).degree == 2
        assert cs_form(A).degree == 3

    def test_trivial_gauge(self, rng):
        A = random_form(rng, 1, 1).hermitize()
        assert gauge(A, MatForm.one(1)) == A

    def test_non_unitary_gauge_rejected(self, rng):
        A = random_form(rng, 1, 1, max_len=1).hermitize()
        with pytest.raises(FormError, match="not unitary"):
            gauge(A, MatForm.scalar(ALPHA), q=0.5, trunc=Truncation(6, 4))


class TestRepresent:

    def test_degree_zero_matches_word_operator(self):
        T = Truncation(5, 2)
        op = represent(MatForm.scalar(ALPHA), 0.5, T)
        assert np.allclose(op.matrix.toarray(), word_operator(("a",), 0.5, T).matrix.toarray())

    def test_one_form_uses_dirac_commutator(self):
        T = Truncation(5, 2)
        q = 0.5
        op = represent(MatForm.elementary(ALPHA, BETA), q, T)
        a = word_operator(("a",), q, T).matrix
        db = commute_diagonal(dirac(T).eigenvalues, word_operator(("b",), q, T)).matrix
        assert np.allclose(op.matrix.toarray(), (a @ db).toarray())

    def test_matrix_block_placement(self):
        T = Truncation(4, 2)
        op = represent(MatForm.from_matrix([[0.0, ALPHA], [0.0, 0.0]]), 0.0, T)
        n = T.dim
        dense = op.matrix.toarray()
        assert op.blocks == 2
        assert np.allclose(dense[:n, n:], word_operator(("a",), 0.0, T).matrix.toarray())
        assert np.allclose(dense[n:, :n], 0)

    def test_reach_beyond_guard(self):
        with pytest.raises(FormError, match="guard"):
            represent(MatForm.scalar(NCPoly.word("a", "a", "b")), 0.5, Truncation(6, 2))
