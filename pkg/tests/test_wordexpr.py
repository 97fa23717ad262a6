"""Tests for the word-expression parser."""

from __future__ import annotations

import pytest

from app.core.ncpoly import ALPHA, ALPHA_STAR, BETA, BETA_STAR, NCPoly
from app.core.wordexpr import WordSyntaxError, parse_poly, parse_word, to_text


class TestParse:

    def test_sum_of_products(self):
        assert parse_poly("a* a + b* b") == ALPHA_STAR * ALPHA + BETA_STAR * BETA

    def test_split_letters(self):
        assert parse_poly("a+ a-") == NCPoly.word("a+", "a-")

    def test_mixed_letters_are_split(self):
        p = parse_poly("a a-")
        assert p.coeff(("a+", "a-")) == 1
        assert p.coeff(("a-", "a-")) == 1

    def test_explicit_product_sign(self):
        assert parse_poly("a * b") == ALPHA * BETA
        assert parse_poly("2*a") == 2 * ALPHA

    def test_glued_star_is_adjoint(self):
        assert parse_poly("(a b)*") == NCPoly.word("b*", "a*")
        assert parse_poly("(a + b)*") == ALPHA_STAR + BETA_STAR

    def test_coefficients(self):
        p = parse_poly("2 a - 0.5j b")
        assert p.coeff(("a",)) == 2
        assert p.coeff(("b",)) == -0.5j

    def test_negation(self):
        assert parse_poly("-(a + b)") == -ALPHA - BETA


class TestErrors:

    def test_unclosed_parenthesis(self):
        with pytest.raises(WordSyntaxError) as exc:
            parse_poly("((a")
        assert exc.value.column == 3

    def test_unknown_token(self):
        with pytest.raises(WordSyntaxError) as exc:
            parse_poly("a $")
        assert exc.value.column == 3

    def test_stray_close(self):
        with pytest.raises(WordSyntaxError, match="unexpected"):
            parse_poly("a )")

    def test_empty(self):
        with pytest.raises(WordSyntaxError, match="empty"):
            parse_poly("   ")

    def test_is_value_error(self):
        assert issubclass(WordSyntaxError, ValueError)


class TestPrinter:

    def test_round_trip_text(self):
        text = "a* a + b* b"
        assert to_text(parse_word(text)) == text

    def test_adjoint_printed_with_parentheses(self):
        assert to_text(parse_word("(a b)*")) == "(a b)*"
