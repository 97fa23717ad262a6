"""Noncommutative polynomials over the SU_q(2) generator alphabets.

Words are tuples of letters. The full alphabet is {a, a*, b, b*} (alpha,
beta and their adjoints); the split alphabet carries the shell-raising and
shell-lowering halves a+, a-, b+, b- and their adjoints. Products of mixed
words are expanded into the split alphabet.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Iterator, Mapping

Word = tuple[str, ...]

FULL_LETTERS = ("a", "a*", "b", "b*")
SPLIT_LETTERS = ("a+", "a-", "b+", "b-", "a+*", "a-*", "b+*", "b-*")
LETTERS = FULL_LETTERS + SPLIT_LETTERS

# shell displacement (doubled spin) of each split letter
_GAMMA = {"a+": 1, "a-": -1, "b+": 1, "b-": -1}
# torus charge: d = d_beta - d_alpha
_DEL = {"a": -1, "b": 1}


def adjoint_letter(letter: str) -> str:
    return letter[:-1] if letter.endswith("*") else letter + "*"


def adjoint_word(word: Word) -> Word:
    return tuple(adjoint_letter(x) for x in reversed(word))


def base_letter(letter: str) -> str:
    """'a+*' -> 'a'."""
    return letter[0]


def is_split(letter: str) -> bool:
    return len(letter) > 1 and letter[1] in "+-"


def gamma_degree(word: Word) -> int:
    """Shell displacement of a split word; full letters have no definite degree."""
    total = 0
    for letter in word:
        if not is_split(letter):
            raise ValueError(f"letter {letter!r} is not gamma-homogeneous; split the polynomial first")
        sign = -1 if letter.endswith("*") else 1
        total += sign * _GAMMA[letter[:2]]
    return total


def del_degree(word: Word) -> int:
    total = 0
    for letter in word:
        sign = -1 if letter.endswith("*") else 1
        total += sign * _DEL[base_letter(letter)]
    return total


def _check_letters(word: Word) -> None:
    for letter in word:
        if letter not in LETTERS:
            raise ValueError(f"unknown letter {letter!r}")


@dataclass(frozen=True)
class NCPoly:
    """Finite linear combination of words. Zero coefficients are never stored."""

    terms: Mapping[Word, complex] = field(default_factory=dict)

    def __post_init__(self) -> None:
        clean: dict[Word, complex] = {}
        for w, c in self.terms.items():
            w = tuple(w)
            _check_letters(w)
            c = complex(c)
            if c != 0:
                clean[w] = clean.get(w, 0) + c
        object.__setattr__(self, "terms", {w: c for w, c in clean.items() if c != 0})

    # ─── constructors ───

    @classmethod
    def word(cls, *letters: str, coeff: complex = 1.0) -> NCPoly:
        return cls({tuple(letters): coeff})

    @classmethod
    def const(cls, c: complex) -> NCPoly:
        return cls({(): c})

    @classmethod
    def one(cls) -> NCPoly:
        return cls({(): 1.0})

    @classmethod
    def zero(cls) -> NCPoly:
        return cls({})

    # ─── arithmetic ───

    def __add__(self, other: NCPoly | complex) -> NCPoly:
        other = _coerce(other)
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out.get(w, 0) + c
        return NCPoly(out)

    __radd__ = __add__

    def __neg__(self) -> NCPoly:
        return NCPoly({w: -c for w, c in self.terms.items()})

    def __sub__(self, other: NCPoly | complex) -> NCPoly:
        return self + (-_coerce(other))

    def __rsub__(self, other: complex) -> NCPoly:
        return _coerce(other) - self

    def __mul__(self, other: NCPoly | complex) -> NCPoly:
        if not isinstance(other, NCPoly):
            return NCPoly({w: c * other for w, c in self.terms.items()})
        out: dict[Word, complex] = {}
        for (w1, c1), (w2, c2) in product(self.terms.items(), other.terms.items()):
            w = w1 + w2
            out[w] = out.get(w, 0) + c1 * c2
        result = NCPoly(out)
        return result.split() if result.alphabet == "mixed" else result

    def __rmul__(self, other: complex) -> NCPoly:
        return NCPoly({w: other * c for w, c in self.terms.items()})

    def __pow__(self, n: int) -> NCPoly:
        out = NCPoly.one()
        for _ in range(n):
            out = out * self
        return out

    def adjoint(self) -> NCPoly:
        return NCPoly({adjoint_word(w): c.conjugate() for w, c in self.terms.items()})

    star = adjoint

    def split(self) -> NCPoly:
        """Rewrite full letters as sums of their split halves (a = a+ + a-)."""
        out: dict[Word, complex] = {}
        for w, c in self.terms.items():
            choices = [_split_choices(x) for x in w]
            for combo in product(*choices):
                out[combo] = out.get(combo, 0) + c
        return NCPoly(out)

    # ─── inspection ───

    def __iter__(self) -> Iterator[tuple[Word, complex]]:
        return iter(sorted(self.terms.items()))

    def __len__(self) -> int:
        return len(self.terms)

    def __bool__(self) -> bool:
        return bool(self.terms)

    def coeff(self, word: Iterable[str]) -> complex:
        return self.terms.get(tuple(word), 0j)

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(c) <= tol for c in self.terms.values())

    @property
    def max_length(self) -> int:
        return max((len(w) for w in self.terms), default=0)

    @property
    def alphabet(self) -> str:
        letters = {x for w in self.terms for x in w}
        has_split = any(is_split(x) for x in letters)
        has_full = any(not is_split(x) for x in letters)
        if has_split and has_full:
            return "mixed"
        return "split" if has_split else "full"

    def to_json(self) -> list[list]:
        return [[list(w), c.real, c.imag] for w, c in self]

    @classmethod
    def from_json(cls, data: list[list]) -> NCPoly:
        return cls({tuple(w): complex(re, im) for w, re, im in data})

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for w, c in self:
            word = " ".join(w)
            if not w:
                parts.append(_fmt(c))
            elif c == 1:
                parts.append(word)
            else:
                parts.append(f"{_fmt(c)} {word}")
        return " + ".join(parts)


def _split_choices(letter: str) -> tuple[str, ...]:
    if is_split(letter):
        return (letter,)
    star = "*" if letter.endswith("*") else ""
    return (f"{letter[0]}+{star}", f"{letter[0]}-{star}")


def _coerce(x: NCPoly | complex) -> NCPoly:
    return x if isinstance(x, NCPoly) else NCPoly.const(x)


def _fmt(c: complex) -> str:
    if c.imag == 0:
        return repr(c.real)
    if c.real == 0:
        return f"{c.imag!r}j"
    return f"({c.real!r}{c.imag:+}j)"


ALPHA = NCPoly.word("a")
ALPHA_STAR = NCPoly.word("a*")
BETA = NCPoly.word("b")
BETA_STAR = NCPoly.word("b*")
