"""Circle symbols, gradings and the A = A1 + A2 split of connection forms."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Iterator, Mapping

import numpy as np

from .forms import FormError, Key, MatForm
from .ncpoly import NCPoly, Word, adjoint_word, del_degree, gamma_degree, is_split

log = logging.getLogger(__name__)


# ─── Fourier polynomials ───

@dataclass(frozen=True)
class FourierPoly:
    """sum_k c_k u^k with u = e^{i theta}."""

    coeffs: Mapping[int, complex] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeffs", {int(k): complex(c) for k, c in self.coeffs.items() if c != 0})

    @classmethod
    def const(cls, c: complex) -> FourierPoly:
        return cls({0: c})

    @classmethod
    def u(cls, k: int = 1) -> FourierPoly:
        return cls({k: 1.0})

    def __add__(self, other: FourierPoly) -> FourierPoly:
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out.get(k, 0) + c
        return FourierPoly(out)

    def __neg__(self) -> FourierPoly:
        return FourierPoly({k: -c for k, c in self.coeffs.items()})

    def __sub__(self, other: FourierPoly) -> FourierPoly:
        return self + (-other)

    def __mul__(self, other: FourierPoly | complex) -> FourierPoly:
        if not isinstance(other, FourierPoly):
            return FourierPoly({k: c * other for k, c in self.coeffs.items()})
        out: dict[int, complex] = {}
        for k1, c1 in self.coeffs.items():
            for k2, c2 in other.coeffs.items():
                out[k1 + k2] = out.get(k1 + k2, 0) + c1 * c2
        return FourierPoly(out)

    def __rmul__(self, c: complex) -> FourierPoly:
        return self * c

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FourierPoly):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __iter__(self) -> Iterator[tuple[int, complex]]:
        return iter(sorted(self.coeffs.items()))

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def star(self) -> FourierPoly:
        return FourierPoly({-k: c.conjugate() for k, c in self.coeffs.items()})

    def derivative(self, order: int = 1) -> FourierPoly:
        """d/dtheta applied `order` times."""
        return FourierPoly({k: c * (1j * k) ** order for k, c in self.coeffs.items()})

    def mean(self) -> complex:
        """(1/2pi) int f dtheta."""
        return self.coeffs.get(0, 0j)

    def __call__(self, theta: float | np.ndarray) -> complex | np.ndarray:
        theta = np.asarray(theta, dtype=float)
        out = np.zeros(theta.shape, dtype=complex)
        for k, c in self.coeffs.items():
            out += c * np.exp(1j * k * theta)
        return out if out.shape else complex(out)

    def to_json(self) -> list[list[float]]:
        return [[k, c.real, c.imag] for k, c in self]


# ─── Symbol map ───

_LETTER_SYMBOL = {"a": 1, "a-": 1, "a*": -1, "a-*": -1}


@lru_cache(maxsize=100_000)
def symbol_degree(word: Word) -> int | None:
    """sigma_q(word) = u^degree, or None when the symbol vanishes."""
    total = 0
    for letter in word:
        step = _LETTER_SYMBOL.get(letter)
        if step is None:
            return None
        total += step
    return total


def sigma_q(x: NCPoly) -> FourierPoly:
    """alpha_- -> u, alpha_+ and the beta letters -> 0, extended multiplicatively."""
    out: dict[int, complex] = {}
    for w, c in x:
        k = symbol_degree(w)
        if k is not None:
            out[k] = out.get(k, 0) + c
    return FourierPoly(out)


def lift_word(k: int) -> Word:
    return ("a",) * k if k >= 0 else ("a*",) * (-k)


def lift(f: FourierPoly) -> NCPoly:
    """u^k -> alpha^k, u^{-k} -> alpha*^k."""
    return NCPoly({lift_word(k): c for k, c in f})


def delta(x: NCPoly) -> NCPoly:
    """[|D|, x] on the split alphabet: each word scales by its shell displacement."""
    return NCPoly({w: gamma_degree(w) * c for w, c in x.split()})


# ─── Gradings ───

@dataclass(frozen=True)
class GradedWord:
    word: Word
    gamma_degree: int | None
    del_degree: int

    def __add__(self, other: GradedWord) -> GradedWord:
        gamma = None if self.gamma_degree is None or other.gamma_degree is None else self.gamma_degree + other.gamma_degree
        return GradedWord(self.word + other.word, gamma, self.del_degree + other.del_degree)

    def adjoint(self) -> GradedWord:
        gamma = None if self.gamma_degree is None else -self.gamma_degree
        return GradedWord(adjoint_word(self.word), gamma, -self.del_degree)


def graded(word: Word) -> GradedWord:
    gamma = gamma_degree(word) if all(is_split(x) for x in word) else None
    return GradedWord(tuple(word), gamma, del_degree(word))


def degree0(x: NCPoly, grading: str = "gamma") -> NCPoly:
    if grading == "gamma":
        return NCPoly({w: c for w, c in x.split() if gamma_degree(w) == 0})
    if grading == "del":
        return NCPoly({w: c for w, c in x if del_degree(w) == 0})
    raise ValueError(f"unknown grading {grading!r}")


def del_derivative(x: NCPoly) -> NCPoly:
    """d = d_beta - d_alpha, so alpha -> -alpha and beta -> beta."""
    return NCPoly({w: del_degree(w) * c for w, c in x})


# ─── Disk factorisation ───
#
# Away from the shell edges a split letter acts on e^{(n)}_{ij} through
# x = n + i and y = n + j separately, as pi_+ on x times pi_- on y:
#   a+ = -q b* (x) b,  a- = a (x) a,  b+ = a* (x) b,  b- = b (x) a.
# On the cap i = n the letters that keep x = m act through pi_- on y alone;
# a+ and b- leave the cap with an amplitude O(q^m).

_DISK_LETTER: dict[str, tuple[bool, Word, Word]] = {
    "a+": (True, ("b*",), ("b",)),
    "a-": (False, ("a",), ("a",)),
    "b+": (False, ("a*",), ("b",)),
    "b-": (False, ("b",), ("a",)),
}
_CAP_LETTER = {"a-": "a", "b+": "b", "a-*": "a*", "b+*": "b*"}


@lru_cache(maxsize=100_000)
def disk_word(word: Word, q: float) -> tuple[float, Word, Word]:
    """(coefficient, pi_+ word, pi_- word) of a split word."""
    coeff, first, second = 1.0, (), ()
    for letter in word:
        scaled, x, y = _DISK_LETTER[letter[:2]]
        if letter.endswith("*"):
            x, y = adjoint_word(x), adjoint_word(y)
        if scaled:
            coeff *= -q
        first += x
        second += y
    return coeff, first, second


def cap_word(word: Word) -> Word | None:
    """pi_- word of a split word on the cap, None when it leaves the cap."""
    out = []
    for letter in word:
        mapped = _CAP_LETTER.get(letter)
        if mapped is None:
            return None
        out.append(mapped)
    return tuple(out)


# ─── q = 0 canonical form ───
#
# Keys (k, p, l):
#   p None: pure alpha*^k (l = 0) or alpha^l (k = 0)
#   p = 0: alpha*^k e alpha^l
#   p > 0: alpha*^k beta^p alpha^l; p < 0: alpha*^k beta*^|p| alpha^l

CanonKey = tuple[int, int | None, int]

_Q0_LETTER = {"a": "a", "a-": "a", "a*": "a*", "a-*": "a*", "b": "b", "b*": "b*"}


def _times_letter(key: CanonKey, letter: str) -> list[tuple[CanonKey, int]]:
    k, p, l = key
    if p is None:
        if letter == "a":
            if k > 0:
                return [((k - 1, None, 0), 1), ((k - 1, 0, 0), -1)]
            return [((0, None, l + 1), 1)]
        if letter == "a*":
            return [((0, None, l - 1), 1)] if l > 0 else [((k + 1, None, 0), 1)]
        if l > 0:
            return []
        return [((k, 1 if letter == "b" else -1, 0), 1)]
    if letter == "a":
        return [((k, p, l + 1), 1)]
    if letter == "a*":
        return [((k, p, l - 1), 1)] if l > 0 else []
    if l > 0:
        return []
    return [((k, p + (1 if letter == "b" else -1), 0), 1)]


@lru_cache(maxsize=100_000)
def _canonical_word(word: Word) -> tuple[tuple[CanonKey, int], ...]:
    state: dict[CanonKey, int] = {(0, None, 0): 1}
    for raw in word:
        if raw in ("a+", "a+*"):
            return ()
        letter = _Q0_LETTER.get(raw)
        if letter is None:
            raise FormError(f"letter {raw!r} has no q = 0 canonical form")
        nxt: dict[CanonKey, int] = {}
        for key, c in state.items():
            for nk, s in _times_letter(key, letter):
                nxt[nk] = nxt.get(nk, 0) + s * c
        state = {kk: v for kk, v in nxt.items() if v}
    return tuple(sorted(state.items(), key=lambda kv: (kv[0][0], -2 if kv[0][1] is None else kv[0][1], kv[0][2])))


def canonical_q0(x: NCPoly) -> dict[CanonKey, complex]:
    """Rewrite x at q = 0 as sum alpha*^k f_kl(beta) alpha^l + pure alpha powers."""
    out: dict[CanonKey, complex] = {}
    for w, c in x:
        for key, s in _canonical_word(w):
            out[key] = out.get(key, 0) + s * c
    return {k: v for k, v in out.items() if v != 0}


def rho_q0(j: int) -> float:
    return 2.0 / 3.0 - j - j * j


def phi0_explicit(x: NCPoly) -> complex:
    """phi_0(alpha*^k f(beta) alpha^k) = rho(k) * mean(f); zero on the other terms."""
    total = 0j
    for (k, p, l), c in canonical_q0(x).items():
        if p == 0 and k == l:
            total += rho_q0(k) * c
    return total


# ─── Action coefficients ───

Cell = tuple[int, int]


@dataclass(frozen=True)
class ActionCoefficients:
    """Re_kl and Im_kl on the square |k|, |l| <= K."""

    K: int
    re: Mapping[Cell, complex] = field(default_factory=dict)
    im: Mapping[Cell, complex] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.K < 0:
            raise ValueError("K must be nonnegative")
        for name in ("re", "im"):
            clean = {}
            for (k, l), v in getattr(self, name).items():
                if max(abs(k), abs(l)) > self.K:
                    raise ValueError(f"{name}[{k},{l}] lies outside the cutoff K={self.K}")
                if v != 0:
                    clean[(int(k), int(l))] = complex(v)
            object.__setattr__(self, name, clean)

    @classmethod
    def zero(cls, K: int) -> ActionCoefficients:
        return cls(K)

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(v) <= tol for v in (*self.re.values(), *self.im.values()))

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Dense (2K+1, 2K+1) arrays indexed [k + K, l + K]."""
        n = 2 * self.K + 1
        re = np.zeros((n, n), dtype=complex)
        im = np.zeros((n, n), dtype=complex)
        for (k, l), v in self.re.items():
            re[k + self.K, l + self.K] = v
        for (k, l), v in self.im.items():
            im[k + self.K, l + self.K] = v
        return re, im

    @classmethod
    def from_arrays(cls, re: np.ndarray, im: np.ndarray) -> ActionCoefficients:
        n = re.shape[0]
        if re.shape != (n, n) or im.shape != (n, n) or n % 2 == 0:
            raise ValueError("coefficient arrays must be square with odd size")
        K = n // 2
        cells = [(k, l) for k in range(-K, K + 1) for l in range(-K, K + 1)]
        return cls(
            K,
            {c: re[c[0] + K, c[1] + K] for c in cells},
            {c: im[c[0] + K, c[1] + K] for c in cells},
        )

    def to_json(self) -> dict[str, Any]:
        return {
            "K": self.K,
            "re": [[k, l, v.real, v.imag] for (k, l), v in sorted(self.re.items())],
            "im": [[k, l, v.real, v.imag] for (k, l), v in sorted(self.im.items())],
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> ActionCoefficients:
        return cls(
            int(data["K"]),
            {(int(k), int(l)): complex(a, b) for k, l, a, b in data.get("re", [])},
            {(int(k), int(l)): complex(a, b) for k, l, a, b in data.get("im", [])},
        )


# ─── Decomposition ───

def decompose(A: MatForm) -> tuple[MatForm, MatForm]:
    """A1 = sum lift(sigma(a)) d lift(sigma(b)) termwise; A2 = A - A1."""
    if A.degree != 1:
        raise FormError("decompose needs a 1-form")
    terms: dict[Key, complex] = {}
    for ((r0, s0, w0), (r1, s1, w1)), c in A:
        d0, d1 = symbol_degree(w0), symbol_degree(w1)
        if d0 is None or d1 is None:
            continue
        key = ((r0, s0, lift_word(d0)), (r1, s1, lift_word(d1)))
        terms[key] = terms.get(key, 0) + c
    A1 = MatForm(A.N, 1, terms)
    return A1, A - A1


def _lift_degree(word: Word) -> int:
    if not word:
        return 0
    if word[0] not in ("a", "a*") or any(x != word[0] for x in word):
        raise FormError(f"word {' '.join(word)!r} is not an alpha power")
    return len(word) if word[0] == "a" else -len(word)


def extract_coeffs(A1: MatForm, K: int | None = None) -> ActionCoefficients:
    """Re_kl = 1/2 sum Tr(lam_{-k} mu_l + mu*_{-l} lam*_k), Im_kl with the second term subtracted."""
    if A1.degree != 1:
        raise FormError("extract_coeffs needs a 1-form")
    re: dict[Cell, complex] = {}
    im: dict[Cell, complex] = {}
    for ((r0, s0, w0), (r1, s1, w1)), c in A1:
        d0, d1 = _lift_degree(w0), _lift_degree(w1)
        if s0 != r1 or s1 != r0:
            continue
        half, half_bar = c / 2, c.conjugate() / 2
        re[(-d0, d1)] = re.get((-d0, d1), 0) + half
        im[(-d0, d1)] = im.get((-d0, d1), 0) + half
        re[(d0, -d1)] = re.get((d0, -d1), 0) + half_bar
        im[(d0, -d1)] = im.get((d0, -d1), 0) - half_bar
    cells = list(re) + list(im)
    need = max((max(abs(k), abs(l)) for k, l in cells), default=0)
    if K is None:
        K = need
    elif need > K:
        raise FormError(f"coefficients reach |k| = {need} beyond the cutoff K = {K}")
    return ActionCoefficients(K, re, im)


def lifted_form(coeffs: Mapping[tuple[int, int], complex], N: int = 1) -> MatForm:
    """sum_(k,l) c_kl alpha^k d alpha^l on the diagonal of M_N."""
    terms = {
        ((r, r, lift_word(k)), (r, r, lift_word(l))): c for (k, l), c in coeffs.items() for r in range(N)
    }
    return MatForm(N, 1, terms)
