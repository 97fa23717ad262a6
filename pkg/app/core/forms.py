"""Universal differential forms over M_N of the free *-algebra on the generators.

An elementary form is a tuple of cells (r, s, word), read as
E_rs w^0 d(E_rs w^1) ... d(E_rs w^n). Coefficients are complex. The
normal form is faithful: a cell in a d-slot equal to E_{N-1,N-1} (the
last diagonal unit with the empty word) is rewritten as minus the sum
of the other diagonal units, so d(1) = 0 holds without special cases.
For N = 1 this simply drops every term with an empty word in a d-slot.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Any, Iterable, Iterator, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .ncpoly import NCPoly, Word, adjoint_word
from .representation import ShiftOp, Truncation, commute_diagonal, dirac, word_operator

log = logging.getLogger(__name__)

Cell = tuple[int, int, Word]
Key = tuple[Cell, ...]


class FormError(ValueError):
    pass


# ─── Cell algebra ───

def _cell_mul(a: Cell, b: Cell) -> Cell | None:
    if a[1] != b[0]:
        return None
    return (a[0], b[1], a[2] + b[2])


def _cell_adjoint(c: Cell) -> Cell:
    return (c[1], c[0], adjoint_word(c[2]))


def _units(N: int) -> list[Cell]:
    return [(r, r, ()) for r in range(N)]


@lru_cache(maxsize=200_000)
def _rmul(key: Key, cell: Cell) -> tuple[tuple[Key, int], ...]:
    """(c0 dc1 ... dcn) . cell via the Leibniz rule, unnormalised."""
    if len(key) == 1:
        prod = _cell_mul(key[0], cell)
        return () if prod is None else (((prod,), 1),)
    head, last = key[:-1], key[-1]
    out: dict[Key, int] = {}
    prod = _cell_mul(last, cell)
    if prod is not None:
        out[head + (prod,)] = 1
    for k, c in _rmul(head, last):
        nk = k + (cell,)
        out[nk] = out.get(nk, 0) - c
    return tuple((k, c) for k, c in out.items() if c)


def _normalize(terms: Mapping[Key, complex], N: int) -> dict[Key, complex]:
    last_unit = (N - 1, N - 1, ())
    others = [(r, r, ()) for r in range(N - 1)]
    out: dict[Key, complex] = {}
    for key, c in terms.items():
        if c == 0:
            continue
        choices = []
        sign = 1
        for i, cell in enumerate(key):
            if i >= 1 and cell == last_unit:
                if not others:
                    choices = None
                    break
                choices.append(others)
                sign = -sign
            else:
                choices.append([cell])
        if choices is None:
            continue
        for combo in product(*choices):
            out[combo] = out.get(combo, 0) + sign * c
    return {k: v for k, v in out.items() if v != 0}


# ─── Forms ───

@dataclass(frozen=True, eq=False)
class MatForm:
    """Element of Omega^degree(M_N(A)) in normal form."""

    N: int
    degree: int
    terms: Mapping[Key, complex] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.N < 1 or self.degree < 0:
            raise FormError("N must be positive and degree nonnegative")
        for key in self.terms:
            if len(key) != self.degree + 1:
                raise FormError(f"term {key} does not have degree {self.degree}")
            for r, s, _ in key:
                if not (0 <= r < self.N and 0 <= s < self.N):
                    raise FormError(f"matrix index out of range in {key}")
        clean = _normalize({tuple((r, s, tuple(w)) for r, s, w in k): complex(c) for k, c in self.terms.items()}, self.N)
        object.__setattr__(self, "terms", clean)

    # ─── constructors ───

    @classmethod
    def zero(cls, N: int = 1, degree: int = 0) -> MatForm:
        return cls(N, degree, {})

    @classmethod
    def one(cls, N: int = 1) -> MatForm:
        return cls(N, 0, {(u,): 1.0 for u in _units(N)})

    @classmethod
    def scalar(cls, x: NCPoly | complex, N: int = 1) -> MatForm:
        """x times the identity matrix, degree 0."""
        x = x if isinstance(x, NCPoly) else NCPoly.const(x)
        return cls(N, 0, {((r, r, w),): c for r in range(N) for w, c in x})

    @classmethod
    def from_matrix(cls, rows: Sequence[Sequence[NCPoly | complex]]) -> MatForm:
        N = len(rows)
        terms: dict[Key, complex] = {}
        for r, row in enumerate(rows):
            if len(row) != N:
                raise FormError("matrix must be square")
            for s, x in enumerate(row):
                x = x if isinstance(x, NCPoly) else NCPoly.const(x)
                for w, c in x:
                    terms[((r, s, w),)] = terms.get(((r, s, w),), 0) + c
        return cls(N, 0, terms)

    @classmethod
    def elementary(cls, *polys: NCPoly | complex, N: int = 1) -> MatForm:
        """a0 da1 ... dan for scalar polynomials, expanded multilinearly."""
        out = cls.scalar(polys[0], N)
        for p in polys[1:]:
            out = out * cls.scalar(p, N).d()
        return out

    # ─── algebra ───

    def _same(self, other: MatForm) -> None:
        if other.N != self.N or other.degree != self.degree:
            raise FormError(f"cannot add forms of shape ({self.N}, {self.degree}) and ({other.N}, {other.degree})")

    def __add__(self, other: MatForm) -> MatForm:
        self._same(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) + c
        return MatForm(self.N, self.degree, out)

    def __neg__(self) -> MatForm:
        return MatForm(self.N, self.degree, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other: MatForm) -> MatForm:
        return self + (-other)

    def __mul__(self, other: MatForm | complex) -> MatForm:
        if not isinstance(other, MatForm):
            return MatForm(self.N, self.degree, {k: c * other for k, c in self.terms.items()})
        if other.N != self.N:
            raise FormError("matrix sizes differ")
        out: dict[Key, complex] = {}
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                for k, s in _rmul(k1, k2[0]):
                    nk = k + k2[1:]
                    out[nk] = out.get(nk, 0) + s * c1 * c2
        return MatForm(self.N, self.degree + other.degree, out)

    def __rmul__(self, c: complex) -> MatForm:
        return MatForm(self.N, self.degree, {k: c * v for k, v in self.terms.items()})

    def d(self) -> MatForm:
        out: dict[Key, complex] = {}
        for key, c in self.terms.items():
            for u in _units(self.N):
                nk = (u,) + key
                out[nk] = out.get(nk, 0) + c
        return MatForm(self.N, self.degree + 1, out)

    def b(self) -> MatForm:
        """Hochschild boundary; zero on degree 0."""
        n = self.degree
        if n == 0:
            return MatForm.zero(self.N, 0)
        sign = (-1) ** (n - 1)
        out: dict[Key, complex] = {}
        for key, c in self.terms.items():
            head, last = key[:-1], key[-1]
            for k, s in _rmul(head, last):
                out[k] = out.get(k, 0) + sign * s * c
            prod = _cell_mul(last, head[0])
            if prod is not None:
                nk = (prod,) + head[1:]
                out[nk] = out.get(nk, 0) - sign * c
        return MatForm(self.N, n - 1, out)

    def B(self) -> MatForm:
        n = self.degree
        out: dict[Key, complex] = {}
        for key, c in self.terms.items():
            for i in range(n + 1):
                rot = key[n + 1 - i:] + key[: n + 1 - i]
                s = (-1) ** (n * i)
                for u in _units(self.N):
                    nk = (u,) + rot
                    out[nk] = out.get(nk, 0) + s * c
        return MatForm(self.N, n + 1, out)

    def star(self) -> MatForm:
        n = self.degree
        out: dict[Key, complex] = {}
        for key, c in self.terms.items():
            tail = tuple(_cell_adjoint(x) for x in reversed(key[1:]))
            first = _cell_adjoint(key[0])
            coef = (-1) ** n * c.conjugate()
            if n == 0:
                out[(first,)] = out.get((first,), 0) + coef
                continue
            for u in _units(self.N):
                for k, s in _rmul((u,) + tail, first):
                    out[k] = out.get(k, 0) + s * coef
        return MatForm(self.N, n, out)

    def hermitize(self) -> MatForm:
        return (self + self.star()) * 0.5

    def trace(self) -> MatForm:
        """Matrix trace into scalar universal forms."""
        out: dict[Key, complex] = {}
        for key, c in self.terms.items():
            n = len(key)
            if all(key[i][1] == key[(i + 1) % n][0] for i in range(n)):
                nk = tuple((0, 0, cell[2]) for cell in key)
                out[nk] = out.get(nk, 0) + c
        return MatForm(1, self.degree, out)

    # ─── inspection ───

    def __iter__(self) -> Iterator[tuple[Key, complex]]:
        return iter(sorted(self.terms.items()))

    def __len__(self) -> int:
        return len(self.terms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MatForm):
            return NotImplemented
        return self.N == other.N and self.degree == other.degree and self.terms == other.terms

    def scalar_terms(self) -> Iterator[tuple[tuple[Word, ...], complex]]:
        """Words of the traced form, one tuple (w0, ..., wn) per term."""
        for key, c in self.trace():
            yield tuple(cell[2] for cell in key), c

    def max_abs(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def is_zero(self, tol: float = 0.0) -> bool:
        return self.max_abs() <= tol

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return (self - self.star()).is_zero(tol)

    def max_word_length(self) -> int:
        return max((sum(len(c[2]) for c in key) for key in self.terms), default=0)

    def to_json(self) -> dict[str, Any]:
        return {
            "N": self.N,
            "degree": self.degree,
            "terms": [[[[r, s, list(w)] for r, s, w in key], c.real, c.imag] for key, c in self],
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> MatForm:
        terms = {
            tuple((r, s, tuple(w)) for r, s, w in key): complex(re, im) for key, re, im in data["terms"]
        }
        return cls(data["N"], data["degree"], terms)


def curvature(A: MatForm) -> MatForm:
    """F = dA + A^2."""
    if A.degree != 1:
        raise FormError("curvature needs a 1-form")
    return A.d() + A * A


def cs_form(A: MatForm, cubic: float = 2.0 / 3.0) -> MatForm:
    """A dA + cubic * A^3."""
    return A * A.d() + (A * A * A) * cubic


def gauge(A: MatForm, u: MatForm, q: float | None = None, trunc: Truncation | None = None, tol: float = 1e-12) -> MatForm:
    """A^u = u A u* + u d(u*). With q given, u is checked to be unitary first."""
    if A.degree != 1 or u.degree != 0:
        raise FormError("gauge needs a 1-form and a degree-0 element")
    if q is not None:
        res = unitarity_residual(u, q, trunc or Truncation(12, 4))
        if res > tol:
            raise FormError(f"gauge element is not unitary (residual {res:.3e})")
    us = u.star()
    return u * A * us + u * us.d()


# ─── Representation ───

def represent(omega: MatForm, q: float, trunc: Truncation) -> ShiftOp:
    """pi(a0)[D, pi(a1)]...[D, pi(an)] on H (x) C^N."""
    reach = omega.max_word_length()
    if reach > trunc.guard:
        raise FormError(f"form reaches {reach} shells, guard band is {trunc.guard}")
    dd = dirac(trunc)
    n = trunc.dim
    cache: dict[tuple[Word, bool], sp.csr_matrix] = {}

    def factor(word: Word, commuted: bool) -> sp.csr_matrix:
        key = (word, commuted)
        if key not in cache:
            op = word_operator(word, q, trunc)
            cache[key] = commute_diagonal(dd.eigenvalues, op).matrix if commuted else op.matrix
        return cache[key]

    blocks: dict[tuple[int, int], sp.csr_matrix] = {}
    for key, c in omega:
        rows = [cell[0] for cell in key]
        cols = [cell[1] for cell in key]
        if any(cols[i] != rows[i + 1] for i in range(len(key) - 1)):
            continue
        mat = factor(key[0][2], False)
        for cell in key[1:]:
            mat = mat @ factor(cell[2], True)
        pos = (rows[0], cols[-1])
        blocks[pos] = blocks[pos] + c * mat if pos in blocks else c * mat
    N = omega.N
    grid = [[blocks.get((r, s)) for s in range(N)] for r in range(N)]
    if not blocks:
        total = sp.csr_matrix((N * n, N * n), dtype=complex)
    else:
        grid[0][0] = grid[0][0] if grid[0][0] is not None else sp.csr_matrix((n, n), dtype=complex)
        for r in range(N):
            if grid[r][r] is None:
                grid[r][r] = sp.csr_matrix((n, n), dtype=complex)
        total = sp.bmat(grid, format="csr")
    return ShiftOp(sp.csr_matrix(total, dtype=complex), trunc, reach, N)


def unitarity_residual(u: MatForm, q: float, trunc: Truncation) -> float:
    """max over interior columns of |pi(u*u - 1)| and |pi(uu* - 1)|."""
    one = MatForm.one(u.N)
    us = u.star()
    worst = 0.0
    for form in (us * u - one, u * us - one):
        if form.is_zero():
            continue
        op = represent(form, q, trunc)
        worst = max(worst, op.max_abs(interior=True))
    return worst


def random_form(
    rng: np.random.Generator,
    degree: int,
    N: int = 1,
    n_terms: int = 2,
    letters: Iterable[str] = ("a", "a*", "b", "b*"),
    max_len: int = 2,
) -> MatForm:
    """Random form with Gaussian-integer coefficients (exact under float arithmetic)."""
    letters = list(letters)
    terms: dict[Key, complex] = {}
    for _ in range(n_terms):
        key = []
        for slot in range(degree + 1):
            length = int(rng.integers(0 if slot == 0 else 1, max_len + 1))
            word = tuple(letters[int(i)] for i in rng.integers(0, len(letters), size=length))
            key.append((int(rng.integers(0, N)), int(rng.integers(0, N)), word))
        c = complex(int(rng.integers(-3, 4)), int(rng.integers(-3, 4)))
        terms[tuple(key)] = terms.get(tuple(key), 0) + c
    return MatForm(N, degree, terms)

