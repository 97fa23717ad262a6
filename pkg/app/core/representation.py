"""Truncated representation of C^inf(SU_q(2)) on l^2 spin-labelled basis.

Basis vectors e^{(n)}_{ij} are stored with doubled labels (m, i2, j2) =
(2n, 2i, 2j) and ordered shell by shell; inside a shell the order is
lexicographic in (i2, j2). Operators are scipy.sparse matrices wrapped in
ShiftOp, which remembers the truncation and how many shells a word may
move a vector (its reach).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Any, Iterator

import numpy as np
import scipy.sparse as sp

from .ncpoly import NCPoly, Word, is_split

log = logging.getLogger(__name__)


class TruncationError(ValueError):
    pass


# ─── Basis ───

@dataclass(frozen=True, order=True)
class BasisIndex:
    m: int
    i2: int
    j2: int

    def __post_init__(self) -> None:
        m, i2, j2 = self.m, self.i2, self.j2
        if m < 0 or abs(i2) > m or abs(j2) > m or (m - i2) % 2 or (m - j2) % 2:
            raise TruncationError(f"invalid basis label (m={m}, i2={i2}, j2={j2})")

    @property
    def n(self) -> Fraction:
        return Fraction(self.m, 2)

    def position(self) -> int:
        return int(position(self.m, self.i2, self.j2))


@dataclass(frozen=True)
class Truncation:
    m_max: int
    guard: int = 0

    def __post_init__(self) -> None:
        if self.m_max < 0 or self.guard < 0:
            raise TruncationError("m_max and guard must be nonnegative")
        if self.guard > self.m_max:
            raise TruncationError(f"guard {self.guard} exceeds m_max {self.m_max}")

    @property
    def dim(self) -> int:
        return shell_offset(self.m_max + 1)

    @property
    def interior_max(self) -> int:
        return self.m_max - self.guard


def shell_offset(m: int) -> int:
    """Number of basis vectors on shells below m."""
    return m * (m + 1) * (2 * m + 1) // 6


def position(m, i2, j2):
    return m * (m + 1) * (2 * m + 1) // 6 + ((i2 + m) // 2) * (m + 1) + (j2 + m) // 2


@lru_cache(maxsize=32)
def basis_arrays(m_max: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(m, i2, j2) label arrays in basis order."""
    ms, is_, js = [], [], []
    for m in range(m_max + 1):
        grid = np.arange(-m, m + 1, 2)
        ii, jj = np.meshgrid(grid, grid, indexing="ij")
        ms.append(np.full(ii.size, m))
        is_.append(ii.ravel())
        js.append(jj.ravel())
    out = tuple(np.concatenate(a).astype(np.int64) for a in (ms, is_, js))
    for a in out:
        a.setflags(write=False)
    return out  # type: ignore[return-value]


# ─── Ladder coefficients ───

_TARGET = {
    "a+": (1, -1, -1),
    "a-": (-1, -1, -1),
    "b+": (1, 1, -1),
    "b-": (-1, 1, -1),
}


def _omq(k, logq):
    """1 - q**k for k > 0, accurate for small q**k."""
    return -np.expm1(k * logq)


def ladder_amplitudes(kind: str, m: np.ndarray, i2: np.ndarray, j2: np.ndarray, q: float) -> np.ndarray:
    """Matrix element of the split generator `kind` on e^{(m/2)}_{i2/2, j2/2}.

    Entries whose target label is invalid are 0.
    """
    if kind not in _TARGET:
        raise ValueError(f"unknown ladder kind {kind!r}")
    if not 0.0 <= q < 1.0:
        raise ValueError(f"q must lie in [0, 1), got {q}")
    m = np.asarray(m, dtype=np.int64)
    i2 = np.asarray(i2, dtype=np.int64)
    j2 = np.asarray(j2, dtype=np.int64)
    out = np.zeros(np.broadcast(m, i2, j2).shape)
    m, i2, j2 = np.broadcast_arrays(m, i2, j2)

    if kind == "a+":
        valid = np.ones(m.shape, dtype=bool)
    elif kind == "a-":
        valid = (i2 > -m) & (j2 > -m)
    elif kind == "b+":
        valid = np.ones(m.shape, dtype=bool)
    else:
        valid = (i2 < m) & (j2 > -m)

    if q == 0.0:
        if kind == "a-":
            out[valid] = 1.0
        elif kind == "b+":
            out[j2 == -m] = -1.0
        elif kind == "b-":
            out[valid & (i2 == -m)] = 1.0
        return out

    logq = np.log(q)
    mm, ii, jj = m[valid].astype(float), i2[valid].astype(float), j2[valid].astype(float)
    if kind == "a+":
        val = np.exp((mm + (ii + jj) / 2 + 1) * logq) * np.sqrt(
            _omq(mm - jj + 2, logq) * _omq(mm - ii + 2, logq)
            / (_omq(2 * mm + 2, logq) * _omq(2 * mm + 4, logq))
        )
    elif kind == "a-":
        val = np.sqrt(
            _omq(mm + jj, logq) * _omq(mm + ii, logq)
            / (_omq(2 * mm, logq) * _omq(2 * mm + 2, logq))
        )
    elif kind == "b+":
        val = -np.exp((mm + jj) / 2 * logq) * np.sqrt(
            _omq(mm - jj + 2, logq) * _omq(mm + ii + 2, logq)
            / (_omq(2 * mm + 2, logq) * _omq(2 * mm + 4, logq))
        )
    else:
        val = np.exp((mm + ii) / 2 * logq) * np.sqrt(
            _omq(mm + jj, logq) * _omq(mm - ii, logq)
            / (_omq(2 * mm, logq) * _omq(2 * mm + 2, logq))
        )
    out[valid] = val
    return out


def _doubled(x: Any) -> int:
    d = Fraction(x) * 2
    if d.denominator != 1:
        raise TruncationError(f"{x} is not a half-integer")
    return int(d)


def ladder_coeff(kind: str, n: Any, i: Any, j: Any, q: float) -> float:
    """Coefficient of a+, a-, b+ or b- at half-integer labels (n, i, j)."""
    idx = BasisIndex(_doubled(n), _doubled(i), _doubled(j))
    return float(ladder_amplitudes(kind, np.array([idx.m]), np.array([idx.i2]), np.array([idx.j2]), q)[0])


# ─── Operators ───

@dataclass(frozen=True, eq=False)
class ShiftOp:
    """Sparse operator on the truncated space, possibly tensored with C^blocks."""

    matrix: sp.csr_matrix
    trunc: Truncation
    reach: int = 0
    blocks: int = 1

    def __post_init__(self) -> None:
        n = self.trunc.dim * self.blocks
        if self.matrix.shape != (n, n):
            raise TruncationError(f"matrix shape {self.matrix.shape} does not match dimension {n}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def _like(self, matrix, reach: int) -> ShiftOp:
        return ShiftOp(sp.csr_matrix(matrix), self.trunc, reach, self.blocks)

    def _check(self, other: ShiftOp) -> None:
        if other.trunc != self.trunc or other.blocks != self.blocks:
            raise TruncationError("operators live on different truncations")

    def adjoint(self) -> ShiftOp:
        return self._like(self.matrix.conj().T, self.reach)

    def __matmul__(self, other: ShiftOp) -> ShiftOp:
        self._check(other)
        return self._like(self.matrix @ other.matrix, self.reach + other.reach)

    def __add__(self, other: ShiftOp) -> ShiftOp:
        self._check(other)
        return self._like(self.matrix + other.matrix, max(self.reach, other.reach))

    def __sub__(self, other: ShiftOp) -> ShiftOp:
        self._check(other)
        return self._like(self.matrix - other.matrix, max(self.reach, other.reach))

    def __neg__(self) -> ShiftOp:
        return self._like(-self.matrix, self.reach)

    def __mul__(self, c: complex) -> ShiftOp:
        return self._like(self.matrix * c, self.reach)

    __rmul__ = __mul__

    def shells(self) -> np.ndarray:
        """Shell label of every row/column, tiled over blocks."""
        return np.tile(basis_arrays(self.trunc.m_max)[0], self.blocks)

    def interior_max(self) -> int:
        return self.trunc.m_max - self.reach

    def boundary_shells(self) -> frozenset[int]:
        return frozenset(range(max(self.interior_max() + 1, 0), self.trunc.m_max + 1))

    def interior(self) -> sp.csr_matrix:
        """Matrix with columns on boundary shells removed."""
        keep = (self.shells() <= self.interior_max()).astype(float)
        return sp.csr_matrix(self.matrix @ sp.diags(keep))

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()

    def column(self, idx: BasisIndex, block: int = 0) -> list[tuple[BasisIndex, complex]]:
        col = self.matrix.getcol(block * self.trunc.dim + idx.position()).tocoo()
        return [(_label(self.trunc.m_max, r)[1], complex(v)) for r, v in zip(col.row, col.data) if v != 0]

    def entries(self) -> Iterator[tuple[tuple[int, ...], tuple[int, ...], complex]]:
        coo = self.matrix.tocoo()
        for r, c, v in sorted(zip(coo.row, coo.col, coo.data)):
            if v != 0:
                yield self._key(c), self._key(r), complex(v)

    def _key(self, pos: int) -> tuple[int, ...]:
        block, idx = _label(self.trunc.m_max, pos)
        lab = (idx.m, idx.i2, idx.j2)
        return (block, *lab) if self.blocks > 1 else lab

    def max_abs(self, interior: bool = False) -> float:
        mat = self.interior() if interior else self.matrix
        return float(abs(mat).max()) if mat.nnz else 0.0

    def to_json(self) -> dict[str, Any]:
        return {
            "m_max": self.trunc.m_max,
            "guard": self.trunc.guard,
            "reach": self.reach,
            "blocks": self.blocks,
            "entries": [[list(s), list(t), v.real, v.imag] for s, t, v in self.entries()],
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> ShiftOp:
        trunc = Truncation(data["m_max"], data["guard"])
        blocks = data.get("blocks", 1)
        n = trunc.dim
        rows, cols, vals = [], [], []
        for src, tgt, re, im in data["entries"]:
            rows.append(_pos(tgt, n, blocks))
            cols.append(_pos(src, n, blocks))
            vals.append(complex(re, im))
        mat = sp.csr_matrix((vals, (rows, cols)), shape=(n * blocks, n * blocks), dtype=complex)
        return cls(mat, trunc, data.get("reach", 0), blocks)


def _label(m_max: int, pos: int) -> tuple[int, BasisIndex]:
    n = shell_offset(m_max + 1)
    block, p = divmod(int(pos), n)
    ms, i2s, j2s = basis_arrays(m_max)
    return block, BasisIndex(int(ms[p]), int(i2s[p]), int(j2s[p]))


def _pos(label: list[int], n: int, blocks: int) -> int:
    block = 0
    if blocks > 1:
        block, *label = label
    return block * n + BasisIndex(*label).position()


def identity(trunc: Truncation, blocks: int = 1) -> ShiftOp:
    return ShiftOp(sp.identity(trunc.dim * blocks, dtype=complex, format="csr"), trunc, 0, blocks)


def diagonal_op(values: np.ndarray, trunc: Truncation, blocks: int = 1) -> ShiftOp:
    return ShiftOp(sp.diags(np.asarray(values, dtype=complex), format="csr"), trunc, 0, blocks)


@lru_cache(maxsize=64)
def _split_matrix(kind: str, q: float, m_max: int) -> sp.csr_matrix:
    ms, i2s, j2s = basis_arrays(m_max)
    dm, di, dj = _TARGET[kind]
    amp = ladder_amplitudes(kind, ms, i2s, j2s, q)
    keep = (amp != 0) & (ms + dm <= m_max) & (ms + dm >= 0)
    src = np.nonzero(keep)[0]
    tm, ti, tj = ms[keep] + dm, i2s[keep] + di, j2s[keep] + dj
    tgt = position(tm, ti, tj)
    n = shell_offset(m_max + 1)
    mat = sp.csr_matrix((amp[keep].astype(complex), (tgt, src)), shape=(n, n))
    mat.sort_indices()
    return mat


def build_generator(letter: str, q: float, trunc: Truncation) -> ShiftOp:
    """Image of one letter (a, a*, b, b*, a+, a-, b+, b-, or split adjoints).

    Targets beyond m_max are dropped; the source shell then lies in the
    boundary band of reach 1.
    """
    star = letter.endswith("*")
    base = letter[:-1] if star else letter
    if base in ("a", "b"):
        mat = _split_matrix(base + "+", q, trunc.m_max) + _split_matrix(base + "-", q, trunc.m_max)
    elif is_split(base) and base in _TARGET:
        mat = _split_matrix(base, q, trunc.m_max)
    else:
        raise ValueError(f"unknown generator {letter!r}")
    if star:
        mat = mat.conj().T
    return ShiftOp(sp.csr_matrix(mat), trunc, 1)


def word_operator(word: Word, q: float, trunc: Truncation) -> ShiftOp:
    op = identity(trunc)
    for letter in word:
        op = op @ build_generator(letter, q, trunc)
    return op


def poly_operator(x: NCPoly, q: float, trunc: Truncation) -> ShiftOp:
    out = ShiftOp(sp.csr_matrix((trunc.dim, trunc.dim), dtype=complex), trunc, 0)
    for w, c in x:
        out = out + word_operator(w, q, trunc) * c
    return out


# ─── Dirac operator ───

@dataclass(frozen=True, eq=False)
class DiracData:
    trunc: Truncation
    eigenvalues: np.ndarray

    @property
    def abs_eigenvalues(self) -> np.ndarray:
        return np.abs(self.eigenvalues)

    @property
    def D(self) -> ShiftOp:
        return diagonal_op(self.eigenvalues, self.trunc)

    @property
    def abs_d(self) -> ShiftOp:
        return diagonal_op(self.abs_eigenvalues, self.trunc)

    @property
    def F(self) -> ShiftOp:
        return diagonal_op(self.sign, self.trunc)

    @property
    def P(self) -> ShiftOp:
        return diagonal_op((1 + self.sign) / 2, self.trunc)

    @property
    def sign(self) -> np.ndarray:
        ms, i2s, _ = basis_arrays(self.trunc.m_max)
        return np.where(i2s == ms, 1.0, -1.0)

    def abs_d_power(self, y: float) -> ShiftOp:
        """|D|**y with 0 on ker D for negative y."""
        a = self.abs_eigenvalues
        vals = np.zeros_like(a)
        nz = a > 0
        vals[nz] = a[nz] ** y
        if y == 0:
            vals[~nz] = 1.0
        return diagonal_op(vals, self.trunc)


def dirac(trunc: Truncation) -> DiracData:
    """D e^{(n)}_{ij} = +2n if i = n, else -2n."""
    ms, i2s, _ = basis_arrays(trunc.m_max)
    eig = np.where(i2s == ms, ms, -ms).astype(float)
    eig.setflags(write=False)
    return DiracData(trunc, eig)


@dataclass(frozen=True, eq=False)
class Derivations:
    delta: ShiftOp
    nabla: ShiftOp
    commutator: ShiftOp


def commute_diagonal(values: np.ndarray, T: ShiftOp) -> ShiftOp:
    """[V, T] for the diagonal operator V with the given eigenvalues."""
    v = np.tile(np.asarray(values), T.blocks)
    coo = T.matrix.tocoo()
    data = (v[coo.row] - v[coo.col]) * coo.data
    mat = sp.csr_matrix((data, (coo.row, coo.col)), shape=T.matrix.shape)
    mat.eliminate_zeros()
    return ShiftOp(mat, T.trunc, T.reach, T.blocks)


def derivations(T: ShiftOp) -> Derivations:
    """delta = [|D|, T], nabla = [D^2, T] and [D, T], entrywise."""
    dd = dirac(T.trunc)
    return Derivations(
        delta=commute_diagonal(dd.abs_eigenvalues, T),
        nabla=commute_diagonal(dd.eigenvalues**2, T),
        commutator=commute_diagonal(dd.eigenvalues, T),
    )


# ─── Auxiliary representations on l^2(N) ───

@dataclass(frozen=True, eq=False)
class SeqOp:
    matrix: sp.csr_matrix
    x_max: int
    reach: int = 0

    def __matmul__(self, other: SeqOp) -> SeqOp:
        return SeqOp(sp.csr_matrix(self.matrix @ other.matrix), self.x_max, self.reach + other.reach)

    def __add__(self, other: SeqOp) -> SeqOp:
        return SeqOp(sp.csr_matrix(self.matrix + other.matrix), self.x_max, max(self.reach, other.reach))

    def __mul__(self, c: complex) -> SeqOp:
        return SeqOp(sp.csr_matrix(self.matrix * c), self.x_max, self.reach)

    __rmul__ = __mul__

    def apply(self, x: int) -> list[tuple[int, complex]]:
        col = self.matrix.getcol(x).tocoo()
        return [(int(r), complex(v)) for r, v in zip(col.row, col.data) if v != 0]

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()


def _qpow(q: float, x: np.ndarray) -> np.ndarray:
    if q == 0.0:
        return (x == 0).astype(float)
    return np.power(q, x)


@lru_cache(maxsize=64)
def _seq_letter(letter: str, q: float, x_max: int, sign: int) -> sp.csr_matrix:
    x = np.arange(x_max + 1)
    if letter[0] == "a":
        vals = np.sqrt(1.0 - _qpow(q, 2 * x[1:]))
        mat = sp.csr_matrix((vals.astype(complex), (x[:-1], x[1:])), shape=(x_max + 1, x_max + 1))
    else:
        mat = sp.diags((sign * _qpow(q, x)).astype(complex), format="csr")
    if letter.endswith("*"):
        mat = sp.csr_matrix(mat.conj().T)
    return mat


def pi_pm(x: NCPoly, q: float, x_max: int, sign: int = -1) -> SeqOp:
    """pi_+ (sign=+1) or pi_- (sign=-1): alpha e_x = sqrt(1-q^{2x}) e_{x-1}, beta e_x = sign q^x e_x."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    n = x_max + 1
    out = sp.csr_matrix((n, n), dtype=complex)
    for w, c in x:
        op = sp.identity(n, dtype=complex, format="csr")
        for letter in w:
            if letter not in ("a", "a*", "b", "b*"):
                raise ValueError(f"pi_pm is defined on the full alphabet, got {letter!r}")
            op = op @ _seq_letter(letter, q, x_max, sign)
        out = out + c * op
    return SeqOp(sp.csr_matrix(out), x_max, x.max_length)


# ─── Defining relations ───

def relation_residual(q: float, trunc: Truncation) -> dict[str, float]:
    """Sup-norm of each defining relation over source shells m <= m_max - guard."""
    if trunc.guard < 2:
        raise TruncationError("relation residuals need guard >= 2")
    a, b = build_generator("a", q, trunc), build_generator("b", q, trunc)
    a_s, b_s = a.adjoint(), b.adjoint()
    one = identity(trunc)
    rels = {
        "a*a + b*b = 1": a_s @ a + b_s @ b - one,
        "aa* + q^2 bb* = 1": a @ a_s + (b @ b_s) * q**2 - one,
        "ab = q ba": a @ b - (b @ a) * q,
        "ab* = q b*a": a @ b_s - (b_s @ a) * q,
        "bb* = b*b": b @ b_s - b_s @ b,
    }
    if q == 0.0:
        ms, i2s, j2s = basis_arrays(trunc.m_max)
        e = diagonal_op(((i2s == -ms) | (j2s == -ms)).astype(float), trunc)
        rels["q=0: bb* = e"] = b @ b_s - e
    keep = (basis_arrays(trunc.m_max)[0] <= trunc.interior_max).astype(float)
    out = {}
    for name, op in rels.items():
        mat = op.matrix @ sp.diags(keep)
        out[name] = float(abs(mat).max()) if mat.nnz else 0.0
    log.info("relation residuals q=%s m_max=%d: max %.3e", q, trunc.m_max, max(out.values()))
    return out



# ─── Second Dirac operator spectrum ───

@dataclass(frozen=True)
class DlsvSpectrum:
    """Spectrum of the equivariant Dirac operator, J = 2j doubled spin.

    Up sector: lambda = J + 3/2 with multiplicity (J+1)(J+2).
    Down sector: lambda = -(J + 1/2) with multiplicity (J+1)J.
    """

    j2_max: int
    eigenvalues: tuple[float, ...]
    multiplicities: tuple[int, ...]
    chirality: tuple[str, ...]

    def shells(self, sector: str = "all") -> tuple[np.ndarray, np.ndarray]:
        """(|lambda|, summed multiplicity) grouped by |lambda|, ascending."""
        acc: dict[float, int] = {}
        for lam, mult, chi in zip(self.eigenvalues, self.multiplicities, self.chirality):
            if sector != "all" and chi != sector:
                continue
            acc[abs(lam)] = acc.get(abs(lam), 0) + mult
        xs = np.array(sorted(acc))
        return xs, np.array([acc[x] for x in xs], dtype=float)


def dlsv_spectrum(j2_max: int) -> DlsvSpectrum:
    eig, mult, chi = [], [], []
    for J in range(j2_max + 1):
        eig.append(J + 1.5)
        mult.append((J + 1) * (J + 2))
        chi.append("up")
        if J > 0:
            eig.append(-(J + 0.5))
            mult.append((J + 1) * J)
            chi.append("down")
    return DlsvSpectrum(j2_max, tuple(eig), tuple(mult), tuple(chi))
