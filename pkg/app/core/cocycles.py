"""Cochains on universal forms: phi_2, phi_3 = b phi_2, chi, tau_1, phi_0 and phi_1.

Symbolic routes are exact: phi_2 and phi_3 through sigma_q and Fourier
arithmetic, phi_1 through the disk factorisation of the shell traces.
The residue (cm) routes represent the form on the truncated Hilbert space
and read residues from pole fits of the shell traces. The cocycle route
assembles phi_1 from tau_1 or chi, b phi_0 and B phi_2.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterator

from . import config
from .forms import FormError, MatForm, represent
from .ncpoly import NCPoly
from .representation import ShiftOp, Truncation, commute_diagonal, dirac, poly_operator, word_operator
from .residues import FitModel, disk_functionals, phi0_reg, residue, tau0_pi_minus
from .symbols import (
    FourierPoly,
    canonical_q0,
    cap_word,
    degree0,
    del_derivative,
    delta,
    disk_word,
    phi0_explicit,
    symbol_degree,
)

log = logging.getLogger(__name__)

PHI1_ROUTES = ("symbolic", "cm", "cocycle")

# Index(P u P) = INDEX_NORMALIZATION * (phi_1(u* du) - phi_3(u* du du* du)) for
# the residue-normalised cochains; the action is built from the same rescaling.
INDEX_NORMALIZATION = -0.5


def _check_degree(omega: MatForm, degree: int, name: str) -> None:
    if omega.degree != degree:
        raise FormError(f"{name} is defined on {degree}-forms, got degree {omega.degree}")


def _symbol_terms(omega: MatForm) -> Iterator[tuple[tuple[int, ...], complex]]:
    """(symbol degrees, coefficient) of every traced term with a nonzero symbol."""
    for words, c in omega.scalar_terms():
        degs = tuple(symbol_degree(w) for w in words)
        if None not in degs:
            yield degs, c


# ─── Circle cochains ───

def circle_phi2(f0: FourierPoly, f1: FourierPoly, f2: FourierPoly) -> complex:
    """-(1/24)(1/2 pi i) int f0 f1' f2'' dtheta."""
    return 1j / 24 * (f0 * f1.derivative() * f2.derivative(2)).mean()


def circle_phi3(f0: FourierPoly, f1: FourierPoly, f2: FourierPoly, f3: FourierPoly) -> complex:
    """-(1/12)(1/2 pi i) int f0 f1' f2' f3' dtheta."""
    return 1j / 12 * (f0 * f1.derivative() * f2.derivative() * f3.derivative()).mean()


def circle_phi1(f0: FourierPoly, f1: FourierPoly) -> complex:
    """Winding functional (1/2 pi i) int f0 f1' dtheta; u* du gives 1."""
    return -1j * (f0 * f1.derivative()).mean()


# ─── phi_2 and phi_3 ───

def phi2(omega: MatForm) -> complex:
    """Pullback of circle_phi2 by sigma_q; on monomials u^a du^b du^c it is b c^2 / 24 when a+b+c = 0."""
    _check_degree(omega, 2, "phi2")
    total = 0j
    for (a, b, c), coef in _symbol_terms(omega):
        if a + b + c == 0:
            total += coef * b * c * c / 24
    return total


def phi3(omega: MatForm) -> complex:
    """b phi_2 evaluated termwise: d1 d2 d3 / 12 on balanced monomials."""
    _check_degree(omega, 3, "phi3")
    total = 0j
    for (d0, d1, d2, d3), coef in _symbol_terms(omega):
        if d0 + d1 + d2 + d3 == 0:
            total += coef * d1 * d2 * d3 / 12
    return total


def phi3_boundary(omega: MatForm) -> complex:
    """phi_2(b omega); agrees with phi3 exactly."""
    _check_degree(omega, 3, "phi3")
    return phi2(omega.b())


def _fit_model(q: float, p: int) -> FitModel:
    return FitModel(top=max(2, p), negative=2, geometric=q > 0)


def phi3_cm(omega: MatForm, q: float, trunc: Truncation, convention: str = "wres") -> complex:
    """(1/12) residue of pi(a0)[D,a1][D,a2][D,a3] |D|^{-3}."""
    _check_degree(omega, 3, "phi3")
    if trunc.guard < 7:
        raise FormError("the residue route for phi3 needs guard >= 7")
    traced = omega.trace()
    if traced.is_zero():
        return 0j
    op = represent(traced, q, trunc)
    return residue(op, -3, 0, convention, _fit_model(q, 2)) / 12


# ─── phi_0 and tau_1 ───

def _commutator_poly(omega: MatForm) -> NCPoly:
    """b(omega) of a 1-form, traced, as an algebra element."""
    out = NCPoly.zero()
    for (w0, w1), c in omega.scalar_terms():
        x, y = NCPoly.word(*w0), NCPoly.word(*w1)
        out = out + (x * y - y * x) * c
    return out


def phi0(x: NCPoly, q: float, route: str = "auto", m_max: int = 40) -> complex:
    """Explicit q = 0 cochain or the zeta-regularised trace."""
    if route == "auto":
        route = "explicit" if q == 0 else "regularized"
    if route == "explicit":
        if q != 0:
            raise ValueError("the explicit phi0 exists only at q = 0")
        return phi0_explicit(x)
    if route != "regularized":
        raise ValueError(f"unknown phi0 route {route!r}")
    if x.is_zero():
        return 0j
    trunc = Truncation(m_max, max(2, x.max_length))
    return phi0_reg(poly_operator(x, q, trunc), geometric=q > 0)


def tau1_q0(omega: MatForm) -> complex:
    """tau_1(x dy) = (1/pi i) int f dg on matching canonical terms, 0 otherwise."""
    _check_degree(omega, 1, "tau1")
    total = 0j
    for (w0, w1), c in omega.scalar_terms():
        left = canonical_q0(NCPoly.word(*w0))
        right = canonical_q0(NCPoly.word(*w1))
        for (k, p, l), cx in left.items():
            if p is None:
                continue
            for (k2, p2, l2), cy in right.items():
                if p2 is None or l2 != k or k2 != l or p + p2 != 0:
                    continue
                total += c * cx * cy * 2 * p2
    return total


# ─── chi ───

def chi(omega: MatForm, q: float) -> complex:
    """tau_0(r_-((a0 del a1)^0)) + (1/2 pi i) int sigma(a0) sigma(a1)''/2."""
    _check_degree(omega, 1, "chi")
    if not 0.0 < q < 1.0:
        raise ValueError("chi is defined for 0 < q < 1")
    inner = NCPoly.zero()
    sigma_part = 0j
    for (w0, w1), c in omega.scalar_terms():
        inner = inner + NCPoly.word(*w0) * del_derivative(NCPoly.word(*w1)) * c
        d0, d1 = symbol_degree(w0), symbol_degree(w1)
        if d0 is not None and d1 is not None and d0 + d1 == 0:
            sigma_part += c * 1j * d1 * d1 / 2
    inner = degree0(inner, "del")
    tau_part = tau0_pi_minus(inner, q) if not inner.is_zero() else 0j
    return tau_part + sigma_part


# ─── phi_1 ───

@dataclass(frozen=True)
class Phi1Parts:
    route: str
    main_name: str
    main: complex
    bphi0: complex
    Bphi2: complex

    @property
    def total(self) -> complex:
        return self.main + self.bphi0 + self.Bphi2

    def to_json(self) -> dict:
        return {
            "route": self.route,
            self.main_name: [self.main.real, self.main.imag],
            "bphi0": [self.bphi0.real, self.bphi0.imag],
            "Bphi2": [self.Bphi2.real, self.Bphi2.imag],
            "total": [self.total.real, self.total.imag],
        }


def Bphi2(omega: MatForm) -> complex:
    """phi_2(B omega) = d0^3 / 12 on balanced monomials."""
    _check_degree(omega, 1, "B phi2")
    return sum((c * d0**3 / 12 for (d0, d1), c in _symbol_terms(omega) if d0 + d1 == 0), 0j)


def phi1_parts(omega: MatForm, q: float, phi0_route: str = "auto", m_max: int = 40) -> Phi1Parts:
    """tau_1 (q = 0) or chi, plus b phi_0 and B phi_2."""
    _check_degree(omega, 1, "phi1")
    if q == 0:
        main_name, main = "tau1", tau1_q0(omega)
    else:
        main_name, main = "chi", chi(omega, q)
    comm = _commutator_poly(omega)
    b0 = phi0(comm, q, phi0_route, m_max) if not comm.is_zero() else 0j
    return Phi1Parts("cocycle", main_name, main, b0, Bphi2(omega))


@dataclass(frozen=True)
class ShellCoefficients:
    """t(m) ~ b2 m^2 + b1 m + b0 over all of shell m, c1 m + c0 over its cap."""

    b2: complex = 0j
    b1: complex = 0j
    b0: complex = 0j
    c1: complex = 0j
    c0: complex = 0j


def shell_coefficients(x: NCPoly, q: float) -> ShellCoefficients:
    b2 = b1 = b0 = c1 = c0 = 0j
    for w, c in degree0(x, "gamma"):
        coeff, first, second = disk_word(w, q)
        if coeff != 0:
            s1, s0 = disk_functionals(first, q, 1)
            t1, t0 = disk_functionals(second, q, -1)
            k = c * coeff
            b2 += k * s1 * t1
            b1 += k * (s1 * t0 + s0 * t1)
            b0 += k * s0 * t0
        cap = cap_word(w)
        if cap is not None:
            u1, u0 = disk_functionals(cap, q, -1)
            c1 += c * u1
            c0 += c * u0
    return ShellCoefficients(b2, b1, b0, c1, c0)


def phi1_symbolic(omega: MatForm, q: float) -> complex:
    """Residue formula for phi_1 evaluated exactly on the disk factorisation.

    With F = sign(D) commuting with the algebra up to smoothing operators,
    a0[D,a1]|D|^-1 - 1/4 a0 nabla([D,a1])|D|^-3 + 1/8 a0 nabla^2([D,a1])|D|^-5
    has residue W_1 - W_2/2 + W_3/4 with W_k = Res Trace(F a0 delta^k(a1) |D|^{-k-z}).
    F = 2 P_cap - 1 splits W_k into the whole-shell and cap coefficients.
    """
    _check_degree(omega, 1, "phi1")
    total = 0j
    for (w0, w1), c in omega.scalar_terms():
        a0, d = NCPoly.word(*w0), NCPoly.word(*w1)
        w = []
        for _ in range(3):
            d = delta(d)
            w.append(shell_coefficients(a0 * d, q))
        total += c * ((2 * w[0].c0 - w[0].b0) - (2 * w[1].c1 - w[1].b1) / 2 - w[2].b2 / 4)
    return total


def phi1_cm(omega: MatForm, q: float, trunc: Truncation, convention: str = "wres") -> complex:
    """Residue formula with pole fits: a0[D,a1]|D|^-1 - 1/4 a0 nabla([D,a1])|D|^-3 + 1/8 a0 nabla^2([D,a1])|D|^-5."""
    _check_degree(omega, 1, "phi1")
    if trunc.guard < 4:
        raise FormError("the residue route for phi1 needs guard >= 4")
    eig = dirac(trunc).eigenvalues
    sq = eig**2
    terms = list(omega.scalar_terms())
    if not terms:
        return 0j
    ops: list[ShiftOp | None] = [None, None, None]
    for (w0, w1), c in terms:
        a0, a1 = word_operator(w0, q, trunc), word_operator(w1, q, trunc)
        comm = commute_diagonal(eig, a1)
        nab = commute_diagonal(sq, comm)
        for i, part in enumerate((comm, nab, commute_diagonal(sq, nab))):
            piece = (a0 @ part) * c
            ops[i] = piece if ops[i] is None else ops[i] + piece
    weights = ((1.0, -1), (-0.25, -3), (0.125, -5))
    total = 0j
    for op, (w, y) in zip(ops, weights):
        # shell traces of a0 nabla^k([D,a1]) are O(m^{k+2}), k = p / 2
        p = -y - 1
        total += w * residue(op, y, 0, convention, FitModel(top=p // 2 + 2, negative=2, geometric=q > 0))
    return total


def phi1(omega: MatForm, q: float, route: str = "symbolic", trunc: Truncation | None = None, phi0_route: str = "auto") -> complex:
    if route == "symbolic":
        return phi1_symbolic(omega, q)
    if route == "cocycle":
        m_max = trunc.m_max if trunc is not None else config.M_MAX
        return phi1_parts(omega, q, phi0_route, m_max).total
    if route == "cm":
        return phi1_cm(omega, q, trunc or Truncation(config.M_MAX, config.GUARD))
    raise ValueError(f"unknown phi1 route {route!r}")
