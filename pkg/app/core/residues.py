"""Shell traces, pole fits and the residue functionals built on them.

The zeta function Trace(T|D|^{-s}) of an operator is read off the shell
traces t(m) = sum of <e, T e> over the basis vectors with |D| = m. If
t(m) ~ sum_p c_p m^p, then Res_{s=p+1} Trace(T|D|^{-s}) = c_p; with the
z-normalisation |D|^{y-2z} every residue picks up a factor 1/2.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Any

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import zeta

from . import config
from .ncpoly import NCPoly, Word
from .representation import DlsvSpectrum, ShiftOp, Truncation, pi_pm, poly_operator

log = logging.getLogger(__name__)

ZETA_0 = -0.5
ZETA_M1 = -1.0 / 12.0
ZETA_M2 = 0.0


class ResidueError(RuntimeError):
    def __init__(self, message: str, **data: Any) -> None:
        super().__init__(message)
        self.data = data


# ─── Shell series ───

@dataclass(frozen=True, eq=False)
class ShellSeries:
    x: np.ndarray
    t: np.ndarray
    boundary_flags: frozenset[float] = frozenset()
    label: str = ""

    def valid(self) -> tuple[np.ndarray, np.ndarray]:
        keep = np.array([xv not in self.boundary_flags for xv in self.x], dtype=bool)
        return self.x[keep], self.t[keep]

    def rows(self) -> list[tuple[float, float, float, bool]]:
        return [(float(x), float(t.real), float(t.imag), float(x) in self.boundary_flags) for x, t in zip(self.x, self.t)]

    def to_json(self) -> dict[str, Any]:
        return {
            "label": self.label,
            "x": self.x.tolist(),
            "t": [[v.real, v.imag] for v in self.t],
            "boundary": sorted(self.boundary_flags),
        }


def shell_traces(T: ShiftOp, label: str = "") -> ShellSeries:
    """t(m) for m = 1..m_max; shells beyond m_max - reach are flagged."""
    m_max = T.trunc.m_max
    shells = T.shells()
    diag = np.asarray(T.diagonal(), dtype=complex)
    t = np.bincount(shells, weights=diag.real, minlength=m_max + 1) + 1j * np.bincount(
        shells, weights=diag.imag, minlength=m_max + 1
    )
    flags = frozenset(float(m) for m in range(max(T.interior_max() + 1, 1), m_max + 1))
    x = np.arange(1, m_max + 1, dtype=float)
    return ShellSeries(x, t[1:], flags, label)


def write_shell_csv(series: ShellSeries, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["m", "re", "im", "boundary"])
        writer.writerows(series.rows())
    return path


def dlsv_series(spec: DlsvSpectrum, sector: str = "all") -> ShellSeries:
    """Multiplicity counts of the second Dirac operator grouped by |lambda|.

    The outermost |lambda| only receives the up sector and is flagged.
    """
    xs, mult = spec.shells(sector)
    return ShellSeries(xs, mult.astype(complex), frozenset({float(xs[-1])}), f"dlsv:{sector}")


# ─── Pole fits ───

@dataclass(frozen=True)
class FitModel:
    top: int = 2
    negative: int = 2
    geometric: bool = False
    log_power: int | None = None
    log_order: int = 0

    @property
    def powers(self) -> list[int]:
        return list(range(self.top, -self.negative - 1, -1))

    @property
    def n_coeffs(self) -> int:
        return len(self.powers) + (2 if self.geometric else 0) + (self.log_order if self.log_power is not None else 0)


@dataclass(frozen=True)
class GeometricTerm:
    amplitude: complex
    ratio: float
    x_ref: float

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.amplitude * np.power(self.ratio, np.asarray(x) - self.x_ref)


@dataclass(frozen=True)
class PoleFit:
    coeffs: dict[int, complex]
    window: tuple[float, float]
    rms: float
    condition: float
    model: FitModel
    log_coeffs: dict[int, complex] = field(default_factory=dict)
    geometric: GeometricTerm | None = None
    n_points: int = 0

    def coeff(self, p: int) -> complex:
        return self.coeffs.get(p, 0j)

    @property
    def c2(self) -> complex:
        return self.coeff(2)

    @property
    def c1(self) -> complex:
        return self.coeff(1)

    @property
    def c0(self) -> complex:
        return self.coeff(0)

    @property
    def c_neg1(self) -> complex:
        return self.coeff(-1)

    @property
    def c_neg2(self) -> complex:
        return self.coeff(-2)

    def polynomial(self, x: np.ndarray) -> np.ndarray:
        """Nonnegative-power part."""
        x = np.asarray(x, dtype=float)
        return sum((c * x**p for p, c in self.coeffs.items() if p >= 0), np.zeros_like(x, dtype=complex))

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "coeffs": {str(p): [c.real, c.imag] for p, c in sorted(self.coeffs.items(), reverse=True)},
            "window": list(self.window),
            "rms": self.rms,
            "condition": self.condition,
            "n_points": self.n_points,
        }
        if self.log_coeffs:
            out["log_coeffs"] = {str(k): [c.real, c.imag] for k, c in self.log_coeffs.items()}
        if self.geometric is not None:
            g = self.geometric
            out["geometric"] = {"amplitude": [g.amplitude.real, g.amplitude.imag], "ratio": g.ratio, "x_ref": g.x_ref}
        return out


def _design(x: np.ndarray, model: FitModel, scale: float) -> np.ndarray:
    cols = [(x / scale) ** p for p in model.powers]
    if model.log_power is not None:
        for j in range(1, model.log_order + 1):
            cols.append((x / scale) ** model.log_power * np.log(x / scale) ** j)
    return np.column_stack(cols)


def _window(x: np.ndarray, model: FitModel, window: tuple[float, float] | None) -> tuple[float, float]:
    if window is not None:
        return window
    xs = np.sort(x)
    hi = float(xs[-1])
    span = 2 * model.n_coeffs
    lo = min(hi / 2, hi - span)
    need = max(12, model.n_coeffs + 1)
    if xs.size >= need:
        lo = min(lo, float(xs[-need]))
    return max(float(xs[0]), lo), hi


def fit_poles(series: ShellSeries, model: FitModel | None = None, window: tuple[float, float] | None = None) -> PoleFit:
    """Least-squares fit of t(x) ~ sum_p c_p x^p (+ log terms)(+ A r^x) on unflagged shells."""
    model = model or FitModel()
    xs, ts = series.valid()
    if xs.size == 0:
        raise ResidueError("no unflagged shells", label=series.label)
    lo, hi = _window(xs, model, window)
    sel = (xs >= lo) & (xs <= hi)
    x, t = xs[sel], ts[sel]
    if x.size < max(12, model.n_coeffs + 1) or hi - lo < 2 * model.n_coeffs:
        raise ResidueError(
            f"window [{lo}, {hi}] holds {x.size} shells, too few for {model.n_coeffs} coefficients",
            window=(lo, hi),
            n_points=int(x.size),
        )
    A = _design(x, model, hi)
    cond = float(np.linalg.cond(A))
    if cond > config.MAX_CONDITION:
        raise ResidueError(f"ill-conditioned fit window (cond {cond:.3e})", condition=cond, window=(lo, hi))

    geo: GeometricTerm | None = None
    if model.geometric:
        def resid(r: float) -> float:
            G = np.column_stack([A, r ** (x - lo)])
            sol, *_ = np.linalg.lstsq(G, t, rcond=None)
            return float(np.linalg.norm(G @ sol - t))

        best = minimize_scalar(resid, bounds=(1e-3, 0.95), method="bounded")
        r = float(best.x)
        G = np.column_stack([A, r ** (x - lo)])
        sol, *_ = np.linalg.lstsq(G, t, rcond=None)
        geo = GeometricTerm(complex(sol[-1]), r, lo)
        resid_vec = G @ sol - t
        sol = sol[:-1]
    else:
        sol, *_ = np.linalg.lstsq(A, t, rcond=None)
        resid_vec = A @ sol - t

    n_pow = len(model.powers)
    coeffs = {p: complex(sol[i]) / hi**p for i, p in enumerate(model.powers)}
    log_coeffs: dict[int, complex] = {}
    if model.log_power is not None:
        # columns use log(x/hi); expand (log x - log hi)^j back into powers of log x
        p, h = model.log_power, math.log(hi)
        scaled = [complex(sol[n_pow + j - 1]) / hi**p for j in range(1, model.log_order + 1)]
        for i in range(0, model.log_order + 1):
            c = sum(
                scaled[j - 1] * math.comb(j, i) * (-h) ** (j - i)
                for j in range(max(i, 1), model.log_order + 1)
            )
            if i == 0:
                coeffs[p] = coeffs.get(p, 0j) + c
            else:
                log_coeffs[i] = complex(c)
    rms = float(np.sqrt(np.mean(np.abs(resid_vec) ** 2)))
    log.debug("fit %s window=[%s, %s] cond=%.2e rms=%.2e", series.label, lo, hi, cond, rms)
    return PoleFit(coeffs, (lo, hi), rms, cond, model, log_coeffs, geo, int(x.size))


# ─── Residues ───

def _series(T: ShiftOp | ShellSeries) -> ShellSeries:
    return T if isinstance(T, ShellSeries) else shell_traces(T)


def residue(
    T: ShiftOp | ShellSeries,
    y: int = -3,
    k: int = 0,
    convention: str = "wres",
    model: FitModel | None = None,
) -> complex:
    """Residue of T|D|^y.

    convention "wres": Res_{z=0} Trace(T|D|^{y-z}) (the Wodzicki-type residue);
    convention "tau": tau_k(T|D|^y) = Res_{z=0} z^k Trace(T|D|^{y-2z}).
    Higher tau_k read the log-power terms of the shell traces.
    """
    if convention not in ("wres", "tau"):
        raise ValueError(f"unknown residue convention {convention!r}")
    p = -y - 1
    series = _series(T)
    if k == 0:
        fit = fit_poles(series, model or FitModel(top=max(2, p)))
        c = fit.coeff(p)
        return c if convention == "wres" else c / 2
    if convention != "tau":
        raise ValueError("higher-order residues exist only in the tau convention")
    if k > 2:
        raise ValueError("log terms are fitted up to order 2")
    fit = fit_poles(series, model or FitModel(top=max(2, p), negative=1, log_power=p, log_order=2))
    return fit.log_coeffs.get(k, 0j) / 4


@dataclass
class ResidueReport:
    tau: dict[tuple[int, int], complex]
    wres: dict[int, complex]
    phi0: complex | None
    fit: PoleFit
    convention_note: str = (
        "wres(T|D|^y) = c_{-y-1}; tau_0(T|D|^y) = c_{-y-1}/2; tau_k for k >= 1 from log-power terms"
    )

    def to_json(self) -> dict[str, Any]:
        return {
            "tau": [[k, y, v.real, v.imag] for (k, y), v in sorted(self.tau.items())],
            "wres": [[y, v.real, v.imag] for y, v in sorted(self.wres.items())],
            "phi0": None if self.phi0 is None else [self.phi0.real, self.phi0.imag],
            "fit": self.fit.to_json(),
            "convention_note": self.convention_note,
        }


def residue_report(T: ShiftOp | ShellSeries, ys: tuple[int, ...] = (-1, -2, -3), geometric: bool = False) -> ResidueReport:
    series = _series(T)
    fit = fit_poles(series, FitModel(geometric=geometric))
    wres = {y: fit.coeff(-y - 1) for y in ys}
    tau = {(0, y): v / 2 for y, v in wres.items()}
    for k in (1, 2):
        try:
            tau[(k, -3)] = residue(series, -3, k, "tau")
        except ResidueError as exc:
            log.warning("tau_%d fit skipped: %s", k, exc)
    try:
        phi0 = regularized_trace(series, geometric=geometric).value
    except ResidueError as exc:
        log.warning("phi0 skipped: %s", exc)
        phi0 = None
    return ResidueReport(tau, wres, phi0, fit)


# ─── Regularised and convergent traces ───

@dataclass(frozen=True)
class RegularizedTrace:
    value: complex
    divergent_part: complex
    remainder: complex
    tail: complex
    tail_bound: float
    fit: PoleFit


def regularized_trace(series: ShellSeries, geometric: bool = False) -> RegularizedTrace:
    """Trace(T|D|^{-s}) continued to s = 0, for shell traces ~ c2 m^2 + c1 m + c0 + O(1/m^2)."""
    fit = fit_poles(series, FitModel(top=2, negative=2, geometric=geometric))
    scale = max(1.0, abs(fit.c2), abs(fit.c1), abs(fit.c0))
    if abs(fit.c_neg1) > 1e-6 * scale:
        raise ResidueError("remainder does not decay fast enough to be summed", c_neg1=fit.c_neg1)
    xs, ts = series.valid()
    rem = ts - fit.polynomial(xs)
    x_last = float(xs.max())
    tail = fit.c_neg2 * zeta(2, x_last + 1)
    if fit.geometric is not None:
        g = fit.geometric
        tail += g(x_last + 1) / (1 - g.ratio)
    divergent = fit.c2 * ZETA_M2 + fit.c1 * ZETA_M1 + fit.c0 * ZETA_0
    remainder = complex(rem.sum())
    tail_bound = float(abs(rem[-1])) * x_last
    value = divergent + remainder + tail
    log.debug("regularized trace %s: %s (tail %.2e)", series.label, value, tail_bound)
    return RegularizedTrace(complex(value), complex(divergent), remainder, complex(tail), tail_bound, fit)


def phi0_reg(T: ShiftOp | ShellSeries, geometric: bool = False) -> complex:
    """phi_0(T) = Trace(T|D|^{-s}) at s = 0, kernel shell excluded."""
    return regularized_trace(_series(T), geometric=geometric).value


def convergent_trace(T: ShiftOp | ShellSeries, s: float) -> complex:
    """sum_m t(m) m^{-s}, completed with Hurwitz tails of the fitted powers."""
    series = _series(T)
    fit = fit_poles(series, FitModel(top=2, negative=2))
    xs, ts = series.valid()
    scale = max(1.0, *(abs(c) for c in fit.coeffs.values()))
    for p, c in fit.coeffs.items():
        if s - p <= 1 and abs(c) > 1e-8 * scale:
            raise ResidueError(f"sum diverges: power {p} with s = {s}", coeff=c)
    x_last = float(xs.max())
    partial = complex(np.sum(ts * xs ** (-s)))
    tail = sum(c * zeta(s - p, x_last + 1) for p, c in fit.coeffs.items() if s - p > 1)
    return partial + complex(tail)


def exact_identity_residues() -> dict[int, float]:
    """Res_{s=k} of sum_m (m+1)^2 m^{-s} = zeta(s-2) + 2 zeta(s-1) + zeta(s)."""
    return {3: 1.0, 2: 2.0, 1: 1.0}


def dlsv_hurwitz_trace(s: float, sector: str = "all") -> float:
    """Exact sum over |lambda| = L + 1/2, L >= 1, of (lambda^2 - 1/4) lambda^{-s} per sector."""
    one = float(zeta(s - 2, 1.5) - 0.25 * zeta(s, 1.5))
    return 2 * one if sector == "all" else one


# ─── Special series ───

def F_k(k: int, q: float) -> float:
    """sum_{x>=0} (prod_{j=1}^k (1 - q^{2(j+x)}) - 1)."""
    if not 0.0 <= q < 1.0:
        raise ValueError(f"q must lie in [0, 1), got {q}")
    if k == 0 or q == 0.0:
        return 0.0
    n_terms = int(math.ceil(math.log(1e-18) / (2 * math.log(q)))) + 2
    x = np.arange(n_terms)[:, None]
    j = np.arange(1, k + 1)[None, :]
    terms = np.expm1(np.log1p(-(q ** (2 * (j + x)))).sum(axis=1))
    last = abs(terms[-1])
    if last * q**2 / (1 - q**2) > 1e-14:
        log.warning("F_%d(%s) tail bound %.2e", k, q, last)
    return float(terms.sum())


def tau0_pi(x: NCPoly, q: float, sign: int = -1, x_max: int | None = None, tol: float | None = None) -> complex:
    """lim_N Trace_N(pi(x)) - N tau_1(x) in pi_+ (sign=+1) or pi_- (sign=-1), Trace_N summing eps_0..eps_N."""
    from .symbols import sigma_q

    tol = config.TAU0_TOL if tol is None else tol
    reach = x.max_length
    if x_max is None:
        x_max = 2 * reach + 10
        if q > 0:
            x_max += int(math.ceil(math.log(1e-18) / math.log(q)))
    tau1 = sigma_q(x).mean()
    op = pi_pm(x, q, x_max, sign=sign)
    d = op.diagonal()[: x_max - reach + 1] - tau1
    if d.size < 2:
        raise ResidueError("truncation too small for the word length", x_max=x_max, reach=reach)
    if abs(d[-1]) > tol:
        raise ResidueError("tau_0 sequence has not converged", partial=complex(d.sum()), last=complex(d[-1]))
    tail = 0j
    if abs(d[-2]) > 0 and abs(d[-1]) < abs(d[-2]):
        r = abs(d[-1]) / abs(d[-2])
        tail = d[-1] * r / (1 - r)
    return complex(tau1 + d.sum() + tail)


def tau0_pi_minus(x: NCPoly, q: float, x_max: int | None = None, tol: float | None = None) -> complex:
    return tau0_pi(x, q, -1, x_max, tol)


@lru_cache(maxsize=100_000)
def disk_functionals(word: Word, q: float, sign: int) -> tuple[complex, complex]:
    """(tau_1, tau_0) of a full-alphabet word; the empty word gives (1, 1)."""
    from .symbols import sigma_q

    x = NCPoly.word(*word)
    return complex(sigma_q(x).mean()), tau0_pi(x, q, sign)


@dataclass(frozen=True)
class HValues:
    k: int
    q: float
    regularized: complex
    explicit: complex | None


def H_k(k: int, q: float, m_max: int = 40, geometric: bool | None = None) -> HValues:
    """phi_0([alpha^k, alpha*^k]) by the regularised trace and, at q = 0, the explicit cochain."""
    from .symbols import phi0_explicit

    a, a_s = NCPoly.word(*("a",) * k), NCPoly.word(*("a*",) * k)
    comm = a * a_s - a_s * a
    if comm.is_zero():
        return HValues(k, q, 0j, 0j if q == 0 else None)
    trunc = Truncation(m_max, 2 * k)
    geo = q > 0 if geometric is None else geometric
    reg = phi0_reg(poly_operator(comm, q, trunc), geometric=geo)
    explicit = phi0_explicit(comm) if q == 0 else None
    return HValues(k, q, reg, explicit)


