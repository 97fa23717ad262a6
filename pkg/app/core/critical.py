"""Stationary points of the shifted Chern-Simons action in the Re_kl / Im_kl coordinates.

The action is a cubic polynomial in the coefficient cells. Searches drive
the gradient of its real part to zero; since the cubic is indefinite they
minimise the merit 0.5 |grad|^2 rather than the action itself.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import config
from .action import closed_phi1, closed_phi3, phi1_weights, shift_sums
from .cocycles import INDEX_NORMALIZATION
from .symbols import ActionCoefficients

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class StationaryProblem:
    q: float
    k_level: int
    K: int
    w_re: np.ndarray
    w_im: np.ndarray
    include_phi3: bool = True
    include_cubic: bool = True
    include_phi1: bool = True
    constraint: str = "none"
    phi1_route: str = "closed-form/exact"

    @classmethod
    def build(
        cls,
        q: float,
        k_level: int = 1,
        K: int = 1,
        weights: str = "exact",
        chi_constant: str = "trace",
        rho_bound: str = "symmetric",
        m_max: int = 40,
        **flags: Any,
    ) -> StationaryProblem:
        w_re, w_im = phi1_weights(K, q, weights, chi_constant, rho_bound, m_max)
        label = "closed-form/exact" if weights == "exact" else f"closed-form/printed/{chi_constant}/{rho_bound}"
        return cls(q, k_level, K, w_re, w_im, phi1_route=label, **flags)

    @property
    def side(self) -> int:
        return 2 * self.K + 1

    @property
    def n_vars(self) -> int:
        return 4 * self.side**2

    def unpack(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        n = self.side**2
        s = (self.side, self.side)
        re = (x[:n] + 1j * x[n : 2 * n]).reshape(s)
        im = (x[2 * n : 3 * n] + 1j * x[3 * n :]).reshape(s)
        return re, im

    def pack(self, re: np.ndarray, im: np.ndarray) -> np.ndarray:
        return np.concatenate([re.real.ravel(), re.imag.ravel(), im.real.ravel(), im.imag.ravel()])

    def project(self, x: np.ndarray) -> np.ndarray:
        """Orthogonal projection onto Re_{-k,-l} = conj(Re_kl), Im_{-k,-l} = -conj(Im_kl)."""
        if self.constraint == "none":
            return x
        re, im = self.unpack(x)
        re2 = 0.5 * (re + np.conj(re[::-1, ::-1]))
        im2 = 0.5 * (im - np.conj(im[::-1, ::-1]))
        return self.pack(re2, im2)

    def to_json(self) -> dict[str, Any]:
        return {
            "q": self.q,
            "k_level": self.k_level,
            "K": self.K,
            "n_vars": self.n_vars,
            "include_phi3": self.include_phi3,
            "include_cubic": self.include_cubic,
            "include_phi1": self.include_phi1,
            "constraint": self.constraint,
            "phi1_route": self.phi1_route,
        }


def action_value(p: StationaryProblem, x: np.ndarray) -> complex:
    re, im = p.unpack(x)
    k = p.k_level
    total = 0j
    if p.include_phi3:
        total += 6 * math.pi * k * closed_phi3(re, im, 1.0 / 18.0 if p.include_cubic else 0.0)
    if p.include_phi1:
        total -= 2 * math.pi * k * closed_phi1(re, im, p.w_re, p.w_im)
    return complex(INDEX_NORMALIZATION * total)


def _holomorphic_grad(p: StationaryProblem, re: np.ndarray, im: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """dS/dRe_kl and dS/dIm_kl of the complex action."""
    K, side = p.K, p.side
    lev = p.k_level
    ks = np.arange(-K, K + 1)
    kk, ll = np.meshgrid(ks, ks, indexing="ij")
    s_idx = ll - kk + 2 * K
    neg_idx = 4 * K - s_idx
    g_re = np.zeros((side, side), dtype=complex)
    g_im = np.zeros((side, side), dtype=complex)
    if p.include_phi3:
        g, r = shift_sums(re, im)
        g_re += 6 * math.pi * lev * (-(kk * ll) * g[neg_idx] / 12)
        coupling = -r[neg_idx] / 12
        if p.include_cubic:
            gg = np.convolve(g, g)
            # (g * g)(-s) sits at index 4K - s in the convolution
            coupling = coupling + 3.0 / 18.0 * gg[4 * K - (s_idx - 2 * K)]
        g_im += 6 * math.pi * lev * ll * coupling
    if p.include_phi1:
        g_re[np.diag_indices(side)] -= 2 * math.pi * lev * p.w_re
        g_im[np.diag_indices(side)] -= 2 * math.pi * lev * p.w_im
    return INDEX_NORMALIZATION * g_re, INDEX_NORMALIZATION * g_im


def eval_and_grad(p: StationaryProblem, x: np.ndarray) -> tuple[float, np.ndarray]:
    """Re S and its gradient in the real coordinates."""
    x = np.asarray(x, dtype=float)
    if x.shape != (p.n_vars,):
        raise ValueError(f"point must have {p.n_vars} coordinates")
    re, im = p.unpack(x)
    g_re, g_im = _holomorphic_grad(p, re, im)
    # f = Re S(z): df/dx = Re S', df/dy = -Im S'
    grad = np.concatenate([g_re.real.ravel(), -g_re.imag.ravel(), g_im.real.ravel(), -g_im.imag.ravel()])
    return action_value(p, x).real, p.project(grad)


def hessian(p: StationaryProblem, x: np.ndarray, h: float = 1e-3) -> np.ndarray:
    """Central differences of the gradient; exact up to rounding since the gradient is quadratic."""
    n = p.n_vars
    H = np.zeros((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        H[:, i] = (eval_and_grad(p, x + e)[1] - eval_and_grad(p, x - e)[1]) / (2 * h)
    H = 0.5 * (H + H.T)
    if p.constraint != "none":
        Pm = np.stack([p.project(col) for col in np.eye(n)], axis=1)
        H = Pm @ H @ Pm
    return H


def _hvp(p: StationaryProblem, x: np.ndarray, v: np.ndarray, h: float = 1e-3) -> np.ndarray:
    return (eval_and_grad(p, x + h * v)[1] - eval_and_grad(p, x - h * v)[1]) / (2 * h)


@dataclass
class StationaryReport:
    solution: ActionCoefficients
    value: float
    grad_norm: float
    curvature: dict[str, Any]
    iterations: int
    converged: bool
    method: str
    status: str
    phi1_route: str
    trajectory: list[tuple[int, float, float, float]] = field(default_factory=list)

    def to_json(self) -> dict[str, Any]:
        return {
            "solution": self.solution.to_json(),
            "value": self.value,
            "grad_norm": self.grad_norm,
            "curvature": self.curvature,
            "iterations": self.iterations,
            "converged": self.converged,
            "method": self.method,
            "status": self.status,
            "phi1_route": self.phi1_route,
            "real_part_objective": True,
        }


def curvature_summary(H: np.ndarray, tol: float = 1e-9) -> dict[str, Any]:
    eig = np.linalg.eigvalsh(H)
    scale = max(1.0, float(np.abs(eig).max())) if eig.size else 1.0
    pos = int(np.sum(eig > tol * scale))
    neg = int(np.sum(eig < -tol * scale))
    zero = eig.size - pos - neg
    if pos and neg:
        kind = "saddle"
    elif zero:
        kind = "degenerate"
    elif pos:
        kind = "minimum"
    else:
        kind = "maximum"
    return {
        "min_eigenvalue": float(eig.min()) if eig.size else 0.0,
        "max_eigenvalue": float(eig.max()) if eig.size else 0.0,
        "positive": pos,
        "negative": neg,
        "zero": zero,
        "kind": kind,
    }


def _merit(p: StationaryProblem, x: np.ndarray) -> tuple[float, np.ndarray]:
    _, g = eval_and_grad(p, x)
    return 0.5 * float(g @ g), g


def find_stationary(
    p: StationaryProblem,
    init: np.ndarray | None = None,
    method: str = "newton",
    tol: float | None = None,
    max_iter: int = 200,
) -> StationaryReport:
    """Drive |grad Re S|_inf below tol by damped Newton or gradient descent on the merit."""
    if method not in ("newton", "gd"):
        raise ValueError(f"unknown method {method!r}")
    tol = config.Tolerances().stationary if tol is None else tol
    x = p.project(np.zeros(p.n_vars) if init is None else np.asarray(init, dtype=float).copy())
    if not np.all(np.isfinite(x)):
        raise ValueError("initial point must be finite")
    merit, g = _merit(p, x)
    trajectory = [(0, eval_and_grad(p, x)[0], float(np.abs(g).max()), 0.0)]
    status = "max-iterations"
    it = 0
    for it in range(1, max_iter + 1):
        if np.abs(g).max() <= tol:
            status = "converged"
            it -= 1
            break
        if method == "newton":
            H = hessian(p, x)
            step = -np.linalg.lstsq(H, g, rcond=1e-10)[0]
            slope = -2 * merit
        else:
            hg = _hvp(p, x, g)
            step = -hg
            slope = -float(hg @ hg)
        t = 1.0
        while True:
            x_new = p.project(x + t * step)
            m_new, g_new = _merit(p, x_new)
            if m_new <= merit + 1e-4 * t * slope or t < 1e-12:
                break
            t *= 0.5
        if method == "gd" and t >= 1.0:
            # widen the step while the merit keeps dropping
            while t < 1e8:
                x_try = p.project(x + 2 * t * step)
                m_try, g_try = _merit(p, x_try)
                if m_try >= m_new:
                    break
                t, x_new, m_new, g_new = 2 * t, x_try, m_try, g_try
        if not np.all(np.isfinite(x_new)) or np.abs(x_new).max() > 1e8:
            status = "diverged"
            break
        if t < 1e-12:
            status = "stalled"
            x, merit, g = x_new, m_new, g_new
            break
        x, merit, g = x_new, m_new, g_new
        trajectory.append((it, eval_and_grad(p, x)[0], float(np.abs(g).max()), float(t * np.linalg.norm(step))))
    value, g = eval_and_grad(p, x)
    gnorm = float(np.abs(g).max())
    converged = gnorm <= tol
    if converged:
        status = "converged"
    re, im = p.unpack(x)
    report = StationaryReport(
        ActionCoefficients.from_arrays(re, im),
        value,
        gnorm,
        curvature_summary(hessian(p, x)),
        it,
        converged,
        method,
        status,
        p.phi1_route,
        trajectory,
    )
    log.info("stationary search (%s): %s after %d iterations, |grad| = %.2e", method, status, it, gnorm)
    return report


def find_stationary_multi(
    p: StationaryProblem,
    n_starts: int = 4,
    seed: int = 0,
    method: str = "newton",
    scale: float = 0.1,
    tol: float | None = None,
    max_iter: int = 200,
) -> list[StationaryReport]:
    """Independent searches from seeded random starts, reported in start order."""
    rng = np.random.default_rng(seed)
    inits = rng.normal(scale=scale, size=(n_starts, p.n_vars))
    reports: list[StationaryReport | None] = [None] * n_starts
    with ThreadPoolExecutor(max_workers=min(n_starts, config.MAX_WORKERS) or 1) as pool:
        future_to_idx = {
            pool.submit(find_stationary, p, inits[i], method, tol, max_iter): i for i in range(n_starts)
        }
        for future in as_completed(future_to_idx):
            reports[future_to_idx[future]] = future.result()
    return reports  # type: ignore[return-value]


def write_trajectory(report: StationaryReport, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "value", "grad_norm", "step"])
        writer.writerows(report.trajectory)
    return path
