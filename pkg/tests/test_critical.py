"""Tests for the stationary-point searches."""

from __future__ import annotations

import csv

import numpy as np
import pytest

from app.core.critical import (
    StationaryProblem,
    action_value,
    curvature_summary,
    eval_and_grad,
    find_stationary,
    find_stationary_multi,
    write_trajectory,
)


@pytest.fixture
def problem():
    return StationaryProblem.build(0.0, k_level=1, K=1)


def _fd_gradient(p, x, h=1e-6):
    out = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        out[i] = (action_value(p, x + e).real - action_value(p, x - e).real) / (2 * h)
    return out


class TestProblem:

    def test_sizes(self, problem):
        assert problem.side == 3
        assert problem.n_vars == 36

    def test_pack_unpack(self, problem):
        x = np.arange(problem.n_vars, dtype=float)
        re, im = problem.unpack(x)
        assert np.array_equal(problem.pack(re, im), x)

    def test_symmetric_projection(self, problem):
        p = StationaryProblem(problem.q, 1, 1, problem.w_re, problem.w_im, constraint="symmetric")
        x = np.random.default_rng(0).normal(size=p.n_vars)
        y = p.project(x)
        assert np.allclose(p.project(y), y)
        re, im = p.unpack(y)
        assert np.allclose(re, np.conj(re[::-1, ::-1]))
        assert np.allclose(im, -np.conj(im[::-1, ::-1]))

    def test_wrong_shape(self, problem):
        with pytest.raises(ValueError):
            eval_and_grad(problem, np.zeros(3))


class TestGradient:

    def test_matches_finite_differences(self, problem):
        rng = np.random.default_rng(1)
        for _ in range(5):
            x = rng.normal(scale=0.3, size=problem.n_vars)
            g = eval_and_grad(problem, x)[1]
            assert np.linalg.norm(g - _fd_gradient(problem, x)) < 1e-5 * max(1.0, np.linalg.norm(g))

    def test_value_is_real_part(self, problem):
        x = np.random.default_rng(2).normal(size=problem.n_vars)
        assert eval_and_grad(problem, x)[0] == action_value(problem, x).real


class TestCurvature:

    def test_kinds(self):
        assert curvature_summary(np.diag([1.0, -1.0]))["kind"] == "saddle"
        assert curvature_summary(np.diag([1.0, 2.0]))["kind"] == "minimum"
        assert curvature_summary(np.diag([-1.0, -2.0]))["kind"] == "maximum"
        assert curvature_summary(np.diag([1.0, 0.0]))["kind"] == "degenerate"


class TestSearch:

    def test_origin_is_stationary_without_linear_term(self, problem):
        p = StationaryProblem(problem.q, 1, 1, problem.w_re, problem.w_im, include_phi1=False)
        rep = find_stationary(p)
        assert rep.converged
        assert rep.iterations == 0
        assert rep.solution.is_zero()

    def test_newton_solves_homogeneous_quadratic(self, problem):
        p = StationaryProblem(problem.q, 1, 1, problem.w_re, problem.w_im, include_cubic=False, include_phi1=False)
        init = np.random.default_rng(3).normal(scale=0.2, size=p.n_vars)
        rep = find_stationary(p, init, "newton")
        assert rep.converged
        assert rep.grad_norm <= 1e-8

    def test_unknown_method(self, problem):
        with pytest.raises(ValueError):
            find_stationary(problem, method="bfgs")

    def test_non_finite_start(self, problem):
        init = np.full(problem.n_vars, np.nan)
        with pytest.raises(ValueError):
            find_stationary(problem, init)

    def test_multi_start_is_deterministic(self, problem):
        a = find_stationary_multi(problem, n_starts=3, seed=4, method="gd", max_iter=5)
        b = find_stationary_multi(problem, n_starts=3, seed=4, method="gd", max_iter=5)
        assert [r.value for r in a] == [r.value for r in b]
        assert len(a) == 3

    def test_trajectory_csv(self, problem, tmp_path):
        rep = find_stationary(problem, method="gd", max_iter=3)
        path = write_trajectory(rep, tmp_path / "traj" / "start_0.csv")
        rows = list(csv.reader(path.open(encoding="utf-8")))
        assert rows[0] == ["iteration", "value", "grad_norm", "step"]
        assert len(rows) == len(rep.trajectory) + 1
