"""Constrained hinge-loss minimization and baselines.

The core program minimizes the empirical hinge risk
(1/m) sum_i max{0, 1 - y_i <a_i, x>} subject to x in mu*K via projected
subgradient descent with steps step0/sqrt(k+1) from x = 0, returning the
best-objective iterate.  No algorithm is canonical for this program; the
subgradient path was chosen because the objective is piecewise linear
(O(1/sqrt(k)) guarantees) and all in-scope sets have exact projections.
"""

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from . import backend, sets
from .errors import DimensionMismatch, UnsupportedSetOperation


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 5000
    step0: float = 1.0
    tol: float = 1e-7
    window: int = 200
    mu: float = 1.0

    def __post_init__(self):
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if self.step0 <= 0:
            raise ValueError("step0 must be positive")
        if self.mu <= 0:
            raise ValueError("mu must be positive")
        if self.window < 1:
            raise ValueError("window must be at least 1")
        if self.tol < 0:
            raise ValueError("tol must be nonnegative")


@dataclass(frozen=True)
class Estimate:
    x_hat: np.ndarray = field(repr=False)
    objective: float
    trace: np.ndarray = field(repr=False)
    iterations_used: int


def _check_x(data, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (data.n,):
        raise DimensionMismatch("x has length %d, data has n = %d"
                                % (x.size, data.n))
    return x


def hinge_objective(data, x):
    """Empirical hinge risk (1/m) sum_i max{0, 1 - y_i <a_i, x>}."""
    return float(backend.kernels.hinge_objective(data.A, data.y, _check_x(data, x)))


def hinge_subgradient(data, x):
    """(1/m) sum_i z_i a_i with z_i = -y_i 1[y_i <a_i, x> <= 1].

    A valid subgradient of the empirical hinge risk (the flat side is
    taken at the kink).
    """
    return backend.kernels.hinge_subgradient(data.A, data.y, _check_x(data, x))


def _fast_kind(set_, mu):
    """Map a signal set to a (kind, p1, p2) triple for the kernel solvers."""
    if set_.variant == "l2_ball":
        return 0, mu * set_.radius, 0.0
    if set_.variant == "scaled_l1_ball":
        return 1, mu * set_.radius, 0.0
    if set_.variant == "eff_sparse":
        return 2, mu * set_.l1_radius, mu * 1.0
    return None


def _generic_loop(A, y, project, step0, max_iters, tol, window, grad=None,
                  step=None):
    """Pure-Python projected (sub)gradient loop for sets without a fast kind."""
    from .errors import NumericalFailure
    m, n = A.shape
    x = np.zeros(n)
    best_x = x.copy()
    best_obj = np.inf
    trace = np.empty(max_iters + 1)
    iters = 0
    for k in range(max_iters + 1):
        if grad is None:
            marg = y * (A @ x)
            obj = float(np.mean(np.maximum(0.0, 1.0 - marg)))
        else:
            r = A @ x - y
            obj = float(np.mean(r * r))
        if not np.isfinite(obj):
            raise NumericalFailure("objective diverged (non-finite)",
                                   iteration=k, objective=obj)
        if obj < best_obj:
            best_obj = obj
            best_x = x.copy()
        trace[k] = best_obj
        if k == max_iters:
            break
        if tol > 0.0 and k >= window and trace[k - window] - trace[k] < tol:
            break
        if grad is None:
            g = -(A.T @ (y * (marg <= 1.0))) / m
            eta = step0 / np.sqrt(k + 1.0)
        else:
            g = (2.0 / m) * (A.T @ r)
            eta = step
        x = project(x - eta * g)
        iters = k + 1
    return best_x, best_obj, trace[:iters + 1].copy(), iters


def solve_hinge(data, set_, cfg=None):
    """Solve the hinge program over mu*K by projected subgradient descent."""
    cfg = cfg or SolverConfig()
    if set_.n != data.n:
        raise DimensionMismatch("set dimension %d != data dimension %d"
                                % (set_.n, data.n))
    fast = _fast_kind(set_, cfg.mu)
    if fast is not None:
        kind, p1, p2 = fast
        x, obj, trace, iters = backend.kernels.solve_hinge_kernel(
            data.A, data.y, kind, p1, p2, cfg.step0, cfg.max_iters,
            cfg.tol, cfg.window)
    elif set_.variant == "subspace":
        x, obj, trace, iters = _generic_loop(
            data.A, data.y, lambda v: sets.project(set_, v, mu=cfg.mu),
            cfg.step0, cfg.max_iters, cfg.tol, cfg.window)
    else:
        raise UnsupportedSetOperation(
            "solve_hinge needs a projectable set, got %r" % set_.variant)
    return Estimate(x_hat=x, objective=obj, trace=trace, iterations_used=iters)


def _lipschitz_step(data):
    """1/L with L = lambda_max((2/m) A^T A) from 50 power iterations."""
    A = data.A
    rng = np.random.Generator(np.random.Philox(
        np.random.SeedSequence((data.seed, 0x505745))))
    b = rng.standard_normal(data.n)
    b /= np.linalg.norm(b)
    for _ in range(50):
        w = A.T @ (A @ b)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 1.0
        b = w / nw
    L = (2.0 / data.m) * float(b @ (A.T @ (A @ b)))
    return 1.0 / L


def solve_lasso(data, set_, cfg=None):
    """Generalized Lasso: projected gradient descent on the square loss."""
    cfg = cfg or SolverConfig()
    if set_.n != data.n:
        raise DimensionMismatch("set dimension %d != data dimension %d"
                                % (set_.n, data.n))
    step = _lipschitz_step(data)
    fast = _fast_kind(set_, cfg.mu)
    if fast is not None:
        kind, p1, p2 = fast
        x, obj, trace, iters = backend.kernels.solve_lasso_kernel(
            data.A, data.y, kind, p1, p2, step, cfg.max_iters,
            cfg.tol, cfg.window)
    elif set_.variant == "subspace":
        x, obj, trace, iters = _generic_loop(
            data.A, data.y, lambda v: sets.project(set_, v, mu=cfg.mu),
            cfg.step0, cfg.max_iters, cfg.tol, cfg.window,
            grad="lasso", step=step)
    else:
        raise UnsupportedSetOperation(
            "solve_lasso needs a projectable set, got %r" % set_.variant)
    return Estimate(x_hat=x, objective=obj, trace=trace, iterations_used=iters)


def linear_estimate(data):
    """(1/m) sum_i y_i a_i, the empirical correlation direction."""
    return (data.A.T @ data.y) / data.m


def normalized_error_flagged(x0, x_hat):
    """|| x0 - x_hat/||x_hat|| ||_2 plus a degenerate-direction flag.

    x_hat = 0 has no direction; it is reported as the maximal error 2
    with the flag set.
    """
    x0 = np.asarray(x0, dtype=float)
    x_hat = np.asarray(x_hat, dtype=float)
    if x0.shape != x_hat.shape:
        raise DimensionMismatch("x0 and x_hat must have equal length")
    if abs(np.linalg.norm(x0) - 1.0) > 1e-9:
        raise ValueError("x0 must be unit-norm")
    nrm = np.linalg.norm(x_hat)
    if nrm == 0.0:
        return 2.0, True
    err = float(np.linalg.norm(x0 - x_hat / nrm))
    return min(err, 2.0), False


def normalized_error(x0, x_hat):
    return normalized_error_flagged(x0, x_hat)[0]


def estimate_to_json(est):
    return json.dumps({
        "x_hat": est.x_hat.tolist(),
        "objective": est.objective,
        "iterations_used": est.iterations_used,
    })


def trace_to_csv(est, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "best_objective"])
        for k, v in enumerate(est.trace):
            w.writerow([k, repr(float(v))])
