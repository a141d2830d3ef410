"""Pure-NumPy solver kernels.

Reference implementation of the hot loops; the compiled Cython twin in
``_kernels.pyx`` mirrors these semantics exactly (same iteration order,
same stopping rules). ``onebit.backend`` picks whichever is importable.

Projection kinds used by the solver kernels:

    0 -- Euclidean ball of radius ``p1``
    1 -- l1 ball of radius ``p1``
    2 -- intersection of the l1 ball of radius ``p1`` and the Euclidean
         ball of radius ``p2`` (Dykstra)
"""

import numpy as np

from .errors import NumericalFailure

BACKEND_NAME = "numpy"


def proj_l2(v, radius):
    nrm = np.linalg.norm(v)
    if nrm <= radius:
        return np.array(v, dtype=float, copy=True)
    return v * (radius / nrm)


def proj_l1(v, radius):
    """Exact Euclidean projection onto the l1 ball of the given radius.

    Sorting-based O(n log n) algorithm (Duchi et al., ICML 2008): find the
    soft-threshold level from the sorted magnitudes, then shrink.
    """
    v = np.asarray(v, dtype=float)
    if np.abs(v).sum() <= radius:
        return np.array(v, copy=True)
    u = np.sort(np.abs(v))[::-1]
    css = np.cumsum(u)
    j = np.arange(1, u.size + 1)
    rho = np.nonzero(u * j > (css - radius))[0][-1]
    theta = (css[rho] - radius) / (rho + 1.0)
    return np.sign(v) * np.maximum(np.abs(v) - theta, 0.0)


def dykstra_l1l2(v, r1, r2, max_iter=10000, tol=1e-10):
    """Dykstra's alternating projections onto (r1*B1) intersect (r2*B2).

    Returns ``(x, iterations, last_move)``.  The output is polished to lie
    in both balls exactly (scaling toward the origin preserves membership
    in the other ball).  Raises NumericalFailure if the iterate is still
    moving by more than ``tol`` at the iteration cap.
    """
    x = np.array(v, dtype=float, copy=True)
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    move = 0.0
    it = 0
    for it in range(1, max_iter + 1):
        x_old = x
        ytmp = proj_l1(x + p, r1)
        p = x + p - ytmp
        x = proj_l2(ytmp + q, r2)
        q = ytmp + q - x
        move = float(np.linalg.norm(x - x_old))
        if move < tol:
            break
    else:
        raise NumericalFailure(
            "Dykstra projection did not converge within %d iterations" % max_iter,
            residual=move,
        )
    # exact feasibility polish
    l1 = np.abs(x).sum()
    if l1 > r1 and l1 > 0.0:
        x *= r1 / l1
    l2 = np.linalg.norm(x)
    if l2 > r2 and l2 > 0.0:
        x *= r2 / l2
    return x, it, move


def _project_kind(x, kind, p1, p2, dyk_iter, dyk_tol):
    if kind == 0:
        return proj_l2(x, p1)
    if kind == 1:
        return proj_l1(x, p1)
    if kind == 2:
        return dykstra_l1l2(x, p1, p2, dyk_iter, dyk_tol)[0]
    raise ValueError("unknown projection kind %r" % (kind,))


def hinge_objective(A, y, x):
    marg = y * (A @ x)
    return float(np.mean(np.maximum(0.0, 1.0 - marg)))


def hinge_subgradient(A, y, x):
    marg = y * (A @ x)
    w = y * (marg <= 1.0)
    return -(A.T @ w) / A.shape[0]


def solve_hinge_kernel(A, y, kind, p1, p2, step0, max_iters, tol, window,
                       dyk_iter=10000, dyk_tol=1e-10):
    """Projected subgradient descent on the mean hinge loss.

    x_{k+1} = Proj(x_k - step0/sqrt(k+1) * g_k) from x_0 = 0, tracking the
    best-objective iterate.  Stops early once the best objective improved
    by less than ``tol`` over the trailing ``window`` iterations (tol <= 0
    disables the check).  Returns (x_best, best_obj, trace, iters_used)
    where trace[k] is the best objective after evaluating iterate k.
    """
    A = np.ascontiguousarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    m, n = A.shape
    x = np.zeros(n)
    best_x = x.copy()
    best_obj = np.inf
    trace = np.empty(max_iters + 1)
    iters = 0
    for k in range(max_iters + 1):
        marg = y * (A @ x)
        obj = float(np.mean(np.maximum(0.0, 1.0 - marg)))
        if not np.isfinite(obj):
            raise NumericalFailure("hinge objective diverged (non-finite)",
                                   iteration=k, objective=obj)
        if obj < best_obj:
            best_obj = obj
            best_x = x.copy()
        trace[k] = best_obj
        if k == max_iters:
            break
        if tol > 0.0 and k >= window and trace[k - window] - trace[k] < tol:
            break
        w = y * (marg <= 1.0)
        g = -(A.T @ w) / m
        step = step0 / np.sqrt(k + 1.0)
        x = _project_kind(x - step * g, kind, p1, p2, dyk_iter, dyk_tol)
        iters = k + 1
    return best_x, best_obj, trace[:iters + 1].copy(), iters


def solve_lasso_kernel(A, y, kind, p1, p2, step, max_iters, tol, window,
                       dyk_iter=10000, dyk_tol=1e-10):
    """Projected gradient descent on the mean squared loss, fixed step."""
    A = np.ascontiguousarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    m, n = A.shape
    x = np.zeros(n)
    best_x = x.copy()
    best_obj = np.inf
    trace = np.empty(max_iters + 1)
    iters = 0
    for k in range(max_iters + 1):
        r = A @ x - y
        obj = float(np.mean(r * r))
        if not np.isfinite(obj):
            raise NumericalFailure("lasso objective diverged (non-finite)",
                                   iteration=k, objective=obj)
        if obj < best_obj:
            best_obj = obj
            best_x = x.copy()
        trace[k] = best_obj
        if k == max_iters:
            break
        if tol > 0.0 and k >= window and trace[k - window] - trace[k] < tol:
            break
        g = (2.0 / m) * (A.T @ r)
        x = _project_kind(x - step * g, kind, p1, p2, dyk_iter, dyk_tol)
        iters = k + 1
    return best_x, best_obj, trace[:iters + 1].copy(), iters
