# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled solver kernels.

Semantics mirror ``_kernels_np`` exactly: same iteration order, same
stopping rules, same projection kinds.  The fused objective/subgradient
pass is what makes high-iteration solves cheap.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, isfinite, sqrt
from libc.stdlib cimport qsort

from .errors import NumericalFailure

cnp.import_array()

BACKEND_NAME = "cython"


cdef int _cmp_desc(const void* a, const void* b) noexcept nogil:
    cdef double da = (<const double*> a)[0]
    cdef double db = (<const double*> b)[0]
    if da < db:
        return 1
    elif da > db:
        return -1
    return 0


cdef void _proj_l2_c(double* x, Py_ssize_t n, double radius) noexcept nogil:
    cdef Py_ssize_t j
    cdef double nrm = 0.0, scale
    for j in range(n):
        nrm += x[j] * x[j]
    nrm = sqrt(nrm)
    if nrm > radius and nrm > 0.0:
        scale = radius / nrm
        for j in range(n):
            x[j] *= scale


cdef void _proj_l1_c(double* x, double* buf, Py_ssize_t n, double radius) noexcept nogil:
    # Duchi et al. sorting algorithm; buf is scratch of length n.
    cdef Py_ssize_t j
    cdef double s1 = 0.0, css = 0.0, theta = 0.0, t, a
    for j in range(n):
        buf[j] = fabs(x[j])
        s1 += buf[j]
    if s1 <= radius:
        return
    qsort(buf, n, sizeof(double), _cmp_desc)
    for j in range(n):
        css += buf[j]
        t = (css - radius) / (j + 1.0)
        if buf[j] > t:
            theta = t
    for j in range(n):
        a = fabs(x[j]) - theta
        if a <= 0.0:
            x[j] = 0.0
        elif x[j] < 0.0:
            x[j] = -a
        else:
            x[j] = a


cdef int _dykstra_c(double* x, double* p, double* q, double* ytmp, double* xold,
                    double* buf, Py_ssize_t n, double r1, double r2,
                    int max_iter, double tol, double* move_out) noexcept nogil:
    """Dykstra between r1*B1 and r2*B2, in place on x. Returns iterations
    used, or -1 if the cap was hit while still moving."""
    cdef Py_ssize_t j
    cdef int it
    cdef double move, d, l1, l2
    for j in range(n):
        p[j] = 0.0
        q[j] = 0.0
    for it in range(1, max_iter + 1):
        for j in range(n):
            xold[j] = x[j]
            ytmp[j] = x[j] + p[j]
        _proj_l1_c(ytmp, buf, n, r1)
        for j in range(n):
            p[j] = xold[j] + p[j] - ytmp[j]
            x[j] = ytmp[j] + q[j]
        _proj_l2_c(x, n, r2)
        move = 0.0
        for j in range(n):
            q[j] = ytmp[j] + q[j] - x[j]
            d = x[j] - xold[j]
            move += d * d
        move = sqrt(move)
        if move < tol:
            # exact feasibility polish
            l1 = 0.0
            l2 = 0.0
            for j in range(n):
                l1 += fabs(x[j])
                l2 += x[j] * x[j]
            l2 = sqrt(l2)
            if l1 > r1 and l1 > 0.0:
                for j in range(n):
                    x[j] *= r1 / l1
                l2 *= r1 / l1
            if l2 > r2 and l2 > 0.0:
                for j in range(n):
                    x[j] *= r2 / l2
            move_out[0] = move
            return it
    move_out[0] = move
    return -1


cdef int _project_kind_c(double* x, double* p, double* q, double* ytmp,
                         double* xold, double* buf, Py_ssize_t n, int kind,
                         double p1, double p2, int dyk_iter, double dyk_tol,
                         double* move_out) noexcept nogil:
    if kind == 0:
        _proj_l2_c(x, n, p1)
        return 0
    elif kind == 1:
        _proj_l1_c(x, buf, n, p1)
        return 0
    else:
        return _dykstra_c(x, p, q, ytmp, xold, buf, n, p1, p2,
                          dyk_iter, dyk_tol, move_out)


def proj_l2(v, double radius):
    out = np.array(v, dtype=np.float64, copy=True)
    cdef double[::1] xv = out
    _proj_l2_c(&xv[0], xv.shape[0], radius)
    return out


def proj_l1(v, double radius):
    out = np.array(v, dtype=np.float64, copy=True)
    buf = np.empty_like(out)
    cdef double[::1] xv = out
    cdef double[::1] bv = buf
    _proj_l1_c(&xv[0], &bv[0], xv.shape[0], radius)
    return out


def dykstra_l1l2(v, double r1, double r2, int max_iter=10000, double tol=1e-10):
    out = np.array(v, dtype=np.float64, copy=True)
    cdef Py_ssize_t n = out.shape[0]
    work = np.empty(5 * n, dtype=np.float64)
    cdef double[::1] xv = out
    cdef double[::1] wv = work
    cdef double move = 0.0
    cdef int it
    it = _dykstra_c(&xv[0], &wv[0], &wv[n], &wv[2 * n], &wv[3 * n], &wv[4 * n],
                    n, r1, r2, max_iter, tol, &move)
    if it < 0:
        raise NumericalFailure(
            "Dykstra projection did not converge within %d iterations" % max_iter,
            residual=move,
        )
    return out, it, move


def hinge_objective(A, y, x):
    cdef double[:, ::1] Av = np.ascontiguousarray(A, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t m = Av.shape[0], n = Av.shape[1], i, j
    cdef double acc = 0.0, z, marg
    with nogil:
        for i in range(m):
            z = 0.0
            for j in range(n):
                z += Av[i, j] * xv[j]
            marg = yv[i] * z
            if marg < 1.0:
                acc += 1.0 - marg
    return acc / m


def hinge_subgradient(A, y, x):
    cdef double[:, ::1] Av = np.ascontiguousarray(A, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t m = Av.shape[0], n = Av.shape[1], i, j
    g = np.zeros(n, dtype=np.float64)
    cdef double[::1] gv = g
    cdef double z
    with nogil:
        for i in range(m):
            z = 0.0
            for j in range(n):
                z += Av[i, j] * xv[j]
            if yv[i] * z <= 1.0:
                for j in range(n):
                    gv[j] -= yv[i] * Av[i, j]
    g /= m
    return g


def solve_hinge_kernel(A, y, int kind, double p1, double p2, double step0,
                       int max_iters, double tol, int window,
                       int dyk_iter=10000, double dyk_tol=1e-10):
    cdef double[:, ::1] Av = np.ascontiguousarray(A, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t m = Av.shape[0], n = Av.shape[1], i, j
    x_np = np.zeros(n, dtype=np.float64)
    best_np = np.zeros(n, dtype=np.float64)
    g_np = np.zeros(n, dtype=np.float64)
    trace_np = np.empty(max_iters + 1, dtype=np.float64)
    work = np.empty(5 * n, dtype=np.float64)
    cdef double[::1] xv = x_np
    cdef double[::1] bestv = best_np
    cdef double[::1] gv = g_np
    cdef double[::1] trv = trace_np
    cdef double[::1] wv = work
    cdef double best_obj = np.inf
    cdef double obj, z, marg, step, move
    cdef int k, iters = 0, stat = 0, failed_k = -1
    with nogil:
        for k in range(max_iters + 1):
            obj = 0.0
            for j in range(n):
                gv[j] = 0.0
            for i in range(m):
                z = 0.0
                for j in range(n):
                    z += Av[i, j] * xv[j]
                marg = yv[i] * z
                if marg < 1.0:
                    obj += 1.0 - marg
                if marg <= 1.0:
                    for j in range(n):
                        gv[j] += yv[i] * Av[i, j]
            obj /= m
            if not isfinite(obj):
                failed_k = k
                break
            if obj < best_obj:
                best_obj = obj
                for j in range(n):
                    bestv[j] = xv[j]
            trv[k] = best_obj
            if k == max_iters:
                break
            if tol > 0.0 and k >= window and trv[k - window] - trv[k] < tol:
                break
            step = step0 / sqrt(k + 1.0)
            for j in range(n):
                xv[j] += step * gv[j] / m
            stat = _project_kind_c(&xv[0], &wv[0], &wv[n], &wv[2 * n],
                                   &wv[3 * n], &wv[4 * n], n, kind, p1, p2,
                                   dyk_iter, dyk_tol, &move)
            if stat < 0:
                failed_k = k
                break
            iters = k + 1
    if failed_k >= 0:
        if stat < 0:
            raise NumericalFailure(
                "Dykstra projection did not converge within %d iterations" % dyk_iter,
                residual=move, iteration=failed_k,
            )
        raise NumericalFailure("hinge objective diverged (non-finite)",
                               iteration=failed_k, objective=obj)
    return best_np, best_obj, trace_np[:iters + 1].copy(), iters


def solve_lasso_kernel(A, y, int kind, double p1, double p2, double step,
                       int max_iters, double tol, int window,
                       int dyk_iter=10000, double dyk_tol=1e-10):
    cdef double[:, ::1] Av = np.ascontiguousarray(A, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t m = Av.shape[0], n = Av.shape[1], i, j
    x_np = np.zeros(n, dtype=np.float64)
    best_np = np.zeros(n, dtype=np.float64)
    g_np = np.zeros(n, dtype=np.float64)
    trace_np = np.empty(max_iters + 1, dtype=np.float64)
    work = np.empty(5 * n, dtype=np.float64)
    cdef double[::1] xv = x_np
    cdef double[::1] bestv = best_np
    cdef double[::1] gv = g_np
    cdef double[::1] trv = trace_np
    cdef double[::1] wv = work
    cdef double best_obj = np.inf
    cdef double obj, z, r, move
    cdef int k, iters = 0, stat = 0, failed_k = -1
    with nogil:
        for k in range(max_iters + 1):
            obj = 0.0
            for j in range(n):
                gv[j] = 0.0
            for i in range(m):
                z = 0.0
                for j in range(n):
                    z += Av[i, j] * xv[j]
                r = z - yv[i]
                obj += r * r
                for j in range(n):
                    gv[j] += r * Av[i, j]
            obj /= m
            if not isfinite(obj):
                failed_k = k
                break
            if obj < best_obj:
                best_obj = obj
                for j in range(n):
                    bestv[j] = xv[j]
            trv[k] = best_obj
            if k == max_iters:
                break
            if tol > 0.0 and k >= window and trv[k - window] - trv[k] < tol:
                break
            for j in range(n):
                xv[j] -= step * 2.0 * gv[j] / m
            stat = _project_kind_c(&xv[0], &wv[0], &wv[n], &wv[2 * n],
                                   &wv[3 * n], &wv[4 * n], n, kind, p1, p2,
                                   dyk_iter, dyk_tol, &move)
            if stat < 0:
                failed_k = k
                break
            iters = k + 1
    if failed_k >= 0:
        if stat < 0:
            raise NumericalFailure(
                "Dykstra projection did not converge within %d iterations" % dyk_iter,
                residual=move, iteration=failed_k,
            )
        raise NumericalFailure("lasso objective diverged (non-finite)",
                               iteration=failed_k, objective=obj)
    return best_np, best_obj, trace_np[:iters + 1].copy(), iters
