"""Convex signal sets: exact projections, support functions, samplers.

Supported variants
------------------
l2_ball        radius R
scaled_l1_ball radius R
eff_sparse     sqrt(s)*B1 intersected with B2 (l1 radius overridable)
subspace       span of an orthonormal basis, intersected with B2
polytope       convex hull of an explicit vertex list (must include 0);
               support-function only, no projection
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .errors import DimensionMismatch, UnsupportedSetOperation

_VARIANTS = ("l2_ball", "scaled_l1_ball", "eff_sparse", "subspace", "polytope")


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SignalSet:
    """Declarative description of a convex, bounded signal set with 0 in it."""

    variant: str
    n: int
    radius: float | None = None
    s: int | None = None
    l1_radius: float | None = None
    basis: np.ndarray | None = field(default=None, repr=False)
    vertices: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise ValueError("unknown set variant %r" % (self.variant,))
        if self.n < 1:
            raise ValueError("ambient dimension must be positive")
        if self.variant in ("l2_ball", "scaled_l1_ball"):
            if self.radius is None or self.radius <= 0:
                raise ValueError("%s requires radius > 0" % self.variant)
        elif self.variant == "eff_sparse":
            if self.s is None or not (1 <= self.s <= self.n):
                raise ValueError("eff_sparse requires 1 <= s <= n")
            if self.l1_radius is None:
                object.__setattr__(self, "l1_radius", float(np.sqrt(self.s)))
            elif self.l1_radius <= 0:
                raise ValueError("l1_radius must be positive")
        elif self.variant == "subspace":
            B = _readonly(self.basis)
            if B.ndim != 2 or B.shape[1] != self.n or not 1 <= B.shape[0] <= self.n:
                raise ValueError("basis must be d x n with 1 <= d <= n")
            gram = B @ B.T
            if not np.allclose(gram, np.eye(B.shape[0]), atol=1e-8):
                raise ValueError("subspace basis rows must be orthonormal")
            object.__setattr__(self, "basis", B)
        elif self.variant == "polytope":
            V = _readonly(self.vertices)
            if V.ndim != 2 or V.shape[1] != self.n or V.shape[0] < 1:
                raise ValueError("vertices must be k x n")
            if np.linalg.norm(V, axis=1).min() > 1e-12:
                raise ValueError("polytope vertex list must include the origin")
            object.__setattr__(self, "vertices", V)

    @property
    def dim(self):
        return self.n


def l2_ball(radius, n):
    return SignalSet("l2_ball", n, radius=float(radius))


def scaled_l1_ball(radius, n):
    return SignalSet("scaled_l1_ball", n, radius=float(radius))


def eff_sparse(s, n, l1_radius=None):
    return SignalSet("eff_sparse", n, s=int(s), l1_radius=l1_radius)


def subspace(basis):
    basis = np.asarray(basis, dtype=float)
    return SignalSet("subspace", basis.shape[1], basis=basis)


def polytope(vertices):
    vertices = np.asarray(vertices, dtype=float)
    return SignalSet("polytope", vertices.shape[1], vertices=vertices)


def _check_dim(set_, v):
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.shape[0] != set_.n:
        raise DimensionMismatch(
            "vector has length %d, set lives in R^%d" % (v.size, set_.n))
    return v


def project(set_, v, mu=1.0):
    """Exact Euclidean projection of v onto mu*K.

    Scaling is handled as mu * Proj_K(v / mu).  Raises NumericalFailure
    (with the residual attached) if the eff_sparse Dykstra loop hits its
    iteration cap, and UnsupportedSetOperation for polytopes.
    """
    v = _check_dim(set_, v)
    if set_.variant == "l2_ball":
        return backend.kernels.proj_l2(v, mu * set_.radius)
    if set_.variant == "scaled_l1_ball":
        return backend.kernels.proj_l1(v, mu * set_.radius)
    if set_.variant == "eff_sparse":
        x, _, _ = backend.kernels.dykstra_l1l2(v, mu * set_.l1_radius, mu * 1.0)
        return x
    if set_.variant == "subspace":
        w = set_.basis.T @ (set_.basis @ v)
        return backend.kernels.proj_l2(w, mu * 1.0)
    raise UnsupportedSetOperation("projection onto a polytope is not supported")


def support(set_, g, mu=1.0):
    """Support value sup_{x in mu*K} <g, x>."""
    g = _check_dim(set_, g)
    if set_.variant == "l2_ball":
        val = set_.radius * np.linalg.norm(g)
    elif set_.variant == "scaled_l1_ball":
        val = set_.radius * np.max(np.abs(g))
    elif set_.variant == "eff_sparse":
        val = _effsparse_support(g[None, :], set_.l1_radius)[0]
    elif set_.variant == "subspace":
        val = np.linalg.norm(set_.basis @ g)
    else:
        val = np.max(set_.vertices @ g)
    return mu * float(val)


def golden_min(f, lo, hi, iters=70):
    """Golden-section minimization of a convex f, vectorized over brackets.

    ``lo``/``hi`` may be scalars or arrays; ``f`` must accept the same
    shape.  Returns (argmin, min value) at the final bracket midpoint; for
    a convex f the value error is Lipschitz-bounded by the bracket width
    (invphi**iters times the initial range).
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    for _ in range(iters):
        d = invphi * (hi - lo)
        x1 = hi - d
        x2 = lo + d
        take = f(x1) < f(x2)
        hi = np.where(take, x2, hi)
        lo = np.where(take, lo, x1)
    xm = 0.5 * (lo + hi)
    return xm, f(xm)


def _effsparse_support(G, r1, iters=70):
    """Support of r1*B1 ^ B2 via the dual 1-D form, batched over rows.

    h(g) = min_{lam >= 0} [lam * r1 + || softthreshold(g, lam) ||_2]; the
    minimand is convex in lam and constant beyond ||g||_inf, so a golden
    section search on [0, ||g||_inf] is exact to bracket width.
    """
    absG = np.abs(G)

    def f(lam):
        soft = np.maximum(absG - lam[:, None], 0.0)
        return lam * r1 + np.sqrt(np.sum(soft * soft, axis=1))

    _, vals = golden_min(f, np.zeros(G.shape[0]), absG.max(axis=1), iters)
    return vals


def support_batch(set_, G, mu=1.0):
    """Row-wise support values for an array of directions (N x n)."""
    G = np.asarray(G, dtype=float)
    if G.ndim != 2 or G.shape[1] != set_.n:
        raise DimensionMismatch("direction batch must be N x %d" % set_.n)
    if set_.variant == "l2_ball":
        vals = set_.radius * np.linalg.norm(G, axis=1)
    elif set_.variant == "scaled_l1_ball":
        vals = set_.radius * np.max(np.abs(G), axis=1)
    elif set_.variant == "eff_sparse":
        vals = _effsparse_support(G, set_.l1_radius)
    elif set_.variant == "subspace":
        vals = np.linalg.norm(G @ set_.basis.T, axis=1)
    else:
        vals = np.max(G @ set_.vertices.T, axis=1)
    return mu * vals


def membership_residual(set_, x, mu=1.0):
    """Euclidean distance from x to mu*K (0 means member)."""
    x = _check_dim(set_, x)
    return float(np.linalg.norm(x - project(set_, x, mu=mu)))


def contains(set_, x, tol=1e-9, mu=1.0):
    x = _check_dim(set_, x)
    if set_.variant == "eff_sparse":
        return (np.abs(x).sum() <= mu * set_.l1_radius + tol
                and np.linalg.norm(x) <= mu + tol)
    if set_.variant == "l2_ball":
        return np.linalg.norm(x) <= mu * set_.radius + tol
    if set_.variant == "scaled_l1_ball":
        return np.abs(x).sum() <= mu * set_.radius + tol
    if set_.variant == "subspace":
        return membership_residual(set_, x, mu=mu) <= tol
    # polytope: convex-combination feasibility LP
    from scipy.optimize import linprog
    V = set_.vertices
    k = V.shape[0]
    A_eq = np.vstack([mu * V.T, np.ones(k)])
    b_eq = np.concatenate([x, [1.0]])
    res = linprog(np.zeros(k), A_eq=A_eq, b_eq=b_eq, bounds=(0, None),
                  method="highs")
    return bool(res.success) and res.status == 0


def sample_signal(kind, n, seed, s=None, decay=None, basis=None, vertices=None):
    """Draw a unit-norm ground-truth vector from the requested family.

    exact_sparse(s)       s random coordinates with N(0,1) values, normalized
    compressible(s,decay) sorted magnitudes ~ i^(-decay), random signs and
                          permutation, normalized
    subspace              random direction in the span of `basis`
    polytope_mix          random convex combination of the vertices, pulled
                          onto the unit sphere along a feasible segment
    """
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    if kind == "exact_sparse":
        if s is None or s > n:
            raise ValueError("exact_sparse requires s <= n")
        x = np.zeros(n)
        idx = rng.choice(n, size=s, replace=False)
        vals = rng.standard_normal(s)
        while np.linalg.norm(vals) == 0.0:
            vals = rng.standard_normal(s)
        x[idx] = vals
    elif kind == "compressible":
        if s is None or s > n:
            raise ValueError("compressible requires s <= n")
        if decay is None:
            decay = 2.0
        mags = np.arange(1, n + 1, dtype=float) ** (-float(decay))
        signs = rng.choice([-1.0, 1.0], size=n)
        x = signs * mags
        rng.shuffle(x)
    elif kind == "subspace":
        if basis is None:
            raise ValueError("subspace sampling requires a basis")
        B = np.asarray(basis, dtype=float)
        c = rng.standard_normal(B.shape[0])
        while np.linalg.norm(c) == 0.0:
            c = rng.standard_normal(B.shape[0])
        x = B.T @ c
    elif kind == "polytope_mix":
        if vertices is None:
            raise ValueError("polytope_mix sampling requires vertices")
        V = np.asarray(vertices, dtype=float)
        V = V[np.linalg.norm(V, axis=1) > 1e-12]
        if V.shape[0] == 0 or np.linalg.norm(V, axis=1).max() < 1.0:
            raise ValueError("polytope contains no unit-norm point")
        w = rng.dirichlet(np.ones(V.shape[0]))
        z = w @ V
        nz = np.linalg.norm(z)
        if nz >= 1.0:
            x = z / nz
        else:
            # slide from z toward the longest vertex until the segment
            # crosses the unit sphere; stays in the hull by convexity
            v = V[np.argmax(np.linalg.norm(V, axis=1))]
            a = float((z - v) @ (z - v))
            b = 2.0 * float(v @ (z - v))
            c = float(v @ v) - 1.0
            disc = np.sqrt(max(b * b - 4 * a * c, 0.0))
            roots = [(-b - disc) / (2 * a), (-b + disc) / (2 * a)] if a > 0 else []
            t = next((r for r in roots if -1e-12 <= r <= 1 + 1e-12), 0.0)
            x = np.clip(t, 0.0, 1.0) * z + (1.0 - np.clip(t, 0.0, 1.0)) * v
    else:
        raise ValueError("unknown signal kind %r" % (kind,))
    return x / np.linalg.norm(x)


def set_to_descriptor(set_):
    d = {"variant": set_.variant, "n": set_.n}
    if set_.variant in ("l2_ball", "scaled_l1_ball"):
        d["radius"] = set_.radius
    elif set_.variant == "eff_sparse":
        d["s"] = set_.s
        d["l1_radius"] = set_.l1_radius
    elif set_.variant == "subspace":
        d["basis"] = set_.basis.tolist()
    else:
        d["vertices"] = set_.vertices.tolist()
    return d


def set_from_descriptor(d):
    variant = d.get("variant")
    n = d.get("n")
    if variant in ("l2_ball", "scaled_l1_ball"):
        return SignalSet(variant, n, radius=float(d["radius"]))
    if variant == "eff_sparse":
        return SignalSet(variant, n, s=int(d["s"]),
                         l1_radius=d.get("l1_radius"))
    if variant == "subspace":
        return subspace(np.asarray(d["basis"], dtype=float))
    if variant == "polytope":
        return polytope(np.asarray(d["vertices"], dtype=float))
    raise ValueError("unknown set variant %r" % (variant,))


def set_to_json(set_):
    return json.dumps(set_to_descriptor(set_))


def set_from_json(text):
    return set_from_descriptor(json.loads(text))
