"""Geometric and model complexity parameters.

Monte Carlo Gaussian widths (global and local), effective dimensions,
the statistical dimension of the l1 descent cone, the quantizer
correlation parameter lambda = E[f(g) g], the risk-minimizing scale
mu = argmin_{s in [0,1]} E[(1 - s f(g) g)_+], and the conditional
correlation check E[f(g) sign(g) | |g|] >= 0.

Gaussian expectations are evaluated with fixed Gauss-Legendre rules on
[0, 10] after reduction to half-normal integrands (truncation error
beyond ten standard deviations is ~1e-22); integrands are split at their
kinks so each quadrature piece is smooth.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from . import measure, sets
from .errors import DimensionMismatch, UnsupportedSetOperation

_SQRT_2_PI = float(np.sqrt(2.0 / np.pi))
_HI = 10.0


@dataclass(frozen=True)
class WidthEstimate:
    mean: float
    std_error: float
    samples: int
    lower_bound: bool = False


@dataclass(frozen=True)
class ModelParams:
    lam: float
    mu: float
    c2_margin: float

    def __post_init__(self):
        if self.lam > _SQRT_2_PI + 1e-9:
            raise ValueError("lambda exceeds the sign-quantizer maximum sqrt(2/pi)")
        if not (0.0 < self.mu <= 1.0):
            raise ValueError("mu must lie in (0, 1]")


def _gl_nodes(lo, hi, points):
    x, w = np.polynomial.legendre.leggauss(points)
    mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
    return mid + half * x, half * w


def _half_normal_quad(fn, lo, hi, points):
    """integral of fn(x) * sqrt(2/pi) exp(-x^2/2) over [lo, hi]."""
    if hi <= lo:
        return 0.0
    x, w = _gl_nodes(lo, hi, points)
    return float(np.sum(w * fn(x) * _SQRT_2_PI * np.exp(-0.5 * x * x)))


# ---------------------------------------------------------------------------
# correlation parameter lambda = E[f(g) g]

def lambda_of(q, method="auto", quad_points=200, samples=10**6, seed=0):
    """Correlation parameter of a quantizer.

    Closed forms: sign -> sqrt(2/pi); bit flip -> (2p-1) sqrt(2/pi).
    Additive Gaussian noise reduces to the half-normal integral of
    x * erf(x / (sqrt(2) sigma)) and is evaluated by quadrature.
    """
    if method == "auto":
        if q.kind in ("sign", "bit_flip"):
            method = "closed_form"
        elif q.kind == "additive_gaussian":
            method = "quadrature"
        else:
            method = "monte_carlo"
    if method == "closed_form":
        if q.kind == "sign":
            return _SQRT_2_PI
        if q.kind == "bit_flip":
            return (2.0 * q.p - 1.0) * _SQRT_2_PI
        raise ValueError("no closed form for %r; use quadrature or monte_carlo"
                         % q.kind)
    if method == "quadrature":
        if q.kind == "sign":
            return _half_normal_quad(lambda x: x, 0.0, _HI, quad_points)
        if q.kind == "bit_flip":
            return (2.0 * q.p - 1.0) * _half_normal_quad(
                lambda x: x, 0.0, _HI, quad_points)
        if q.kind == "additive_gaussian":
            if q.sigma == 0.0:
                return _half_normal_quad(lambda x: x, 0.0, _HI, quad_points)
            sig = q.sigma
            return _half_normal_quad(
                lambda x: x * erf(x / (np.sqrt(2.0) * sig)), 0.0, _HI,
                quad_points)
        raise ValueError("quadrature unavailable for %r quantizers" % q.kind)
    if method == "monte_carlo":
        return lambda_mc(q, samples, seed)[0]
    raise ValueError("unknown method %r" % (method,))


def lambda_mc(q, samples, seed):
    """Monte Carlo estimate of E[f(g) g]; returns (value, std_error)."""
    ss_g, ss_noise = np.random.SeedSequence(seed).spawn(2)
    g = np.random.Generator(np.random.Philox(ss_g)).standard_normal(int(samples))
    y = measure.quantize_batch(q, g, np.random.Generator(np.random.Philox(ss_noise)))
    prod = y * g
    return float(prod.mean()), float(prod.std(ddof=1) / np.sqrt(prod.size))


# ---------------------------------------------------------------------------
# expected hinge risk along span{x0} and its minimizer mu

def risk_scale(q, s, quad_points=200):
    """R(s) = E[(1 - s f(g) g)_+] for s >= 0.

    With X = f(g) g = eps(|g|) |g| the expectation decomposes into
    half-normal integrals of (1 -+ s x)_+ weighted by the conditional
    flip probability; every kink is an integration endpoint.
    """
    s = float(s)
    if s < 0:
        raise ValueError("s must be nonnegative")
    cut = _HI if s == 0.0 else min(1.0 / s, _HI)
    if q.kind == "sign":
        return _half_normal_quad(lambda x: 1.0 - s * x, 0.0, cut, quad_points)
    if q.kind == "bit_flip":
        plus = _half_normal_quad(lambda x: 1.0 - s * x, 0.0, cut, quad_points)
        e_abs = _half_normal_quad(lambda x: x, 0.0, _HI, quad_points)
        return q.p * plus + (1.0 - q.p) * (1.0 + s * e_abs)
    if q.kind == "additive_gaussian":
        if q.sigma == 0.0:
            return _half_normal_quad(lambda x: 1.0 - s * x, 0.0, cut, quad_points)
        sig = q.sigma

        def keep(x):
            return 0.5 * (1.0 + erf(x / (np.sqrt(2.0) * sig)))

        plus = _half_normal_quad(lambda x: keep(x) * (1.0 - s * x), 0.0, cut,
                                 quad_points)
        minus = _half_normal_quad(lambda x: (1.0 - keep(x)) * (1.0 + s * x),
                                  0.0, _HI, quad_points)
        return plus + minus
    raise ValueError("risk profile unavailable for %r quantizers" % q.kind)


def risk_derivative(q, s, quad_points=200):
    """R'(s) = -E[f(g) g * 1{s f(g) g <= 1}] (weak derivative, s >= 0)."""
    s = float(s)
    if s < 0:
        raise ValueError("s must be nonnegative")
    cut = _HI if s == 0.0 else min(1.0 / s, _HI)
    if q.kind == "sign":
        return -_half_normal_quad(lambda x: x, 0.0, cut, quad_points)
    if q.kind == "bit_flip":
        a = _half_normal_quad(lambda x: x, 0.0, cut, quad_points)
        b = _half_normal_quad(lambda x: x, 0.0, _HI, quad_points)
        return -q.p * a + (1.0 - q.p) * b
    if q.kind == "additive_gaussian":
        if q.sigma == 0.0:
            return -_half_normal_quad(lambda x: x, 0.0, cut, quad_points)
        sig = q.sigma

        def keep(x):
            return 0.5 * (1.0 + erf(x / (np.sqrt(2.0) * sig)))

        a = _half_normal_quad(lambda x: x * keep(x), 0.0, cut, quad_points)
        b = _half_normal_quad(lambda x: x * (1.0 - keep(x)), 0.0, _HI,
                              quad_points)
        return -a + b
    raise ValueError("risk profile unavailable for %r quantizers" % q.kind)


def mu_of(q, quad_points=200):
    """Scaling factor mu = argmin_{s in [0,1]} E[(1 - s f(g) g)_+].

    Requires a positively correlated quantizer (lambda > 0).  When the
    one-sided derivative at s = 1 is negative the minimizer sits at the
    boundary and mu = 1 exactly; otherwise the interior stationary point
    is found by golden-section search to 1e-8.
    """
    if q.kind == "custom":
        raise ValueError("mu_of requires a quadrature-capable quantizer")
    lam = lambda_of(q, quad_points=quad_points)
    if lam <= 0:
        raise ValueError("quantizer has E[f(g) g] <= 0; recovery scale undefined")
    if risk_derivative(q, 1.0, quad_points) < 0.0:
        return 1.0
    xm, _ = sets.golden_min(lambda s: risk_scale(q, float(s), quad_points),
                            0.0, 1.0, iters=48)
    return float(xm)


# ---------------------------------------------------------------------------
# conditional correlation condition

def c2_bins(q, samples, bins, seed):
    """Binned empirical means of f(g) sign(g), binned by |g| quantiles.

    Returns (means, std_errors) over `bins` equal-probability bins.
    """
    ss_g, ss_noise = np.random.SeedSequence(seed).spawn(2)
    g = np.random.Generator(np.random.Philox(ss_g)).standard_normal(int(samples))
    y = measure.quantize_batch(q, g, np.random.Generator(np.random.Philox(ss_noise)))
    w = y * measure.sign01(g)
    order = np.argsort(np.abs(g), kind="stable")
    chunks = np.array_split(w[order], bins)
    means = np.array([c.mean() for c in chunks])
    ses = np.array([c.std(ddof=1) / np.sqrt(c.size) if c.size > 1 else np.inf
                    for c in chunks])
    return means, ses


def check_c2(q, samples=200000, bins=20, seed=0):
    """Minimum binned conditional correlation; >= -3 binned std errors
    means the quantizer passes the nonnegativity condition."""
    means, _ = c2_bins(q, samples, bins, seed)
    return float(means.min())


def model_params(q, samples=200000, bins=20, seed=0, quad_points=200):
    return ModelParams(lam=lambda_of(q, quad_points=quad_points),
                       mu=mu_of(q, quad_points=quad_points),
                       c2_margin=check_c2(q, samples, bins, seed))


# ---------------------------------------------------------------------------
# Gaussian widths

def gaussian_width(set_, samples, seed, chunk=20000):
    """Monte Carlo mean of sup_{x in K} <g, x> over g ~ N(0, I_n)."""
    if samples < 2:
        raise ValueError("need at least 2 samples")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        b = min(chunk, samples - done)
        vals = sets.support_batch(set_, rng.standard_normal((b, set_.n)))
        total += float(vals.sum())
        total_sq += float((vals * vals).sum())
        done += b
    mean = total / samples
    var = max(total_sq - samples * mean * mean, 0.0) / (samples - 1)
    return WidthEstimate(mean=mean, std_error=float(np.sqrt(var / samples)),
                         samples=samples)


def _batch_proj_l2(H, radius):
    nrm = np.linalg.norm(H, axis=1, keepdims=True)
    scale = np.where(nrm > radius, radius / np.maximum(nrm, 1e-300), 1.0)
    return H * scale


def _batch_proj_l1(H, radius):
    """Row-wise sorting-based projection onto the l1 ball."""
    absH = np.abs(H)
    inside = absH.sum(axis=1) <= radius
    if inside.all():
        return H.copy()
    U = np.sort(absH, axis=1)[:, ::-1]
    css = np.cumsum(U, axis=1)
    j = np.arange(1, H.shape[1] + 1)
    cond = U * j > (css - radius)
    rho = H.shape[1] - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = (css[np.arange(H.shape[0]), rho] - radius) / (rho + 1.0)
    theta = np.where(inside, 0.0, np.maximum(theta, 0.0))
    return np.sign(H) * np.maximum(absH - theta[:, None], 0.0)


def _shifted_projections(set_, anchor, t):
    """Batch projections describing (K - anchor) ^ t*B2 as simple pieces."""
    projs = [lambda H: _batch_proj_l2(H, t)]
    if set_.variant == "l2_ball":
        projs.append(lambda H: _batch_proj_l2(H + anchor, set_.radius) - anchor)
    elif set_.variant == "scaled_l1_ball":
        projs.append(lambda H: _batch_proj_l1(H + anchor, set_.radius) - anchor)
    elif set_.variant == "eff_sparse":
        projs.append(lambda H: _batch_proj_l1(H + anchor, set_.l1_radius) - anchor)
        projs.append(lambda H: _batch_proj_l2(H + anchor, 1.0) - anchor)
    elif set_.variant == "subspace":
        P = set_.basis.T @ set_.basis
        projs.append(lambda H: (H + anchor) @ P - anchor)
        projs.append(lambda H: _batch_proj_l2(H + anchor, 1.0) - anchor)
    else:
        raise UnsupportedSetOperation(
            "local width needs a projectable set, got %r" % set_.variant)
    return projs


def _dykstra_cycles(H, projs, cycles, tol=0.0):
    """Cyclic Dykstra over a list of batch projections, from H."""
    X = H.copy()
    C = [np.zeros_like(H) for _ in projs]
    for _ in range(cycles):
        X_prev = X
        for i, P in enumerate(projs):
            Y = P(X + C[i])
            C[i] = X + C[i] - Y
            X = Y
        if tol > 0.0 and np.max(np.linalg.norm(X - X_prev, axis=1)) < tol:
            break
    return X


def local_width(set_, anchor, t, samples, seed, restarts=3, iters=500):
    """Monte Carlo local Gaussian width E sup {<g,h> : h in (K-anchor) ^ tB2}.

    The inner sup is a linear maximization over a convex intersection,
    approached by projected ascent with Dykstra projections; the best
    value over restarts is kept, so the estimate is a certified lower
    bound of the true local width (the returned WidthEstimate is
    flagged).
    """
    anchor = np.asarray(anchor, dtype=float)
    if anchor.shape != (set_.n,):
        raise DimensionMismatch("anchor must have length %d" % set_.n)
    if t <= 0:
        raise ValueError("scale t must be positive")
    if sets.membership_residual(set_, anchor) > 1e-6:
        raise ValueError("anchor is not a member of the signal set")
    if samples < 2:
        raise ValueError("need at least 2 samples")
    projs = _shifted_projections(set_, anchor, t)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    G = rng.standard_normal((samples, set_.n))
    gnorm = np.linalg.norm(G, axis=1, keepdims=True)
    best = np.full(samples, -np.inf)
    for r in range(restarts):
        if r == 0:
            H = np.zeros_like(G)
        else:
            D = rng.standard_normal((samples, set_.n))
            D *= t / np.linalg.norm(D, axis=1, keepdims=True)
            H = _dykstra_cycles(D, projs, 100, tol=1e-10)
        for k in range(iters):
            H = H + (t / np.sqrt(k + 1.0)) * (G / gnorm)
            H = _dykstra_cycles(H, projs, 2)
            if (k + 1) % 100 == 0:
                Hc = _dykstra_cycles(H, projs, 200, tol=1e-10)
                best = np.maximum(best, np.sum(G * Hc, axis=1))
        Hc = _dykstra_cycles(H, projs, 200, tol=1e-10)
        best = np.maximum(best, np.sum(G * Hc, axis=1))
    mean = float(best.mean())
    se = float(best.std(ddof=1) / np.sqrt(samples))
    return WidthEstimate(mean=mean, std_error=se, samples=samples,
                         lower_bound=True)


def effective_dim(width, diam_or_scale):
    """Squared width normalized by a squared diameter or scale."""
    if diam_or_scale <= 0:
        raise ValueError("scale must be positive")
    return float(width.mean ** 2 / diam_or_scale ** 2)


def conic_effdim_l1(n, s, quad_points=200):
    """Statistical dimension of the l1-ball descent cone at an s-sparse point.

    Scalarized form: inf_{tau >= 0} [ s (1 + tau^2)
    + (n - s) E (|g| - tau)_+^2 ], with the expectation by quadrature and
    the infimum by golden-section search (the objective is convex).
    """
    if not 1 <= s <= n:
        raise ValueError("need 1 <= s <= n")

    def excess(tau):
        return _half_normal_quad(lambda x: (x - tau) ** 2, tau, tau + _HI,
                                 quad_points)

    def F(tau):
        return s * (1.0 + tau * tau) + (n - s) * excess(tau)

    _, val = sets.golden_min(lambda T: F(float(T)), 0.0, _HI, iters=60)
    return float(val)
