"""Noisy 1-bit Gaussian measurements and the quantizer families.

Quantizers map a real value to {-1, +1}, with the global convention
sign(0) = +1.  Randomness (bit flips, pre-quantization Gaussian noise)
is drawn from an explicitly passed generator so datasets are pure
functions of (x0, m, quantizer, seed).
"""

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch

_KINDS = ("sign", "bit_flip", "additive_gaussian", "custom")


@dataclass(frozen=True)
class Quantizer:
    kind: str
    p: float | None = None
    sigma: float | None = None
    fn: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError("unknown quantizer kind %r" % (self.kind,))
        if self.kind == "bit_flip":
            if self.p is None or not (0.5 < self.p <= 1.0):
                raise ValueError("bit_flip requires p in (1/2, 1]")
        if self.kind == "additive_gaussian":
            if self.sigma is None or self.sigma < 0:
                raise ValueError("additive_gaussian requires sigma >= 0")
        if self.kind == "custom" and not callable(self.fn):
            raise ValueError("custom quantizer requires a callable fn(values, rng)")


def sign_quantizer():
    return Quantizer("sign")


def bit_flip(p):
    return Quantizer("bit_flip", p=float(p))


def additive_gaussian(sigma):
    return Quantizer("additive_gaussian", sigma=float(sigma))


def custom_quantizer(fn):
    """User-supplied hook: fn(values, rng) -> array over {-1, +1}.

    Whether the hook satisfies the correlation conditions (positive
    lambda, nonnegative conditional correlation) is the caller's
    responsibility; check it with complexity.lambda_of / check_c2.
    """
    return Quantizer("custom", fn=fn)


def sign01(v):
    """sign with the +1-at-zero convention, elementwise."""
    return np.where(np.asarray(v) >= 0, 1.0, -1.0)


def quantize_batch(q, values, rng):
    values = np.asarray(values, dtype=float)
    if q.kind == "sign":
        return sign01(values)
    if q.kind == "bit_flip":
        eps = np.where(rng.random(values.shape) < q.p, 1.0, -1.0)
        return eps * sign01(values)
    if q.kind == "additive_gaussian":
        tau = rng.standard_normal(values.shape) * q.sigma
        return sign01(values + tau)
    out = np.asarray(q.fn(values, rng), dtype=float)
    if not np.all(np.abs(out) == 1.0):
        raise ValueError("custom quantizer must output values in {-1, +1}")
    return out


def quantize(q, v, rng):
    """Quantize a single value, drawing fresh noise from rng."""
    return float(quantize_batch(q, np.asarray([v], dtype=float), rng)[0])


def _rng_from(seed):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


@dataclass(frozen=True)
class Dataset:
    A: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    x0: np.ndarray = field(repr=False)
    seed: int
    quantizer: Quantizer

    def __post_init__(self):
        A = np.ascontiguousarray(self.A, dtype=float)
        y = np.asarray(self.y, dtype=float)
        x0 = np.asarray(self.x0, dtype=float)
        if A.ndim != 2 or A.shape[0] < 1:
            raise ValueError("A must be an m x n matrix with m >= 1")
        if y.shape != (A.shape[0],):
            raise DimensionMismatch("y must have one label per row of A")
        if not np.all(np.abs(y) == 1.0):
            raise ValueError("labels must lie in {-1, +1}")
        if x0.shape != (A.shape[1],):
            raise DimensionMismatch("x0 must match the column dimension of A")
        for arr in (A, y, x0):
            arr.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x0", x0)

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.A.shape[1]


def generate_dataset(x0, m, q, seed):
    """y_i = f_i(<a_i, x0>) with i.i.d. standard Gaussian rows a_i.

    Deterministic given the seed; the measurement matrix and the
    quantizer noise come from separate child streams, so noiseless
    degenerate cases (e.g. bit flip with p = 1) reproduce the sign
    quantizer sample for sample.
    """
    x0 = np.asarray(x0, dtype=float)
    if m < 1:
        raise ValueError("m must be at least 1")
    if abs(np.linalg.norm(x0) - 1.0) > 1e-9:
        raise ValueError("x0 must be unit-norm (got ||x0|| = %r)"
                         % float(np.linalg.norm(x0)))
    ss_matrix, ss_noise = np.random.SeedSequence(seed).spawn(2)
    rng_matrix = np.random.Generator(np.random.Philox(ss_matrix))
    rng_noise = np.random.Generator(np.random.Philox(ss_noise))
    A = rng_matrix.standard_normal((int(m), x0.shape[0]))
    y = quantize_batch(q, A @ x0, rng_noise)
    return Dataset(A=A, y=y, x0=x0, seed=int(seed), quantizer=q)


def quantizer_to_descriptor(q):
    if q.kind == "custom":
        raise ValueError("custom quantizers are not serializable")
    d = {"kind": q.kind}
    if q.kind == "bit_flip":
        d["p"] = q.p
    elif q.kind == "additive_gaussian":
        d["sigma"] = q.sigma
    return d


def quantizer_from_descriptor(d):
    kind = d.get("kind")
    if kind == "sign":
        return sign_quantizer()
    if kind == "bit_flip":
        return bit_flip(d["p"])
    if kind == "additive_gaussian":
        return additive_gaussian(d["sigma"])
    raise ValueError("unknown quantizer kind %r" % (kind,))


def save_dataset(ds, outdir):
    """Write A.csv (row-major), y.csv, and a JSON sidecar with x0/seed/quantizer."""
    os.makedirs(outdir, exist_ok=True)
    np.savetxt(os.path.join(outdir, "A.csv"), ds.A, fmt="%.17g", delimiter=",")
    np.savetxt(os.path.join(outdir, "y.csv"), ds.y, fmt="%d")
    sidecar = {
        "x0": ds.x0.tolist(),
        "seed": ds.seed,
        "quantizer": quantizer_to_descriptor(ds.quantizer),
        "m": ds.m,
        "n": ds.n,
    }
    with open(os.path.join(outdir, "dataset.json"), "w") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")


def load_dataset(outdir):
    A = np.loadtxt(os.path.join(outdir, "A.csv"), delimiter=",", ndmin=2)
    y = np.loadtxt(os.path.join(outdir, "y.csv"), ndmin=1)
    with open(os.path.join(outdir, "dataset.json")) as fh:
        sidecar = json.load(fh)
    return Dataset(A=A, y=y, x0=np.asarray(sidecar["x0"], dtype=float),
                   seed=int(sidecar["seed"]),
                   quantizer=quantizer_from_descriptor(sidecar["quantizer"]))
