"""Counter-addressable random streams and Poisson sampling by inversion.

Every uniform is a pure function of ``(stream key, draw index)``: draw ``j``
of a stream is the SplitMix64 output for state ``key + (j + 1) * GOLDEN``.
Nothing carries hidden state, so a replicate can be regenerated in isolation
and batches of replicates can be vectorized or farmed out to workers without
changing a single bit of the result.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def mix64(x: int) -> int:
    """SplitMix64 finalizer on a Python int."""
    x &= MASK64
    x = ((x ^ (x >> 30)) * _M1) & MASK64
    x = ((x ^ (x >> 27)) * _M2) & MASK64
    return x ^ (x >> 31)


def _mix64_array(x):
    x = x ^ (x >> np.uint64(30))
    x = x * np.uint64(_M1)
    x = x ^ (x >> np.uint64(27))
    x = x * np.uint64(_M2)
    return x ^ (x >> np.uint64(31))


def stream_key(seed: int) -> int:
    """Map a user seed (any int, reduced mod 2**64) to a stream key."""
    return mix64(int(seed) + GOLDEN)


def replicate_seed(master_seed: int, index: int) -> int:
    """Seed of replicate ``index`` in a study seeded with ``master_seed``."""
    return mix64(stream_key(master_seed) ^ mix64((int(index) + 1) * GOLDEN))


def uniforms(keys, counters):
    """Uniforms in [0, 1) for parallel arrays of stream keys and draw indices."""
    keys = np.asarray(keys, dtype=np.uint64)
    counters = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        state = keys + (counters + np.uint64(1)) * np.uint64(GOLDEN)
        bits = _mix64_array(state)
    return (bits >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


@lru_cache(maxsize=64)
def poisson_cdf_table(lam: float) -> np.ndarray:
    """Cumulative Poisson(lam) probabilities 0..N, last entry forced to 1.

    N is far enough into the tail that the truncated mass is below double
    precision resolution.
    """
    if not (lam > 0 and math.isfinite(lam)):
        raise ValueError(f"lambda must be positive, got {lam!r}")
    top = int(math.ceil(lam + 12.0 * math.sqrt(lam) + 40.0))
    n = np.arange(top + 1)
    logp = n * math.log(lam) - lam - np.array([math.lgamma(k + 1) for k in n])
    cdf = np.cumsum(np.exp(logp))
    cdf[-1] = 1.0
    cdf.setflags(write=False)
    return cdf


_GUIDE_BITS = 16


@lru_cache(maxsize=64)
def _guide_table(lam: float):
    # For bucket b = [b/M, (b+1)/M) store the inverse CDF at both ends; where
    # they agree every u in the bucket maps to that value.
    cdf = poisson_cdf_table(lam)
    m = 1 << _GUIDE_BITS
    left = np.arange(m) / m
    right = np.nextafter(np.arange(1, m + 1) / m, 0.0)
    lo = np.searchsorted(cdf, left, side="right").astype(np.int64)
    hi = np.searchsorted(cdf, right, side="right").astype(np.int64)
    lo.setflags(write=False)
    return lo, lo != hi


def poisson_from_uniform(lam: float, u) -> np.ndarray:
    """Inversion: the smallest n with u < F(n).

    Equal, draw for draw, to a sequential search over the same CDF table; a
    bucket guide table settles most draws without searching.
    """
    lam = float(lam)
    cdf = poisson_cdf_table(lam)
    lo, ambiguous = _guide_table(lam)
    u = np.asarray(u, dtype=np.float64)
    bucket = (u * (1 << _GUIDE_BITS)).astype(np.int64)
    out = lo[bucket]
    amb = ambiguous[bucket]
    if amb.any():
        out[amb] = np.searchsorted(cdf, u[amb], side="right")
    return out


def poisson_sample(lam: float, size: int, seed: int) -> np.ndarray:
    """``size`` Poisson(lam) variates from the stream of ``seed``."""
    key = stream_key(seed)
    u = uniforms(np.full(size, key, dtype=np.uint64), np.arange(size, dtype=np.uint64))
    return poisson_from_uniform(lam, u)
