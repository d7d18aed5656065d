"""Expectations of polynomials under the standard Gaussian measure.

Exact operations use the classical moment formula for independent
standard normal coordinates: E[Z^(2m)] = (2m-1)!!, odd moments vanish,
and a monomial's expectation is the product of its per-coordinate
moments.  Everything exact is computed over ``Fraction``.

The Monte Carlo engine is deterministic: draws come from
``numpy.random.Generator`` with the PCG64 bit generator, consumed in
fixed-size chunks that are accumulated serially.  For a fixed (seed,
samples, chunk) triple the estimates are bit-reproducible regardless of
how callers schedule the work.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator

import numpy as np

from .polyalg import Polynomial, evaluate_float

__all__ = [
    "DEFAULT_CHUNK",
    "McEstimate",
    "MomentTable",
    "covariance",
    "expectation",
    "gaussian_moment",
    "gaussian_sample_chunks",
    "mc_estimate",
    "partial_expectation",
    "sublevel_probability_mc",
]

DEFAULT_CHUNK = 1 << 16


class MomentTable:
    """Memoized moments of the standard normal: entry(2m) = (2m-1)!!.

    Odd orders are implicitly zero.  The table grows on demand via the
    recurrence entry(2m) = (2m-1) * entry(2m-2), starting from entry(0)=1.
    """

    def __init__(self):
        self._even: dict[int, Fraction] = {0: Fraction(1)}
        self._highest = 0

    def moment(self, order: int) -> Fraction:
        if order < 0:
            raise ValueError("moment order must be nonnegative")
        if order % 2:
            return Fraction(0)
        while self._highest < order:
            self._highest += 2
            self._even[self._highest] = (self._highest - 1) * self._even[self._highest - 2]
        return self._even[order]


_TABLE = MomentTable()


def gaussian_moment(order: int) -> Fraction:
    """E[Z^order] for Z standard normal, exact."""
    return _TABLE.moment(order)


def expectation(p: Polynomial) -> Fraction:
    """Exact E[p(X)] for X ~ N(0, I)."""
    total = Fraction(0)
    for exponent, coeff in p.terms.items():
        if any(k % 2 for k in exponent):
            continue
        term = coeff
        for k in exponent:
            if k:
                term *= gaussian_moment(k)
        total += term
    return total


def covariance(u: Polynomial, v: Polynomial) -> Fraction:
    """Exact Cov(u(X), v(X)) = E[uv] - E[u]E[v] for X ~ N(0, I)."""
    if u.arity != v.arity:
        raise ValueError(f"arity mismatch: {u.arity} != {v.arity}")
    return expectation(u * v) - expectation(u) * expectation(v)


def partial_expectation(p: Polynomial, marginalized: Iterable[int]) -> Polynomial:
    """Average p over a subset of coordinates, exactly.

    ``marginalized`` holds 1-based variable numbers.  Each marginalized
    factor x_i^k is replaced by its Gaussian moment; terms with an odd
    marginalized exponent vanish.  The result keeps the original arity,
    with zero exponents on the marginalized positions.
    """
    marked = set(marginalized)
    for index in marked:
        if not 1 <= index <= p.arity:
            raise ValueError(f"variable index {index} out of range 1..{p.arity}")
    positions = {index - 1 for index in marked}
    out: dict[tuple[int, ...], Fraction] = {}
    for exponent, coeff in p.terms.items():
        factor = coeff
        kept = list(exponent)
        dead = False
        for i in positions:
            k = exponent[i]
            if k % 2:
                dead = True
                break
            if k:
                factor *= gaussian_moment(k)
            kept[i] = 0
        if dead:
            continue
        key = tuple(kept)
        out[key] = out.get(key, Fraction(0)) + factor
    return Polynomial(p.arity, out)


def gaussian_sample_chunks(
    arity: int, samples: int, seed: int, chunk: int = DEFAULT_CHUNK
) -> Iterator[np.ndarray]:
    """Yield (m, arity) blocks of i.i.d. standard normal draws.

    One PCG64 stream, fixed chunk size, fixed order: the concatenated
    output is a pure function of (seed, samples, chunk).
    """
    if arity < 1:
        raise ValueError("sampling needs at least one coordinate")
    if chunk < 1:
        raise ValueError("chunk size must be positive")
    rng = np.random.default_rng(seed)
    remaining = samples
    while remaining > 0:
        m = min(chunk, remaining)
        yield rng.standard_normal((m, arity))
        remaining -= m


@dataclass(frozen=True)
class McEstimate:
    mean: float
    standard_error: float
    samples: int
    seed: int

    def to_json(self) -> dict:
        return {
            "mean": self.mean,
            "stderr": self.standard_error,
            "samples": self.samples,
            "seed": self.seed,
        }


def _summarize(sum_x: float, sum_xx: float, samples: int, seed: int) -> McEstimate:
    mean = sum_x / samples
    variance = max(sum_xx - samples * mean * mean, 0.0) / (samples - 1)
    return McEstimate(mean, (variance / samples) ** 0.5, samples, seed)


def mc_estimate(expr, samples: int, seed: int, chunk: int = DEFAULT_CHUNK) -> McEstimate:
    """Monte Carlo mean and standard error of p(X) or of u(X)*v(X).

    ``expr`` is a Polynomial, or a pair (u, v) whose pointwise product is
    averaged.
    """
    if samples < 2:
        raise ValueError("need at least 2 samples")
    if isinstance(expr, Polynomial):
        polys = (expr,)
    else:
        u, v = expr
        if u.arity != v.arity:
            raise ValueError(f"arity mismatch: {u.arity} != {v.arity}")
        polys = (u, v)
    sum_x = 0.0
    sum_xx = 0.0
    for block in gaussian_sample_chunks(polys[0].arity, samples, seed, chunk):
        values = evaluate_float(polys[0], block)
        if len(polys) == 2:
            values = values * evaluate_float(polys[1], block)
        sum_x += float(values.sum())
        sum_xx += float((values * values).sum())
    return _summarize(sum_x, sum_xx, samples, seed)


def sublevel_probability_mc(
    p: Polynomial, k: float, samples: int, seed: int, chunk: int = DEFAULT_CHUNK
) -> McEstimate:
    """Monte Carlo estimate of P(p(Y) <= k) for Y ~ N(0, I)."""
    if samples < 2:
        raise ValueError("need at least 2 samples")
    sum_x = 0.0
    for block in gaussian_sample_chunks(p.arity, samples, seed, chunk):
        sum_x += float((evaluate_float(p, block) <= k).sum())
    # indicator variables: the sum of squares equals the sum
    return _summarize(sum_x, sum_x, samples, seed)
