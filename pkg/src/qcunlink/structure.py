"""Structural analysis: symmetry, quasi-convexity, rays, invariant directions.

Quasi-convexity of a general polynomial is only falsified here, never
certified: the sampler hunts for points where the value at a convex
combination exceeds both endpoint values, and every candidate violation
is re-verified in exact rational arithmetic, so there are no
floating-point false positives.  The one decidable case is total degree
at most two, where convexity (equivalently quasi-convexity) reduces to
an exact positive-semidefiniteness test of the quadratic form; a failed
test yields a deterministic witness instead of relying on sampling luck.

The invariance subspace of p (all directions a with p(t*a) = 0 for every
t, for normalized p with p(0) = 0) is computed as the kernel of the
linear map v -> derivative of p along v, which is a finite exact
computation.  That kernel is always contained in the invariance set; for
quasi-convex inputs the two coincide.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .exactla import Subspace, kernel, psd_violation
from .polyalg import (
    Polynomial,
    RationalMatrix,
    evaluate,
    partial_derivative,
    restrict_line,
)

__all__ = [
    "CASE_A",
    "CASE_B",
    "CASE_CONST",
    "QcVerdict",
    "QcWitness",
    "RayClass",
    "check_translation_invariance",
    "classify_ray",
    "invariance_subspace",
    "qc_falsify",
    "ray_constant",
]

FALSIFIED = "falsified"
NOT_FALSIFIED = "not_falsified"
CERTIFIED_CONVEX_QUADRATIC = "certified_convex_quadratic"

CASE_A = "A"  # eventually increasing, diverges at +infinity
CASE_B = "B"  # eventually increasing toward the left, diverges at -infinity
CASE_CONST = "CONST"

# minimal exact margin for an accepted violation witness
_WITNESS_MARGIN = Fraction(1, 10**9)


@dataclass(frozen=True)
class QcWitness:
    """Points x, y and weight alpha with p(alpha*x + (1-alpha)*y) > max(p(x), p(y)).

    ``values`` holds (p(x), p(y), p(midpoint)), all exact.
    """

    x: tuple[Fraction, ...]
    y: tuple[Fraction, ...]
    alpha: Fraction
    values: tuple[Fraction, Fraction, Fraction]

    def to_json(self) -> dict:
        return {
            "x": [str(c) for c in self.x],
            "y": [str(c) for c in self.y],
            "alpha": str(self.alpha),
            "values": [str(c) for c in self.values],
        }


@dataclass(frozen=True)
class QcVerdict:
    status: str
    witness: Optional[QcWitness]
    trials: int
    seed: int

    @property
    def falsified(self) -> bool:
        return self.status == FALSIFIED

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "witness": self.witness.to_json() if self.witness else None,
            "trials": self.trials,
            "seed": self.seed,
        }


def _random_fraction(rng: random.Random, bound: int, max_denominator: int) -> Fraction:
    denominator = rng.randint(1, max_denominator)
    numerator = rng.randint(-bound * denominator, bound * denominator)
    return Fraction(numerator, denominator)


def _combination(x, y, alpha: Fraction) -> tuple[Fraction, ...]:
    return tuple(alpha * a + (1 - alpha) * b for a, b in zip(x, y))


def _witness_if_violation(p: Polynomial, x, y, alpha: Fraction) -> Optional[QcWitness]:
    px = evaluate(p, x)
    py = evaluate(p, y)
    mid = _combination(x, y, alpha)
    pmid = evaluate(p, mid)
    if pmid - max(px, py) >= _WITNESS_MARGIN:
        return QcWitness(tuple(x), tuple(y), alpha, (px, py, pmid))
    return None


def _quadratic_form(p: Polynomial) -> list[list[Fraction]]:
    """Matrix A of the degree-2 part, with p's x_i*x_j coefficient split as 2*A[i][j]."""
    n = p.arity
    a = [[Fraction(0)] * n for _ in range(n)]
    for exponent, coeff in p.terms.items():
        if sum(exponent) != 2:
            continue
        support = [i for i, k in enumerate(exponent) if k]
        if len(support) == 1:
            a[support[0]][support[0]] = coeff
        else:
            i, j = support
            a[i][j] = coeff / 2
            a[j][i] = coeff / 2
    return a


def _quadratic_witness(p: Polynomial, direction: Sequence[Fraction]) -> QcWitness:
    """Witness along a direction where the quadratic part is negative.

    The restriction t -> p(t*v) is a concave parabola, so for a large
    enough half-width s the midpoint 0 beats both endpoints +-s.
    """
    s = Fraction(1)
    while True:
        x = tuple(-s * c for c in direction)
        y = tuple(s * c for c in direction)
        witness = _witness_if_violation(p, x, y, Fraction(1, 2))
        if witness is not None:
            return witness
        s *= 2


def qc_falsify(
    p: Polynomial,
    trials: int,
    seed: int,
    bound: int = 4,
    max_denominator: int = 16,
) -> QcVerdict:
    """Search for a quasi-convexity violation of p.

    Sample points have entries in [-bound, bound] with denominators at
    most ``max_denominator``, so all candidate checks are exact.  For
    total degree <= 2 the answer is decided exactly instead of sampled:
    the quadratic form is either positive semidefinite (certificate) or
    it supplies a concave direction from which a witness is built.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    if p.total_degree() <= 2:
        violation = psd_violation(_quadratic_form(p))
        if violation is None:
            return QcVerdict(CERTIFIED_CONVEX_QUADRATIC, None, 0, seed)
        return QcVerdict(FALSIFIED, _quadratic_witness(p, violation), 0, seed)
    rng = random.Random(seed)
    for trial in range(1, trials + 1):
        x = [_random_fraction(rng, bound, max_denominator) for _ in range(p.arity)]
        y = [_random_fraction(rng, bound, max_denominator) for _ in range(p.arity)]
        d = rng.randint(2, max_denominator)
        alpha = Fraction(rng.randint(1, d - 1), d)
        witness = _witness_if_violation(p, x, y, alpha)
        if witness is not None:
            return QcVerdict(FALSIFIED, witness, trial, seed)
    return QcVerdict(NOT_FALSIFIED, None, trials, seed)


@dataclass(frozen=True)
class RayClass:
    """Divergence classes of a univariate polynomial.

    ``A``: beyond some point the polynomial strictly increases and tends
    to +infinity as t -> +infinity.  ``B``: the mirror statement toward
    t -> -infinity.  ``CONST`` marks constants.  Even-degree polynomials
    with a positive leading coefficient satisfy both A and B.
    ``lambda0_estimate`` maps each satisfied case to a float threshold
    beyond which the derivative sign was verified stable.
    """

    cases: frozenset[str]
    lambda0_estimate: Mapping[str, float]

    def to_json(self) -> dict:
        return {
            "cases": sorted(self.cases),
            "lambda0_estimate": {k: self.lambda0_estimate[k] for k in sorted(self.lambda0_estimate)},
        }


def _root_bound(g: Polynomial) -> Fraction:
    """Cauchy bound: all real roots of g lie in [-bound, bound]."""
    degree = g.total_degree()
    if degree == 0:
        return Fraction(0)
    lead = g.terms[(degree,)]
    others = max((abs(c) for e, c in g.terms.items() if e[0] != degree), default=Fraction(0))
    return 1 + others / abs(lead)


def classify_ray(g: Polynomial) -> RayClass:
    """Which divergence cases a univariate polynomial satisfies.

    Case A holds iff the leading coefficient is positive; case B holds
    iff the polynomial tends to +infinity as t -> -infinity, i.e. the
    degree is even with positive leading coefficient or odd with a
    negative one.  The thresholds are root bounds of the derivative,
    checked for stable derivative sign at 50 sample points.
    """
    if g.arity != 1:
        raise ValueError(f"expected a univariate polynomial, got arity {g.arity}")
    degree = g.total_degree()
    if degree == 0:
        return RayClass(frozenset({CASE_CONST}), {})
    lead = g.terms[(degree,)]
    cases = set()
    if lead > 0:
        cases.add(CASE_A)
    if (degree % 2 == 0 and lead > 0) or (degree % 2 == 1 and lead < 0):
        cases.add(CASE_B)
    derivative = partial_derivative(g, 1)
    bound = _root_bound(derivative)
    estimates: dict[str, float] = {}
    if CASE_A in cases:
        for k in range(1, 51):
            assert evaluate(derivative, (bound + k,)) > 0, "derivative sign unstable beyond bound"
        estimates[CASE_A] = float(bound)
    if CASE_B in cases:
        for k in range(1, 51):
            assert evaluate(derivative, (-bound - k,)) < 0, "derivative sign unstable beyond bound"
        estimates[CASE_B] = float(-bound)
    return RayClass(frozenset(cases), estimates)


def _require_zero_at_origin(p: Polynomial):
    if p.constant_term() != 0:
        raise ValueError("polynomial must vanish at the origin; subtract p(0) first")


def invariance_subspace(p: Polynomial) -> Subspace:
    """Exact subspace of directions v along which p is constant on every line.

    Computed as the kernel of the matrix of the linear map
    v -> derivative of p along v, with one row per monomial appearing in
    any partial derivative (rows in graded-lexicographic order for a
    deterministic result).  Requires p(0) = 0.
    """
    _require_zero_at_origin(p)
    n = p.arity
    partials = [partial_derivative(p, i) for i in range(1, n + 1)]
    monomials = sorted(
        {e for q in partials for e in q.terms}, key=lambda e: (sum(e), e)
    )
    rows = [
        tuple(q.terms.get(monomial, Fraction(0)) for q in partials) for monomial in monomials
    ]
    return kernel(RationalMatrix(len(rows), n, tuple(rows)))


def ray_constant(p: Polynomial, direction: Sequence) -> bool:
    """Exact test that p vanishes identically on the line through 0 along a.

    Requires p(0) = 0; then the restriction t -> p(t*a) must be the zero
    polynomial.
    """
    _require_zero_at_origin(p)
    if len(direction) != p.arity:
        raise ValueError("direction length must equal the arity")
    origin = (Fraction(0),) * p.arity
    return restrict_line(p, origin, direction).is_zero


def check_translation_invariance(
    p: Polynomial,
    direction: Sequence,
    trials: int,
    seed: int = 0,
    bound: int = 4,
    max_denominator: int = 16,
) -> bool:
    """True iff p(b + t*v) is constant in t for ``trials`` random base points b.

    Each check is exact: the restriction must have no term of degree >= 1.
    """
    if len(direction) != p.arity:
        raise ValueError("direction length must equal the arity")
    rng = random.Random(seed)
    for _ in range(trials):
        base = [_random_fraction(rng, bound, max_denominator) for _ in range(p.arity)]
        line = restrict_line(p, base, direction)
        if any(e[0] >= 1 for e in line.terms):
            return False
    return True
