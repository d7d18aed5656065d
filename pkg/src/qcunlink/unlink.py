"""Unlinking pipeline for pairs of symmetric quasi-convex polynomials.

Two polynomials are *unlinked* when a single orthogonal change of
variables makes them depend on disjoint sets of coordinates.  The
pipeline decides this for a pair (u, v) of symmetric quasi-convex
polynomials over a standard Gaussian vector:

1. normalize so both vanish at the origin (subtracting the value at 0
   changes neither symmetry, quasi-convexity, nor covariance);
2. check symmetry exactly and run the quasi-convexity falsifier, both
   hard hypotheses;
3. compute the exact covariance; a nonzero value already rules the pair
   out;
4. compute the concordance order r: with I_u the invariance subspace of
   u, r = dim(I_u complement) - dim(I_u complement intersected with
   I_v).  The count is symmetric in u and v and is computed both ways as
   a consistency check;
5. if r = 0, assemble an orthonormal basis adapted to the nested chain
   (overlap) < (I_u complement) < (I_u complement + I_v complement) and
   verify that each composed polynomial has no mass on the other's
   coordinates.

A result of r > 0 with zero covariance and unfalsified hypotheses is
reported as a contradiction witness rather than an error: in practice it
means quasi-convexity of an input was assumed but does not actually
hold, and such inputs are worth surfacing.

The module also carries the numerical spot-checks used to exercise the
probabilistic identities behind the decision: sublevel-set correlation
(which must be nonnegative for symmetric convex sets, by the Gaussian
correlation inequality), the double-integral identity for the covariance
of the marginalized pair, and pointwise divergence along rays.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .exactla import Subspace, intersect, orthogonal_complement, orthonormalize_nested, subspace_sum
from .gaussmeasure import (
    DEFAULT_CHUNK,
    covariance,
    gaussian_sample_chunks,
    partial_expectation,
)
from .polyalg import (
    Polynomial,
    compose_linear,
    evaluate,
    evaluate_float,
    is_symmetric,
)
from .structure import QcVerdict, invariance_subspace, qc_falsify

__all__ = [
    "ConcordanceReport",
    "CorrelationCheck",
    "GridSpec",
    "HypothesisFalsified",
    "HypothesisReport",
    "IntegralCheck",
    "InvariantViolation",
    "OrthogonalTransform",
    "UnlinkConfig",
    "UnlinkResult",
    "VERDICT_CONTRADICTION",
    "VERDICT_HYPOTHESIS_FAILED",
    "VERDICT_UNLINKED",
    "build_transform",
    "concordance",
    "correlation_spotcheck",
    "covariance_integral_check",
    "divergence_check",
    "marginalized_polys",
    "normalize_at_origin",
    "unlink_decision",
    "verify_unlinked",
]

VERDICT_UNLINKED = "unlinked"
VERDICT_HYPOTHESIS_FAILED = "hypothesis_failed"
VERDICT_CONTRADICTION = "theorem_contradiction_witness"


class InvariantViolation(RuntimeError):
    """An internal consistency check failed; indicates a bug upstream."""


class HypothesisFalsified(Exception):
    """A hard hypothesis (symmetry or quasi-convexity) fails for an input.

    ``which`` names the failing input ("u" or "v"), ``kind`` the failed
    hypothesis, and ``witness`` a JSON-ready certificate.
    """

    def __init__(self, which: str, kind: str, witness: dict):
        super().__init__(f"{kind} falsified for input {which}")
        self.which = which
        self.kind = kind
        self.witness = witness


def normalize_at_origin(p: Polynomial) -> Polynomial:
    """Subtract the constant term so the polynomial vanishes at 0."""
    c = p.constant_term()
    return p if c == 0 else p - Polynomial.constant(p.arity, c)


@dataclass(frozen=True)
class ConcordanceReport:
    """Exact dimension bookkeeping for a polynomial pair.

    ``overlap`` is (I_u complement) intersected with I_v; ``perp_sum`` is
    the sum of the two complements.  The counts satisfy
    r = dim_inv_u_perp - t and r + t + m = dim(perp_sum).
    """

    n: int
    r: int
    t: int
    m: int
    dim_inv_u: int
    dim_inv_v: int
    dim_inv_u_perp: int
    dim_overlap: int
    dim_perp_sum: int
    inv_u: Subspace
    inv_v: Subspace
    inv_u_perp: Subspace
    overlap: Subspace
    perp_sum: Subspace

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "r": self.r,
            "t": self.t,
            "m": self.m,
            "dim_inv_u": self.dim_inv_u,
            "dim_inv_v": self.dim_inv_v,
            "dim_inv_u_perp": self.dim_inv_u_perp,
            "dim_overlap": self.dim_overlap,
            "dim_perp_sum": self.dim_perp_sum,
            "bases": {
                "inv_u": self.inv_u.to_json(),
                "inv_v": self.inv_v.to_json(),
                "inv_u_perp": self.inv_u_perp.to_json(),
                "overlap": self.overlap.to_json(),
                "perp_sum": self.perp_sum.to_json(),
            },
        }


def concordance(u: Polynomial, v: Polynomial) -> ConcordanceReport:
    """Exact concordance order r and the bases behind it.

    Both inputs must vanish at the origin (normalize first).  The order
    is computed from each side and must agree; a mismatch would be a bug
    in the exact linear algebra.
    """
    if u.arity != v.arity:
        raise ValueError(f"arity mismatch: {u.arity} != {v.arity}")
    inv_u = invariance_subspace(u)
    inv_v = invariance_subspace(v)
    inv_u_perp = orthogonal_complement(inv_u)
    inv_v_perp = orthogonal_complement(inv_v)
    overlap = intersect(inv_u_perp, inv_v)
    t = overlap.dimension
    r = inv_u_perp.dimension - t
    r_other = inv_v_perp.dimension - intersect(inv_v_perp, inv_u).dimension
    if r != r_other:
        raise InvariantViolation(
            f"concordance order disagrees between sides: {r} vs {r_other}"
        )
    perp_sum = subspace_sum(inv_u_perp, inv_v_perp)
    m = perp_sum.dimension - r - t
    return ConcordanceReport(
        n=u.arity,
        r=r,
        t=t,
        m=m,
        dim_inv_u=inv_u.dimension,
        dim_inv_v=inv_v.dimension,
        dim_inv_u_perp=inv_u_perp.dimension,
        dim_overlap=t,
        dim_perp_sum=perp_sum.dimension,
        inv_u=inv_u,
        inv_v=inv_v,
        inv_u_perp=inv_u_perp,
        overlap=overlap,
        perp_sum=perp_sum,
    )


@dataclass(frozen=True)
class OrthogonalTransform:
    """Orthonormal matrix Q (columns are the new directions) plus the split.

    Blocks are 1-based variable numbers of the new coordinates y:
    ``u_block`` = 1..r+t carries u, ``v_block`` = {1..r} and
    r+t+1..r+t+m carries v, ``shared_free`` = r+t+m+1..n touches
    neither.  Columns r+1..r+t span the overlap subspace and columns
    1..r+t span the complement of u's invariance subspace.
    """

    matrix: np.ndarray
    u_block: tuple[int, ...]
    v_block: tuple[int, ...]
    shared_free: tuple[int, ...]
    r: int
    t: int
    m: int

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def orthogonality_error(self) -> float:
        q = self.matrix
        return float(np.max(np.abs(q.T @ q - np.eye(q.shape[0]))))


def build_transform(report: ConcordanceReport, tol_ortho: float = 1e-10) -> OrthogonalTransform:
    """Assemble the adapted orthonormal basis from a concordance report.

    The nested chain overlap < inv_u_perp < perp_sum < R^n is
    orthonormalized so each prefix spans its chain element, then columns
    are reordered so positions 1..r hold the part of inv_u_perp outside
    the overlap, r+1..r+t the overlap, r+t+1..r+t+m the completion of
    perp_sum, and the remainder spans the rest of R^n.
    """
    r, t, m, n = report.r, report.t, report.m, report.n
    if not (report.inv_u_perp.contains(report.overlap) and report.perp_sum.contains(report.inv_u_perp)):
        raise InvariantViolation("concordance bases are not nested")
    chain = []
    for space in (report.overlap, report.inv_u_perp, report.perp_sum):
        if space.dimension > (chain[-1].dimension if chain else 0):
            chain.append(space)
    q = orthonormalize_nested(chain, n)
    order = list(range(t, t + r)) + list(range(t)) + list(range(r + t, n))
    q = q[:, order]
    transform = OrthogonalTransform(
        matrix=q,
        u_block=tuple(range(1, r + t + 1)),
        v_block=tuple(range(1, r + 1)) + tuple(range(r + t + 1, r + t + m + 1)),
        shared_free=tuple(range(r + t + m + 1, n + 1)),
        r=r,
        t=t,
        m=m,
    )
    if transform.orthogonality_error() > tol_ortho:
        raise InvariantViolation("assembled transform is not orthonormal within tolerance")
    return transform


def _reindex(p: Polynomial, keep: int) -> Polynomial:
    """Shrink arity to the first ``keep`` variables; the rest must be absent."""
    terms = {}
    for exponent, coeff in p.terms.items():
        if any(exponent[keep:]):
            raise InvariantViolation("marginalized polynomial still uses a dropped variable")
        terms[exponent[:keep]] = coeff
    return Polynomial(keep, terms)


def marginalized_polys(
    u: Polynomial, v: Polynomial, transform: OrthogonalTransform
) -> tuple[Polynomial, Polynomial]:
    """Averages of u and v over all new coordinates beyond the first r.

    Composes each polynomial with the transform and integrates out the
    coordinates r+1..n, leaving polynomials in the first r coordinates
    (constants when r = 0).  Coefficients may carry float rounding from
    the transform; magnitudes at or below 1e-12 have been dropped by the
    composition cleanup.
    """
    r = transform.r
    n = transform.n
    marginal = range(r + 1, n + 1)
    composed_u = compose_linear(u, transform.matrix)
    composed_v = compose_linear(v, transform.matrix)
    u_star = _reindex(partial_expectation(composed_u, marginal), r)
    v_star = _reindex(partial_expectation(composed_v, marginal), r)
    return u_star, v_star


def verify_unlinked(p: Polynomial, transform: OrthogonalTransform, forbidden) -> float:
    """Largest |coefficient| of a forbidden variable after the change of basis.

    ``forbidden`` holds 1-based new-coordinate numbers.  Zero means the
    composed polynomial is a function of the allowed coordinates only.
    """
    banned = {i - 1 for i in forbidden if 1 <= i <= p.arity}
    if not banned:
        return 0.0
    composed = compose_linear(p, transform.matrix)
    worst = 0.0
    for exponent, coeff in composed.terms.items():
        if any(exponent[i] for i in banned):
            worst = max(worst, abs(float(coeff)))
    return worst


def _asymmetry_witness(p: Polynomial) -> dict:
    """A point where p(x) != p(-x), found deterministically."""
    odd = Polynomial(p.arity, {e: c for e, c in p.terms.items() if sum(e) % 2})
    rng = random.Random(0xA5)
    for _ in range(200):
        point = [Fraction(rng.randint(-9, 9)) for _ in range(p.arity)]
        if evaluate(odd, point) != 0:
            mirrored = [-c for c in point]
            return {
                "x": [str(c) for c in point],
                "p_x": str(evaluate(p, point)),
                "p_minus_x": str(evaluate(p, mirrored)),
            }
    raise InvariantViolation("failed to locate an asymmetry witness for an asymmetric input")


@dataclass(frozen=True)
class HypothesisReport:
    symmetry_u: bool
    symmetry_v: bool
    qc_verdict_u: QcVerdict
    qc_verdict_v: QcVerdict
    cov_exact: Fraction

    def to_json(self) -> dict:
        return {
            "symmetry_u": self.symmetry_u,
            "symmetry_v": self.symmetry_v,
            "qc_verdict_u": self.qc_verdict_u.to_json(),
            "qc_verdict_v": self.qc_verdict_v.to_json(),
            "cov_exact": str(self.cov_exact),
        }


@dataclass(frozen=True)
class UnlinkResult:
    verdict: str
    hypothesis: HypothesisReport
    report: ConcordanceReport
    transform: Optional[OrthogonalTransform]
    residual_u: Optional[float]
    residual_v: Optional[float]

    @property
    def cov_exact(self) -> Fraction:
        return self.hypothesis.cov_exact

    def to_json(self) -> dict:
        """Fixed field order; floats are emitted by the report writer."""
        return {
            "verdict": self.verdict,
            "cov_exact": str(self.cov_exact),
            "r": self.report.r,
            "t": self.report.t,
            "m": self.report.m,
            "transform": self.transform.matrix.tolist() if self.transform else None,
            "u_block": list(self.transform.u_block) if self.transform else None,
            "v_block": list(self.transform.v_block) if self.transform else None,
            "residual_u": self.residual_u,
            "residual_v": self.residual_v,
            "hypothesis": self.hypothesis.to_json(),
        }


@dataclass(frozen=True)
class UnlinkConfig:
    seed: int = 42
    qc_trials: int = 10_000
    qc_bound: int = 4
    qc_max_denominator: int = 16
    tol_residual: float = 1e-9
    tol_ortho: float = 1e-10


def unlink_decision(
    u: Polynomial, v: Polynomial, config: UnlinkConfig = UnlinkConfig()
) -> UnlinkResult:
    """Run the full pipeline on a polynomial pair.

    Raises :class:`HypothesisFalsified` when symmetry fails or the
    falsifier finds a quasi-convexity violation.  Otherwise returns a
    result whose verdict is ``unlinked`` (r = 0, zero covariance,
    residuals within tolerance), ``hypothesis_failed`` (nonzero exact
    covariance), or ``theorem_contradiction_witness`` (r > 0 with zero
    covariance, which under genuinely quasi-convex inputs cannot happen).
    """
    if u.arity != v.arity:
        raise ValueError(f"arity mismatch: {u.arity} != {v.arity}")
    u0 = normalize_at_origin(u)
    v0 = normalize_at_origin(v)

    symmetry_u = is_symmetric(u0)
    symmetry_v = is_symmetric(v0)
    if not symmetry_u:
        raise HypothesisFalsified("u", "symmetry", _asymmetry_witness(u0))
    if not symmetry_v:
        raise HypothesisFalsified("v", "symmetry", _asymmetry_witness(v0))

    qc_u = qc_falsify(u0, config.qc_trials, config.seed, config.qc_bound, config.qc_max_denominator)
    if qc_u.falsified:
        raise HypothesisFalsified("u", "quasi-convexity", qc_u.to_json())
    qc_v = qc_falsify(v0, config.qc_trials, config.seed, config.qc_bound, config.qc_max_denominator)
    if qc_v.falsified:
        raise HypothesisFalsified("v", "quasi-convexity", qc_v.to_json())

    cov = covariance(u0, v0)
    hypothesis = HypothesisReport(symmetry_u, symmetry_v, qc_u, qc_v, cov)
    report = concordance(u0, v0)

    if cov != 0:
        return UnlinkResult(VERDICT_HYPOTHESIS_FAILED, hypothesis, report, None, None, None)

    transform = build_transform(report, config.tol_ortho)
    n = report.n
    residual_u = verify_unlinked(u0, transform, set(range(1, n + 1)) - set(transform.u_block))
    residual_v = verify_unlinked(v0, transform, set(range(1, n + 1)) - set(transform.v_block))
    if residual_u > config.tol_residual or residual_v > config.tol_residual:
        raise InvariantViolation(
            f"composition residuals exceed tolerance: {residual_u}, {residual_v}"
        )
    verdict = VERDICT_UNLINKED if report.r == 0 else VERDICT_CONTRADICTION
    return UnlinkResult(verdict, hypothesis, report, transform, residual_u, residual_v)


# ---------------------------------------------------------------------------
# Numerical spot-checks
# ---------------------------------------------------------------------------


def _sample_values(
    u: Polynomial, v: Polynomial, samples: int, seed: int, chunk: int = DEFAULT_CHUNK
) -> tuple[np.ndarray, np.ndarray]:
    su = np.empty(samples)
    sv = np.empty(samples)
    done = 0
    for block in gaussian_sample_chunks(u.arity, samples, seed, chunk):
        m = block.shape[0]
        su[done : done + m] = evaluate_float(u, block)
        sv[done : done + m] = evaluate_float(v, block)
        done += m
    return su, sv


@dataclass(frozen=True)
class CorrelationCheck:
    lhs: float
    rhs: float
    lhs_stderr: float
    rhs_stderr: float
    passed: bool
    samples: int
    seed: int

    def to_json(self) -> dict:
        return {
            "lhs": self.lhs,
            "rhs": self.rhs,
            "lhs_stderr": self.lhs_stderr,
            "rhs_stderr": self.rhs_stderr,
            "pass": self.passed,
            "samples": self.samples,
            "seed": self.seed,
        }


def correlation_spotcheck(
    u_star: Polynomial,
    v_star: Polynomial,
    k1: float,
    k2: float,
    samples: int,
    seed: int,
) -> CorrelationCheck:
    """Compare P(both sublevel events) against the product of marginals.

    For symmetric quasi-convex polynomials the sublevel sets are
    symmetric convex sets, so the joint probability must not fall below
    the product; the check passes when lhs >= rhs - 4 * combined stderr.
    All three probabilities are estimated from one shared sample set.
    """
    if u_star.arity != v_star.arity:
        raise ValueError(f"arity mismatch: {u_star.arity} != {v_star.arity}")
    if u_star.arity < 1:
        raise ValueError("spot-check needs at least one coordinate")
    if samples < 2:
        raise ValueError("need at least 2 samples")
    su, sv = _sample_values(u_star, v_star, samples, seed)
    in_a = su <= k1
    in_b = sv <= k2
    pa = float(in_a.mean())
    pb = float(in_b.mean())
    lhs = float((in_a & in_b).mean())
    rhs = pa * pb

    def bernoulli_stderr(prob: float) -> float:
        return (prob * (1.0 - prob) / samples) ** 0.5

    lhs_stderr = bernoulli_stderr(lhs)
    rhs_stderr = ((pb * bernoulli_stderr(pa)) ** 2 + (pa * bernoulli_stderr(pb)) ** 2) ** 0.5
    combined = (lhs_stderr**2 + rhs_stderr**2) ** 0.5
    return CorrelationCheck(
        lhs, rhs, lhs_stderr, rhs_stderr, lhs >= rhs - 4.0 * combined, samples, seed
    )


@dataclass(frozen=True)
class GridSpec:
    """Quadrature grid for the covariance integral: points per threshold axis.

    Grid nodes follow the empirical quantiles of the sampled values and
    are truncated at the ``quantile_cap`` quantile, so the grid adapts to
    where the sublevel probabilities actually move.
    """

    points: int = 80
    quantile_cap: float = 1.0 - 1e-4


@dataclass(frozen=True)
class IntegralCheck:
    exact_cov: Fraction
    integral_estimate: float
    stderr: float
    passed: bool
    samples: int
    seed: int

    def to_json(self) -> dict:
        return {
            "exact_cov": str(self.exact_cov),
            "integral_estimate": self.integral_estimate,
            "stderr": self.stderr,
            "pass": self.passed,
            "samples": self.samples,
            "seed": self.seed,
        }


def _threshold_grid(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    # quantile nodes track steep CDF regions (e.g. the sqrt blow-up of a
    # squared Gaussian near 0); evenly spaced values keep the decaying
    # tail finely resolved, where pure quantile spacing leaves one huge
    # interval and the trapezoid rule overshoots
    cap = float(np.quantile(values, grid.quantile_cap))
    levels = np.linspace(0.0, grid.quantile_cap, grid.points)
    nodes = np.concatenate(
        ([0.0], np.quantile(values, levels), np.linspace(0.0, cap, grid.points))
    )
    return np.unique(np.clip(nodes, 0.0, cap))


def covariance_integral_check(
    u_star: Polynomial,
    v_star: Polynomial,
    samples: int,
    grid: GridSpec = GridSpec(),
    seed: int = 42,
) -> IntegralCheck:
    """Check Cov(u*(Y), v*(Y)) against its sublevel-set double integral.

    For nonnegative u*, v* the covariance equals the integral over
    thresholds (k1, k2) of P(both sublevel events) minus the product of
    the marginals.  The integral is estimated by a trapezoid rule on an
    adaptive quantile grid, with all probabilities read off one shared
    sample set.  Passes when the estimate is within
    max(5% of |exact|, 5 * stderr) of the exact covariance, where stderr
    is that of the direct Monte Carlo covariance estimator on the same
    samples (the two estimators target the same quantity).
    """
    if u_star.arity != v_star.arity:
        raise ValueError(f"arity mismatch: {u_star.arity} != {v_star.arity}")
    if u_star.arity not in (1, 2):
        raise ValueError("integral check supports arity 1 or 2 only")
    if samples < 2:
        raise ValueError("need at least 2 samples")
    exact = covariance(u_star, v_star)
    su, sv = _sample_values(u_star, v_star, samples, seed)
    if float(su.min()) < -1e-12 or float(sv.min()) < -1e-12:
        raise ValueError("negative sample value: inputs must be nonnegative polynomials")

    g1 = _threshold_grid(su, grid)
    g2 = _threshold_grid(sv, grid)
    # joint counts per grid cell; index len(g) collects values beyond the cap
    b1 = np.searchsorted(g1, su, side="left")
    b2 = np.searchsorted(g2, sv, side="left")
    flat = b1 * (len(g2) + 1) + b2
    counts = np.bincount(flat, minlength=(len(g1) + 1) * (len(g2) + 1)).reshape(
        len(g1) + 1, len(g2) + 1
    )
    joint = counts.cumsum(axis=0).cumsum(axis=1)[: len(g1), : len(g2)] / samples
    f1 = np.searchsorted(np.sort(su), g1, side="right") / samples
    f2 = np.searchsorted(np.sort(sv), g2, side="right") / samples
    integrand = joint - np.outer(f1, f2)
    estimate = float(np.trapezoid(np.trapezoid(integrand, x=g2, axis=1), x=g1))

    centered = (su - su.mean()) * (sv - sv.mean())
    stderr = float(centered.std(ddof=1) / samples**0.5)
    tolerance = max(0.05 * abs(float(exact)), 5.0 * stderr)
    passed = abs(estimate - float(exact)) <= tolerance
    return IntegralCheck(exact, estimate, stderr, passed, samples, seed)


def divergence_check(
    u_star: Polynomial,
    y_star: Sequence[float],
    lambda_max: float = 1e6,
    steps: int = 200,
) -> bool:
    """Sampled divergence of t -> u*(t * y) along a fixed nonzero direction.

    Evaluates at ``steps`` geometric points from 1 to ``lambda_max`` and
    requires the values to be strictly increasing over the last quarter
    of the points and to end more than 1e3 above the starting value.
    """
    direction = np.asarray(y_star, dtype=float)
    if direction.ndim != 1 or direction.shape[0] != u_star.arity:
        raise ValueError("direction length must equal the arity")
    if not np.any(direction):
        raise ValueError("direction must be nonzero")
    if steps < 4:
        raise ValueError("need at least 4 sample points")
    scales = np.geomspace(1.0, lambda_max, steps)
    values = evaluate_float(u_star, scales[:, None] * direction[None, :])
    tail = max(2, steps // 4)
    increasing = bool(np.all(np.diff(values[-tail:]) > 0))
    return increasing and values[-1] > values[0] + 1e3
