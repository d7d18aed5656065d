"""Exact Gaussian expectations and the deterministic Monte Carlo engine."""

import random
from fractions import Fraction

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from qcunlink.gaussmeasure import (
    MomentTable,
    covariance,
    expectation,
    gaussian_moment,
    mc_estimate,
    partial_expectation,
    sublevel_probability_mc,
)
from qcunlink.polyalg import Polynomial

from corpus import P


def double_factorial_oracle(order: int) -> int:
    # product of odd numbers down from order-1; independent of the table
    result = 1
    for k in range(1, order, 2):
        result *= k
    return result


# ---------------------------------------------------------------------------
# Moments
# ---------------------------------------------------------------------------


def test_moment_table_matches_double_factorial():
    table = MomentTable()
    for m in range(0, 9):
        assert table.moment(2 * m) == double_factorial_oracle(2 * m)
        assert table.moment(2 * m + 1) == 0


def test_moment_recurrence():
    table = MomentTable()
    assert table.moment(0) == 1
    for m in range(1, 8):
        assert table.moment(2 * m) == (2 * m - 1) * table.moment(2 * m - 2)


def test_moment_negative_order_rejected():
    with pytest.raises(ValueError):
        gaussian_moment(-2)


# ---------------------------------------------------------------------------
# Expectation and covariance
# ---------------------------------------------------------------------------


def test_expectation_examples():
    assert expectation(P("x1^2", 1)) == 1
    assert expectation(P("x1^4", 1)) == 3
    assert expectation(P("x1*x2", 2)) == 0


def test_expectation_quartic_mc_cross_check():
    estimate = mc_estimate(P("x1^4", 1), 200_000, seed=42)
    assert abs(estimate.mean - 3.0) <= 4 * estimate.standard_error


def test_covariance_rotated_pair_wick_values():
    u = P("x1^2 + 2*x1*x2 + x2^2", 2)
    v = P("x1^2 - 2*x1*x2 + x2^2", 2)
    # hand expansion: E[uv] = E[(x1^2 - x2^2)^2] = 3 - 2 + 3 = 4, E[u] = E[v] = 2
    assert expectation(u * v) == 4
    assert expectation(u) == 2
    assert expectation(v) == 2
    assert covariance(u, v) == 0
    pair = mc_estimate((u, v), 200_000, seed=42)
    assert abs(pair.mean - 4.0) <= 4 * pair.standard_error


def test_covariance_independent_coordinates():
    assert covariance(P("x1^2", 2), P("x2^2", 2)) == 0


def test_covariance_variance_of_square():
    assert covariance(P("x1^2", 2), P("x1^2 + x2^2", 2)) == 2


def test_covariance_arity_mismatch():
    with pytest.raises(ValueError, match="arity"):
        covariance(P("x1", 1), P("x1", 2))


# ---------------------------------------------------------------------------
# Partial expectation
# ---------------------------------------------------------------------------


def test_partial_expectation_examples():
    assert partial_expectation(P("x1^2*x2^2", 2), {2}) == P("x1^2", 2)
    assert partial_expectation(P("x1^2*x2", 2), {2}).is_zero
    assert partial_expectation(P("x1^4 + x1^2*x2^4", 2), {2}) == P("x1^4 + 3*x1^2", 2)


def test_partial_expectation_index_out_of_range():
    with pytest.raises(ValueError, match="out of range"):
        partial_expectation(P("x1^2", 2), {3})


# ---------------------------------------------------------------------------
# Monte Carlo engine
# ---------------------------------------------------------------------------


def test_mc_estimate_unit_variance():
    estimate = mc_estimate(P("x1^2", 1), 200_000, seed=42)
    assert abs(estimate.mean - 1.0) <= 4 * estimate.standard_error
    assert estimate.samples == 200_000
    assert estimate.seed == 42


def test_mc_estimate_rejects_tiny_sample_counts():
    with pytest.raises(ValueError):
        mc_estimate(P("x1", 1), 1, seed=1)
    with pytest.raises(ValueError):
        sublevel_probability_mc(P("x1", 1), 0.0, 1, seed=1)


def test_mc_estimate_bit_reproducible():
    a = mc_estimate(P("x1^4 - x1^2", 1), 70_000, seed=9)
    b = mc_estimate(P("x1^4 - x1^2", 1), 70_000, seed=9)
    assert (a.mean, a.standard_error) == (b.mean, b.standard_error)
    c = mc_estimate(P("x1^4 - x1^2", 1), 70_000, seed=10)
    assert (a.mean, a.standard_error) != (c.mean, c.standard_error)


def test_sublevel_probability_chi_square_median():
    median = scipy.stats.chi2.ppf(0.5, df=1)  # about 0.4549
    estimate = sublevel_probability_mc(P("x1^2", 1), median, 200_000, seed=42)
    assert abs(estimate.mean - 0.5) <= 4 * estimate.standard_error


def test_sublevel_probability_edge_cases():
    below = sublevel_probability_mc(P("x1^2", 1), -1.0, 10_000, seed=1)
    assert below.mean == 0.0
    always = sublevel_probability_mc(Polynomial.zero(1), 0.0, 10_000, seed=1)
    assert always.mean == 1.0


# ---------------------------------------------------------------------------
# Properties
# ---------------------------------------------------------------------------

coefficients = st.fractions(min_value=-3, max_value=3, max_denominator=8)


@st.composite
def polynomials(draw, max_arity=3, max_exponent=3, max_terms=5):
    arity = draw(st.integers(1, max_arity))
    terms = {}
    for _ in range(draw(st.integers(0, max_terms))):
        exponent = tuple(draw(st.integers(0, max_exponent)) for _ in range(arity))
        terms[exponent] = draw(coefficients)
    return Polynomial(arity, terms)


@settings(max_examples=80, deadline=None)
@given(polynomials())
def test_odd_kill(p):
    odd_part = Polynomial(p.arity, {e: c for e, c in p.terms.items() if any(k % 2 for k in e)})
    assert expectation(odd_part) == 0


@settings(max_examples=80, deadline=None)
@given(polynomials(), st.data())
def test_linearity(p, data):
    q = data.draw(polynomials(max_arity=p.arity))
    q = Polynomial(p.arity, {e + (0,) * (p.arity - q.arity): c for e, c in q.terms.items()})
    a = data.draw(coefficients)
    b = data.draw(coefficients)
    assert expectation(a * p + b * q) == a * expectation(p) + b * expectation(q)


@settings(max_examples=80, deadline=None)
@given(polynomials(), st.data())
def test_tower_property(p, data):
    subset = data.draw(st.sets(st.integers(1, p.arity)))
    assert expectation(partial_expectation(p, subset)) == expectation(p)


def test_mc_rotational_invariance():
    # sampling X and evaluating p(QX) must estimate the same expectation
    rng = np.random.default_rng(5)
    p = P("x1^4 + 2*x1^2*x2^2 - x2^2 + 1/2*x1*x2", 2)
    exact = float(expectation(p))
    a = rng.standard_normal((2, 2))
    q, _ = np.linalg.qr(a)
    from qcunlink.polyalg import compose_linear

    rotated = compose_linear(p, q)
    estimate = mc_estimate(rotated, 300_000, seed=77)
    assert abs(estimate.mean - exact) <= 4 * estimate.standard_error
