"""Exact multivariate polynomial arithmetic over the rationals.

A polynomial in n variables x1..xn is stored sparsely as a mapping from
exponent tuples (length n) to nonzero ``Fraction`` coefficients; the empty
mapping is the zero polynomial.  All arithmetic is exact.  Floating-point
inputs are allowed only in ``compose_linear`` and ``evaluate_float``; a
float is converted to the exact binary rational it denotes, so even
"float" results are carried without further rounding.

Variables are numbered 1-based throughout the public API, matching the
text syntax (``x1``, ``x2``, ...).  Exponent tuples are positional:
position 0 holds the exponent of x1.

All values are immutable after construction and safe to share between
threads.
"""

from __future__ import annotations

import numbers
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

Exponent = tuple[int, ...]

__all__ = [
    "Exponent",
    "Polynomial",
    "PolynomialSyntaxError",
    "RationalMatrix",
    "combine",
    "compose_linear",
    "directional_derivative",
    "evaluate",
    "evaluate_float",
    "from_json",
    "is_symmetric",
    "parse_expression",
    "partial_derivative",
    "restrict_line",
    "symmetry_defect",
    "to_expression",
    "to_json",
]


class PolynomialSyntaxError(ValueError):
    """Raised when expression text does not conform to the input grammar.

    ``position`` is the 0-based character offset of the offending token.
    """

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at offset {position})")
        self.position = position


def _as_fraction(value) -> tuple[Fraction, bool]:
    """Convert a number to Fraction; the flag reports an inexact source."""
    if isinstance(value, Fraction):
        return value, False
    if isinstance(value, numbers.Integral):
        return Fraction(int(value)), False
    if isinstance(value, numbers.Real):
        # float -> exact binary rational, no additional rounding
        return Fraction(float(value)), True
    raise TypeError(f"cannot interpret {value!r} as a rational number")


def _grlex(exponent: Exponent) -> tuple[int, Exponent]:
    return (sum(exponent), exponent)


@dataclass(frozen=True)
class Polynomial:
    """Canonical sparse polynomial: no zero coefficients are stored.

    Terms are kept in ascending graded-lexicographic order so that equal
    polynomials iterate identically (this makes float evaluation and
    serialization bit-reproducible).
    """

    arity: int
    terms: dict[Exponent, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        if self.arity < 0:
            raise ValueError("arity must be nonnegative")
        canon: dict[Exponent, Fraction] = {}
        for exponent, coeff in sorted(self.terms.items(), key=lambda item: _grlex(item[0])):
            exponent = tuple(int(k) for k in exponent)
            if len(exponent) != self.arity:
                raise ValueError(
                    f"exponent tuple {exponent} has length {len(exponent)}, expected {self.arity}"
                )
            if any(k < 0 for k in exponent):
                raise ValueError(f"negative exponent in {exponent}")
            coeff, _ = _as_fraction(coeff)
            if coeff:
                canon[exponent] = coeff
        object.__setattr__(self, "terms", canon)

    @classmethod
    def zero(cls, arity: int) -> "Polynomial":
        return cls(arity, {})

    @classmethod
    def constant(cls, arity: int, value) -> "Polynomial":
        return cls(arity, {(0,) * arity: value})

    @classmethod
    def variable(cls, arity: int, index: int) -> "Polynomial":
        """The monomial x<index>, 1-based."""
        if not 1 <= index <= arity:
            raise ValueError(f"variable index {index} out of range 1..{arity}")
        exponent = [0] * arity
        exponent[index - 1] = 1
        return cls(arity, {tuple(exponent): Fraction(1)})

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def total_degree(self) -> int:
        """Maximum term degree; 0 for the zero polynomial."""
        return max((sum(e) for e in self.terms), default=0)

    def constant_term(self) -> Fraction:
        return self.terms.get((0,) * self.arity, Fraction(0))

    def _check_arity(self, other: "Polynomial"):
        if self.arity != other.arity:
            raise ValueError(f"arity mismatch: {self.arity} != {other.arity}")

    def __add__(self, other: "Polynomial") -> "Polynomial":
        self._check_arity(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, Fraction(0)) + c
        return Polynomial(self.arity, out)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.arity, {e: -c for e, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            self._check_arity(other)
            out: dict[Exponent, Fraction] = {}
            for ea, ca in self.terms.items():
                for eb, cb in other.terms.items():
                    e = tuple(i + j for i, j in zip(ea, eb))
                    out[e] = out.get(e, Fraction(0)) + ca * cb
            return Polynomial(self.arity, out)
        scalar, _ = _as_fraction(other)
        return Polynomial(self.arity, {e: c * scalar for e, c in self.terms.items()})

    __rmul__ = __mul__

    def __pow__(self, power: int) -> "Polynomial":
        if power < 0:
            raise ValueError("negative power")
        result = Polynomial.constant(self.arity, 1)
        for _ in range(power):
            result = result * self
        return result

    def __str__(self) -> str:
        return to_expression(self)


def combine(p: Polynomial, q: Polynomial, op: str) -> Polynomial:
    """Exact sum or product of two polynomials of equal arity."""
    if op == "add":
        return p + q
    if op == "mul":
        return p * q
    raise ValueError(f"unknown operation {op!r}; expected 'add' or 'mul'")


def evaluate(p: Polynomial, point: Sequence) -> Fraction:
    """Exact value of p at a rational point."""
    if len(point) != p.arity:
        raise ValueError(f"point length {len(point)} != arity {p.arity}")
    values = [_as_fraction(x)[0] for x in point]
    total = Fraction(0)
    for exponent, coeff in p.terms.items():
        term = coeff
        for value, k in zip(values, exponent):
            if k:
                term *= value**k
        total += term
    return total


def evaluate_float(p: Polynomial, points) -> np.ndarray | float:
    """Evaluate p in float64 at one point or a batch of row points.

    Accepts a length-n vector or an (m, n) array; returns a scalar or an
    (m,) array.  Term iteration order is canonical, so equal polynomials
    produce bit-identical results on identical input.
    """
    x = np.asarray(points, dtype=float)
    single = x.ndim == 1
    if single:
        x = x.reshape(1, -1)
    if x.ndim != 2 or x.shape[1] != p.arity:
        raise ValueError(f"expected points of arity {p.arity}, got shape {x.shape}")
    acc = np.zeros(x.shape[0])
    for exponent, coeff in p.terms.items():
        term = np.full(x.shape[0], float(coeff))
        for i, k in enumerate(exponent):
            if k:
                term = term * x[:, i] ** k
        acc += term
    return float(acc[0]) if single else acc


def restrict_line(p: Polynomial, base: Sequence, direction: Sequence) -> Polynomial:
    """The univariate polynomial t -> p(base + t * direction), exact.

    A zero direction is allowed and yields the constant p(base).
    """
    if len(base) != p.arity or len(direction) != p.arity:
        raise ValueError("base and direction must have length equal to the arity")
    b = [_as_fraction(x)[0] for x in base]
    v = [_as_fraction(x)[0] for x in direction]
    # x_i substituted by the degree<=1 polynomial b_i + t*v_i
    lines = [Polynomial(1, {(0,): b_i, (1,): v_i}) for b_i, v_i in zip(b, v)]
    powers: dict[tuple[int, int], Polynomial] = {}

    def line_power(i: int, k: int) -> Polynomial:
        key = (i, k)
        if key not in powers:
            powers[key] = lines[i] if k == 1 else line_power(i, k - 1) * lines[i]
        return powers[key]

    out = Polynomial.zero(1)
    for exponent, coeff in p.terms.items():
        term = Polynomial.constant(1, coeff)
        for i, k in enumerate(exponent):
            if k:
                term = term * line_power(i, k)
        out = out + term
    return out


def partial_derivative(p: Polynomial, index: int) -> Polynomial:
    """Exact partial derivative with respect to x<index> (1-based)."""
    if not 1 <= index <= p.arity:
        raise ValueError(f"variable index {index} out of range 1..{p.arity}")
    i = index - 1
    out: dict[Exponent, Fraction] = {}
    for exponent, coeff in p.terms.items():
        k = exponent[i]
        if k:
            e = list(exponent)
            e[i] = k - 1
            out[tuple(e)] = coeff * k
    return Polynomial(p.arity, out)


def directional_derivative(p: Polynomial, direction: Sequence) -> Polynomial:
    """Exact derivative of p along a constant direction vector."""
    if len(direction) != p.arity:
        raise ValueError("direction length must equal the arity")
    out = Polynomial.zero(p.arity)
    for i, x in enumerate(direction, start=1):
        v, _ = _as_fraction(x)
        if v:
            out = out + v * partial_derivative(p, i)
    return out


@dataclass(frozen=True)
class RationalMatrix:
    """Dense rectangular matrix with exact rational entries."""

    rows: int
    cols: int
    entries: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        if self.rows < 0 or self.cols < 0:
            raise ValueError("matrix dimensions must be nonnegative")
        if len(self.entries) != self.rows:
            raise ValueError("entry grid does not match the declared row count")
        grid = []
        for row in self.entries:
            if len(row) != self.cols:
                raise ValueError("entry grid is not rectangular")
            grid.append(tuple(_as_fraction(x)[0] for x in row))
        object.__setattr__(self, "entries", tuple(grid))

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable]) -> "RationalMatrix":
        grid = [tuple(row) for row in rows]
        cols = len(grid[0]) if grid else 0
        return cls(len(grid), cols, tuple(grid))


def _matrix_entries(matrix, n: int) -> tuple[list[list[Fraction]], bool]:
    """Read an n-by-n matrix of numbers; flag whether any entry was inexact."""
    if isinstance(matrix, RationalMatrix):
        if matrix.rows != n or matrix.cols != n:
            raise ValueError(f"matrix must be {n}x{n}, got {matrix.rows}x{matrix.cols}")
        return [list(row) for row in matrix.entries], False
    if isinstance(matrix, np.ndarray):
        rows = matrix.tolist()
    else:
        rows = [list(row) for row in matrix]
    if len(rows) != n or any(len(row) != n for row in rows):
        raise ValueError(f"matrix must be {n}x{n}")
    inexact = False
    grid = []
    for row in rows:
        out_row = []
        for x in row:
            value, was_float = _as_fraction(x)
            inexact = inexact or was_float
            out_row.append(value)
        grid.append(out_row)
    return grid, inexact


_CLEANUP_THRESHOLD = Fraction(1, 10**12)


def compose_linear(p: Polynomial, matrix) -> Polynomial:
    """Coefficients of x -> p(M x) for a square matrix M.

    Rational matrices give an exact result.  Float entries are converted
    to the exact binary rationals they denote and composed exactly; in
    that case coefficients of magnitude <= 1e-12 are dropped afterwards
    to restore sparsity.
    """
    n = p.arity
    grid, inexact = _matrix_entries(matrix, n)
    # x_i becomes the linear form sum_j M[i][j] * y_j
    forms = [Polynomial(n, {tuple(int(j == k) for k in range(n)): grid[i][j] for j in range(n)}) for i in range(n)]
    powers: dict[tuple[int, int], Polynomial] = {}

    def form_power(i: int, k: int) -> Polynomial:
        key = (i, k)
        if key not in powers:
            powers[key] = forms[i] if k == 1 else form_power(i, k - 1) * forms[i]
        return powers[key]

    acc: dict[Exponent, Fraction] = {}
    for exponent, coeff in p.terms.items():
        term = Polynomial.constant(n, coeff)
        for i, k in enumerate(exponent):
            if k:
                term = term * form_power(i, k)
        for e, c in term.terms.items():
            acc[e] = acc.get(e, Fraction(0)) + c
    if inexact:
        acc = {e: c for e, c in acc.items() if abs(c) > _CLEANUP_THRESHOLD}
    return Polynomial(n, acc)


def is_symmetric(p: Polynomial) -> bool:
    """True iff p(x) = p(-x) as polynomials.

    Equivalent to every stored term having even total degree, because
    negating the point flips exactly the odd-degree terms.
    """
    return all(sum(e) % 2 == 0 for e in p.terms)


def symmetry_defect(p: Polynomial) -> float:
    """Largest |coefficient| among odd-total-degree terms (0.0 if none)."""
    return max((abs(float(c)) for e, c in p.terms.items() if sum(e) % 2), default=0.0)


# ---------------------------------------------------------------------------
# Text form
#
# expression := ('+'|'-')? term (('+'|'-') term)*
# term       := factor ('*' factor)*
# factor     := coefficient | variable ('^' positive-integer)?
# coefficient:= integer ('/' positive-integer)?
# variable   := 'x' positive-integer
#
# Whitespace is insignificant.  The leading sign is accepted so that
# polynomials such as "-x1^2" round-trip.
# ---------------------------------------------------------------------------


def to_expression(p: Polynomial) -> str:
    """Render to the text grammar; leading terms first (descending degree)."""
    if p.is_zero:
        return "0"
    parts = []
    for exponent, coeff in sorted(p.terms.items(), key=lambda item: _grlex(item[0]), reverse=True):
        mono = "*".join(
            f"x{i + 1}^{k}" if k > 1 else f"x{i + 1}"
            for i, k in enumerate(exponent)
            if k
        )
        magnitude = abs(coeff)
        if mono and magnitude == 1:
            body = mono
        elif mono:
            body = f"{magnitude}*{mono}"
        else:
            body = str(magnitude)
        parts.append(("-" if coeff < 0 else "+", body))
    sign, first = parts[0]
    pieces = [first if sign == "+" else "-" + first]
    for sign, body in parts[1:]:
        pieces.append(f" {sign} {body}")
    return "".join(pieces)


def to_json(p: Polynomial) -> dict:
    """JSON form with coefficients as exact fraction strings.

    Terms are listed in ascending graded-lexicographic exponent order for
    bit-exact reproducibility.
    """
    return {
        "n": p.arity,
        "terms": [{"c": str(c), "e": list(e)} for e, c in p.terms.items()],
    }


def from_json(obj) -> Polynomial:
    if not isinstance(obj, dict) or "n" not in obj or "terms" not in obj:
        raise ValueError("polynomial JSON must be an object with keys 'n' and 'terms'")
    arity = obj["n"]
    if not isinstance(arity, int) or arity < 0:
        raise ValueError("'n' must be a nonnegative integer")
    terms: dict[Exponent, Fraction] = {}
    for item in obj["terms"]:
        exponent = tuple(item["e"])
        coeff = Fraction(item["c"])
        terms[exponent] = terms.get(exponent, Fraction(0)) + coeff
    return Polynomial(arity, terms)


def _tokenize(text: str) -> list[tuple[str, object, int]]:
    tokens: list[tuple[str, object, int]] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "+-*/^":
            tokens.append((ch, ch, i))
            i += 1
            continue
        if ch.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            tokens.append(("int", int(text[i:j]), i))
            i = j
            continue
        if ch == "x":
            j = i + 1
            while j < len(text) and text[j].isdigit():
                j += 1
            if j == i + 1:
                raise PolynomialSyntaxError("expected a variable index after 'x'", i)
            tokens.append(("var", int(text[i + 1 : j]), i))
            i = j
            continue
        raise PolynomialSyntaxError(f"unexpected character {ch!r}", i)
    tokens.append(("end", None, len(text)))
    return tokens


class _Parser:
    def __init__(self, tokens: list[tuple[str, object, int]], arity: int):
        self.tokens = tokens
        self.pos = 0
        self.arity = arity

    def peek(self) -> tuple[str, object, int]:
        return self.tokens[self.pos]

    def take(self) -> tuple[str, object, int]:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def expression(self) -> Polynomial:
        sign = Fraction(1)
        if self.peek()[0] in "+-":
            if self.take()[0] == "-":
                sign = Fraction(-1)
        acc = sign * self.term()
        while self.peek()[0] in "+-":
            op = self.take()[0]
            term = self.term()
            acc = acc + term if op == "+" else acc - term
        kind, _, position = self.peek()
        if kind != "end":
            raise PolynomialSyntaxError("expected '+', '-', '*' or end of input", position)
        return acc

    def term(self) -> Polynomial:
        acc = self.factor()
        while self.peek()[0] == "*":
            self.take()
            acc = acc * self.factor()
        return acc

    def factor(self) -> Polynomial:
        kind, value, position = self.peek()
        if kind == "int":
            self.take()
            numerator = value
            if self.peek()[0] == "/":
                self.take()
                dkind, denominator, dpos = self.take()
                if dkind != "int":
                    raise PolynomialSyntaxError("expected an integer denominator", dpos)
                if denominator == 0:
                    raise PolynomialSyntaxError("zero denominator in a coefficient", dpos)
                return Polynomial.constant(self.arity, Fraction(numerator, denominator))
            return Polynomial.constant(self.arity, Fraction(numerator))
        if kind == "var":
            self.take()
            if not 1 <= value <= self.arity:
                raise PolynomialSyntaxError(
                    f"variable index {value} out of range 1..{self.arity}", position
                )
            exponent = 1
            if self.peek()[0] == "^":
                self.take()
                ekind, exponent, epos = self.take()
                if ekind != "int":
                    raise PolynomialSyntaxError("expected an integer exponent", epos)
                if exponent < 1:
                    raise PolynomialSyntaxError("exponent must be a positive integer", epos)
            e = [0] * self.arity
            e[value - 1] = exponent
            return Polynomial(self.arity, {tuple(e): Fraction(1)})
        raise PolynomialSyntaxError("expected a coefficient or a variable", position)


def parse_expression(text: str, arity: int) -> Polynomial:
    """Parse expression text into a canonical polynomial of the given arity."""
    if arity < 0:
        raise ValueError("arity must be nonnegative")
    return _Parser(_tokenize(text), arity).expression()
