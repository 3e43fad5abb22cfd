"""Prime-field arithmetic and polynomial operations.

A ``Field`` instance is the shared context carrying the modulus; protocol
code works on raw integer residues through the ``Field`` methods (cheap,
no per-value wrappers), while ``FieldElement`` offers an operator-rich
view for callers that want one.  Mixing elements from different field
contexts is a hard error.

Polynomials are coefficient lists, lowest degree first, with trailing
zeros stripped; the zero polynomial is the empty list and has degree -1.
"""

from __future__ import annotations

import random
from functools import lru_cache
from typing import Iterable, Sequence

from .errors import DivisionByZero, DuplicateAbscissa, MixedFieldError

DEFAULT_PRIME = 2**61 - 1  # Mersenne prime, fits double-width machine words


def _is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin; the base set covers all n < 3.3e24."""
    if n < 2:
        return False
    for small in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % small == 0:
            return n == small
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for base in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(base, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


class Field:
    """The prime field GF(p); all residues live in [0, p)."""

    __slots__ = ("p",)

    def __init__(self, p: int = DEFAULT_PRIME):
        if not _is_prime(p):
            raise ValueError(f"modulus {p} is not prime")
        self.p = p

    def __eq__(self, other):
        return isinstance(other, Field) and self.p == other.p

    def __hash__(self):
        return hash(("Field", self.p))

    def __repr__(self):
        return f"Field({self.p})"

    # -- scalar ops on raw residues --------------------------------------

    def reduce(self, a: int) -> int:
        return a % self.p

    def add(self, a: int, b: int) -> int:
        s = a + b
        return s - self.p if s >= self.p else s

    def sub(self, a: int, b: int) -> int:
        d = a - b
        return d + self.p if d < 0 else d

    def mul(self, a: int, b: int) -> int:
        return a * b % self.p

    def neg(self, a: int) -> int:
        return self.p - a if a else 0

    def inv(self, a: int) -> int:
        if a % self.p == 0:
            raise DivisionByZero("inverse of zero")
        return pow(a, self.p - 2, self.p)

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def elem(self, value: int) -> "FieldElement":
        return FieldElement(self, value)

    def sample_uniform(self, rng: random.Random) -> int:
        """Uniform residue; deterministic given the rng state."""
        return rng.randrange(self.p)

    # -- polynomial ops (coefficient lists, low order first) -------------

    def poly_trim(self, coeffs: Sequence[int]) -> list[int]:
        c = list(coeffs)
        while c and c[-1] == 0:
            c.pop()
        return c

    def poly_eval(self, coeffs: Sequence[int], x: int) -> int:
        acc = 0
        for c in reversed(coeffs):
            acc = (acc * x + c) % self.p
        return acc

    def poly_eval_many(self, coeffs: Sequence[int], xs: Sequence[int]) -> list[int]:
        """Evaluate at several points via cached power rows; one mod per point."""
        p = self.p
        rows = _power_rows(p, tuple(xs), len(coeffs))
        mul = int.__mul__
        return [sum(map(mul, row, coeffs)) % p for row in rows]

    def poly_add(self, a: Sequence[int], b: Sequence[int]) -> list[int]:
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, c in enumerate(b):
            out[i] = self.add(out[i], c)
        return self.poly_trim(out)

    def poly_sub(self, a: Sequence[int], b: Sequence[int]) -> list[int]:
        out = list(a) + [0] * max(0, len(b) - len(a))
        for i, c in enumerate(b):
            out[i] = self.sub(out[i], c)
        return self.poly_trim(out)

    def poly_scale(self, a: Sequence[int], k: int) -> list[int]:
        return self.poly_trim([c * k % self.p for c in a])

    def poly_mul(self, a: Sequence[int], b: Sequence[int]) -> list[int]:
        if not a or not b:
            return []
        out = [0] * (len(a) + len(b) - 1)
        for i, ca in enumerate(a):
            if ca == 0:
                continue
            for j, cb in enumerate(b):
                out[i + j] = (out[i + j] + ca * cb) % self.p
        return self.poly_trim(out)

    def poly_divmod(self, a: Sequence[int], b: Sequence[int]) -> tuple[list[int], list[int]]:
        b = self.poly_trim(b)
        if not b:
            raise DivisionByZero("polynomial division by zero")
        rem = list(a)
        quo = [0] * max(0, len(rem) - len(b) + 1)
        inv_lead = self.inv(b[-1])
        for i in range(len(rem) - len(b), -1, -1):
            factor = rem[i + len(b) - 1] * inv_lead % self.p
            if factor:
                quo[i] = factor
                for j, c in enumerate(b):
                    rem[i + j] = (rem[i + j] - factor * c) % self.p
        return self.poly_trim(quo), self.poly_trim(rem)

    def random_poly(self, degree: int, rng: random.Random, constant: int | None = None) -> list[int]:
        """Uniform polynomial of degree <= degree, optionally pinned at x=0."""
        coeffs = [rng.randrange(self.p) for _ in range(degree + 1)]
        if constant is not None:
            coeffs[0] = constant % self.p
        return coeffs

    def lagrange_weights_at(self, xs: Sequence[int], at: int = 0) -> list[int]:
        """Weights w_i with f(at) = sum w_i * f(xs[i]) for deg f < len(xs)."""
        return _lagrange_weights_cached(self.p, tuple(xs), at)

    def interpolate(self, points: Sequence[tuple[int, int]]) -> list[int]:
        """Unique polynomial of degree < len(points) through the points."""
        if not points:
            raise ValueError("need at least one point")
        xs = [x for x, _ in points]
        if len(set(xs)) != len(xs):
            raise DuplicateAbscissa(f"repeated abscissa in {xs}")
        result: list[int] = []
        for i, (xi, yi) in enumerate(points):
            basis = [1]
            den = 1
            for j, (xj, _) in enumerate(points):
                if i == j:
                    continue
                basis = self.poly_mul(basis, [self.neg(xj), 1])
                den = den * self.sub(xi, xj) % self.p
            result = self.poly_add(result, self.poly_scale(basis, yi * self.inv(den) % self.p))
        return result


@lru_cache(maxsize=16384)
def _power_rows(p: int, xs: tuple, k: int) -> list[list[int]]:
    rows = []
    for x in xs:
        row = [1]
        acc = 1
        for _ in range(k - 1):
            acc = acc * x % p
            row.append(acc)
        rows.append(row)
    return rows


@lru_cache(maxsize=8192)
def _lagrange_weights_cached(p: int, xs: tuple, at: int) -> list[int]:
    if len(set(xs)) != len(xs):
        raise DuplicateAbscissa(f"repeated abscissa in {xs}")
    weights = []
    for i, xi in enumerate(xs):
        num = 1
        den = 1
        for j, xj in enumerate(xs):
            if i == j:
                continue
            num = num * (at - xj) % p
            den = den * (xi - xj) % p
        weights.append(num * pow(den, p - 2, p) % p)
    return weights


def poly_degree(coeffs: Sequence[int]) -> int:
    """Degree with the zero-polynomial-is-minus-one convention."""
    d = len(coeffs) - 1
    while d >= 0 and coeffs[d] == 0:
        d -= 1
    return d


class FieldElement:
    """A residue bound to its field context."""

    __slots__ = ("field", "value")

    def __init__(self, field: Field, value: int):
        self.field = field
        self.value = value % field.p

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.field != self.field:
                raise MixedFieldError(
                    f"cannot mix GF({self.field.p}) and GF({other.field.p})"
                )
            return other.value
        if isinstance(other, int):
            return other % self.field.p
        return NotImplemented

    def __add__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return NotImplemented
        return FieldElement(self.field, self.value + v)

    __radd__ = __add__

    def __sub__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return NotImplemented
        return FieldElement(self.field, self.value - v)

    def __rsub__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return NotImplemented
        return FieldElement(self.field, v - self.value)

    def __mul__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return NotImplemented
        return FieldElement(self.field, self.value * v)

    __rmul__ = __mul__

    def __truediv__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return NotImplemented
        if v == 0:
            raise DivisionByZero("division by zero")
        return FieldElement(self.field, self.value * self.field.inv(v))

    def __neg__(self):
        return FieldElement(self.field, -self.value)

    def inverse(self) -> "FieldElement":
        return FieldElement(self.field, self.field.inv(self.value))

    def __eq__(self, other):
        if isinstance(other, FieldElement):
            return self.field == other.field and self.value == other.value
        if isinstance(other, int):
            return self.value == other % self.field.p
        return NotImplemented

    def __hash__(self):
        return hash((self.field.p, self.value))

    def __int__(self):
        return self.value

    def __repr__(self):
        return f"{self.value}@GF({self.field.p})"


class Polynomial:
    """Operator view over a coefficient list bound to a field."""

    __slots__ = ("field", "coeffs")

    def __init__(self, field: Field, coeffs: Iterable[int | FieldElement]):
        raw = []
        for c in coeffs:
            if isinstance(c, FieldElement):
                if c.field != field:
                    raise MixedFieldError("coefficient from a different field")
                raw.append(c.value)
            else:
                raw.append(c % field.p)
        self.field = field
        self.coeffs = field.poly_trim(raw)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x: int | FieldElement) -> FieldElement:
        xv = x.value if isinstance(x, FieldElement) else x % self.field.p
        return FieldElement(self.field, self.field.poly_eval(self.coeffs, xv))

    def __eq__(self, other):
        return (
            isinstance(other, Polynomial)
            and self.field == other.field
            and self.coeffs == other.coeffs
        )

    def __repr__(self):
        return f"Polynomial({self.coeffs}, p={self.field.p})"


def ff_arith(a: FieldElement, b: FieldElement, kind: str) -> FieldElement:
    """Dispatch arithmetic by name; the config layer uses this for oracles."""
    if kind == "add":
        return a + b
    if kind == "sub":
        return a - b
    if kind == "mul":
        return a * b
    if kind == "div":
        return a / b
    raise ValueError(f"unknown arithmetic kind {kind!r}")


def ff_inverse(a: FieldElement) -> FieldElement:
    return a.inverse()


def lagrange_interpolate(field: Field, points: Sequence[tuple[int, int]]) -> Polynomial:
    return Polynomial(field, field.interpolate(points))
