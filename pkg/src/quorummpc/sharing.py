"""Shamir secret sharing, error-corrected reconstruction, bivariate deals.

Share coordinates are positions inside a quorum or session: position i
evaluates at abscissa i + 1, never 0.  Reconstruction is Berlekamp-Welch
decoding, so up to t missing or corrupted shares out of 3t + 1 never
change the recovered secret.

The bivariate layer backs verifiable dealing: a dealer commits to
F(x, y) of degree <= t in each variable with F(0, 0) = secret; position
i receives the row g_i(x) = F(x, a_i) and the column h_i(y) = F(a_i, y).
The univariate share of position i is g_i(0) = F(0, a_i), so the share
polynomial is y -> F(0, y).  Rows and columns cross-check pairwise:
g_j(a_i) = h_i(a_j) for every pair, which is what the verification
protocol in vss.py enforces.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from typing import Optional, Sequence

from .errors import DecodingFailure, TooFewRecipients
from .field import Field


def position_abscissa(position: int) -> int:
    return position + 1


@dataclass
class ShareSet:
    """Shares of one secret, indexed by position within the recipient set."""

    field: Field
    threshold: int
    shares: dict[int, Optional[int]]  # position -> residue, None = missing
    dealer: Optional[int] = None
    tag: object = None

    def __add__(self, other: "ShareSet") -> "ShareSet":
        if (
            self.field != other.field
            or self.threshold != other.threshold
            or set(self.shares) != set(other.shares)
        ):
            raise ValueError("share sets are not addition-compatible")
        fld = self.field
        summed = {}
        for pos, a in self.shares.items():
            b = other.shares[pos]
            summed[pos] = None if a is None or b is None else fld.add(a, b)
        return ShareSet(fld, self.threshold, summed, dealer=None, tag=(self.tag, other.tag))


def shamir_deal(
    field: Field,
    secret: int,
    t: int,
    n_recipients: int,
    rng: random.Random,
) -> tuple[ShareSet, list[int]]:
    """Deal degree-<=t shares of secret to positions 0..n-1.

    Returns the ShareSet and the dealing polynomial (tests use the latter).
    """
    if n_recipients < 3 * t + 1:
        raise TooFewRecipients(f"{n_recipients} recipients for threshold {t}")
    poly = field.random_poly(t, rng, constant=secret % field.p)
    shares = {
        pos: field.poly_eval(poly, position_abscissa(pos))
        for pos in range(n_recipients)
    }
    return ShareSet(field, t, shares), poly


def berlekamp_welch(
    field: Field,
    points: Sequence[tuple[int, int]],
    degree: int,
    max_errors: Optional[int] = None,
) -> list[int]:
    """Decode the degree-<=degree polynomial behind points with errors.

    Solves for an error locator E (monic, degree e) and Q = f * E with
    Q(x_i) = y_i * E(x_i); the quotient Q / E recovers f whenever at most
    e = (len(points) - degree - 1) // 2 values are wrong.  Raises
    DecodingFailure when no polynomial of the stated degree fits.
    """
    n = len(points)
    if n < degree + 1:
        raise DecodingFailure(f"{n} points cannot pin degree {degree}")
    capacity = (n - degree - 1) // 2
    e = capacity if max_errors is None else min(max_errors, capacity)

    if e > 0:
        # common case: nothing is wrong; interpolating a prefix and
        # verifying everywhere is far cheaper than the full solve
        head = field.interpolate(list(points[: degree + 1]))
        if len(head) - 1 <= degree and all(
            field.poly_eval(head, x) == y for x, y in points
        ):
            return head

    if e == 0:
        coeffs = field.interpolate(list(points[: degree + 1]))
        if len(coeffs) - 1 > degree:
            raise DecodingFailure("interpolant exceeds stated degree")
        for x, y in points:
            if field.poly_eval(coeffs, x) != y:
                raise DecodingFailure("points are off-polynomial with no error budget")
        return coeffs

    # Unknowns: Q_0..Q_{e+degree}, E_0..E_{e-1} (E monic of degree e).
    nq = e + degree + 1
    rows = []
    p = field.p
    for x, y in points:
        row = [0] * (nq + e)
        xp = 1
        for j in range(nq):
            row[j] = xp
            xp = xp * x % p
        xp = 1
        for j in range(e):
            row[nq + j] = (-y * xp) % p
            xp = xp * x % p
        rhs = y * pow(x, e, p) % p
        rows.append((row, rhs))

    solution = _solve_linear(field, rows, nq + e)
    if solution is None:
        raise DecodingFailure("Berlekamp-Welch system unsolvable: too many errors")
    q_coeffs = field.poly_trim(solution[:nq])
    e_coeffs = field.poly_trim(solution[nq:] + [1])
    quot, rem = field.poly_divmod(q_coeffs, e_coeffs)
    if rem or len(quot) - 1 > degree:
        raise DecodingFailure("error locator does not divide the decoded product")
    agreements = sum(1 for x, y in points if field.poly_eval(quot, x) == y)
    if agreements < n - e:
        raise DecodingFailure("decoded polynomial misses too many points")
    return quot


def _solve_linear(field: Field, rows, n_unknowns):
    """Gaussian elimination mod p; free variables pinned to 0."""
    p = field.p
    mat = [list(row) + [rhs] for row, rhs in rows]
    pivots = []
    r = 0
    for col in range(n_unknowns):
        pivot = None
        for i in range(r, len(mat)):
            if mat[i][col] % p:
                pivot = i
                break
        if pivot is None:
            continue
        mat[r], mat[pivot] = mat[pivot], mat[r]
        inv = field.inv(mat[r][col])
        mat[r] = [v * inv % p for v in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][col] % p:
                factor = mat[i][col]
                mat[i] = [(a - factor * b) % p for a, b in zip(mat[i], mat[r])]
        pivots.append(col)
        r += 1
        if r == len(mat):
            break
    for i in range(r, len(mat)):
        if mat[i][n_unknowns] % p:
            return None  # inconsistent
    solution = [0] * n_unknowns
    for i, col in enumerate(pivots):
        solution[col] = mat[i][n_unknowns]
    return solution


def decode_shares(
    field: Field,
    slots: Sequence[Optional[int]],
    degree: int,
    abscissas: Optional[Sequence[int]] = None,
) -> list[int]:
    """Recover the share polynomial from position-indexed values.

    None entries are erasures and simply drop out; remaining errors are
    corrected by Berlekamp-Welch within the shrunken budget.
    """
    if abscissas is None:
        abscissas = [position_abscissa(i) for i in range(len(slots))]
    points = [(x, y) for x, y in zip(abscissas, slots) if y is not None]
    return berlekamp_welch(field, points, degree)


def shamir_reconstruct(share_set: ShareSet, t: Optional[int] = None) -> int:
    """Recover the dealt secret; tolerates up to t corrupted or missing shares."""
    t = share_set.threshold if t is None else t
    ordered = [share_set.shares.get(pos) for pos in sorted(share_set.shares)]
    abscissas = [position_abscissa(pos) for pos in sorted(share_set.shares)]
    poly = decode_shares(share_set.field, ordered, t, abscissas)
    return poly[0] if poly else 0


# -- bivariate dealing -----------------------------------------------------


@dataclass
class BivariateDeal:
    """The dealer-side view of one bivariate commitment."""

    field: Field
    degree_x: int
    degree_y: int
    coeffs: list[list[int]]  # coeffs[i][j] multiplies x^i * y^j

    @property
    def secret(self) -> int:
        return self.coeffs[0][0]

    def eval(self, x: int, y: int) -> int:
        fld = self.field
        acc = 0
        for i in reversed(range(self.degree_x + 1)):
            inner = fld.poly_eval(self.coeffs[i], y)
            acc = (acc * x + inner) % fld.p
        return acc

    def row(self, abscissa: int) -> list[int]:
        """g(x) = F(x, abscissa): the row handed to that position."""
        fld = self.field
        out = [fld.poly_eval(self.coeffs[i], abscissa) for i in range(self.degree_x + 1)]
        return fld.poly_trim(out) or [0]

    def col(self, abscissa: int) -> list[int]:
        """h(y) = F(abscissa, y): the column handed to that position."""
        fld = self.field
        p = fld.p
        powers = [1]
        acc = 1
        for _ in range(self.degree_x):
            acc = acc * abscissa % p
            powers.append(acc)
        mul = int.__mul__
        cols = self._transposed()
        out = [sum(map(mul, col_coeffs, powers)) % p for col_coeffs in cols]
        return fld.poly_trim(out) or [0]

    def _transposed(self) -> list[list[int]]:
        if not hasattr(self, "_t_cache"):
            self._t_cache = [
                [self.coeffs[i][j] for i in range(self.degree_x + 1)]
                for j in range(self.degree_y + 1)
            ]
        return self._t_cache


def deal_bivariate(
    field: Field,
    secret: int,
    degree_x: int,
    degree_y: int,
    rng: random.Random,
) -> BivariateDeal:
    coeffs = [
        [rng.randrange(field.p) for _ in range(degree_y + 1)]
        for _ in range(degree_x + 1)
    ]
    coeffs[0][0] = secret % field.p
    return BivariateDeal(field, degree_x, degree_y, coeffs)


# -- syndrome utilities ----------------------------------------------------


def syndrome_matrix(field: Field, abscissas: Sequence[int], degree: int) -> list[list[int]]:
    """Rows mapping a value vector to the high interpolation coefficients.

    For values v at the given abscissas, M @ v yields coefficients
    degree+1 .. len(abscissas)-1 of the unique interpolating polynomial.
    Codewords of the degree-<=degree code map to zero, so the image
    depends only on the deviation from the code, never on the secret.
    """
    return _syndrome_matrix_cached(field.p, tuple(abscissas), degree)


@lru_cache(maxsize=4096)
def _syndrome_matrix_cached(p: int, abscissas: tuple, degree: int) -> list[list[int]]:
    field = Field(p)
    n = len(abscissas)
    basis_rows = [[0] * n for _ in range(n)]
    for i, xi in enumerate(abscissas):
        basis = [1]
        den = 1
        for j, xj in enumerate(abscissas):
            if i == j:
                continue
            basis = field.poly_mul(basis, [field.neg(xj), 1])
            den = den * field.sub(xi, xj) % field.p
        inv_den = field.inv(den)
        for k, c in enumerate(basis):
            basis_rows[k][i] = c * inv_den % field.p
    return basis_rows[degree + 1 :]


def locate_errors_from_syndrome(
    field: Field,
    abscissas: Sequence[int],
    syndrome: Sequence[int],
    degree: int,
) -> list[int]:
    """Return indices of corrupted positions implied by a public syndrome.

    Rebuilds the virtual word z_i = R(a_i) from the high-coefficient
    polynomial R; z differs from a degree-<=degree codeword exactly at
    the error positions, so Berlekamp-Welch on z exposes them without
    ever touching share values.
    """
    if not any(syndrome):
        return []
    high = [0] * (degree + 1) + list(syndrome)
    virtual = [field.poly_eval(high, x) for x in abscissas]
    fitted = berlekamp_welch(field, list(zip(abscissas, virtual)), degree)
    return [
        i for i, (x, z) in enumerate(zip(abscissas, virtual))
        if field.poly_eval(fitted, x) != z
    ]
