"""Dense multiprecision linear-algebra kernels (internal).

All float kernels work on square matrices given as lists of row lists of
``mpfr`` and run inside an MPFR context supplied by the caller via ``bits``.
The exact kernel (:func:`bareiss_det`) works on rationals/integers and never
rounds.  Per-element Python overhead dominates below a few hundred bits, so
inner loops are written flat, without numpy-style abstraction.
"""

from __future__ import annotations

import gmpy2
from gmpy2 import mpfr, mpq

from .numerics import RetryAtHigherPrecision, context


class FactorizationError(Exception):
    """Zero pivot or loss of positive definiteness during factorization."""

    def __init__(self, message: str, pivot_index: int | None = None):
        super().__init__(message)
        self.pivot_index = pivot_index


def ldlt(rows, bits: int):
    """Unpivoted LDL^T of a symmetric matrix; returns (d, L).

    Raises :class:`FactorizationError` on a zero or negative pivot, which for
    a matrix expected to be positive definite means "not PD at this
    precision".
    """
    m = len(rows)
    with context(bits):
        L = [[None] * m for _ in range(m)]
        d = [None] * m
        for j in range(m):
            Lj = L[j]
            s = rows[j][j]
            vj = []
            for k in range(j):
                t = Lj[k] * d[k]
                vj.append(t)
                s -= Lj[k] * t
            if s <= 0 or gmpy2.is_nan(s):
                raise FactorizationError(
                    f"nonpositive pivot {s} at index {j}", pivot_index=j)
            d[j] = s
            for i in range(j + 1, m):
                Li = L[i]
                acc = rows[i][j]
                for k in range(j):
                    acc -= Li[k] * vj[k]
                Li[j] = acc / s
            Lj[j] = mpfr(1)
        return d, L


def inertia_below(rows, sigma, bits: int) -> int:
    """Number of eigenvalues of ``rows`` strictly below ``sigma``.

    Counts negative pivots of LDL^T(A - sigma*I) (Sylvester's law).  An
    exactly zero pivot is replaced by a tiny negative value so the sweep can
    continue; the substitution biases the count by at most the number of
    exact ties, which bisection callers avoid by nudging sigma.
    """
    m = len(rows)
    with context(bits):
        L = [[None] * m for _ in range(m)]
        d = [None] * m
        neg = 0
        tiny = mpfr(2) ** (-8 * bits)
        for j in range(m):
            Lj = L[j]
            s = rows[j][j] - sigma
            vj = []
            for k in range(j):
                t = Lj[k] * d[k]
                vj.append(t)
                s -= Lj[k] * t
            if gmpy2.is_nan(s):
                raise RetryAtHigherPrecision("NaN pivot in inertia sweep")
            if s == 0:
                s = -tiny * (abs(rows[j][j]) + abs(sigma) + tiny)
            d[j] = s
            if s < 0:
                neg += 1
            for i in range(j + 1, m):
                Li = L[i]
                acc = rows[i][j]
                for k in range(j):
                    acc -= Li[k] * vj[k]
                Li[j] = acc / s
        return neg


def solve_ldlt(d, L, b, bits: int):
    """Solve (L D L^T) x = b given the ldlt factors."""
    m = len(d)
    with context(bits):
        x = list(b)
        for i in range(m):
            Li = L[i]
            acc = x[i]
            for k in range(i):
                acc -= Li[k] * x[k]
            x[i] = acc
        for i in range(m):
            x[i] = x[i] / d[i]
        for i in range(m - 1, -1, -1):
            acc = x[i]
            for k in range(i + 1, m):
                acc -= L[k][i] * x[k]
            x[i] = acc
        return x


def cholesky(rows, bits: int):
    """Lower Cholesky factor C with C C^T = A; raises on nonpositive pivot."""
    m = len(rows)
    with context(bits):
        C = [[mpfr(0)] * m for _ in range(m)]
        for j in range(m):
            Cj = C[j]
            s = rows[j][j]
            for k in range(j):
                s -= Cj[k] * Cj[k]
            if s <= 0 or gmpy2.is_nan(s):
                raise FactorizationError(
                    f"nonpositive pivot {s} at index {j}", pivot_index=j)
            Cj[j] = gmpy2.sqrt(s)
            for i in range(j + 1, m):
                Ci = C[i]
                acc = rows[i][j]
                for k in range(j):
                    acc -= Ci[k] * Cj[k]
                Ci[j] = acc / Cj[j]
        return C


def invert_lower(C, bits: int):
    """Inverse of a lower-triangular matrix, row by forward substitution."""
    m = len(C)
    with context(bits):
        K = [[mpfr(0)] * m for _ in range(m)]
        for i in range(m):
            Ki = K[i]
            Ki[i] = 1 / C[i][i]
            for j in range(i - 1, -1, -1):
                acc = mpfr(0)
                for k in range(j + 1, i + 1):
                    acc -= C[k][j] * Ki[k]
                Ki[j] = acc / C[j][j]
        return K


def det_lu(rows, bits: int):
    """Determinant by LU with partial pivoting; handles indefinite input."""
    m = len(rows)
    with context(bits):
        a = [list(r) for r in rows]
        det = mpfr(1)
        for j in range(m):
            piv, pmax = j, abs(a[j][j])
            for i in range(j + 1, m):
                v = abs(a[i][j])
                if v > pmax:
                    piv, pmax = i, v
            if pmax == 0:
                return mpfr(0)
            if piv != j:
                a[j], a[piv] = a[piv], a[j]
                det = -det
            ajj = a[j][j]
            det *= ajj
            for i in range(j + 1, m):
                f = a[i][j] / ajj
                if f == 0:
                    continue
                ai, aj = a[i], a[j]
                for k in range(j + 1, m):
                    ai[k] -= f * aj[k]
        return det


def bareiss_det(rows) -> mpq:
    """Exact determinant by fraction-free (Bareiss) elimination.

    Entries may be mpz/mpq/int/Fraction; integer input stays integer through
    the sweep, which is what keeps intermediate growth polynomial.
    """
    m = len(rows)
    a = [[mpq(x) for x in r] for r in rows]
    sign = 1
    prev = mpq(1)
    for j in range(m - 1):
        if a[j][j] == 0:
            for i in range(j + 1, m):
                if a[i][j] != 0:
                    a[j], a[i] = a[i], a[j]
                    sign = -sign
                    break
            else:
                return mpq(0)
        pivot = a[j][j]
        for i in range(j + 1, m):
            ai, aj = a[i], a[j]
            aij = ai[j]
            for k in range(j + 1, m):
                ai[k] = (pivot * ai[k] - aij * aj[k]) / prev
            ai[j] = mpq(0)
        prev = pivot
    return sign * a[m - 1][m - 1]


def dot(u, v, bits: int):
    with context(bits):
        acc = mpfr(0)
        for a, b in zip(u, v):
            acc += a * b
        return acc


def matvec(rows, v, bits: int):
    with context(bits):
        out = []
        for r in rows:
            acc = mpfr(0)
            for a, b in zip(r, v):
                acc += a * b
            out.append(acc)
        return out


def norm2(v, bits: int):
    with context(bits):
        return gmpy2.sqrt(dot(v, v, bits))


def norm_inf(rows, bits: int):
    """Max row sum of absolute values."""
    with context(bits):
        best = mpfr(0)
        for r in rows:
            acc = mpfr(0)
            for a in r:
                acc += abs(a)
            if acc > best:
                best = acc
        return best
