"""Arbitrary-precision arithmetic layer and the adaptive precision driver.

Everything numeric in this package runs on MPFR floats (``gmpy2.mpfr``) and
exact rationals (``gmpy2.mpq``).  Working precision is always explicit: a
computation is a function of a bit count, and :func:`stabilize` re-runs it at
escalating precision until two successive results agree to a target relative
tolerance.  Values are immutable; nothing here keeps global state beyond the
thread-local MPFR context installed around each evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping

import gmpy2
from gmpy2 import mpfr, mpq


class NumericsError(Exception):
    """Base class for numeric failures in this package."""


class PrecisionExhausted(NumericsError):
    """Escalation hit the precision cap without successive agreement."""


class NonFinite(NumericsError):
    """A computation produced infinities or NaNs at every precision tried."""


class RetryAtHigherPrecision(NumericsError):
    """Internal signal: the failure is plausibly a roundoff artifact.

    Raised by factorization/bisection code when a result is numerically
    meaningless at the current precision (e.g. a pivot drowned in roundoff).
    ``stabilize`` treats it like disagreement and escalates.
    """


@dataclass(frozen=True)
class PrecisionContext:
    """Working-precision policy: start bits, cap, escalation, target tolerance."""

    start_bits: int = 256
    max_bits: int = 16384
    target_rel_tol: float = 1e-8
    escalation_factor: int = 2

    def __post_init__(self):
        if self.start_bits < 64:
            raise ValueError("start_bits must be >= 64")
        if self.start_bits > self.max_bits:
            raise ValueError("start_bits must not exceed max_bits")
        if not (0.0 < self.target_rel_tol < 1.0):
            raise ValueError("target_rel_tol must lie in (0, 1)")
        if self.escalation_factor < 2:
            raise ValueError("escalation_factor must be >= 2")

    def with_start(self, bits: int) -> "PrecisionContext":
        bits = max(self.start_bits, min(int(bits), self.max_bits))
        return PrecisionContext(bits, self.max_bits, self.target_rel_tol,
                                self.escalation_factor)


DEFAULT_CONTEXT = PrecisionContext()


@dataclass(frozen=True)
class Stabilized:
    """A value together with the precision that produced it and the relative
    agreement achieved between the last two escalation levels."""

    value: mpfr
    bits: int
    achieved_tol: float


def context(bits: int):
    """MPFR context manager at ``bits`` of binary precision."""
    return gmpy2.context(precision=int(bits))


def to_mpfr(x, bits: int) -> mpfr:
    """Convert ``x`` (mpq/mpfr/int/Fraction/str) to an mpfr at ``bits``.

    Decimal strings go through an exact rational so that e.g. "0.45" means
    exactly 9/20 regardless of precision.
    """
    with context(bits):
        if isinstance(x, (str, Fraction)):
            return mpfr(exact_rational(x))
        return mpfr(x)


def exact_rational(x) -> mpq:
    """Parse ``x`` into an exact rational.

    Accepts int, Fraction, mpq, mpz and decimal/scientific/ratio strings
    ("0.45", "1e-3", "9/20").  Binary floats are rejected: they almost never
    mean what the decimal literal meant.
    """
    if isinstance(x, (int, type(mpq(0)), type(gmpy2.mpz(0)))):
        return mpq(x)
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    if isinstance(x, str):
        try:
            return mpq(x.strip())
        except ValueError as exc:
            raise ValueError(f"not an exact decimal or rational: {x!r}") from exc
    raise TypeError(f"refusing inexact value of type {type(x).__name__}")


def rel_diff(a: mpfr, b: mpfr) -> float:
    """Relative difference |a-b| / max(|a|,|b|); 0.0 when both are zero."""
    if a == 0 and b == 0:
        return 0.0
    num = abs(a - b)
    den = max(abs(a), abs(b))
    return float(num / den)


def is_numerically_zero(x: mpfr, scale, bits: int) -> bool:
    """True when |x| <= 2**(8-bits) * |scale| (the package-wide zero test)."""
    with context(max(bits, 64)):
        return abs(x) <= mpfr(2) ** (8 - bits) * abs(mpfr(scale))


def decimal_str(x, sig: int = 25) -> str:
    """Fixed-format decimal string with ``sig`` significant digits.

    Format is ``d.ddd...e{exp:+d}`` with no locale dependence, so identical
    inputs produce byte-identical output.
    """
    x = mpfr(x) if not isinstance(x, mpfr) else x
    if gmpy2.is_nan(x):
        return "nan"
    if gmpy2.is_infinite(x):
        return "inf" if x > 0 else "-inf"
    if x == 0:
        return "0"
    digits, exp, _ = x.digits(10, sig)
    neg = digits.startswith("-")
    if neg:
        digits = digits[1:]
    mantissa = digits[0] + "." + digits[1:]
    return f"{'-' if neg else ''}{mantissa}e{exp - 1:+d}"


def _finite(x: mpfr) -> bool:
    return not (gmpy2.is_nan(x) or gmpy2.is_infinite(x))


def stabilize(compute: Callable[[int], mpfr],
              ctx: PrecisionContext = DEFAULT_CONTEXT) -> Stabilized:
    """Run ``compute`` at escalating precision until two successive results
    agree to ``ctx.target_rel_tol`` relative (or both vanish exactly).

    ``compute`` must be deterministic for a fixed bit count.  A
    :class:`RetryAtHigherPrecision` from ``compute`` counts as disagreement;
    non-finite results count as disagreement and raise :class:`NonFinite` if
    no precision ever yields a finite value.
    """
    result = stabilize_map(lambda bits: {"": compute(bits)}, ctx)
    return result[""]


def stabilize_map(compute: Callable[[int], Mapping[str, mpfr]],
                  ctx: PrecisionContext = DEFAULT_CONTEXT) -> dict[str, Stabilized]:
    """Vector form of :func:`stabilize`: one escalation loop drives a whole
    dictionary of quantities, and agreement is required for every entry.

    The per-entry achieved tolerance is reported individually.
    """
    bits = ctx.start_bits
    prev: Mapping[str, mpfr] | None = None
    last_error: Exception | None = None
    saw_finite = False
    while True:
        try:
            cur = compute(bits)
        except RetryAtHigherPrecision as exc:
            cur = None
            last_error = exc
        if cur is not None:
            if all(_finite(v) for v in cur.values()):
                saw_finite = True
            else:
                cur = None
        if cur is not None and prev is not None and cur.keys() == prev.keys():
            tols = {k: rel_diff(cur[k], prev[k]) for k in cur}
            if all(t <= ctx.target_rel_tol for t in tols.values()):
                return {k: Stabilized(cur[k], bits, tols[k]) for k in cur}
        if cur is not None:
            prev = cur
        if bits >= ctx.max_bits:
            if not saw_finite and last_error is None:
                raise NonFinite("computation non-finite at every precision")
            if prev is None and last_error is not None:
                cause = last_error.__cause__
                raise cause if cause is not None else last_error
            raise PrecisionExhausted(
                f"no agreement to {ctx.target_rel_tol} within {ctx.max_bits} bits")
        bits = min(bits * ctx.escalation_factor, ctx.max_bits)
