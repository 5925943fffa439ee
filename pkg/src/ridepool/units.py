"""Exact unit handling.

All quantities are integers internally so every comparison and every output
is exact and reproducible:

* time       -> microseconds  (``USEC`` per second)
* distance   -> micro-miles   (``UMILE`` per mile)
* money      -> mils, i.e. tenths of a cent (``MILS`` per dollar)

Conversions from human-readable values happen once, at ingestion, and use
decimal parsing so literals such as ``0.2`` or ``2.945`` convert exactly.
Division rounds half to even.
"""

from __future__ import annotations

from decimal import Decimal
from fractions import Fraction

USEC = 10**6
UMILE = 10**6
MILS = 1000

SECONDS_PER_MINUTE = 60

Money = int | Fraction  # mils; Fraction where exact halving is required


def div_half_even(num: int, den: int) -> int:
    """num / den rounded half to even, exact integer arithmetic."""
    if den == 0:
        raise ZeroDivisionError("division by zero")
    if den < 0:
        num, den = -num, -den
    q, r = divmod(num, den)
    twice = 2 * r
    if twice > den or (twice == den and q % 2):
        q += 1
    return q


def _as_fraction(value: int | float | str | Fraction | Decimal) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, Decimal):
        return Fraction(value)
    if isinstance(value, float):
        # repr() is the shortest exact decimal rendering, so "0.2" stays 1/5
        return Fraction(Decimal(repr(value)))
    return Fraction(Decimal(value))


def round_fraction(value: Fraction) -> int:
    return div_half_even(value.numerator, value.denominator)


def _scaled(value, scale: int) -> int:
    return round_fraction(_as_fraction(value) * scale)


def usec_from_seconds(seconds) -> int:
    return _scaled(seconds, USEC)


def umiles_from_miles(miles) -> int:
    return _scaled(miles, UMILE)


def mils_from_usd(usd) -> int:
    return _scaled(usd, MILS)


def fraction_from(value) -> Fraction:
    """Exact fraction from a decimal literal, float repr, int or Fraction."""
    return _as_fraction(value)


def time_cost_mils(vot_mils_per_min: int, span_usec: int) -> int:
    """Cost of a time span for a value of time given in mils per minute."""
    return div_half_even(vot_mils_per_min * span_usec, SECONDS_PER_MINUTE * USEC)


def distance_charge_mils(rate_mils_per_mile: int, dist_umiles: int) -> int:
    """Distance-proportional charge, rounded once on the total."""
    return div_half_even(rate_mils_per_mile * dist_umiles, UMILE)


def fmt4(value: int | Fraction, per: int = 1) -> str:
    """Render value/per with exactly four decimals, rounding half to even."""
    frac = Fraction(value, per) if isinstance(value, int) else value / per
    scaled = div_half_even(frac.numerator * 10**4, frac.denominator)
    sign = "-" if scaled < 0 else ""
    mag = abs(scaled)
    return f"{sign}{mag // 10**4}.{mag % 10**4:04d}"


def fmt_usd(mils: Money) -> str:
    return fmt4(mils, MILS)


def fmt_miles(umiles: int) -> str:
    return fmt4(umiles, UMILE)


def fmt_seconds(usec: int) -> str:
    return fmt4(usec, USEC)


def fmt_pct(ratio: Fraction) -> str:
    return fmt4(ratio * 100)
