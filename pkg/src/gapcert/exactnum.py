"""Exact rational numbers and outward-inclusive interval arithmetic.

Every certified quantity in the engine is either an exact rational (gmpy2.mpq)
or a closed interval with exact rational endpoints (IntervalQ).  Interval
operations are exact set-image hulls for rational endpoints, so no rounding
occurs anywhere on the verified path; ``round_outward`` is an opt-in widening
used only to cap denominator growth.
"""

from __future__ import annotations

import math
from gmpy2 import isqrt as _isqrt
from gmpy2 import mpq, mpz

from .errors import (
    DivisionByIntervalContainingZero,
    NegativeRadicand,
    NonCanonicalRational,
)

Rat = mpq  # canonical rational constructor

ZERO = mpq(0)
ONE = mpq(1)


def Q(a, b=None):
    """Exact rational from ints, 'p/q' strings, or another rational."""
    if b is not None:
        return mpq(a, b)
    if isinstance(a, str):
        return mpq(a)
    if isinstance(a, float):
        raise NonCanonicalRational(f"refusing float {a!r} on the exact path")
    return mpq(a)


def qstr(q) -> str:
    """Canonical 'p/q' string (q > 0, lowest terms); integers keep '/1' off."""
    q = mpq(q)
    return f"{q.numerator}/{q.denominator}" if q.denominator != 1 else str(q.numerator)


def parse_q(text: str):
    """Parse a canonical 'p/q' rational, rejecting non-canonical forms."""
    s = text.strip()
    try:
        if "/" in s:
            p_str, d_str = s.split("/")
            p, d = int(p_str), int(d_str)
        else:
            p, d = int(s), 1
    except ValueError as exc:
        raise NonCanonicalRational(f"cannot parse rational {text!r}") from exc
    if d <= 0:
        raise NonCanonicalRational(f"denominator must be positive in {text!r}")
    if math.gcd(abs(p), d) != 1:
        raise NonCanonicalRational(f"{text!r} is not in lowest terms")
    return mpq(p, d)


def best_rational_below(x, max_den: int):
    """Largest rational <= x with denominator <= max_den.

    Walks the continued-fraction convergents of x; the answer is a
    convergent or semiconvergent.  The floor on the 1/max_den grid is kept
    as a guaranteed-valid fallback, so the result is always <= x.
    """
    x = mpq(x)
    if x.denominator <= max_den:
        return x
    num, den = mpz(x.numerator), mpz(x.denominator)
    best = mpq(num * max_den // den, max_den)  # grid floor, always valid
    hm1, km1 = mpz(1), mpz(0)   # h_{-1}/k_{-1}
    h, k = mpz(0), mpz(1)       # h_0 is set on the first loop pass
    fn, fd = num, den
    while fd != 0:
        a = fn // fd
        h2, k2 = a * h + hm1, a * k + km1
        if k2 > max_den:
            t = (max_den - km1) // k
            hs, ks = t * h + hm1, t * k + km1
            for cn, cd in ((h, k), (hs, ks)):
                if 0 < cd <= max_den:
                    c = mpq(cn, cd)
                    if c <= x and c > best:
                        best = c
            return best
        hm1, km1, h, k = h, k, h2, k2
        c = mpq(h, k)
        if c <= x and c > best:
            best = c
        fn, fd = fd, fn - a * fd
    return best


def best_rational_above(x, max_den: int):
    return -best_rational_below(-mpq(x), max_den)


class IntervalQ:
    """Closed interval [lo, hi] with exact rational endpoints.

    All arithmetic returns the exact hull of the set image, so containment
    is preserved without any rounding step.
    """

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        if hi is None:
            hi = lo
        lo, hi = mpq(lo), mpq(hi)
        if lo > hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        self.lo = lo
        self.hi = hi

    # -- constructors -------------------------------------------------
    @staticmethod
    def point(q):
        q = mpq(q)
        return IntervalQ(q, q)

    @staticmethod
    def hull(items):
        items = list(items)
        if not items:
            raise ValueError("hull of nothing")
        ivs = [it if isinstance(it, IntervalQ) else IntervalQ.point(it) for it in items]
        return IntervalQ(min(iv.lo for iv in ivs), max(iv.hi for iv in ivs))

    # -- predicates ----------------------------------------------------
    def contains(self, x) -> bool:
        if isinstance(x, IntervalQ):
            return self.lo <= x.lo and x.hi <= self.hi
        x = mpq(x)
        return self.lo <= x <= self.hi

    def contains_zero(self) -> bool:
        return self.lo <= 0 <= self.hi

    def is_point(self) -> bool:
        return self.lo == self.hi

    @property
    def width(self):
        return self.hi - self.lo

    @property
    def mid(self):
        return (self.hi + self.lo) / 2

    def mag(self):
        """sup |x| over the interval."""
        return max(abs(self.lo), abs(self.hi))

    def mig(self):
        """inf |x| over the interval (0 if it straddles zero)."""
        if self.contains_zero():
            return ZERO
        return min(abs(self.lo), abs(self.hi))

    # -- arithmetic ----------------------------------------------------
    def __add__(self, other):
        o = _coerce(other)
        return IntervalQ(self.lo + o.lo, self.hi + o.hi)

    __radd__ = __add__

    def __neg__(self):
        return IntervalQ(-self.hi, -self.lo)

    def __sub__(self, other):
        o = _coerce(other)
        return IntervalQ(self.lo - o.hi, self.hi - o.lo)

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        o = _coerce(other)
        cands = (self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi)
        return IntervalQ(min(cands), max(cands))

    __rmul__ = __mul__

    def inverse(self):
        if self.contains_zero():
            raise DivisionByIntervalContainingZero(f"1/{self}")
        return IntervalQ(1 / self.hi, 1 / self.lo)

    def __truediv__(self, other):
        return self * _coerce(other).inverse()

    def __rtruediv__(self, other):
        return _coerce(other) * self.inverse()

    def pow_nat(self, n: int):
        if n < 0:
            raise ValueError("pow_nat needs n >= 0")
        if n == 0:
            return IntervalQ.point(1)
        if n % 2 == 1 or self.lo >= 0:
            return IntervalQ(self.lo**n, self.hi**n)
        if self.hi <= 0:
            return IntervalQ(self.hi**n, self.lo**n)
        return IntervalQ(ZERO, max(self.lo**n, self.hi**n))

    __pow__ = pow_nat

    def abs(self):
        return IntervalQ(self.mig(), self.mag())

    def intersect(self, other):
        o = _coerce(other)
        lo, hi = max(self.lo, o.lo), min(self.hi, o.hi)
        if lo > hi:
            raise ValueError(f"empty intersection of {self} and {o}")
        return IntervalQ(lo, hi)

    def widen(self, eps):
        eps = mpq(eps)
        return IntervalQ(self.lo - eps, self.hi + eps)

    # -- misc ------------------------------------------------------------
    def __repr__(self):
        return f"[{qstr(self.lo)}, {qstr(self.hi)}]"

    def __eq__(self, other):
        return isinstance(other, IntervalQ) and self.lo == other.lo and self.hi == other.hi

    def __hash__(self):
        return hash((self.lo, self.hi))

    def serialize(self):
        return [qstr(self.lo), qstr(self.hi)]


def _coerce(x) -> IntervalQ:
    return x if isinstance(x, IntervalQ) else IntervalQ.point(mpq(x))


def interval_arith(op: str, a, b=None) -> IntervalQ:
    """Dispatch basic interval operations by name (serialization-friendly)."""
    a = _coerce(a)
    if op == "neg":
        return -a
    if op == "abs":
        return a.abs()
    if op == "pow_nat":
        return a.pow_nat(int(b))
    b = _coerce(b)
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown op {op!r}")


DEFAULT_SQRT_WIDTH = mpq(1, 10**30)


def sqrt_q(x, width_target=DEFAULT_SQRT_WIDTH) -> IntervalQ:
    """Enclosure of sqrt(x) for rational x >= 0, width <= width_target.

    Scales to an integer square root problem: with S = ceil(2/width)^2 the
    bracket isqrt(n)/s <= sqrt(x) <= (isqrt(n)+1)/s is exact integer
    arithmetic, giving a fully rigorous bracket of width 1/s.
    """
    x = mpq(x)
    if x < 0:
        raise NegativeRadicand(f"sqrt of {x}")
    if x == 0:
        return IntervalQ.point(0)
    width_target = mpq(width_target)
    if width_target <= 0:
        raise ValueError("width_target must be positive")
    s = mpz(1 / width_target) + 1  # bracket width 1/s <= width_target
    # sqrt(p/d) = sqrt(p*d)/d, so scale p*d by s^2 and take the integer root
    n = mpz(x.numerator) * mpz(x.denominator) * s * s
    d = mpz(x.denominator)
    m = mpz(_isqrt(n))
    lo = mpq(m, d * s)
    hi = mpq(m + 1, d * s)
    # tighten by checking exactness
    if lo * lo == x:
        return IntervalQ.point(lo)
    assert lo * lo <= x < hi * hi
    return IntervalQ(lo, hi)


def interval_sqrt(a, width_target=DEFAULT_SQRT_WIDTH) -> IntervalQ:
    """sqrt of an interval with nonnegative lower endpoint."""
    a = _coerce(a)
    if a.lo < 0:
        raise NegativeRadicand(f"sqrt of {a}")
    lo = sqrt_q(a.lo, width_target)
    hi = sqrt_q(a.hi, width_target)
    return IntervalQ(lo.lo, hi.hi)


def round_outward(a: IntervalQ, max_denominator: int) -> IntervalQ:
    """Smallest-denominator outward widening: a is contained in the result."""
    if max_denominator < 1:
        raise ValueError("max_denominator must be >= 1")
    return IntervalQ(
        best_rational_below(a.lo, max_denominator),
        best_rational_above(a.hi, max_denominator),
    )
