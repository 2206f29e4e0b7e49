"""Rigorous enclosures of exp and the exponential integral, plus Taylor models.

All transcendental content of the certification reduces to e^x at rational x
and E(y) := -Ei(-y) = int_y^inf e^-t / t dt at rational y > 0.  exp uses
argument halving plus a Taylor sum with a geometric tail majorant.  E(y) has
two modes:

* ``ei_neg(y, N)``: the classical alternating bracket
      e^-y * S_{2N-1}  <  E(y)  <  e^-y * S_{2N},
  with S_m the asymptotic partial sums; valid for every N but its width is
  limited by the divergence of the asymptotic series.

* ``ei_neg_tight(y, width)``: anchors the bracket far out at T >> y where it
  is extremely tight, and adds the proper integral int_y^T e^-t/t dt
  computed by piecewise Taylor models with certified remainders.  This gives
  arbitrary-accuracy enclosures of E at moderate arguments.

Taylor models are polynomials with a certified interval remainder on a disk
around a center; they carry the far-field Wronskian expansions.
"""

from __future__ import annotations

from gmpy2 import mpq, mpz

from .boundkit import bound_poly_unit
from .errors import DomainBelowR7, DomainMismatch, SingularityInsideDisk
from .exactnum import IntervalQ, Q
from .polyring import Poly

_EXP_CACHE: dict = {}
_EI_CACHE: dict = {}

DEFAULT_EXP_WIDTH = mpq(1, 10**30)
DEFAULT_EI_WIDTH = mpq(1, 10**18)


def _exp_unit(y, rel_target):
    """Enclosure of e^y for rational 0 <= y <= 1/2 with relative width bound."""
    n = 4
    while True:
        tail_num = y**n
        fact = mpz(1)
        for i in range(2, n + 1):
            fact *= i
        # e^y - S_n <= y^n/n! * 1/(1 - y) for 0 <= y < 1
        tail = tail_num / fact * (1 / (1 - y)) if y > 0 else mpq(0)
        if tail <= rel_target:
            break
        n += 4
    s = mpq(0)
    term = mpq(1)
    for i in range(n):
        s += term
        term = term * y / (i + 1)
    return IntervalQ(s, s + tail)


def exp_enc(x, width_target=DEFAULT_EXP_WIDTH) -> IntervalQ:
    """Rigorous enclosure of e^x for rational x, width <= width_target."""
    x = mpq(x)
    width_target = mpq(width_target)
    key = (x, width_target)
    hit = _EXP_CACHE.get(key)
    if hit is not None:
        return hit
    if x == 0:
        out = IntervalQ.point(1)
    elif x < 0:
        # e^x = 1 / e^{-x}; a relative-width bound survives inversion
        mag = exp_enc(-x, width_target)  # relative width <= width_target
        out = IntervalQ(1 / mag.hi, 1 / mag.lo)
    else:
        k = 0
        y = x
        while y > mpq(1, 2):
            y = y / 2
            k += 1
        # relative error multiplies by about 2 each squaring; take margin 4^k
        rel = width_target / (mpq(4) ** (k + 2)) / (mpq(3) ** (int(x) + 1))
        out = _exp_unit(y, rel)
        for _ in range(k):
            out = out * out
    _EXP_CACHE[key] = out
    return out


def _ei_partial_sum(y, m: int):
    """S_m = sum_{k=0}^m k! (-1)^k / y^{k+1} (exact rational)."""
    s = mpq(0)
    term = 1 / y
    for k in range(m + 1):
        s += term if k % 2 == 0 else -term
        term = term * (k + 1) / y
    return s


def ei_neg(y, N: int) -> IntervalQ:
    """Alternating asymptotic bracket of E(y) = -Ei(-y), valid for all N >= 1."""
    y = mpq(y)
    if y <= 0:
        raise ValueError("ei_neg needs y > 0")
    if N < 1:
        raise ValueError("N >= 1 required")
    lo_s = _ei_partial_sum(y, 2 * N - 1)
    hi_s = _ei_partial_sum(y, 2 * N)
    e = exp_enc(-y)
    return IntervalQ((e * lo_s).lo, (e * hi_s).hi)


def ei_default_depth(y, cap: int = 6) -> int:
    y = mpq(y)
    n = max(1, int((y - 1) / 2))
    return min(n, cap)


def _fact(i: int):
    f = mpz(1)
    for k in range(2, i + 1):
        f *= k
    return mpq(f)


def _ei_piece_integral(a, b, target) -> IntervalQ:
    """Taylor-model enclosure of int_a^b e^-t / t dt (0 < a < b, b-a <= 1).

    Writes e^-t/t = e^-m * E(w) G(w) with w = t - m, E the exp series and G
    the geometric series for 1/(m+w); both truncations carry explicit tail
    majorants, the product polynomial integrates exactly over [-R, R].
    """
    a, b = mpq(a), mpq(b)
    m = (a + b) / 2
    R = (b - a) / 2
    if R >= m:
        raise SingularityInsideDisk("piece reaches t = 0")
    if R >= 1:
        raise ValueError("piece too long for the e^R <= 1/(1-R) majorant")
    eR = 1 / (1 - R)  # rational upper bound for e^R, R < 1
    n = 8
    while True:
        exp_tail = R**n / _fact(n) * eR
        geo_ratio = R / m
        geo_tail = geo_ratio**n / (m - R) / (1 - geo_ratio)
        rem_point = exp_tail / (m - R) + (eR + exp_tail) * geo_tail + exp_tail * geo_tail
        if rem_point * 2 * R <= target / 2:
            break
        n += 8
    exp_p = Poly([mpq((-1) ** i) / _fact(i) for i in range(n)])
    geo_p = Poly([mpq((-1) ** j) / m ** (j + 1) for j in range(n)])
    prod = exp_p * geo_p
    val = mpq(0)  # exact integral of the product polynomial over [-R, R]
    for k, ck in enumerate(prod.c):
        if k % 2 == 0:
            val += ck * 2 * R ** (k + 1) / (k + 1)
    em = exp_enc(-m)
    return em * val + em * IntervalQ(-1, 1) * (rem_point * 2 * R)


def ei_neg_tight(y, width_target=DEFAULT_EI_WIDTH) -> IntervalQ:
    """Arbitrary-accuracy enclosure of E(y) = -Ei(-y), y > 0 rational."""
    y = mpq(y)
    width_target = mpq(width_target)
    key = (y, width_target)
    hit = _EI_CACHE.get(key)
    if hit is not None:
        return hit
    # find an anchor T where the alternating bracket is tight enough
    T = max(y, mpq(12))
    while True:
        anchor = ei_neg(T, ei_default_depth(T))
        if anchor.width <= width_target / 2 or T > y + 60:
            break
        T += 2
    total = anchor
    if T > y:
        # proper part on [y, T] in steps of length <= min(1, t/2)
        steps = []
        t = y
        while t < T:
            h = min(mpq(1), t / 2, T - t)
            steps.append((t, t + h))
            t += h
        per = width_target / (2 * len(steps))
        for a, b in steps:
            total = total + _ei_piece_integral(a, b, per)
    _EI_CACHE[key] = total
    return total


# ----------------------------------------------------------------------
# g and h: the far-field kernel combinations
# ----------------------------------------------------------------------

R7 = mpq(5, 2)


def g_h_enc(which: str, r, ei_width=DEFAULT_EI_WIDTH) -> IntervalQ:
    """Enclosure of g(r) = (2 e^r Ei(-4r) - e^-r Ei(-2r))/r or h = -r e^r g.

    Sharpened by intersecting with the sign window -e^{-3r}/(8 r^3) < g < 0.
    """
    r = mpq(r)
    if r < R7:
        raise DomainBelowR7(f"r = {r} < 5/2")
    E4 = ei_neg_tight(4 * r, ei_width)
    E2 = ei_neg_tight(2 * r, ei_width)
    er = exp_enc(r)
    emr = exp_enc(-r)
    # g = (-2 e^r E4 + e^-r E2)/r ;  h = -r e^r g = 2 e^{2r} E4 - E2
    g = (emr * E2 - er * E4 * 2) / r
    window = IntervalQ(-(exp_enc(-3 * r).hi) / (8 * r**3), 0)
    g = g.intersect(window)
    if which == "g":
        return g
    if which == "h":
        e2r = exp_enc(2 * r)
        h = e2r * E4 * 2 - E2
        h_from_g = -(g * r * er)  # h = -r e^r g, second enclosure of the same value
        return h.intersect(h_from_g).intersect(IntervalQ(0, h.hi))
    raise ValueError(which)


def g_prime_enc(r, ei_width=DEFAULT_EI_WIDTH) -> IntervalQ:
    """Enclosure of g'(r) via (r g)' = 2 e^r Ei(-4r) + e^-r Ei(-2r) + e^{-3r}/r."""
    r = mpq(r)
    if r < R7:
        raise DomainBelowR7(f"r = {r} < 5/2")
    E4 = ei_neg_tight(4 * r, ei_width)
    E2 = ei_neg_tight(2 * r, ei_width)
    er = exp_enc(r)
    emr = exp_enc(-r)
    g = g_h_enc("g", r, ei_width)
    rg_prime = er * E4 * (-2) - emr * E2 + exp_enc(-3 * r) / r
    return (rg_prime - g) / r


# ----------------------------------------------------------------------
# named constants
# ----------------------------------------------------------------------

class ConstantTable:
    """Initialize-once memo table of named certified constants."""

    def __init__(self, ei_width=DEFAULT_EI_WIDTH, exp_width=DEFAULT_EXP_WIDTH):
        self.ei_width = mpq(ei_width)
        self.exp_width = mpq(exp_width)
        self._memo = {}

    def _put(self, name, value, derivation):
        self._memo[name] = (value, derivation)
        return value

    def get(self, name) -> IntervalQ:
        if name in self._memo:
            return self._memo[name][0]
        w = self.ei_width
        if name == "E5":
            return self._put(name, ei_neg_tight(5, w), f"ei-composite({w})")
        if name == "E10":
            return self._put(name, ei_neg_tight(10, w), f"ei-composite({w})")
        if name.startswith("exp:"):
            q = Q(name.split(":", 1)[1])
            return self._put(name, exp_enc(q, self.exp_width), "exp-taylor")
        if name == "g_r7":
            return self._put(name, g_h_enc("g", R7, w), "composite")
        if name == "gp_r7":
            return self._put(name, g_prime_enc(R7, w), "composite")
        if name == "h_r7":
            E5, E10 = self.get("E5"), self.get("E10")
            h = exp_enc(5, self.exp_width) * E10 * 2 - E5
            return self._put(name, h, "composite")
        raise KeyError(name)

    def manifest(self):
        return {
            name: {"value": val.serialize(), "derivation": how, "width": str(val.width)}
            for name, (val, how) in sorted(self._memo.items())
        }


CONSTANTS = ConstantTable()


# ----------------------------------------------------------------------
# Taylor models
# ----------------------------------------------------------------------

class TaylorModel:
    """Polynomial in (u - center) plus a certified remainder on |u-c| <= R."""

    __slots__ = ("center", "radius", "poly", "remainder")

    def __init__(self, center, radius, poly: Poly, remainder: IntervalQ):
        self.center = mpq(center)
        self.radius = mpq(radius)
        self.poly = poly
        self.remainder = remainder

    def _compat(self, other):
        if self.center != other.center or self.radius != other.radius:
            raise DomainMismatch("Taylor model domains differ")

    def __add__(self, other):
        if isinstance(other, TaylorModel):
            self._compat(other)
            return TaylorModel(self.center, self.radius, self.poly + other.poly,
                               self.remainder + other.remainder)
        return TaylorModel(self.center, self.radius, self.poly + Poly.of(other),
                           self.remainder)

    __radd__ = __add__

    def __neg__(self):
        return TaylorModel(self.center, self.radius, -self.poly, -self.remainder)

    def __sub__(self, other):
        return self + (-other if isinstance(other, TaylorModel) else -Poly.of(other))

    def scale(self, c):
        ci = c if isinstance(c, IntervalQ) else IntervalQ.point(mpq(c))
        return TaylorModel(self.center, self.radius, self.poly.map_coeffs(lambda a: _as_iv(a) * ci),
                           self.remainder * ci)

    def poly_range(self) -> IntervalQ:
        """Range of the polynomial part over the model's disk."""
        # poly is in w = u - center, w in [-R, R]: substitute w = R*z
        scaled = Poly([_as_iv(ck) * self.radius**k for k, ck in enumerate(self.poly.c)])
        return bound_poly_unit(scaled)

    def bound(self) -> IntervalQ:
        return self.poly_range() + self.remainder

    def mul(self, other, degree_cap=40):
        self._compat(other)
        p = self.poly * other.poly
        head, tail = p.truncate(degree_cap)
        spill = _poly_tail_range(tail, self.radius)
        r1 = _poly_tail_range(self.poly, self.radius, full=True)
        r2 = _poly_tail_range(other.poly, self.radius, full=True)
        rem = (spill + r1 * other.remainder + r2 * self.remainder
               + self.remainder * other.remainder)
        return TaylorModel(self.center, self.radius, head, rem)

    def mul_poly(self, P: Poly, degree_cap=40):
        """Multiply by an exact polynomial in w = u - center."""
        other = TaylorModel(self.center, self.radius, P, IntervalQ.point(0))
        return self.mul(other, degree_cap)

    def integrate_from_center(self):
        """w -> int_0^w model: remainder scales by the radius."""
        ip = self.poly.antiderivative()
        return TaylorModel(self.center, self.radius, ip,
                           self.remainder * IntervalQ(-self.radius, self.radius))

    def eval(self, u) -> IntervalQ:
        u = u if isinstance(u, IntervalQ) else IntervalQ.point(mpq(u))
        w = u - self.center
        if abs(w.lo) > self.radius or abs(w.hi) > self.radius:
            raise DomainMismatch(f"{u} outside model disk")
        acc = IntervalQ.point(0)
        for ck in reversed(self.poly.c):
            acc = acc * w + _as_iv(ck)
        return acc + self.remainder

    def __repr__(self):
        return (f"TaylorModel(center={self.center}, radius={self.radius}, "
                f"deg={self.poly.degree}, rem={self.remainder})")


def _as_iv(x) -> IntervalQ:
    return x if isinstance(x, IntervalQ) else IntervalQ.point(mpq(x))


def _poly_tail_range(P: Poly, R, full=False) -> IntervalQ:
    """Enclosure of P(w) over |w| <= R."""
    scaled = Poly([_as_iv(ck) * mpq(R) ** k for k, ck in enumerate(P.c)])
    if scaled.is_zero():
        return IntervalQ.point(0)
    return bound_poly_unit(scaled)


def taylor_model_exp(scale, center, radius, degree) -> TaylorModel:
    """Model of u -> e^{scale*u} on |u - center| <= radius.

    Coefficients e^{scale*c} scale^k / k!; Lagrange remainder bounded by
    e^{scale*c} e^{|scale| R} (|scale| R)^{d+1}/(d+1)!.
    """
    scale, center, radius = mpq(scale), mpq(center), mpq(radius)
    ec = exp_enc(scale * center)
    coeffs = [ec * (scale**k / _fact(k)) for k in range(degree + 1)]
    sr = abs(scale) * radius
    lag = ec.mag() * exp_enc(sr).hi * sr ** (degree + 1) / _fact(degree + 1)
    return TaylorModel(center, radius, Poly(coeffs), IntervalQ(-lag, lag))


def taylor_model_geometric(pole, center, radius, degree) -> TaylorModel:
    """Model of u -> 1/(u - pole) with |center - pole| > radius."""
    pole, center, radius = mpq(pole), mpq(center), mpq(radius)
    d0 = center - pole
    if abs(d0) <= radius:
        raise SingularityInsideDisk(f"pole {pole} within radius of {center}")
    # 1/(u-pole) = 1/(d0 + w) = (1/d0) sum (-w/d0)^j
    coeffs = [mpq((-1) ** j) / d0 ** (j + 1) for j in range(degree + 1)]
    ratio = radius / abs(d0)
    tail = ratio ** (degree + 1) / (abs(d0) - radius) / (1 - ratio)
    return TaylorModel(center, radius, Poly(coeffs), IntervalQ(-tail, tail))


def taylor_model_build(kind: str, center, radius, degree) -> TaylorModel:
    """Named models: 'exp' for e^u; 'ei-integrand' for e^{-5-u}/(-5-u)."""
    if kind == "exp":
        return taylor_model_exp(1, center, radius, degree)
    if kind == "ei-integrand":
        # e^{-5-u}/(-5-u) = -e^{-5} e^{-u} / (u + 5): pole at u = -5
        emu = taylor_model_exp(-1, center, radius, max(degree, 24))
        geo = taylor_model_geometric(mpq(-5), center, radius, max(degree, 24))
        prod = emu.mul(geo, degree_cap=degree)
        scale = exp_enc(mpq(-5)) * mpq(-1)
        return prod.scale(scale)
    raise ValueError(kind)


def tm_calculus(op: str, a: TaylorModel, b=None) -> TaylorModel:
    if op == "add":
        return a + b
    if op == "mul_poly":
        return a.mul_poly(b)
    if op == "integrate":
        return a.integrate_from_center()
    if op == "compose_affine":
        # b = (c0, c1): new variable v with u = c0 + c1 v (exact re-centering)
        c0, c1 = mpq(b[0]), mpq(b[1])
        new_center = (a.center - c0) / c1
        new_radius = a.radius / abs(c1)
        # poly is in w_u = u - center = c1 * (v - new_center) = c1 * w_v
        q = a.poly(Poly([mpq(0), c1]))
        return TaylorModel(new_center, new_radius, q, a.remainder)
    raise ValueError(op)
