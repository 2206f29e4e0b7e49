"""Certified range bounding for polynomials and exponential-polynomial mixes.

The core calculus:

* degree <= 3 polynomials on [-1,1] have exact extrema (quadratic formula
  with a rigorous sqrt bracket);
* higher degrees are bounded by the cubic head plus the l1 norm of the
  remaining coefficients, after re-expanding onto [-1,1] piece by piece;
* bivariate polynomials on [-1,1]^2 split into a cubic in each variable
  plus an l1 tail over everything else;
* block decompositions sharpen sums of monomial groups whose derivative
  reduces to a quadratic;
* e^{ar} * (quadratic or linear-block) factors have explicit critical
  points; general exponential-polynomial mixes fall back to adaptive
  bisection with a mean-value form, which stays rigorous because every
  evaluation is an exact rational interval.

Routines that need values of e^x take an ``exp_encloser`` callable
returning an IntervalQ for rational x, so this module has no dependency on
the special-function layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from gmpy2 import mpq

from .errors import BoundFailure, DenominatorMayVanish
from .exactnum import DEFAULT_SQRT_WIDTH, IntervalQ, interval_sqrt
from .polyring import AffineMap, BiPoly, ExpPoly, Partition, Poly, compose_affine


@dataclass
class BoundResult:
    enclosure: IntervalQ
    method: str
    pieces: list = field(default_factory=list)


# ----------------------------------------------------------------------
# coefficient handling
# ----------------------------------------------------------------------

def poly_mid_rad(P: Poly):
    """Split interval coefficients into midpoint poly + l1 radius."""
    mid, rad = [], mpq(0)
    for ck in P.c:
        if isinstance(ck, IntervalQ):
            mid.append(ck.mid)
            rad += ck.width / 2
        else:
            mid.append(mpq(ck))
    return Poly(mid), rad


def bipoly_mid_rad(B: BiPoly):
    mid, rad = {}, mpq(0)
    for kl, v in B.c.items():
        if isinstance(v, IntervalQ):
            mid[kl] = v.mid
            rad += v.width / 2
        else:
            mid[kl] = mpq(v)
    return BiPoly(mid), rad


def _interval_eval(P: Poly, x: IntervalQ) -> IntervalQ:
    acc = IntervalQ.point(0)
    for ck in reversed(P.c):
        cc = ck if isinstance(ck, IntervalQ) else IntervalQ.point(ck)
        acc = acc * x + cc
    return acc


# ----------------------------------------------------------------------
# polynomial bounding on [-1, 1]
# ----------------------------------------------------------------------

def bound_cubic_unit(P: Poly, sqrt_width=DEFAULT_SQRT_WIDTH) -> IntervalQ:
    """Exact range of a degree <= 3 polynomial over z in [-1, 1]."""
    P, rad = poly_mid_rad(P)
    if P.degree > 3:
        raise ValueError(f"degree {P.degree} > 3")
    cands = [P(mpq(-1)), P(mpq(1))]
    cands = [IntervalQ.point(v) for v in cands]
    d, c, b = P[3], P[2], P[1]
    # P' = b + 2c z + 3d z^2
    if d == 0:
        if c != 0:
            z = -b / (2 * c)
            if -1 < z < 1:
                cands.append(IntervalQ.point(P(z)))
    else:
        disc = 4 * c * c - 12 * b * d
        if disc >= 0:
            root = interval_sqrt(IntervalQ.point(disc), sqrt_width)
            for sgn in (1, -1):
                z = (IntervalQ.point(-2 * c) + root * sgn) * (mpq(1, 6) / d)
                z_clip = IntervalQ(max(z.lo, mpq(-1)), min(z.hi, mpq(1))) if z.lo <= 1 and z.hi >= -1 else None
                if z_clip is not None:
                    cands.append(_interval_eval(P, z_clip))
    out = IntervalQ.hull(cands)
    return out.widen(rad) if rad else out


def bound_poly_unit(P: Poly, sqrt_width=DEFAULT_SQRT_WIDTH) -> IntervalQ:
    """Range enclosure on [-1,1]: cubic head extrema +- l1 of the tail."""
    P, rad = poly_mid_rad(P)
    head, tail = P.truncate(3)
    out = bound_cubic_unit(head, sqrt_width)
    t = tail.l1_enclosure_tail() + rad
    return out.widen(t) if t else out


def bound_poly_on(P: Poly, plan, sqrt_width=DEFAULT_SQRT_WIDTH) -> BoundResult:
    """Bound P over a partition of its variable by piecewise re-expansion."""
    part = plan if isinstance(plan, Partition) else Partition(plan)
    pieces = []
    for ell in part.maps():
        pieces.append(bound_poly_unit(compose_affine(P, ell), sqrt_width))
    return BoundResult(IntervalQ.hull(pieces), "cubic+tail", pieces)


def bound_block_sum(P: Poly, sqrt_width=DEFAULT_SQRT_WIDTH) -> IntervalQ:
    """Block-decomposition range bound on [-1,1].

    Head of degree <= 3 exactly, then monomial blocks of degrees
    [3l+1, 3l+3]; each block z^{3l+1} (c + d z + e z^2) has derivative
    z^{3l} * quadratic, so its extrema are explicit.  The range of the sum
    is contained in the sum of the block ranges.
    """
    P, rad = poly_mid_rad(P)
    total = bound_cubic_unit(Poly(P.c[:4]), sqrt_width)
    k = 4
    while k < len(P.c):
        blk = P.c[k : k + 3]
        base = k
        q = Poly(blk)
        if not q.is_zero():
            total = total + _bound_monomial_block(base, q, sqrt_width)
        k += 3
    return total.widen(rad) if rad else total


def _bound_monomial_block(m: int, q: Poly, sqrt_width) -> IntervalQ:
    """Range of z^m * q(z) (deg q <= 2) on [-1,1] via explicit extrema."""
    if q.degree > 2:
        raise ValueError("block quadratic too large")
    # f' = z^{m-1} * (m q(z) + z q'(z)), second factor quadratic
    crit = q * mpq(m) + Poly([mpq(0), mpq(1)]) * q.derivative()
    cands = [IntervalQ.point(mpq(-1) ** m * q(mpq(-1))), IntervalQ.point(q(mpq(1)))]
    if m >= 1:
        cands.append(IntervalQ.point(0))
    c0, c1, c2 = crit[0], crit[1], crit[2]
    roots = []
    if c2 == 0:
        if c1 != 0:
            roots.append(IntervalQ.point(-c0 / c1))
    else:
        disc = c1 * c1 - 4 * c2 * c0
        if disc >= 0:
            rt = interval_sqrt(IntervalQ.point(disc), sqrt_width)
            for sgn in (1, -1):
                roots.append((IntervalQ.point(-c1) + rt * sgn) * (mpq(1, 2) / c2))
    for z in roots:
        if z.hi < -1 or z.lo > 1:
            continue
        zc = IntervalQ(max(z.lo, mpq(-1)), min(z.hi, mpq(1)))
        cands.append(zc.pow_nat(m) * _interval_eval(q, zc))
    return IntervalQ.hull(cands)


def bound_bipoly_unit(B: BiPoly, sqrt_width=DEFAULT_SQRT_WIDTH) -> IntervalQ:
    """Range bound on [-1,1]^2: cubic in each variable + l1 of the rest.

    The split keeps the terms u^k (k=1..3) and v^l (l=0..3); everything
    else, including all mixed terms, is absorbed into the l1 tail.
    """
    B, rad = bipoly_mid_rad(B)
    vc = Poly([B.c.get((0, l), mpq(0)) for l in range(4)])
    uc = Poly([mpq(0)] + [B.c.get((k, 0), mpq(0)) for k in range(1, 4)])
    tail = mpq(0)
    for (k, l), v in B.c.items():
        if (k == 0 and l <= 3) or (l == 0 and 1 <= k <= 3):
            continue
        tail += abs(v)
    out = bound_cubic_unit(vc, sqrt_width) + bound_cubic_unit(uc, sqrt_width)
    return out.widen(tail + rad) if (tail or rad) else out


def bound_bipoly_on(B: BiPoly, plan, sqrt_width=DEFAULT_SQRT_WIDTH) -> BoundResult:
    """Bound a BiPoly with u already on [-1,1], partitioning the v variable."""
    part = plan if isinstance(plan, Partition) else Partition(plan)
    pieces = []
    for ell in part.maps():
        pieces.append(bound_bipoly_unit(B.compose_affine_v(ell), sqrt_width))
    return BoundResult(IntervalQ.hull(pieces), "bivariate-split", pieces)


def bound_rational_unit(N: Poly, D: Poly) -> IntervalQ:
    """Bound |N/D| on [-1,1] when |D(0)| dominates the other coefficients."""
    Nm, Nrad = poly_mid_rad(N)
    Dm, Drad = poly_mid_rad(D)
    n_bar = Nm.l1_enclosure_tail() + Nrad
    d0 = abs(Dm[0])
    d_bar = Poly(Dm.c[1:]).l1_enclosure_tail() + Drad
    if d0 <= d_bar:
        raise DenominatorMayVanish(f"|D(0)|={d0} <= l1(rest)={d_bar}")
    hi = n_bar / (d0 - d_bar)
    return IntervalQ(0, hi)


# ----------------------------------------------------------------------
# exponential-polynomial bounding
# ----------------------------------------------------------------------

def _exp_over(iv: IntervalQ, rate, exp_encloser) -> IntervalQ:
    """Enclosure of e^{rate * x} for x in iv (monotone in x)."""
    rate = mpq(rate)
    if rate == 0:
        return IntervalQ.point(1)
    a = exp_encloser(rate * iv.lo)
    b = exp_encloser(rate * iv.hi)
    return IntervalQ.hull([a, b])


def bound_exp_quad(rate, Qp: Poly, domain: IntervalQ, exp_encloser,
                   sqrt_width=DEFAULT_SQRT_WIDTH) -> IntervalQ:
    """Range of e^{rate r} * Q(r) (deg Q <= 2) over a rational interval.

    Critical points solve the quadratic rate*Q + Q' = 0 exactly; the hull of
    endpoint and critical values is a sound enclosure.
    """
    Qm, rad = poly_mid_rad(Qp)
    if Qm.degree > 2:
        raise ValueError("quadratic part too large")
    rate = mpq(rate)
    dom = domain if isinstance(domain, IntervalQ) else IntervalQ(*domain)

    def value(x: IntervalQ) -> IntervalQ:
        return _interval_eval(Qm, x) * _exp_over(x, rate, exp_encloser)

    cands = [value(IntervalQ.point(dom.lo)), value(IntervalQ.point(dom.hi))]
    crit = Qm * rate + Qm.derivative()
    c0, c1, c2 = crit[0], crit[1], crit[2]
    roots = []
    if c2 == 0:
        if c1 != 0:
            roots.append(IntervalQ.point(-c0 / c1))
    else:
        disc = c1 * c1 - 4 * c2 * c0
        if disc >= 0:
            rt = interval_sqrt(IntervalQ.point(disc), sqrt_width)
            for sgn in (1, -1):
                roots.append((IntervalQ.point(-c1) + rt * sgn) * (mpq(1, 2) / c2))
    for z in roots:
        if z.hi < dom.lo or z.lo > dom.hi:
            continue
        zc = IntervalQ(max(z.lo, dom.lo), min(z.hi, dom.hi))
        cands.append(value(zc))
    out = IntervalQ.hull(cands)
    if rad:
        amp = _exp_over(dom, rate, exp_encloser).mag()
        out = out.widen(rad * amp)
    return out


def bound_exp_block_sum(rate, P: Poly, domain: IntervalQ, exp_encloser,
                        sqrt_width=DEFAULT_SQRT_WIDTH) -> IntervalQ:
    """Range bound of e^{rate r} P(r): quadratic head + linear pair blocks.

    Each block e^{ar} r^m (c + d r) has derivative e^{ar} r^{m-1} times a
    quadratic, so block extrema are explicit; the total range is contained
    in the sum of block ranges.
    """
    rate = mpq(rate)
    dom = domain if isinstance(domain, IntervalQ) else IntervalQ(*domain)
    if rate == 0:
        # pure polynomial: re-expand and use the cubic block decomposition
        ell = AffineMap.onto(dom.lo, dom.hi)
        return bound_block_sum(compose_affine(P, ell), sqrt_width)
    Pm, rad = poly_mid_rad(P)
    total = bound_exp_quad(rate, Poly(Pm.c[:3]), dom, exp_encloser, sqrt_width)
    k = 3
    while k < len(Pm.c):
        c = Pm[k]
        d = Pm[k + 1] if k + 1 < len(Pm.c) else mpq(0)
        if c != 0 or d != 0:
            total = total + _bound_exp_linear_block(rate, k, c, d, dom,
                                                    exp_encloser, sqrt_width)
        k += 2
    if rad:
        big_r = dom.abs().mag()
        amp = _exp_over(dom, rate, exp_encloser).mag() * max(mpq(1), big_r ** max(Pm.degree, 0))
        total = total.widen(rad * amp)
    return total


def _bound_exp_linear_block(rate, m, c, d, dom: IntervalQ, exp_encloser, sqrt_width):
    """Range of e^{ar} r^m (c + d r) over dom; derivative quadratic is exact."""

    def value(x: IntervalQ) -> IntervalQ:
        return x.pow_nat(m) * (IntervalQ.point(c) + IntervalQ.point(d) * x) * \
            _exp_over(x, rate, exp_encloser)

    cands = [value(IntervalQ.point(dom.lo)), value(IntervalQ.point(dom.hi))]
    # f' = e^{ar} r^{m-1} [ a d r^2 + (a c + (m+1) d) r + m c ]
    q2, q1, q0 = rate * d, rate * c + (m + 1) * d, mpq(m) * c
    roots = []
    if q2 == 0:
        if q1 != 0:
            roots.append(IntervalQ.point(-q0 / q1))
    else:
        disc = q1 * q1 - 4 * q2 * q0
        if disc >= 0:
            rt = interval_sqrt(IntervalQ.point(disc), sqrt_width)
            for sgn in (1, -1):
                roots.append((IntervalQ.point(-q1) + rt * sgn) * (mpq(1, 2) / q2))
    if m >= 1 and dom.contains(0):
        roots.append(IntervalQ.point(0))
    for z in roots:
        if z.hi < dom.lo or z.lo > dom.hi:
            continue
        zc = IntervalQ(max(z.lo, dom.lo), min(z.hi, dom.hi))
        cands.append(value(zc))
    return IntervalQ.hull(cands)


# ----------------------------------------------------------------------
# adaptive enclosure for general exponential-polynomial expressions
# ----------------------------------------------------------------------

def _expmix_enclosure(E: ExpPoly, piece: IntervalQ, exp_encloser) -> IntervalQ:
    """Mean-value form enclosure of E over a small interval."""
    mid = piece.mid
    fm = E.eval_interval(mid, exp_encloser)
    dE = E.derivative()
    slope = dE.eval_interval(piece, exp_encloser)
    halfw = IntervalQ(-piece.width / 2, piece.width / 2)
    mv = fm + slope * halfw
    direct = E.eval_interval(piece, exp_encloser)
    lo = max(mv.lo, direct.lo)
    hi = min(mv.hi, direct.hi)
    return IntervalQ(lo, hi)


def range_expmix(E: ExpPoly, lo, hi, exp_encloser, max_depth=14,
                 width_goal=None) -> IntervalQ:
    """Adaptive range enclosure of an ExpPoly over [lo, hi]."""
    out = []

    def rec(a, b, depth):
        piece = IntervalQ(a, b)
        enc = _expmix_enclosure(E, piece, exp_encloser)
        if depth >= max_depth or (width_goal is not None and enc.width <= width_goal):
            out.append(enc)
            return
        if width_goal is None and depth >= 6:
            out.append(enc)
            return
        m = piece.mid
        rec(a, m, depth + 1)
        rec(m, b, depth + 1)

    rec(mpq(lo), mpq(hi), 0)
    return IntervalQ.hull(out)


def certify_expmix_nonneg(E: ExpPoly, lo, hi, exp_encloser, max_depth=16,
                          strict=False) -> bool:
    """Certify E >= 0 (or > 0) on [lo, hi] by adaptive bisection.

    Pieces whose enclosure straddles zero are split; a piece touching the
    boundary value zero at an endpoint is accepted when the derivative is
    sign-definite there (tangency case).  Raises BoundFailure otherwise.
    """
    dE = E.derivative()

    def ok_tangent(a, b):
        # endpoint value >= 0 and monotone away from it on the piece
        fa = E.eval_interval(mpq(a), exp_encloser)
        fb = E.eval_interval(mpq(b), exp_encloser)
        sl = dE.eval_interval(IntervalQ(a, b), exp_encloser)
        good_a = fa.lo > 0 if strict else fa.lo >= 0
        good_b = fb.lo > 0 if strict else fb.lo >= 0
        if good_a and sl.lo >= 0:
            return True  # rising from an admissible left endpoint
        if good_b and sl.hi <= 0:
            return True  # falling toward an admissible right endpoint
        return False

    def rec(a, b, depth):
        enc = _expmix_enclosure(E, IntervalQ(a, b), exp_encloser)
        if enc.lo > 0 or (not strict and enc.lo >= 0):
            return
        if enc.hi < 0:
            raise BoundFailure(f"negative on [{a},{b}]: {enc}")
        if ok_tangent(a, b):
            return
        if depth >= max_depth:
            raise BoundFailure(f"cannot certify sign on [{a},{b}]: {enc}")
        m = (mpq(a) + mpq(b)) / 2
        rec(a, m, depth + 1)
        rec(m, b, depth + 1)

    rec(mpq(lo), mpq(hi), 0)
    return True
