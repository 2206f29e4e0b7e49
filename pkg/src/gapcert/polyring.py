"""Exact polynomial algebra in one and two variables.

Coefficients may be rationals (gmpy2.mpq), ExpSum elements (exact finite
combinations sum_q a_q * e^q with rational a_q and q), or IntervalQ.  The
generic Poly/BiPoly containers only assume ring arithmetic, so the same code
path serves the rational tables, the e^{+-5/2}-bearing Green-system pieces,
and interval-coefficient Taylor polynomials.
"""

from __future__ import annotations

from gmpy2 import mpq

from .errors import DomainMismatch, NegativePowerNeedsEi, NonzeroRemainder
from .exactnum import IntervalQ, Q, qstr


def _is_zero(c) -> bool:
    if isinstance(c, ExpSum):
        return c.is_zero()
    if isinstance(c, IntervalQ):
        return c.lo == 0 and c.hi == 0
    return c == 0


# ----------------------------------------------------------------------
# ExpSum: the ring Q[e^q : q rational], exact symbolic exponentials
# ----------------------------------------------------------------------

class ExpSum:
    """Finite exact sum  sum_q  a_q * e^q  with rational a_q and exponents q.

    Supports ring arithmetic exactly; numeric enclosure happens only when
    ``enclose`` is called with an exponential evaluator.  Used so that C^1
    matching constants involving e^{+-5/2} cancel exactly.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        # terms: dict exponent(mpq) -> coefficient(mpq)
        self.terms = {}
        if terms:
            for q, c in terms.items():
                c = mpq(c)
                if c != 0:
                    q = mpq(q)
                    self.terms[q] = self.terms.get(q, mpq(0)) + c
            self.terms = {q: c for q, c in self.terms.items() if c != 0}

    @staticmethod
    def of(c):
        if isinstance(c, ExpSum):
            return c
        return ExpSum({mpq(0): mpq(c)})

    @staticmethod
    def exp(q, coeff=1):
        return ExpSum({mpq(q): mpq(coeff)})

    def is_zero(self):
        return not self.terms

    def is_rational(self):
        return all(q == 0 for q in self.terms)

    def as_rational(self):
        if not self.terms:
            return mpq(0)
        if not self.is_rational():
            raise ValueError(f"{self} is not rational")
        return self.terms[mpq(0)]

    def __add__(self, other):
        o = ExpSum.of(other)
        out = dict(self.terms)
        for q, c in o.terms.items():
            out[q] = out.get(q, mpq(0)) + c
        return ExpSum(out)

    __radd__ = __add__

    def __neg__(self):
        return ExpSum({q: -c for q, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-ExpSum.of(other))

    def __rsub__(self, other):
        return ExpSum.of(other) + (-self)

    def __mul__(self, other):
        o = ExpSum.of(other)
        out = {}
        for q1, c1 in self.terms.items():
            for q2, c2 in o.terms.items():
                q = q1 + q2
                out[q] = out.get(q, mpq(0)) + c1 * c2
        return ExpSum(out)

    __rmul__ = __mul__

    def __eq__(self, other):
        try:
            o = ExpSum.of(other)
        except TypeError:
            return NotImplemented
        return self.terms == o.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def enclose(self, exp_encloser) -> IntervalQ:
        """Numeric enclosure: exp_encloser(q) must return IntervalQ for e^q."""
        acc = IntervalQ.point(0)
        for q, c in sorted(self.terms.items()):
            acc = acc + (exp_encloser(q) * c if q != 0 else IntervalQ.point(c))
        return acc

    def __repr__(self):
        if not self.terms:
            return "0"
        bits = []
        for q, c in sorted(self.terms.items()):
            if q == 0:
                bits.append(qstr(c))
            else:
                bits.append(f"{qstr(c)}*e^({qstr(q)})")
        return " + ".join(bits)


def _coeff_add(a, b):
    if isinstance(a, ExpSum) or isinstance(b, ExpSum):
        return ExpSum.of(a) + ExpSum.of(b)
    return a + b


def _coeff_mul(a, b):
    if isinstance(a, ExpSum) or isinstance(b, ExpSum):
        return ExpSum.of(a) * ExpSum.of(b)
    return a * b


# ----------------------------------------------------------------------
# Univariate dense polynomials
# ----------------------------------------------------------------------

class Poly:
    """Dense univariate polynomial; index = degree."""

    __slots__ = ("c",)

    def __init__(self, coeffs):
        c = list(coeffs)
        while c and _is_zero(c[-1]):
            c.pop()
        self.c = c

    @staticmethod
    def of(x):
        if isinstance(x, Poly):
            return x
        return Poly([x]) if not _is_zero(x) else Poly([])

    @staticmethod
    def from_q(seq):
        return Poly([Q(v) if not isinstance(v, (IntervalQ, ExpSum)) else v for v in seq])

    @staticmethod
    def x(power=1, coeff=1):
        return Poly([mpq(0)] * power + [mpq(coeff)])

    @property
    def degree(self):
        return len(self.c) - 1

    def is_zero(self):
        return not self.c

    def __getitem__(self, k):
        return self.c[k] if 0 <= k < len(self.c) else mpq(0)

    def __add__(self, other):
        o = Poly.of(other)
        n = max(len(self.c), len(o.c))
        return Poly([_coeff_add(self[k], o[k]) for k in range(n)])

    __radd__ = __add__

    def __neg__(self):
        return Poly([-ck for ck in self.c])

    def __sub__(self, other):
        return self + (-Poly.of(other))

    def __rsub__(self, other):
        return Poly.of(other) + (-self)

    def __mul__(self, other):
        o = Poly.of(other) if isinstance(other, Poly) else None
        if o is None:
            return Poly([_coeff_mul(ck, other) for ck in self.c])
        if self.is_zero() or o.is_zero():
            return Poly([])
        out = [mpq(0)] * (len(self.c) + len(o.c) - 1)
        for i, a in enumerate(self.c):
            if _is_zero(a):
                continue
            for j, b in enumerate(o.c):
                out[i + j] = _coeff_add(out[i + j], _coeff_mul(a, b))
        return Poly(out)

    __rmul__ = __mul__

    def __eq__(self, other):
        o = Poly.of(other)
        return (self - o).is_zero()

    def __hash__(self):
        return hash(tuple(str(x) for x in self.c))

    def derivative(self):
        return Poly([_coeff_mul(self.c[k], mpq(k)) for k in range(1, len(self.c))])

    def antiderivative(self):
        return Poly([mpq(0)] + [_coeff_mul(self.c[k], mpq(1, k + 1)) for k in range(len(self.c))])

    def __call__(self, x):
        """Horner evaluation; x may be rational, IntervalQ, Poly, or ExpSum."""
        if not self.c:
            return mpq(0) if not isinstance(x, IntervalQ) else IntervalQ.point(0)
        acc = self.c[-1]
        if isinstance(x, Poly):
            acc = Poly.of(acc)
            for ck in reversed(self.c[:-1]):
                acc = acc * x + ck
            return acc
        for ck in reversed(self.c[:-1]):
            acc = acc * x + ck
        return acc

    def shift_mul_x(self, power=1):
        """Multiply by x**power."""
        if self.is_zero():
            return self
        return Poly([mpq(0)] * power + self.c)

    def divide_by_x(self, power=1):
        """Exact division by x**power; raises if low-order terms nonzero."""
        for k in range(min(power, len(self.c))):
            if not _is_zero(self.c[k]):
                raise NonzeroRemainder(f"coefficient of x^{k} is {self.c[k]!r}")
        return Poly(self.c[power:])

    def truncate(self, max_degree):
        """(head, tail) split at max_degree; head + tail == self."""
        head = Poly(self.c[: max_degree + 1])
        tail = Poly([mpq(0)] * (max_degree + 1) + self.c[max_degree + 1 :])
        return head, tail

    def map_coeffs(self, fn):
        return Poly([fn(ck) for ck in self.c])

    def l1_enclosure_tail(self):
        """sum |c_k| as an upper rational when coefficients are numeric."""
        total = mpq(0)
        for ck in self.c:
            if isinstance(ck, IntervalQ):
                total += ck.mag()
            else:
                total += abs(ck)
        return total

    def serialize(self):
        return [qstr(ck) for ck in self.c]

    def __repr__(self):
        if not self.c:
            return "Poly(0)"
        return "Poly[" + ", ".join(str(ck) for ck in self.c) + "]"


# ----------------------------------------------------------------------
# Affine maps and partitions
# ----------------------------------------------------------------------

class AffineMap:
    """z in [-1,1]  ->  r = m + h*z, with h > 0."""

    __slots__ = ("m", "h")

    def __init__(self, m, h):
        self.m, self.h = mpq(m), mpq(h)
        if self.h <= 0:
            raise ValueError("half-width must be positive")

    @staticmethod
    def onto(lo, hi):
        lo, hi = mpq(lo), mpq(hi)
        return AffineMap((lo + hi) / 2, (hi - lo) / 2)

    def __call__(self, z):
        return self.m + self.h * z

    def inverse(self, r):
        return (mpq(r) - self.m) / self.h

    @property
    def lo(self):
        return self.m - self.h

    @property
    def hi(self):
        return self.m + self.h

    def __repr__(self):
        return f"AffineMap([{qstr(self.lo)},{qstr(self.hi)}])"


class Partition:
    """Strictly increasing breakpoints pi_0 < ... < pi_n."""

    __slots__ = ("points",)

    def __init__(self, points):
        pts = [mpq(p) for p in points]
        if any(a >= b for a, b in zip(pts, pts[1:])):
            raise ValueError(f"breakpoints not increasing: {pts}")
        if len(pts) < 2:
            raise ValueError("need at least two breakpoints")
        self.points = pts

    def pieces(self):
        return list(zip(self.points, self.points[1:]))

    def maps(self):
        return [AffineMap.onto(a, b) for a, b in self.pieces()]

    def refine_dyadic(self):
        out = []
        for a, b in self.pieces():
            out.extend([a, (a + b) / 2])
        out.append(self.points[-1])
        return Partition(out)

    @property
    def lo(self):
        return self.points[0]

    @property
    def hi(self):
        return self.points[-1]

    def __repr__(self):
        return "Partition(" + ", ".join(qstr(p) for p in self.points) + ")"


def compose_affine(P: Poly, ell: AffineMap) -> Poly:
    """Exact re-expansion R with R(z) = P(m + h z)."""
    return P(Poly([ell.m, ell.h]))


# ----------------------------------------------------------------------
# Bivariate polynomials (spectral parameter x space variable)
# ----------------------------------------------------------------------

class BiPoly:
    """Polynomial sum c_{k,l} * u^k * v^l stored as {(k,l): coeff}.

    Convention throughout the engine: u is the spectral variable (lambda,
    sigma, or y), v is the space variable (r or z).
    """

    __slots__ = ("c",)

    def __init__(self, coeffs=None):
        self.c = {}
        if coeffs:
            for (k, l), v in coeffs.items():
                if not _is_zero(v):
                    self.c[(int(k), int(l))] = v

    @staticmethod
    def of(x):
        if isinstance(x, BiPoly):
            return x
        if isinstance(x, Poly):  # treated as polynomial in v
            return BiPoly({(0, l): ck for l, ck in enumerate(x.c)})
        return BiPoly({(0, 0): x})

    @staticmethod
    def from_u_poly(P: Poly):
        return BiPoly({(k, 0): ck for k, ck in enumerate(P.c)})

    def is_zero(self):
        return not self.c

    def __add__(self, other):
        o = BiPoly.of(other)
        out = dict(self.c)
        for kl, v in o.c.items():
            out[kl] = _coeff_add(out.get(kl, mpq(0)), v)
        return BiPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return BiPoly({kl: -v for kl, v in self.c.items()})

    def __sub__(self, other):
        return self + (-BiPoly.of(other))

    def __rsub__(self, other):
        return BiPoly.of(other) + (-self)

    def __mul__(self, other):
        if not isinstance(other, (BiPoly, Poly)):
            return BiPoly({kl: _coeff_mul(v, other) for kl, v in self.c.items()})
        o = BiPoly.of(other)
        out = {}
        for (k1, l1), v1 in self.c.items():
            for (k2, l2), v2 in o.c.items():
                kl = (k1 + k2, l1 + l2)
                out[kl] = _coeff_add(out.get(kl, mpq(0)), _coeff_mul(v1, v2))
        return BiPoly(out)

    __rmul__ = __mul__

    def u_degree(self):
        return max((k for k, _ in self.c), default=-1)

    def v_degree(self):
        return max((l for _, l in self.c), default=-1)

    def deriv_v(self):
        return BiPoly({(k, l - 1): _coeff_mul(v, mpq(l)) for (k, l), v in self.c.items() if l >= 1})

    def deriv_u(self):
        return BiPoly({(k - 1, l): _coeff_mul(v, mpq(k)) for (k, l), v in self.c.items() if k >= 1})

    def eval_u(self, u) -> Poly:
        """Substitute a value for the spectral variable; returns Poly in v."""
        out = {}
        for (k, l), v in self.c.items():
            out[l] = _coeff_add(out.get(l, mpq(0)), _coeff_mul(v, u**k if k else mpq(1)))
        n = max(out, default=-1)
        return Poly([out.get(l, mpq(0)) for l in range(n + 1)])

    def eval_v(self, x) -> Poly:
        """Substitute a value for the space variable; returns Poly in u."""
        out = {}
        for (k, l), v in self.c.items():
            out[k] = _coeff_add(out.get(k, mpq(0)), _coeff_mul(v, x**l if l else mpq(1)))
        n = max(out, default=-1)
        return Poly([out.get(k, mpq(0)) for k in range(n + 1)])

    def eval_uv(self, u, x):
        return self.eval_u(u)(x)

    def u_slice(self, k0) -> Poly:
        """Polynomial in v multiplying u^k0."""
        out = {}
        for (k, l), v in self.c.items():
            if k == k0:
                out[l] = v
        n = max(out, default=-1)
        return Poly([out.get(l, mpq(0)) for l in range(n + 1)])

    def v_slice(self, l0) -> Poly:
        out = {}
        for (k, l), v in self.c.items():
            if l == l0:
                out[k] = v
        n = max(out, default=-1)
        return Poly([out.get(k, mpq(0)) for k in range(n + 1)])

    def as_v_poly_of_u_polys(self):
        """List indexed by v-degree of u-polynomials (for met2 splitting)."""
        n = self.v_degree()
        return [self.v_slice(l) for l in range(n + 1)]

    def compose_affine_v(self, ell: AffineMap):
        """Exact substitution v -> m + h z in the space variable."""
        out = BiPoly()
        for k in range(self.u_degree() + 1):
            pk = self.u_slice(k)
            if pk.is_zero():
                continue
            rk = compose_affine(pk, ell)
            out = out + BiPoly({(k, l): cv for l, cv in enumerate(rk.c)})
        return out

    def compose_affine_u(self, c0, c1):
        """Exact substitution u -> c0 + c1*y in the spectral variable."""
        sub = Poly([mpq(c0), mpq(c1)])
        out = BiPoly()
        for l in range(self.v_degree() + 1):
            pl = self.v_slice(l)
            if pl.is_zero():
                continue
            rl = pl(sub)
            out = out + BiPoly({(k, l): cv for k, cv in enumerate(rl.c)})
        return out

    def subst_u_one_minus_square(self):
        """Exact substitution u -> 1 - s^2 (new spectral variable s)."""
        sub = Poly([mpq(1), mpq(0), mpq(-1)])
        out = BiPoly()
        for l in range(self.v_degree() + 1):
            pl = self.v_slice(l)
            if pl.is_zero():
                continue
            rl = pl(sub)
            out = out + BiPoly({(k, l): cv for k, cv in enumerate(rl.c)})
        return out

    def divide_u(self):
        """Exact division by u; raises NonzeroRemainder if u^0 terms remain."""
        for (k, l), v in self.c.items():
            if k == 0 and not _is_zero(v):
                raise NonzeroRemainder(f"u^0 v^{l} coefficient {v!r} nonzero")
        return BiPoly({(k - 1, l): v for (k, l), v in self.c.items() if k >= 1})

    def divide_v(self, power=1):
        for (k, l), v in self.c.items():
            if l < power and not _is_zero(v):
                raise NonzeroRemainder(f"u^{k} v^{l} coefficient {v!r} nonzero")
        return BiPoly({(k, l - power): v for (k, l), v in self.c.items() if l >= power})

    def mul_v_power(self, power):
        return BiPoly({(k, l + power): v for (k, l), v in self.c.items()})

    def map_coeffs(self, fn):
        return BiPoly({kl: fn(v) for kl, v in self.c.items()})

    def l1_all(self):
        total = mpq(0)
        for v in self.c.values():
            total += v.mag() if isinstance(v, IntervalQ) else abs(v)
        return total

    def __repr__(self):
        if not self.c:
            return "BiPoly(0)"
        bits = [f"{v}*u^{k}v^{l}" for (k, l), v in sorted(self.c.items())]
        return "BiPoly[" + " + ".join(bits[:8]) + (" ..." if len(bits) > 8 else "") + "]"


def divide_out_variable(P: BiPoly, var: str = "u") -> BiPoly:
    """Exact division by the named variable (spec: lambda-division)."""
    if var in ("u", "lambda"):
        return P.divide_u()
    if var == "v":
        return P.divide_v()
    raise ValueError(f"unknown variable {var!r}")


def substitute(P: BiPoly, rule: str) -> BiPoly:
    """Named exact substitutions on the spectral variable.

    'u->(1+y)/2'  : map [0,1] onto y in [-1,1]
    'u->1-s^2'    : spectral parameter in terms of decay rate s
    'u->(1+z)/2'  : alias of the first (z-named)
    """
    if rule in ("u->(1+y)/2", "u->(1+z)/2", "lambda->(1+y)/2"):
        return P.compose_affine_u(mpq(1, 2), mpq(1, 2))
    if rule in ("u->1-s^2", "lambda->1-sigma^2"):
        return P.subst_u_one_minus_square()
    if rule in ("u->(1+z)/2 scaled",):
        return P.compose_affine_u(mpq(1, 2), mpq(1, 2))
    raise ValueError(f"unknown substitution {rule!r}")


# ----------------------------------------------------------------------
# Piecewise polynomials in the global variable r
# ----------------------------------------------------------------------

class PiecewisePoly:
    """List of (interval, BiPoly-in-(u, r)) pieces over a partition.

    Pieces are stored in the global variable r (exact re-expansion of the
    table's local variable), which makes C^1 matching and differentiation
    straightforward; bounding routines re-expand per piece as needed.
    """

    __slots__ = ("partition", "pieces")

    def __init__(self, partition: Partition, pieces):
        if len(pieces) != len(partition.points) - 1:
            raise DomainMismatch("piece count does not match partition")
        self.partition = partition
        self.pieces = [BiPoly.of(p) for p in pieces]

    def piece_at(self, r):
        r = mpq(r)
        pts = self.partition.points
        if not (pts[0] <= r <= pts[-1]):
            raise DomainMismatch(f"{r} outside [{pts[0]}, {pts[-1]}]")
        for i, (a, b) in enumerate(self.partition.pieces()):
            if r < b or (i == len(self.pieces) - 1 and r <= b):
                if r >= a:
                    return i
        return len(self.pieces) - 1

    def piece_index_left(self, r):
        """Piece whose closure contains r approaching from the left."""
        r = mpq(r)
        for i, (a, b) in enumerate(self.partition.pieces()):
            if a < r <= b:
                return i
        raise DomainMismatch(f"no piece has {r} as right-side point")

    def eval_u(self, u):
        """Fix the spectral variable; returns PiecewisePoly with Poly pieces."""
        return PiecewisePoly(self.partition, [BiPoly.of(p.eval_u(u)) for p in self.pieces])

    def value(self, u, r, side="auto"):
        r = mpq(r)
        if side == "left":
            i = self.piece_index_left(r)
        else:
            i = self.piece_at(r)
        return self.pieces[i].eval_uv(u, r)

    def deriv_r(self):
        return PiecewisePoly(self.partition, [p.deriv_v() for p in self.pieces])

    def map_pieces(self, fn):
        return PiecewisePoly(self.partition, [fn(p) for p in self.pieces])

    def jump_data(self):
        """Per interior breakpoint: (value jump, slope jump) as u-Polys."""
        out = []
        d = self.deriv_r()
        for i, r in enumerate(self.partition.points[1:-1], start=1):
            left, right = self.pieces[i - 1], self.pieces[i]
            dleft, dright = d.pieces[i - 1], d.pieces[i]
            vj = right.eval_v(mpq(r)) - left.eval_v(mpq(r))
            sj = dright.eval_v(mpq(r)) - dleft.eval_v(mpq(r))
            out.append((vj, sj))
        return out

    def serialize(self):
        return {
            "partition": [qstr(p) for p in self.partition.points],
            "pieces": [
                {f"{k},{l}": str(v) for (k, l), v in sorted(p.c.items())}
                for p in self.pieces
            ],
        }


# ----------------------------------------------------------------------
# ExpPoly: finite sums  e^{a s} * (s + c)^k * P(s)  and their integrals
# ----------------------------------------------------------------------

class ExpTerm:
    """One term  coeff_poly(s) * e^{rate*s} * (s+shift)^{power} (power <= 0)."""

    __slots__ = ("rate", "power", "shift", "poly")

    def __init__(self, rate, poly, power=0, shift=0):
        self.rate = mpq(rate)
        self.power = int(power)
        self.shift = mpq(shift)
        self.poly = Poly.of(poly)
        if self.power > 0:
            # positive powers fold into the polynomial part
            extra = Poly([self.shift, mpq(1)])
            p = self.poly
            for _ in range(self.power):
                p = p * extra
            self.poly, self.power = p, 0
        if self.power < -6:
            raise NegativePowerNeedsEi(f"power {self.power} below supported range")


class ExpPoly:
    """Finite sum of ExpTerms in one variable s."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = [t for t in (terms or []) if not t.poly.is_zero()]

    @staticmethod
    def poly(P):
        return ExpPoly([ExpTerm(0, P)])

    @staticmethod
    def exp(rate, P=1):
        return ExpPoly([ExpTerm(rate, P)])

    @staticmethod
    def exp_inv_power(rate, power, shift=0, coeff=1):
        return ExpPoly([ExpTerm(rate, Poly.of(coeff), power, shift)])

    def __add__(self, other):
        o = other if isinstance(other, ExpPoly) else ExpPoly.poly(Poly.of(other))
        return ExpPoly(self.terms + o.terms)

    __radd__ = __add__

    def __neg__(self):
        return ExpPoly([ExpTerm(t.rate, -t.poly, t.power, t.shift) for t in self.terms])

    def __sub__(self, other):
        o = other if isinstance(other, ExpPoly) else ExpPoly.poly(Poly.of(other))
        return self + (-o)

    def scale(self, c):
        return ExpPoly([ExpTerm(t.rate, t.poly * c, t.power, t.shift) for t in self.terms])

    def mul_poly(self, P):
        P = Poly.of(P)
        return ExpPoly([ExpTerm(t.rate, t.poly * P, t.power, t.shift) for t in self.terms])

    def mul_exp(self, rate):
        return ExpPoly([ExpTerm(t.rate + mpq(rate), t.poly, t.power, t.shift) for t in self.terms])

    def derivative(self):
        out = []
        for t in self.terms:
            out.append(ExpTerm(t.rate, t.poly.derivative(), t.power, t.shift))
            if t.rate != 0:
                out.append(ExpTerm(t.rate, t.poly * t.rate, t.power, t.shift))
            if t.power != 0:
                out.append(ExpTerm(t.rate, t.poly * mpq(t.power), t.power - 1, t.shift))
        return ExpPoly(out)

    def eval_interval(self, x, exp_encloser) -> IntervalQ:
        """Enclosure of the value at rational x or over an IntervalQ."""
        acc = IntervalQ.point(0)
        xi = x if isinstance(x, IntervalQ) else IntervalQ.point(mpq(x))
        for t in self.terms:
            val = _interval_poly_eval(t.poly, xi)
            if t.rate != 0:
                elo = exp_encloser(t.rate * xi.lo)
                ehi = exp_encloser(t.rate * xi.hi)
                val = val * IntervalQ.hull([elo, ehi])
            if t.power != 0:
                base = xi + t.shift
                val = val * base.pow_nat(-t.power).inverse()
            acc = acc + val
        return acc


def _interval_poly_eval(P: Poly, x: IntervalQ) -> IntervalQ:
    acc = IntervalQ.point(0)
    for ck in reversed(P.c):
        cc = ck if isinstance(ck, IntervalQ) else (
            IntervalQ.point(ck) if not isinstance(ck, ExpSum) else None)
        if cc is None:
            raise DomainMismatch("ExpSum coefficients need enclosure first")
        acc = acc * x + cc
    return acc


def exppoly_antiderivative(E: ExpPoly) -> ExpPoly:
    """Exact antiderivative; requires every term to have power == 0.

    For e^{a s} P(s): repeated integration by parts gives
    F(s) = e^{a s} * sum_j (-1)^j P^{(j)}(s) / a^{j+1}; for a == 0 the plain
    polynomial antiderivative.
    """
    out = []
    for t in E.terms:
        if t.power != 0:
            raise NegativePowerNeedsEi("negative power requires improper-integral route")
        if t.rate == 0:
            out.append(ExpTerm(0, t.poly.antiderivative()))
            continue
        acc = Poly([])
        p = t.poly
        sign = mpq(1)
        a_pow = t.rate
        while not p.is_zero():
            acc = acc + p.map_coeffs(lambda c: _coeff_mul(c, sign / a_pow))
            p = p.derivative()
            sign = -sign
            a_pow = a_pow * t.rate
        out.append(ExpTerm(t.rate, acc))
    return ExpPoly(out)


def definite_integral(E: ExpPoly, a, b, exp_encloser) -> IntervalQ:
    F = exppoly_antiderivative(E)
    return F.eval_interval(mpq(b), exp_encloser) - F.eval_interval(mpq(a), exp_encloser)


def _tail_integral_inv_power(rate, power, shift, lower, exp_encloser, ei_neg_encloser) -> IntervalQ:
    """Enclosure of  int_lower^inf e^{rate*s} (s+shift)^power ds, power <= -1.

    Integration by parts raises the power until the k = -1 case, which is an
    exponential-integral value:  int_x^inf e^{a t}/t dt = -Ei(a x)  (x > 0).
    """
    rate, shift, lower = mpq(rate), mpq(shift), mpq(lower)
    x = lower + shift
    if x <= 0:
        raise DivergentIntegral(f"inverse power with s+shift <= 0 at s={lower}")
    if power == -1:
        # shift the variable: e^{-rate*shift} * int_x^inf e^{rate*t}/t dt
        pref = exp_encloser(-rate * shift)
        return pref * ei_neg_encloser(-rate * x)
    x_pow = mpq(1) / x ** (-(power + 1)) if power + 1 < 0 else mpq(1)
    boundary = exp_encloser(rate * lower) * x_pow * mpq(-1, power + 1)
    rec = _tail_integral_inv_power(rate, power + 1, shift, lower, exp_encloser, ei_neg_encloser)
    return boundary - rec * (rate / mpq(power + 1))


def exppoly_improper_integral(E: ExpPoly, lower, exp_encloser, ei_neg_encloser=None) -> IntervalQ:
    """Rigorous enclosure of  int_lower^inf E(s) ds.

    Closed form for plain e^{as}P(s) terms (a < 0); inverse powers reduce to
    exponential-integral enclosures.  ``ei_neg_encloser(y)`` must return an
    IntervalQ containing -Ei(-y) for rational y > 0.
    """
    lower = mpq(lower)
    total = IntervalQ.point(0)
    for t in E.terms:
        if t.rate >= 0:
            raise DivergentIntegral(f"rate {t.rate} >= 0 in tail integral")
        if t.power == 0:
            F = exppoly_antiderivative(ExpPoly([t]))
            total = total - F.eval_interval(lower, exp_encloser)
            continue
        if ei_neg_encloser is None:
            raise NegativePowerNeedsEi("no Ei encloser supplied")
        # re-expand the polynomial factor around -shift: P(s) = sum b_j (s+shift)^j
        shifted = compose_affine(t.poly, AffineMap(-t.shift, 1))  # P(-shift + w), w = s+shift
        plain_terms = []
        for j, bj in enumerate(shifted.c):
            if _is_zero(bj):
                continue
            k = t.power + j
            if k >= 0:
                base = Poly([t.shift, mpq(1)])  # (s + shift)
                mono = Poly([mpq(1)])
                for _ in range(k):
                    mono = mono * base
                plain_terms.append(ExpTerm(t.rate, mono * bj))
            else:
                part = _tail_integral_inv_power(t.rate, k, t.shift, lower,
                                                exp_encloser, ei_neg_encloser)
                coeff = bj if isinstance(bj, IntervalQ) else IntervalQ.point(bj)
                total = total + coeff * part
        if plain_terms:
            F = exppoly_antiderivative(ExpPoly(plain_terms))
            total = total - F.eval_interval(lower, exp_encloser)
    return total
