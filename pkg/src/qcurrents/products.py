"""Infinite q-products, theta combs, and structure functions on x-windows.

Everything here expands objects of the shape

    (c x; t_1, ..., t_k) = prod_{n_1..n_k >= 0} (1 - c x t_1^{n_1}...t_k^{n_k})

and their ratios into exact windowed x-series, where c and every base t_j
are pure powers of q.  Expansion goes through the logarithm: the x^m
coefficient of log(c x; t_1..t_k) is

    -(1/m) c^m prod_j (1 - t_j^m)^{-1}

which is an exact q-series, and the exponential recurrence of the window
layer turns the sum of logs into the product.  Bilateral theta combs are
expanded from their series form directly (normalized so the constant
one-base product is dropped):

    theta(c x | t) = sum_m (-1)^m t^{m(m-1)/2} (c x)^m

Clearing-factor classes wrap these with exact per-power valuations and
monotone tail bounds; the verification layer uses those to certify how deep
in q a windowed comparison is faithful to the full bilateral objects.
"""

from __future__ import annotations

import heapq
import math
from fractions import Fraction

from .qscalar import QSeries, get_order, half_exp, qmono, qs_ratio, rat
from .xwindow import XSeries, xs_exp


def _as_frac(e):
    return e if isinstance(e, Fraction) else Fraction(e)


def pochhammer_log_window(coeff_qexp, base_qexps, high):
    """log(q^coeff_qexp * x; bases) as a window [1, high], floor 1.

    Carries the affine tail certificate (slope = coeff_qexp): the x^m
    coefficient has q-valuation exactly coeff_qexp * m.
    """
    c = _as_frac(coeff_qexp)
    bases = [_as_frac(e) for e in base_qexps]
    if any(e <= 0 for e in bases):
        raise ValueError("product bases must be positive powers of q")
    coeffs = {}
    for m in range(1, high + 1):
        den = QSeries.one()
        for e in bases:
            den = den * (QSeries.one() - qmono(1, e * m))
        coeffs[m] = qs_ratio(qmono(Fraction(-1, m), c * m), den)
    return XSeries(coeffs, 1, high, floor=1, tail_up=(c, Fraction(0)))


def product_window(specs, high, x_sign=1):
    """prod_i (q^{c_i} x; bases_i)^{mult_i} over the window.

    specs: iterable of (coeff_qexp, base_qexps, mult).  Result covers
    [0, high] (or mirrored for x_sign=-1) with floor certificate.
    """
    total = None
    for c, bases, mult in specs:
        piece = pochhammer_log_window(c, bases, high)
        if mult != 1:
            piece = piece.scale(qmono(mult))
        total = piece if total is None else total + piece
    if total is None:
        out = XSeries.one()
    else:
        out = xs_exp(total, high)
    return out.flip() if x_sign == -1 else out


def pochhammer_window(coeff_qexp, base_qexps, high, x_sign=1):
    """(q^coeff_qexp * x^{x_sign}; bases) over [0, high] in |x-power|."""
    return product_window([(coeff_qexp, base_qexps, 1)], high, x_sign)


def euler_scalar(base_qexp):
    """The constant product prod_{n>=1} (1 - q^{e n}) through the working
    order, as a q-scalar."""
    e = _as_frac(base_qexp)
    if e <= 0:
        raise ValueError("base must be a positive power of q")
    cap = get_order()
    out = QSeries.one()
    n = 1
    while e * n <= cap:
        out = out * (QSeries.one() - qmono(1, e * n))
        n += 1
    # factors beyond the working order only touch exponents above it
    return out + QSeries({}, half_exp(cap))


def theta_series_window(base_qexp, coeff_qexp, low, high, x_sign=1):
    """Normalized bilateral theta comb over an x-window.

    theta(q^coeff_qexp x^{x_sign} | q^base_qexp)
      = sum_m (-1)^m q^{base*m(m-1)/2 + coeff*m} x^{x_sign*m}
    """
    t = _as_frac(base_qexp)
    c = _as_frac(coeff_qexp)
    if t <= 0:
        raise ValueError("theta base must be a positive power of q")
    coeffs = {}
    for mu in range(low, high + 1):
        m = x_sign * mu
        e = t * Fraction(m * (m - 1), 2) + c * m
        coeffs[mu] = qmono(rat(-1 if m % 2 else 1), e)
    return XSeries(coeffs, low, high)


def trig_structure_window(high):
    """The rational structure function of the trigonometric exchange rules:
    (x; q^4)(x q^4; q^4) / (x q^2; q^4)^2 expanded over [0, high]."""
    return product_window(
        [(0, [4], 1), (4, [4], 1), (2, [4], -2)], high)


def elliptic_structure_window(high, r, k):
    """The two-parameter structure function with nome exponents fixed by
    the dynamical parameter r and the level k: bases q^4, q^{2r}, q^{2r*}
    with r* = r - k."""
    bases = [4, 2 * r, 2 * (r - k)]
    return product_window(
        [(0, bases, 1), (4, bases, 1), (2, bases, -2)], high)


# -- formal-nome grading -------------------------------------------------------


class PSeries:
    """Polynomial layer stack in a formal nome with q-series coefficients.

    Tracks powers 0..order of the nome; the companion nome (same grading,
    shifted in q by the level) is folded into the q-coefficients by callers.
    """

    __slots__ = ("c", "order")

    def __init__(self, coeffs, order):
        self.c = {j: s for j, s in coeffs.items()
                  if j <= order and not s.is_exact_zero()}
        self.order = order

    @staticmethod
    def one(order):
        return PSeries({0: QSeries.one()}, order)

    @staticmethod
    def zero(order):
        return PSeries({}, order)

    def layer(self, j):
        return self.c.get(j, QSeries.zero())

    def __add__(self, other):
        order = min(self.order, other.order)
        c = dict(self.c)
        for j, s in other.c.items():
            c[j] = c.get(j, QSeries.zero()) + s
        return PSeries(c, order)

    def __neg__(self):
        return PSeries({j: -s for j, s in self.c.items()}, self.order)

    def __mul__(self, other):
        order = min(self.order, other.order)
        c = {}
        for i, a in self.c.items():
            for j, b in other.c.items():
                if i + j <= order:
                    k = i + j
                    c[k] = c.get(k, QSeries.zero()) + a * b
        return PSeries(c, order)

    def scale(self, qs):
        return PSeries({j: s * qs for j, s in self.c.items()}, self.order)

    @staticmethod
    def geometric(step, qexp_per_step, order):
        """1 / (1 - nome^step * q^qexp_per_step) expanded in the nome."""
        g = _as_frac(qexp_per_step)
        c = {}
        j = 0
        while j * step <= order:
            c[j * step] = qmono(1, g * j)
            j += 1
        return PSeries(c, order)


def elliptic_structure_p_graded(high, k, p_order):
    """The elliptic structure function with the nome kept formal.

    Returns {x-power: PSeries}; the companion nome is the formal nome times
    q^{-2k}, so its grading folds into the same stack.  Layer 0 must agree
    with the rational structure function.
    """
    logs = {}
    for m in range(1, high + 1):
        # (1 + q^{4m} - 2 q^{2m}) / (1 - q^{4m}) = (1 - q^{2m})/(1 + q^{2m})
        num = QSeries.one() - qmono(1, 2 * m)
        den = QSeries.one() + qmono(1, 2 * m)
        scalar = qs_ratio(num, den).scale(Fraction(-1, m))
        pfac = PSeries.geometric(m, 0, p_order) * \
            PSeries.geometric(m, -2 * k * m, p_order)
        logs[m] = pfac.scale(scalar)
    # exponential recurrence with layered coefficients
    e = {0: PSeries.one(p_order)}
    for m in range(1, high + 1):
        acc = PSeries.zero(p_order)
        for j in range(1, m + 1):
            cj = logs.get(j)
            if cj is None:
                continue
            prev = e.get(m - j)
            if prev is not None:
                acc = acc + (cj * prev).scale(qmono(j))
        e[m] = acc.scale(qmono(Fraction(1, m)))
    return e


# -- clearing factors with certified tails ------------------------------------


def smallest_lattice_sums(base_qexps, count):
    """S[m] = sum of the m smallest values of {sum_j e_j n_j : n_j >= 0},
    counted with multiplicity, for m = 0..count."""
    bases = sorted(_as_frac(e) for e in base_qexps)
    if any(e <= 0 for e in bases):
        raise ValueError("lattice bases must be positive")
    k = len(bases)
    heap = [(Fraction(0), (0,) * k, 0)]
    sums = [Fraction(0)]
    total = Fraction(0)
    while len(sums) <= count:
        v, pt, start = heapq.heappop(heap)
        total += v
        sums.append(total)
        # each point spawns children with nondecreasing coordinate index,
        # so every lattice point is generated exactly once
        for j in range(start, k):
            nxt = list(pt)
            nxt[j] += 1
            heapq.heappush(heap, (v + bases[j], tuple(nxt), j))
    return sums


class ThetaClearing:
    """Bilateral theta comb as a clearing factor: exact monomial
    coefficients with a quadratic valuation profile."""

    def __init__(self, base_qexp, coeff_qexp, x_sign=1):
        self.t = _as_frac(base_qexp)
        self.v = _as_frac(coeff_qexp)
        self.x_sign = x_sign
        if self.t <= 0:
            raise ValueError("theta base must be positive")

    def _val(self, m):
        # valuation of the index-m term of the comb
        return self.t * Fraction(m * (m - 1), 2) + self.v * m

    def _vertex(self):
        return Fraction(1, 2) - self.v / self.t

    def _min_over_ge(self, a):
        """min of the index valuation over integers m >= a (convex)."""
        vx = self._vertex()
        if a >= vx:
            return self._val(a)
        lo = max(a, math.floor(vx))
        return min(self._val(lo), self._val(lo + 1))

    def _min_over_le(self, b):
        vx = self._vertex()
        if b <= vx:
            return self._val(b)
        hi = min(b, math.ceil(vx))
        return min(self._val(hi), self._val(hi - 1))

    def gmin(self):
        vx = self._vertex()
        return min(self._val(math.floor(vx)), self._val(math.ceil(vx)))

    def tail_val(self, a):
        """min valuation over |x-power| >= a, a >= 1."""
        return min(self._min_over_ge(a), self._min_over_le(-a))

    def lagrangian_tail(self, a, lam):
        """min over comb indices |m| >= a of (valuation(m) - lam*|m|).

        The linear penalty shifts the quadratic's vertex; still convex, so
        the integer minimum sits at the clipped vertex neighbours.
        """
        lam = _as_frac(lam)
        vx = Fraction(1, 2) + (lam - self.v) / self.t
        if a >= vx:
            best = self._val(a) - lam * a
        else:
            lo = max(a, math.floor(vx))
            best = min(self._val(lo) - lam * lo,
                       self._val(lo + 1) - lam * (lo + 1))
        vx2 = Fraction(1, 2) - (lam + self.v) / self.t
        b = -a
        if b <= vx2:
            neg = self._val(b) + lam * b
        else:
            hi = min(b, math.ceil(vx2))
            neg = min(self._val(hi) + lam * hi,
                      self._val(hi - 1) + lam * (hi - 1))
        return min(best, neg)

    def support_floor(self):
        return None

    def support_ceil(self):
        return None

    def signed_vals(self, cap):
        """x-power -> exact valuation, for |x-power| <= cap."""
        return {self.x_sign * m: self._val(m)
                for m in range(-cap, cap + 1)}

    def render(self, low, high):
        return theta_series_window(self.t, self.v, low, high, self.x_sign)


class PochhammerClearing:
    """One-sided infinite product as a clearing factor; per-power valuation
    is coeff*m + (sum of m smallest lattice values), exactly."""

    def __init__(self, coeff_qexp, base_qexps, x_sign=1):
        self.v = _as_frac(coeff_qexp)
        self.bases = [_as_frac(e) for e in base_qexps]
        self.x_sign = x_sign
        self._sums_cache = [Fraction(0)]

    def _sums(self, count):
        if len(self._sums_cache) <= count:
            self._sums_cache = smallest_lattice_sums(self.bases, count + 8)
        return self._sums_cache

    def val_at(self, m):
        return self.v * m + self._sums(m)[m]

    def gmin(self):
        if self.v >= 0:
            return Fraction(0)
        m, best = 0, Fraction(0)
        while True:
            m += 1
            cur = self.val_at(m)
            if cur < best:
                best = cur
            # increments are v + (m-th smallest lattice value), nondecreasing
            if self._sums(m)[m] - self._sums(m - 1)[m - 1] >= -self.v:
                return best

    def tail_val(self, a):
        m, best = a, self.val_at(a)
        while True:
            m += 1
            cur = self.val_at(m)
            if cur < best:
                best = cur
            if self._sums(m)[m] - self._sums(m - 1)[m - 1] >= -self.v:
                return best

    def lagrangian_tail(self, a, lam):
        """min over |x-power| >= a of (valuation - lam*|x-power|).

        Per-step increments are v + (next lattice value) - lam, nondecreasing,
        so the scan may stop at the first nonnegative increment.
        """
        lam = _as_frac(lam)
        m, best = a, self.val_at(a) - lam * a
        while True:
            m += 1
            cur = self.val_at(m) - lam * m
            if cur < best:
                best = cur
            if self._sums(m)[m] - self._sums(m - 1)[m - 1] >= lam - self.v:
                return best

    def support_floor(self):
        return 0 if self.x_sign == 1 else None

    def support_ceil(self):
        return None if self.x_sign == 1 else 0

    def signed_vals(self, cap):
        """x-power -> exact valuation minorant, for |x-power| <= cap."""
        return {self.x_sign * m: self.val_at(m) for m in range(cap + 1)}

    def render(self, low, high):
        top = max(abs(low), abs(high))
        w = pochhammer_window(self.v, self.bases, top, self.x_sign)
        return XSeries({m: w.coeff(m) for m in range(low, high + 1)
                        if w.known(m) and not w.coeff(m).is_exact_zero()},
                       low, high)


class PolyClearing:
    """Finite Laurent polynomial clearing factor with exact coefficients."""

    def __init__(self, coeffs):
        entries = {}
        for m, s in coeffs.items():
            if not isinstance(s, QSeries):
                s = qmono(s)
            if s.is_exact_zero():
                continue
            if s.trunc_q() is not None:
                raise ValueError("clearing coefficients must be exact")
            entries[int(m)] = s
        if not entries:
            raise ValueError("clearing polynomial must be nonzero")
        self.coeffs = entries
        self._vals = {m: s.valuation() for m, s in entries.items()}

    def val_at(self, m):
        v = self._vals.get(m)
        if v is None:
            raise KeyError(f"x^{m} not in the polynomial's support")
        return v

    def gmin(self):
        return min(self._vals.values())

    def tail_val(self, a):
        vals = [v for m, v in self._vals.items() if abs(m) >= a]
        return min(vals) if vals else None

    def lagrangian_tail(self, a, lam):
        lam = _as_frac(lam)
        vals = [v - lam * abs(m) for m, v in self._vals.items() if abs(m) >= a]
        return min(vals) if vals else None

    def support_floor(self):
        return min(self.coeffs)

    def support_ceil(self):
        return max(self.coeffs)

    def signed_vals(self, cap):
        return {m: v for m, v in self._vals.items() if abs(m) <= cap}

    def render(self, low, high):
        return XSeries({m: s for m, s in self.coeffs.items()
                        if low <= m <= high}, low, high)


def one_minus(coeff_qexp, x_sign=1):
    """The binomial 1 - q^coeff_qexp * x^{x_sign} as a clearing factor."""
    return PolyClearing({0: QSeries.one(), x_sign: qmono(-1, coeff_qexp)})
