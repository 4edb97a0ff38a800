"""Windowed Laurent objects in a formal variable x with q-series coefficients.

An XSeries stores the exact x-coefficients of some (possibly two-sided
infinite) Laurent object for powers in a window [low, high]; each coefficient
is a QSeries carrying its own q-reliability.  Missing keys inside the window
mean the coefficient is exactly zero.

Optional certificates describe the object outside the window:

  floor  -- every x-power below `floor` is exactly zero
  ceil   -- every x-power above `ceil` is exactly zero
  tail_up  = (slope, intercept): for m > high the true coefficient of x^m
             has q-valuation >= slope*m + intercept
  tail_dn  = (slope, intercept): for m < low the valuation is
             >= slope*(-m) + intercept

Products use completeness semantics: the result window shrinks to exactly
those powers whose full (infinite) convolution range is covered by stored
coefficients and zero-certificates, so a coefficient inside the result window
is always the true one.  The raw windowed convolution (no such accounting)
is available separately for verification paths that certify the discarded
contributions by other means.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .errors import EmptyWindow, NonconvergentCoincidentProduct
from .qscalar import QSeries, _min_trunc

_NEG = -math.inf
_POS = math.inf


def _lo(v):
    return _NEG if v is None else v


def _hi(v):
    return _POS if v is None else v


class XSeries:
    __slots__ = ("c", "low", "high", "floor", "ceil", "tail_up", "tail_dn")

    def __init__(self, coeffs, low, high, floor=None, ceil=None,
                 tail_up=None, tail_dn=None):
        if low > high:
            raise EmptyWindow(f"window [{low}, {high}] is empty")
        c = {}
        for m, s in coeffs.items():
            if not (low <= m <= high):
                raise ValueError(f"x^{m} outside window [{low}, {high}]")
            if not s.is_exact_zero():
                c[m] = s
        self.c = c
        self.low = low
        self.high = high
        self.floor = floor
        self.ceil = ceil
        self.tail_up = tail_up
        self.tail_dn = tail_dn

    # -- constructors --------------------------------------------------------

    @staticmethod
    def zero():
        """The exactly-zero object (empty support certified both ways)."""
        return XSeries({}, 0, 0, floor=1, ceil=0)

    @staticmethod
    def one():
        return XSeries({0: QSeries.one()}, 0, 0, floor=0, ceil=0)

    @staticmethod
    def from_poly(coeffs):
        """Finite-support object from {x-power: QSeries}; fully certified."""
        keys = [m for m, s in coeffs.items() if not s.is_exact_zero()]
        if not keys:
            return XSeries.zero()
        lo, hi = min(keys), max(keys)
        return XSeries({m: coeffs[m] for m in keys}, lo, hi, floor=lo, ceil=hi)

    # -- inspection ----------------------------------------------------------

    def known(self, m):
        """True if the x^m coefficient is determined (stored or certified zero)."""
        if self.low <= m <= self.high:
            return True
        if self.floor is not None and m < self.floor:
            return True
        if self.ceil is not None and m > self.ceil:
            return True
        return False

    def coeff(self, m):
        if self.low <= m <= self.high:
            return self.c.get(m, QSeries.zero())
        if (self.floor is not None and m < self.floor) or \
           (self.ceil is not None and m > self.ceil):
            return QSeries.zero()
        raise KeyError(f"x^{m} is outside the certified range")

    def powers(self):
        return sorted(self.c)

    def is_zero_in_window(self):
        return all(s.is_zero() for s in self.c.values())

    def __repr__(self):
        cert = []
        if self.floor is not None:
            cert.append(f"floor={self.floor}")
        if self.ceil is not None:
            cert.append(f"ceil={self.ceil}")
        if self.tail_up is not None:
            cert.append(f"tail_up={self.tail_up}")
        if self.tail_dn is not None:
            cert.append(f"tail_dn={self.tail_dn}")
        body = ", ".join(f"x^{m}: {s!r}" for m, s in sorted(self.c.items()))
        return (f"XSeries[{self.low}..{self.high}]({body or '0'}"
                + (f"; {', '.join(cert)}" if cert else "") + ")")

    # -- linear operations -----------------------------------------------------

    def __neg__(self):
        return XSeries({m: -s for m, s in self.c.items()},
                       self.low, self.high, self.floor, self.ceil,
                       self.tail_up, self.tail_dn)

    def __add__(self, other):
        lo = max(_NEG if self._zero_below() else self.low,
                 _NEG if other._zero_below() else other.low)
        hi = min(_POS if self._zero_above() else self.high,
                 _POS if other._zero_above() else other.high)
        # no need to materialize powers certified zero on both sides
        lo = int(max(lo, min(self.low, other.low)))
        hi = int(min(hi, max(self.high, other.high)))
        if lo > hi:
            raise EmptyWindow("no common certified range to add over")
        c = {}
        for m in range(lo, hi + 1):
            s = self.coeff(m) + other.coeff(m)
            if not s.is_exact_zero():
                c[m] = s
        floor = None
        if self.floor is not None and other.floor is not None:
            floor = min(self.floor, other.floor)
        ceil = None
        if self.ceil is not None and other.ceil is not None:
            ceil = max(self.ceil, other.ceil)
        return XSeries(c, lo, hi, floor, ceil)

    def __sub__(self, other):
        return self.__add__(other.__neg__())

    def _zero_below(self):
        return self.floor is not None and self.floor >= self.low

    def _zero_above(self):
        return self.ceil is not None and self.ceil <= self.high

    def scale(self, qs):
        """Multiply every coefficient by a scalar QSeries."""
        if qs.is_exact_zero():
            return XSeries.zero()
        c = {m: s * qs for m, s in self.c.items()}
        vq = qs.valuation()
        if qs.trunc_q() is not None:
            t = qs.trunc_q() + Fraction(1, 2)
            vq = t if vq is None else min(vq, t)
        tu = td = None
        if self.tail_up is not None and vq is not None:
            tu = (self.tail_up[0], self.tail_up[1] + vq)
        if self.tail_dn is not None and vq is not None:
            td = (self.tail_dn[0], self.tail_dn[1] + vq)
        return XSeries(c, self.low, self.high, self.floor, self.ceil, tu, td)

    def shift_x(self, d):
        """Multiply by x^d."""
        if d == 0:
            return self
        tu = td = None
        if self.tail_up is not None:
            s, b = self.tail_up
            tu = (s, b - s * d)
        if self.tail_dn is not None:
            s, b = self.tail_dn
            td = (s, b + s * d)
        return XSeries({m + d: v for m, v in self.c.items()},
                       self.low + d, self.high + d,
                       None if self.floor is None else self.floor + d,
                       None if self.ceil is None else self.ceil + d,
                       tu, td)

    def flip(self):
        """Substitute x -> 1/x."""
        return XSeries({-m: s for m, s in self.c.items()},
                       -self.high, -self.low,
                       None if self.ceil is None else -self.ceil,
                       None if self.floor is None else -self.floor,
                       self.tail_dn, self.tail_up)

    def scale_x(self, gamma):
        """Substitute x -> q^gamma x (gamma on the half-integer grid)."""
        g = Fraction(gamma)
        c = {m: s.shift(g * m) for m, s in self.c.items()}
        tu = td = None
        if self.tail_up is not None:
            s, b = self.tail_up
            tu = (s + g, b)
        if self.tail_dn is not None:
            s, b = self.tail_dn
            td = (s - g, b)
        return XSeries(c, self.low, self.high, self.floor, self.ceil, tu, td)

    # -- products --------------------------------------------------------------

    def raw_mul_window(self, other, low, high):
        """Windowed convolution of the stored coefficients only.

        No completeness accounting: contributions from powers outside the
        operands' stored windows are silently absent.  Use only where those
        are certified negligible by an external argument.
        """
        c = {}
        for i, a in self.c.items():
            for j, b in other.c.items():
                m = i + j
                if low <= m <= high:
                    prev = c.get(m)
                    c[m] = a * b if prev is None else prev + a * b
        return XSeries(c, low, high)

    def _empty_support(self):
        return self.floor is not None and self.ceil is not None \
            and self.floor > self.ceil

    def __mul__(self, other):
        if self._empty_support() or other._empty_support():
            return XSeries.zero()
        lower, upper = [], []
        fA, cA = self.floor, self.ceil
        fB, cB = other.floor, other.ceil
        # every power below the result's floor certificate is an exact zero,
        # so completeness only constrains m where the true convolution range
        # is nonempty and must be covered by stored coefficients
        if not (fA is not None and fA >= self.low):
            if cB is None:
                raise EmptyWindow("left operand unbounded below, right above")
            lower.append(self.low + cB)
        if not (fB is not None and fB >= other.low):
            if cA is None:
                raise EmptyWindow("right operand unbounded below, left above")
            lower.append(cA + other.low)
        if not (cB is not None and cB <= other.high):
            if fA is None:
                raise EmptyWindow("right operand unbounded above, left below")
            upper.append(fA + other.high)
        if not (cA is not None and cA <= self.high):
            if fB is None:
                raise EmptyWindow("left operand unbounded above, right below")
            upper.append(fB + self.high)
        lo = max(lower) if lower else fA + fB
        hi = min(upper) if upper else cA + cB
        if lo > hi:
            raise EmptyWindow(f"product completeness range [{lo}, {hi}] is empty")
        out = self.raw_mul_window(other, lo, hi)
        floor = None if (fA is None or fB is None) else fA + fB
        ceil = None if (cA is None or cB is None) else cA + cB
        return XSeries(out.c, lo, hi, floor, ceil)

    # -- coincident evaluation ---------------------------------------------------

    def evaluate_at(self, gamma):
        """Sum over all x-powers after substituting x = q^gamma, as a QSeries.

        Exact when the support is finite and certified; otherwise the affine
        tail certificate must give the out-of-window terms a q-valuation that
        grows, which bounds their reach and sets the result's watermark.
        """
        g = Fraction(gamma)
        total = QSeries.zero()
        for m, s in self.c.items():
            total = total + s.shift(g * m)
        t_half = None
        if not self._zero_above():
            if self.tail_up is None:
                raise NonconvergentCoincidentProduct(
                    "no upper tail certificate for coincident evaluation")
            s, b = self.tail_up
            eff = s + g
            if eff <= 0:
                raise NonconvergentCoincidentProduct(
                    f"upper tail slope {s} + gamma {g} is not positive")
            start = self.high + 1
            if self.floor is not None:
                start = max(start, self.floor)
            v = eff * start + b
            t_half = _min_trunc(t_half, math.ceil(2 * v) - 1)
        if not self._zero_below():
            if self.tail_dn is None:
                raise NonconvergentCoincidentProduct(
                    "no lower tail certificate for coincident evaluation")
            s, b = self.tail_dn
            eff = s - g
            if eff <= 0:
                raise NonconvergentCoincidentProduct(
                    f"lower tail slope {s} - gamma {g} is not positive")
            start = -(self.low - 1)
            if self.ceil is not None:
                start = max(start, -self.ceil)
            v = eff * start + b
            t_half = _min_trunc(t_half, math.ceil(2 * v) - 1)
        if t_half is not None:
            total = total + QSeries({}, t_half)
        return total


def xs_exp(xs, high_out=None):
    """exp of an XSeries supported strictly on one side of x^0.

    The input needs floor >= 1 (or, mirrored, ceil <= -1), certified; the
    result then has a well-defined coefficient at every power, computed by
    the derivative recurrence m*e_m = sum_j j*c_j*e_{m-j}.  An input affine
    tail certificate propagates to the output.
    """
    if xs.ceil is not None and xs.ceil <= -1:
        return xs_exp(xs.flip(), high_out).flip()
    if xs.floor is None or xs.floor < 1:
        raise ValueError("xs_exp needs support certified strictly positive "
                         "(floor >= 1) or strictly negative (ceil <= -1)")
    hi = xs.high if high_out is None else high_out
    if hi < 0:
        raise EmptyWindow("exp output window must reach x^0")
    src_top = xs.high if xs.ceil is None else min(xs.high, xs.ceil)
    e = {0: QSeries.one()}
    for m in range(1, hi + 1):
        acc = QSeries.zero()
        for j in range(1, m + 1):
            cj = xs.coeff(j)  # raises KeyError if the power is uncertified
            if cj.is_exact_zero():
                continue
            prev = e.get(m - j)
            if prev is not None:
                acc = acc + cj.scale(j) * prev
        if not acc.is_exact_zero():
            e[m] = acc / m
    return XSeries(e, 0, hi, floor=0, tail_up=_exp_tail(xs, src_top))


def _exp_tail(xs, src_top):
    """Affine tail certificate for exp(xs), from xs's certificate and its
    stored coefficients' valuations."""
    if xs.tail_up is None:
        return None
    s, b = xs.tail_up
    b_eff = b
    for n in range(max(1, xs.low), src_top + 1):
        cn = xs.c.get(n)
        if cn is None:
            continue
        v = cn.valuation()
        if v is None:
            t = cn.trunc_q()
            if t is None:
                continue
            v = t + Fraction(1, 2)
        b_eff = min(b_eff, v - s * n)
    # a power-m coefficient of the exp is a sum over partitions of m with
    # p >= 1 parts, each part obeying valuation >= s*n + b_eff
    if b_eff >= 0:
        return (s, b_eff)
    return (s + b_eff, Fraction(0))


def delta_window(low, high):
    """Window of the formal two-sided sum of all integer powers of x."""
    one = QSeries.one()
    return XSeries({m: one for m in range(low, high + 1)}, low, high)


def xs_one():
    return XSeries.one()


def xs_zero():
    return XSeries.zero()
