"""Exact truncated Laurent series in the deformation parameter q.

Coefficients are exact rationals (gmpy2.mpq when available, fractions.Fraction
otherwise).  Exponents live on the half-integer grid (1/2)Z so that level-odd
substitutions like q^{k/2} stay exact; internally an exponent is stored as an
int counting half-steps, and the public API accepts ints or Fractions with
denominator 1 or 2, measured in units of q.

Truncation model: a global working order (set via `set_order`, in q-units)
caps stored exponents from above.  Each series additionally carries a
reliability watermark `trunc` (half-steps, None = exact): coefficients at
exponents <= trunc are exactly those of the true object, nothing is claimed
above.  Arithmetic propagates the watermark so that mixing series of
different provenance never overstates precision:

    add:  min of the operands' watermarks
    mul:  min(trunc_a + val_b, trunc_b + val_a)   (None treated as +infinity)

Laurent series are unbounded below; only the upper tail is truncated.
`qs_ratio` divides two exact series at full working precision even when their
valuations sit far from zero (needed for coefficients like [n]/([rn][2n])
whose factors individually leave the window).
"""

from __future__ import annotations

from fractions import Fraction

from .errors import ZeroWindow

try:  # gmpy2's mpq is ~10x faster; fall back to the stdlib silently
    from gmpy2 import mpq as _mpq

    def rat(num, den=1):
        return _mpq(num, den)

    _RAT_TYPES = (type(_mpq(0)), Fraction, int)
except ImportError:  # pragma: no cover - exercised only without gmpy2
    def rat(num, den=1):
        return Fraction(num, den)

    _RAT_TYPES = (Fraction, int)

R0 = rat(0)
R1 = rat(1)

_INF = float("inf")


def rat_pair(x):
    """(numerator, denominator) as plain ints, canonical across backends."""
    return (int(x.numerator), int(x.denominator))


class _Context:
    __slots__ = ("cap_half",)

    def __init__(self, cap_half):
        self.cap_half = cap_half


# default working order: 30 q-units
_CTX = _Context(60)


def set_order(qmax):
    """Set the global working order (inclusive, in q-units)."""
    _CTX.cap_half = half_exp(qmax)


def get_order():
    """Current working order in q-units."""
    return Fraction(_CTX.cap_half, 2)


class series_order:
    """Context manager pinning the working order for a block."""

    def __init__(self, qmax):
        self.cap_half = half_exp(qmax)

    def __enter__(self):
        self.saved = _CTX.cap_half
        _CTX.cap_half = self.cap_half

    def __exit__(self, *exc):
        _CTX.cap_half = self.saved
        return False


def half_exp(e):
    """Public q-exponent (int, or Fraction with denominator 1 or 2) -> half-steps."""
    if isinstance(e, int):
        return 2 * e
    h = Fraction(e) * 2
    if h.denominator != 1:
        raise ValueError(f"q-exponent {e} is not on the half-integer grid")
    return int(h)


def _min_trunc(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _inv_coeffs(c, order_abs):
    """Inverse of the series with coefficient dict `c` (exactly as given),
    materialized through absolute half-step `order_abs`.  No cap is applied."""
    v = min(c)
    lead = c[v]
    inv = {0: R1}
    tail = sorted((h - v, val / lead) for h, val in c.items() if h != v)
    width = order_abs + v  # inverse exponents run over [-v, order_abs]
    for h in range(1, width + 1):
        acc = R0
        for hu, vu in tail:
            if hu > h:
                break
            prev = inv.get(h - hu)
            if prev is not None:
                acc += vu * prev
        if acc != 0:
            inv[h] = -acc
    return {h - v: val / lead for h, val in inv.items()}


def _convolve(a, b, top):
    """Raw dict convolution keeping exponents <= top."""
    if len(a) > len(b):
        a, b = b, a
    out = {}
    bitems = sorted(b.items())
    for ha, va in a.items():
        lim = top - ha
        for hb, vb in bitems:
            if hb > lim:
                break
            h = ha + hb
            s = out.get(h)
            if s is None:
                out[h] = va * vb
            else:
                s = s + va * vb
                if s == 0:
                    del out[h]
                else:
                    out[h] = s
    return out


class QSeries:
    """Immutable truncated Laurent series in q.

    `c` maps half-step exponent -> nonzero rational coefficient;
    `trunc` is the watermark in half-steps (None = exact).
    Do not mutate after construction.
    """

    __slots__ = ("c", "trunc")

    def __init__(self, coeffs, trunc=None, _clean=False):
        cap = _CTX.cap_half
        if _clean:
            c = coeffs
        else:
            c = {}
            dropped = False
            for h, v in coeffs.items():
                if v == 0:
                    continue
                if h > cap:
                    dropped = True
                    continue
                c[h] = v
            if dropped:
                trunc = _min_trunc(trunc, cap)
        if trunc is not None and trunc > cap:
            trunc = cap
        self.c = c
        self.trunc = trunc

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero():
        return QSeries({}, None, _clean=True)

    @staticmethod
    def one():
        return QSeries({0: R1}, None, _clean=True)

    @staticmethod
    def monomial(coeff, qexp=0):
        if not isinstance(coeff, _RAT_TYPES):
            coeff = rat(coeff)
        if coeff == 0:
            return QSeries.zero()
        h = half_exp(qexp)
        if h > _CTX.cap_half:
            return QSeries({}, _CTX.cap_half, _clean=True)
        return QSeries({h: rat(coeff)}, None, _clean=True)

    # -- inspection --------------------------------------------------------

    def is_zero(self):
        """Zero in the stored window (the true object may differ above trunc)."""
        return not self.c

    def is_exact_zero(self):
        return not self.c and self.trunc is None

    def valuation_half(self):
        return min(self.c) if self.c else None

    def valuation(self):
        """Lowest exponent present, in q-units, or None if zero in window."""
        v = self.valuation_half()
        return None if v is None else Fraction(v, 2)

    def degree(self):
        """Highest stored exponent in q-units, or None."""
        return Fraction(max(self.c), 2) if self.c else None

    def coeff(self, qexp):
        return self.c.get(half_exp(qexp), R0)

    def trunc_q(self):
        return None if self.trunc is None else Fraction(self.trunc, 2)

    def items(self):
        """Sorted (q-exponent as Fraction, coefficient) pairs."""
        return [(Fraction(h, 2), v) for h, v in sorted(self.c.items())]

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, int):
            other = QSeries.monomial(other)
        t = _min_trunc(self.trunc, other.trunc)
        c = dict(self.c)
        for h, v in other.c.items():
            s = c.get(h, R0) + v
            if s == 0:
                c.pop(h, None)
            else:
                c[h] = s
        if t is not None:
            c = {h: v for h, v in c.items() if h <= t}
        return QSeries(c, t, _clean=True)

    def __radd__(self, other):
        return self.__add__(other)

    def __neg__(self):
        return QSeries({h: -v for h, v in self.c.items()}, self.trunc, _clean=True)

    def __sub__(self, other):
        if isinstance(other, int):
            other = QSeries.monomial(other)
        return self.__add__(other.__neg__())

    def __rsub__(self, other):
        return QSeries.monomial(other).__sub__(self)

    def scale(self, r):
        """Multiply by an exact rational constant."""
        if not isinstance(r, _RAT_TYPES):
            r = rat(r)
        if r == 0:
            return QSeries({}, self.trunc, _clean=True)
        r = rat(r)
        return QSeries({h: v * r for h, v in self.c.items()}, self.trunc, _clean=True)

    def shift(self, qexp):
        """Multiply by q^qexp."""
        d = half_exp(qexp)
        if d == 0:
            return self
        t = self.trunc
        return QSeries({h + d: v for h, v in self.c.items()},
                       None if t is None else t + d)

    def _mul_trunc(self, other):
        if self.trunc is None and other.trunc is None:
            return None
        ta = _INF if self.trunc is None else self.trunc
        tb = _INF if other.trunc is None else other.trunc
        # a window that is empty contributes from just above its watermark
        va = min(self.c) if self.c else ta
        vb = min(other.c) if other.c else tb
        m = min(ta + vb, tb + va)
        return None if m == _INF else int(min(m, _CTX.cap_half))

    def __mul__(self, other):
        if isinstance(other, int):
            return self.scale(other)
        cap = _CTX.cap_half
        t = self._mul_trunc(other)
        if not self.c or not other.c:
            return QSeries({}, t, _clean=True)
        top = cap if t is None else min(t, cap)
        out = _convolve(self.c, other.c, top)
        if t is None and max(self.c) + max(other.c) > top:
            t = cap
        return QSeries(out, t, _clean=True)

    def __rmul__(self, other):
        return self.__mul__(other)

    def inverse(self):
        """Multiplicative inverse, materialized through the working order."""
        if not self.c:
            raise ZeroWindow("cannot invert a series that is zero in its window")
        cap = _CTX.cap_half
        v = min(self.c)
        if len(self.c) == 1:
            t = None if self.trunc is None else self.trunc - 2 * v
            return QSeries({-v: R1 / self.c[v]}, t)
        order = cap if self.trunc is None else min(cap, self.trunc - 2 * v)
        out = _inv_coeffs(self.c, order)
        return QSeries(out, order)

    def __truediv__(self, other):
        if isinstance(other, int):
            return self.scale(Fraction(1, other))
        return qs_ratio(self, other)

    def __pow__(self, n):
        if n < 0:
            return self.inverse().__pow__(-n)
        out = QSeries.one()
        base = self
        while n:
            if n & 1:
                out = out * base
            n >>= 1
            if n:
                base = base * base
        return out

    # -- comparison & rendering --------------------------------------------

    def __eq__(self, other):
        if isinstance(other, int):
            other = QSeries.monomial(other)
        if not isinstance(other, QSeries):
            return NotImplemented
        return self.c == other.c

    def __hash__(self):
        return hash(self.key())

    def eq_through(self, other, qorder):
        """Equal coefficient-by-coefficient for exponents <= qorder (q-units)."""
        top = half_exp(qorder)
        for h in set(self.c) | set(other.c):
            if h <= top and self.c.get(h, R0) != other.c.get(h, R0):
                return False
        return True

    def key(self):
        """Canonical hashable content of the stored window."""
        return tuple(sorted((h, rat_pair(v)) for h, v in self.c.items()))

    def __repr__(self):
        if not self.c:
            return "0" + ("" if self.trunc is None
                          else f" + O(q^{Fraction(self.trunc, 2)})")
        bits = []
        for h, v in sorted(self.c.items()):
            e = Fraction(h, 2)
            if e == 0:
                bits.append(f"{v}")
            elif v == 1:
                bits.append(f"q^{e}")
            else:
                bits.append(f"{v}*q^{e}")
        s = " + ".join(bits).replace("+ -", "- ")
        if self.trunc is not None:
            s += f" + O(q^{Fraction(self.trunc + 1, 2)})"
        return s


def qs_ratio(num, den):
    """num/den materialized through the working order.

    Unlike chaining `num * den.inverse()`, the denominator's inverse is
    expanded far enough past the cap that a numerator of low valuation still
    yields every in-window coefficient; this is what keeps mode coefficients
    like [n] q^{an} / ([rn][2n]) exact when the individual factors stray far
    outside the window.
    """
    if not den.c:
        raise ZeroWindow("division by a series that is zero in its window")
    cap = _CTX.cap_half
    if not num.c:
        t = num.trunc
        if t is not None:
            t = min(t - min(den.c), cap)
        return QSeries({}, t, _clean=True)
    va = min(num.c)
    vb = min(den.c)
    # inverse needed through cap - va so the product is full through cap
    order = cap - va
    if den.trunc is not None:
        order = min(order, den.trunc - 2 * vb)
    if len(den.c) == 1:
        inv = {-vb: R1 / den.c[vb]}
        inv_t = None if den.trunc is None else den.trunc - 2 * vb
    else:
        inv = _inv_coeffs(den.c, order)
        inv_t = order
    t_num = _INF if num.trunc is None else num.trunc
    t_inv = _INF if inv_t is None else inv_t
    m = min(t_num - vb, t_inv + va, cap)
    t = None if m == _INF else int(m)
    top = cap if t is None else min(t, cap)
    out = _convolve(num.c, inv, top)
    if t is None and max(num.c) + max(inv) > top:
        t = cap
    return QSeries(out, t)


def qs_exp(s):
    """exp of a series with strictly positive valuation, through the
    working order (and the argument's own watermark)."""
    if s.is_exact_zero():
        return QSeries.one()
    v = s.valuation_half()
    if v is not None and v <= 0:
        raise ValueError("qs_exp needs strictly positive valuation")
    out = QSeries.one()
    term = QSeries.one()
    j = 0
    cap = _CTX.cap_half
    while True:
        j += 1
        if v is None or v * j > cap:
            break
        term = (term * s).scale(Fraction(1, j))
        if term.is_zero() and term.trunc is None:
            break
        out = out + term
    if s.trunc is not None:
        out = out + QSeries({}, s.trunc)
    return out


def qmono(coeff, qexp=0):
    return QSeries.monomial(coeff, qexp)


def qs_one():
    return QSeries.one()


def qs_zero():
    return QSeries.zero()


def q_integer(n):
    """[n] = (q^n - q^-n)/(q - q^-1), exact Laurent polynomial.

    [0] = 0, [-n] = -[n]; for n > 0 this is q^{-(n-1)} + q^{-(n-3)} + ... + q^{n-1}.
    """
    if n == 0:
        return QSeries.zero()
    if n != int(n):
        raise ValueError(f"bracket index must be an integer, got {n}")
    n = int(n)
    sign = 1 if n > 0 else -1
    m = abs(n)
    return QSeries({2 * (-(m - 1) + 2 * j): rat(sign) for j in range(m)}, None)


def q_minus_qinv():
    """q - q^{-1}."""
    return QSeries({-2: -R1, 2: R1}, None, _clean=True)
