"""Three deformed boson families and the formula language for their modes.

The oscillator algebra has families a, b, c with relations

    [x_n, y_m] = delta_{x,y} delta_{n+m,0} kappa_x(n)
    kappa_a(n) = [(k+2)n][2n]/n,  kappa_b(n) = -[n]^2/n,  kappa_c(n) = [n]^2/n

plus one zero-mode pair (P_x, Q_x) per family with [P_a, Q_a] = 2(k+2),
[P_b, Q_b] = -1, [P_c, Q_c] = 1, where [m] is the balanced q-integer and k
the level.  Distinct families commute.

Mode coefficients attached to vertex-operator exponents are symbolic
functions of the signed mode index m, kept as products

    const * q^{g*m} * q^{d*|m|} * prod_i [c_i m] / prod_j [d_j m]

(an Atom; a ModeCoeff is a sum of atoms).  They evaluate exactly at any m
and carry an exact affine valuation profile on each sign branch, which is
what downstream tail certificates are built from.

A LinearForm is the full exponent of one exponential factor: mode sums
split by sign branch, plus zero-mode parts P*ln(q), P*ln(z), and Q.
"""

from __future__ import annotations

from collections import Counter
from fractions import Fraction

from .qscalar import QSeries, q_integer, q_minus_qinv, qmono, qs_ratio

FAMILIES = ("a", "b", "c")


def _frac(v):
    return v if isinstance(v, Fraction) else Fraction(v)


def _fk(v):
    v = _frac(v)
    return (v.numerator, v.denominator)


class Atom:
    """One multiplicative term of a mode-coefficient function."""

    __slots__ = ("const", "qexp_n", "qexp_absn", "num", "den")

    def __init__(self, const, qexp_n=0, qexp_absn=0, num=(), den=()):
        if not isinstance(const, QSeries):
            const = qmono(const)
        self.const = const
        self.qexp_n = _frac(qexp_n)
        self.qexp_absn = _frac(qexp_absn)
        self.num = tuple(num)
        self.den = tuple(den)
        if any(c == 0 for c in self.num) or any(c == 0 for c in self.den):
            raise ValueError("bracket multipliers must be nonzero")

    def evaluate(self, m):
        """Exact value at signed mode index m != 0."""
        if m == 0:
            raise ValueError("mode coefficients are indexed by nonzero m")
        num = self.const.shift(self.qexp_n * m + self.qexp_absn * abs(m))
        for c in self.num:
            num = num * q_integer(c * m)
        if not self.den:
            return num
        den = QSeries.one()
        for c in self.den:
            den = den * q_integer(c * m)
        return qs_ratio(num, den)

    def val_affine(self, sign):
        """Exact valuation of this atom on the branch sign(m)=sign, as
        (slope, intercept) in u = |m|: valuation = slope*u + intercept."""
        if self.const.is_zero():
            return None
        slope = sign * self.qexp_n + self.qexp_absn
        intercept = self.const.valuation()
        for c in self.num:
            slope -= abs(c)
            intercept += 1
        for c in self.den:
            slope += abs(c)
            intercept -= 1
        return (slope, intercept)

    def times(self, other):
        return Atom(self.const * other.const,
                    self.qexp_n + other.qexp_n,
                    self.qexp_absn + other.qexp_absn,
                    self.num + other.num,
                    self.den + other.den)

    def scaled(self, r):
        return Atom(self.const.scale(r), self.qexp_n, self.qexp_absn,
                    self.num, self.den)

    def shifted(self, qexp):
        return Atom(self.const.shift(qexp), self.qexp_n, self.qexp_absn,
                    self.num, self.den)

    def substitute_neg(self):
        """Rewrite an expression in n as one in m = -n.

        q^{g n} flips its linear exponent; each bracket [c n] = -[c m]
        contributes a sign; |n| = |m| is untouched.
        """
        flips = len(self.num) + len(self.den)
        const = self.const if flips % 2 == 0 else -self.const
        return Atom(const, -self.qexp_n, self.qexp_absn, self.num, self.den)

    def sig(self):
        """Shape of the atom apart from its constant; atoms sharing a sig
        combine by adding constants."""
        return (_fk(self.qexp_n), _fk(self.qexp_absn),
                tuple(sorted(_fk(c) for c in self.num)),
                tuple(sorted(_fk(c) for c in self.den)))

    def __repr__(self):
        bits = [f"({self.const!r})"]
        if self.qexp_n:
            bits.append(f"q^({self.qexp_n}m)")
        if self.qexp_absn:
            bits.append(f"q^({self.qexp_absn}|m|)")
        bits += [f"[{c}m]" for c in self.num]
        bits += [f"1/[{c}m]" for c in self.den]
        return "*".join(bits)


class ModeCoeff:
    """Sum of atoms; the coefficient of one family's mode x_m."""

    __slots__ = ("atoms",)

    def __init__(self, atoms):
        self.atoms = list(atoms)

    def evaluate(self, m):
        out = QSeries.zero()
        for a in self.atoms:
            out = out + a.evaluate(m)
        return out

    def val_bound(self, sign):
        """A single affine lower bound on the valuation over the branch,
        valid for every |m| >= 1; None when identically zero."""
        bounds = [b for b in (a.val_affine(sign) for a in self.atoms)
                  if b is not None]
        if not bounds:
            return None
        slope = min(s for s, _ in bounds)
        intercept = min(s + b for s, b in bounds) - slope
        return (slope, intercept)

    def __add__(self, other):
        return ModeCoeff(self.atoms + other.atoms)

    def scaled(self, r):
        return ModeCoeff([a.scaled(r) for a in self.atoms])

    def shifted(self, qexp):
        return ModeCoeff([a.shifted(qexp) for a in self.atoms])

    def substitute_neg(self):
        return ModeCoeff([a.substitute_neg() for a in self.atoms])

    def times_atom(self, atom):
        return ModeCoeff([a.times(atom) for a in self.atoms])

    def shift_attached(self, gamma):
        """Effect of z -> q^gamma z on a coefficient attached to z^{-m}."""
        g = _frac(gamma)
        return ModeCoeff([Atom(a.const, a.qexp_n - g, a.qexp_absn,
                               a.num, a.den) for a in self.atoms])

    def key(self):
        """Canonical content: atoms merged by sig, zero constants dropped."""
        merged = {}
        for a in self.atoms:
            s = a.sig()
            prev = merged.get(s)
            merged[s] = a.const if prev is None else prev + a.const
        return tuple(sorted((s, c.key()) for s, c in merged.items()
                            if not c.is_zero()))

    def __repr__(self):
        return " + ".join(repr(a) for a in self.atoms) or "0"


class CommutatorTable:
    """Level-dependent structure constants of the oscillator algebra."""

    def __init__(self, k):
        self.k = k

    def kappa(self, family, n):
        """[x_n, x_{-n}] for the family, exact; odd in n."""
        if n == 0:
            raise ValueError("kappa is defined for nonzero n")
        if family == "a":
            num = q_integer((self.k + 2) * n) * q_integer(2 * n)
            return num.scale(Fraction(1, n))
        if family == "b":
            return (q_integer(n) * q_integer(n)).scale(Fraction(-1, n))
        if family == "c":
            return (q_integer(n) * q_integer(n)).scale(Fraction(1, n))
        raise ValueError(f"unknown family {family!r}")

    def kappa_affine(self, family):
        """Exact valuation of kappa on n >= 1 as (slope, intercept);
        None when kappa vanishes identically (the a family at k = -2)."""
        if family == "a":
            if self.k + 2 == 0:
                return None
            return (Fraction(-abs(self.k + 2) - 2), Fraction(2))
        if family in ("b", "c"):
            return (Fraction(-2), Fraction(2))
        raise ValueError(f"unknown family {family!r}")

    def kappa_hat_atoms(self, family):
        """n * kappa(family, n) as atoms (the 1/n factor carries no
        q-valuation, so this form feeds the rational tail bound)."""
        if family == "a":
            if self.k + 2 == 0:
                return []
            return [Atom(1, num=(self.k + 2, 2))]
        if family == "b":
            return [Atom(-1, num=(1, 1))]
        if family == "c":
            return [Atom(1, num=(1, 1))]
        raise ValueError(f"unknown family {family!r}")

    def pq(self, family):
        """[P_x, Q_x] for the family."""
        if family == "a":
            return Fraction(2 * (self.k + 2))
        if family == "b":
            return Fraction(-1)
        if family == "c":
            return Fraction(1)
        raise ValueError(f"unknown family {family!r}")


class LinearForm:
    """Exponent of one exponential vertex factor.

    entries: list of (family, sign, ModeCoeff) where sign=+1 covers the
    annihilation branch m > 0 and sign=-1 the creation branch m < 0; the
    coefficient of x_m is attached to z^{-m}.  plnq, plnz, qc map a family
    to the rational multiple of P*ln q, P*ln z, and Q it carries.
    """

    __slots__ = ("entries", "plnq", "plnz", "qc")

    def __init__(self, entries=(), plnq=None, plnz=None, qc=None):
        self.entries = list(entries)
        self.plnq = dict(plnq or {})
        self.plnz = dict(plnz or {})
        self.qc = dict(qc or {})

    def __add__(self, other):
        def merge(x, y):
            out = dict(x)
            for f, v in y.items():
                out[f] = out.get(f, Fraction(0)) + v
            return {f: v for f, v in out.items() if v != 0}
        return LinearForm(self.entries + other.entries,
                          merge(self.plnq, other.plnq),
                          merge(self.plnz, other.plnz),
                          merge(self.qc, other.qc))

    def __neg__(self):
        return LinearForm(
            [(f, s, mc.scaled(-1)) for f, s, mc in self.entries],
            {f: -v for f, v in self.plnq.items()},
            {f: -v for f, v in self.plnz.items()},
            {f: -v for f, v in self.qc.items()})

    def shift(self, gamma):
        """Substitute z -> q^gamma z."""
        g = _frac(gamma)
        if g == 0:
            return self
        plnq = dict(self.plnq)
        for f, v in self.plnz.items():
            plnq[f] = plnq.get(f, Fraction(0)) + g * v
        return LinearForm(
            [(f, s, mc.shift_attached(g)) for f, s, mc in self.entries],
            {f: v for f, v in plnq.items() if v != 0},
            self.plnz, self.qc)

    def branch(self, family, sign):
        """Combined ModeCoeff of the family on one sign branch, or None."""
        atoms = []
        for f, s, mc in self.entries:
            if f == family and s == sign:
                atoms.extend(mc.atoms)
        return ModeCoeff(atoms) if atoms else None

    def mode_coeff(self, family, m):
        mc = self.branch(family, 1 if m > 0 else -1)
        return mc.evaluate(m) if mc is not None else QSeries.zero()

    def families(self):
        out = set(f for f, _, _ in self.entries)
        out.update(self.plnq, self.plnz, self.qc)
        return out

    def is_creation_only(self):
        """Only creation modes and zero-mode P/Q content that commutes
        leftward: no annihilation branch, no P parts."""
        return not any(s == 1 for _, s, _ in self.entries) \
            and not self.plnq and not self.plnz

    def is_annihilation_only(self):
        return not any(s == -1 for _, s, _ in self.entries) \
            and not self.qc

    def key(self):
        """Canonical hashable content; forms with equal keys denote the
        same exponent.  Branches are merged per (family, sign)."""
        branches = []
        for f in FAMILIES:
            for s in (1, -1):
                mc = self.branch(f, s)
                if mc is None:
                    continue
                k = mc.key()
                if k:
                    branches.append((f, s, k))
        zm = tuple(tuple(sorted((f, _fk(v)) for f, v in d.items() if v != 0))
                   for d in (self.plnq, self.plnz, self.qc))
        return (tuple(branches), zm)

    def is_empty(self):
        return self.key() == ((), ((), (), ()))

    def _zero_modes(self):
        return tuple({f: v for f, v in d.items() if v != 0}
                     for d in (self.plnq, self.plnz, self.qc))

    def semantic_eq(self, other):
        """True when the two exponents denote the same operator, atom
        decompositions aside: every branch is compared in the exact
        rational normal form, so e.g. a difference of two bracket-smoothed
        atoms matches the single atom it telescopes to."""
        for f in FAMILIES:
            for s in (1, -1):
                if not branch_values_equal(self.branch(f, s),
                                           other.branch(f, s), s):
                    return False
        return self._zero_modes() == other._zero_modes()

    def semantic_is_empty(self):
        empty = ({}, {}, {})
        if self._zero_modes() != tuple(empty):
            return False
        return all(branch_rational(self.branch(f, s), s)[0] == {}
                   for f in FAMILIES for s in (1, -1))


# -- exact rational normal form of one branch ----------------------------------
#
# On a fixed sign branch a ModeCoeff is a finite sum of terms
#   const * q^{e n} * prod [c_i n] / prod [d_j n]          (n = |m| >= 1)
# and with P(c) := q^{cn} - q^{-cn} every such sum can be written over a
# common denominator as
#   (sum_e N[e] q^{e n}) * (q - q^{-1})^G / prod_{d in D} P(d)
# with exact Laurent-polynomial coefficients.  Two branches are equal for
# every n iff their cross-multiplied numerators agree, which is decidable.


def _poly_mul_bracket(poly, d):
    """poly(q^n) * (q^{dn} - q^{-dn}) on the exponent lattice."""
    out = {}
    for e, v in poly.items():
        for ee, sg in ((e + d, 1), (e - d, -1)):
            w = v.scale(sg)
            prev = out.get(ee)
            out[ee] = w if prev is None else prev + w
    return {e: v for e, v in out.items() if not v.is_zero()}


def _poly_scale(poly, qs):
    return {e: v * qs for e, v in poly.items()}


def _poly_add(acc, poly):
    for e, v in poly.items():
        prev = acc.get(e)
        acc[e] = v if prev is None else prev + v
    return acc


def branch_rational(mc, sign):
    """Normal form (N, D, G) of a branch: its value at m = sign*n equals
    (sum_e N[e] q^{e n}) * (q - 1/q)^G / prod_{d in D} (q^{dn} - q^{-dn}).
    Requires exact atom constants."""
    terms = []
    for a in (mc.atoms if mc is not None else ()):
        if a.const.trunc is not None:
            raise ValueError("rational normal form needs exact constants")
        if a.const.is_zero():
            continue
        e = a.qexp_n * sign + a.qexp_absn
        const = a.const
        nums = []
        dens = []
        for c in a.num:
            x = _frac(c) * sign
            if x < 0:
                const, x = -const, -x
            nums.append(x)
        for d in a.den:
            x = _frac(d) * sign
            if x < 0:
                const, x = -const, -x
            dens.append(x)
        terms.append((const, e, nums, Counter(dens)))
    common = Counter()
    for _, _, _, dens in terms:
        common |= dens
    qmq = q_minus_qinv()
    parts = []
    for const, e, nums, dens in terms:
        poly = {e: const}
        for c in nums:
            poly = _poly_mul_bracket(poly, c)
        for d in (common - dens).elements():
            poly = _poly_mul_bracket(poly, d)
        parts.append((poly, sum(dens.values()) - len(nums)))
    g_min = min((g for _, g in parts), default=0)
    total = {}
    for poly, g in parts:
        mult = QSeries.one()
        for _ in range(g - g_min):
            mult = mult * qmq
        _poly_add(total, _poly_scale(poly, mult))
    total = {e: v for e, v in total.items() if not v.is_zero()}
    return (total, tuple(sorted(common.elements())), g_min)


def branch_values_equal(mc1, mc2, sign):
    """Exact equality of two branches for every mode index."""
    n1, d1, g1 = branch_rational(mc1, sign)
    n2, d2, g2 = branch_rational(mc2, sign)
    for d in d2:
        n1 = _poly_mul_bracket(n1, d)
    for d in d1:
        n2 = _poly_mul_bracket(n2, d)
    delta = g1 - g2
    if delta > 0:
        mult = QSeries.one()
        for _ in range(delta):
            mult = mult * q_minus_qinv()
        n1 = _poly_scale(n1, mult)
    elif delta < 0:
        mult = QSeries.one()
        for _ in range(-delta):
            mult = mult * q_minus_qinv()
        n2 = _poly_scale(n2, mult)
    if set(n1) != set(n2):
        return False
    return all(n1[e] == n2[e] for e in n1)


def rational_val_bound(mc, sign):
    """Affine bound (slope, intercept) with branch valuation
    >= slope*n + intercept for every n >= 1, computed from the rational
    normal form.  Sees cancellations between atoms that the per-atom
    bound cannot, so it is never looser.  None when the branch is
    identically zero; ValueError propagates for watermarked constants."""
    num, dens, g = branch_rational(mc, sign)
    if not num:
        return None
    e_min = min(num)
    intercept = None
    for e, c in num.items():
        cand = c.valuation() + (e - e_min)
        intercept = cand if intercept is None else min(intercept, cand)
    # value = N(q^n) * (q-1/q)^g / prod_d (q^{dn}-q^{-dn}); the product's
    # valuation is exactly -sum(d)*n and val(q-1/q) = -1
    return (e_min + sum(dens), intercept - g)


def smoothed_half_phase(sign):
    """Half phase of the a family with [m]/[2m] smoothing:
    sign*( (q - 1/q) sum_{n>0} ([n]/[2n]) a_{sign*n} z^{-sign*n}
           + (P_a/2) ln q )."""
    atom = Atom(q_minus_qinv().scale(sign), num=(1,), den=(2,))
    return LinearForm([("a", sign, ModeCoeff([atom]))],
                      plnq={"a": Fraction(sign, 2)})


def bare_half_phase(family, sign):
    """sign*( (q - 1/q) sum_{n>0} x_{sign*n} z^{-sign*n} + P ln q )."""
    atom = Atom(q_minus_qinv().scale(sign))
    return LinearForm([(family, sign, ModeCoeff([atom]))],
                      plnq={family: Fraction(sign)})


def full_field(family, alpha=0):
    """-sum_{m != 0} (x_m/[m]) q^{-alpha m} z^{-m} + Q + P ln z.

    The offset alpha twists the oscillator part only, not the zero modes.
    """
    mk = lambda: ModeCoeff([Atom(-1, qexp_n=-_frac(alpha), den=(1,))])
    return LinearForm([(family, 1, mk()), (family, -1, mk())],
                      plnz={family: Fraction(1)},
                      qc={family: Fraction(1)})


def cartan_mode_coeffs(k):
    """Coefficients c_f(m) with H_m = sum_f c_f(m) x_{f,m}: the composite
    Cartan mode is a q^{-|m|}-weighted a mode plus a two-term b dressing."""
    half = Fraction(k, 2)
    return {
        "a": ModeCoeff([Atom(1, qexp_absn=-1)]),
        "b": ModeCoeff([Atom(1, qexp_absn=-half),
                        Atom(1, qexp_absn=-(half + 2))]),
    }
