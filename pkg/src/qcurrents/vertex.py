"""Products of normal-ordered exponential operators with certified windows.

A VertexTerm is

    scalar * prod_v v^{zpow[v]} * :exp( sum_v F_v ):

with one LinearForm F_v per formal variable v.  Reordering a product of two
terms produces exactly one central contraction factor

    exp( [plus part of the left exponent, minus part of the right exponent] )

because every bracket involved is a scalar: mode brackets hit kappa and the
zero-mode bracket pairs P with Q.  The contraction splits into a mode series

    sum_{n>=1} sum_f cL_f(n) cR_f(-n) kappa_f(n) (w/z)^n

(z the left factor's variable, w the right's) and a zero-mode adjustment

    q^{sum_f plnq_L(f) qc_R(f) [P,Q]_f} * z^{sum_f plnz_L(f) qc_R(f) [P,Q]_f}.

Exchange relations between two currents are verified in cleared form: both
orderings are expanded over an x = w/z window, multiplied by their clearing
factors, and compared coefficient by coefficient.  Contributions lost to the
finite windows are certified small by a Lagrangian bound: superlinear
per-power valuations of the clearing factors absorb a linear penalty that
covers the contraction exponential's worst-case valuation slope.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .errors import (GuardInsufficient, IdentityFailed,
                     NonconvergentCoincidentProduct)
from .heisenberg import FAMILIES, LinearForm, ModeCoeff, rational_val_bound
from .qscalar import QSeries, get_order, qmono, qs_exp
from .xwindow import XSeries, xs_exp, xs_one

_EMPTY_FORM_KEY = LinearForm().key()


def _frac(v):
    return v if isinstance(v, Fraction) else Fraction(v)


def _fk(v):
    v = _frac(v)
    return (v.numerator, v.denominator)


def _merge_zpow(*dicts):
    out = {}
    for d in dicts:
        for v, e in d.items():
            out[v] = out.get(v, Fraction(0)) + e
    return {v: e for v, e in out.items() if e != 0}


class VertexTerm:
    """One normal-ordered exponential monomial."""

    __slots__ = ("scalar", "forms", "zpow")

    def __init__(self, scalar, forms, zpow=None):
        if not isinstance(scalar, QSeries):
            scalar = qmono(scalar)
        self.scalar = scalar
        self.forms = dict(forms)
        self.zpow = {v: _frac(e) for v, e in (zpow or {}).items() if e != 0}

    @staticmethod
    def exponential(var, form, scalar=1):
        return VertexTerm(scalar, {var: form})

    def only_var(self):
        if len(self.forms) != 1:
            raise ValueError("term is not a single-variable exponential")
        return next(iter(self.forms))

    def form(self, var):
        return self.forms.get(var, LinearForm())

    def scaled(self, qs):
        if not isinstance(qs, QSeries):
            qs = qmono(qs)
        return VertexTerm(self.scalar * qs, self.forms, self.zpow)

    def shifted(self, var, gamma):
        """The same operator with var -> q^gamma var."""
        g = _frac(gamma)
        forms = {v: (f.shift(g) if v == var else f)
                 for v, f in self.forms.items()}
        scalar = self.scalar.shift(g * self.zpow.get(var, Fraction(0)))
        return VertexTerm(scalar, forms, self.zpow)

    def inverse(self):
        """Group inverse scalar^{-1} :exp(-F):, exact whenever the term's own
        plus and minus parts do not contract (true for every factor this
        package inverts; inside explicit normal-ordering it holds by fiat)."""
        return VertexTerm(self.scalar.inverse(),
                          {v: -f for v, f in self.forms.items()},
                          {v: -e for v, e in self.zpow.items()})

    def key(self):
        """Canonical identity of the normal-ordered part (scalar excluded)."""
        fk = tuple(sorted((v, k) for v, k in
                          ((v, f.key()) for v, f in self.forms.items())
                          if k != _EMPTY_FORM_KEY))
        zk = tuple(sorted((v, _fk(e)) for v, e in self.zpow.items()))
        return (fk, zk)

    def __repr__(self):
        vs = ",".join(sorted(self.forms))
        return f"VertexTerm({self.scalar!r}; vars={vs or '-'})"


# -- contraction calculus ------------------------------------------------------


def _contracting_families(left, right, table):
    out = []
    for f in FAMILIES:
        if table.kappa_affine(f) is None:
            continue
        bl = left.branch(f, 1)
        br = right.branch(f, -1)
        if bl is None or br is None:
            continue
        al = bl.val_bound(1)
        ar = br.val_bound(-1)
        if al is None or ar is None:
            continue
        out.append((f, bl, br, al, ar, table.kappa_affine(f)))
    return out


def _combined_affine(fams, table):
    """Tail bound for the summed contraction coefficient across families.

    Per-family atom bounds miss cancellations between families (at k=1 the
    leading a and b parts of a bare diagonal contraction cancel, improving
    the slope from -5 to -1), and a loose slope makes the Lagrangian window
    certificate render-independent, so no guard would ever suffice.  The
    rational normal form of  sum_f cL_f(n) cR_f(-n) n*kappa_f(n)  is exact
    and yields the true slope; the dropped 1/n factor has no q-valuation.
    None when some constant is watermarked or nothing survives."""
    atoms = []
    for f, bl, br, _, _, _ in fams:
        brn = br.substitute_neg()
        for ka in table.kappa_hat_atoms(f):
            for al in bl.atoms:
                for ar in brn.atoms:
                    atoms.append(al.times(ar).times(ka))
    try:
        return rational_val_bound(ModeCoeff(atoms), 1)
    except ValueError:
        return None


def contraction_series(left, right, table, high):
    """Mode part of the contraction of :exp(left): with :exp(right): as a
    window [1, high] in the variable ratio (right var / left var), carrying
    an exact affine tail certificate; None when no family contracts."""
    fams = _contracting_families(left, right, table)
    if not fams:
        return None
    slopes = [(sl + sr + sk, il + ir + ik)
              for _, _, _, (sl, il), (sr, ir), (sk, ik) in fams]
    slope = min(s for s, _ in slopes)
    intercept = min(s + i for s, i in slopes) - slope
    tight = _combined_affine(fams, table)
    if tight is not None and (tight[0] > slope or
                              (tight[0] == slope and tight[1] > intercept)):
        slope, intercept = tight
    coeffs = {}
    for n in range(1, high + 1):
        acc = QSeries.zero()
        for f, bl, br, _, _, _ in fams:
            acc = acc + bl.evaluate(n) * br.evaluate(-n) * table.kappa(f, n)
        if acc.trunc is not None:
            # intermediate products can overflow the cap even when the
            # coefficient itself is small; the affine floor is exact
            # knowledge and soundly lifts the watermark back up
            t_half = math.ceil(2 * (slope * n + intercept)) - 1
            if t_half > acc.trunc:
                acc = QSeries(dict(acc.c), t_half)
        if not acc.is_exact_zero():
            coeffs[n] = acc
    return XSeries(coeffs, 1, high, floor=1, tail_up=(slope, intercept))


def zero_mode_adjust(left, right, table):
    """(q-power, z-power) scalar adjustment from commuting the left factor's
    P parts past the right factor's Q parts."""
    qp = Fraction(0)
    zp = Fraction(0)
    for f in FAMILIES:
        kappa = table.pq(f)
        qcr = right.qc.get(f)
        if not qcr:
            continue
        qp += left.plnq.get(f, Fraction(0)) * qcr * kappa
        zp += left.plnz.get(f, Fraction(0)) * qcr * kappa
    return qp, zp


def has_structural_contraction(left, right, table):
    if _contracting_families(left, right, table):
        return True
    qp, zp = zero_mode_adjust(left, right, table)
    return qp != 0 or zp != 0


# -- products ------------------------------------------------------------------


def merge_product(ta, tb, table):
    """Product of two coincident-variable terms whose contraction vanishes
    structurally; raises if any family could contract."""
    var = ta.only_var()
    if tb.only_var() != var:
        raise ValueError("merge_product needs a shared variable")
    fa, fb = ta.form(var), tb.form(var)
    if has_structural_contraction(fa, fb, table):
        raise ValueError("factors contract; this product is not a plain merge")
    return VertexTerm(ta.scalar * tb.scalar, {var: fa + fb},
                      _merge_zpow(ta.zpow, tb.zpow))


def normal_ordered_merge(ta, tb):
    """Product under explicit normal ordering: contractions dropped by fiat."""
    forms = dict(ta.forms)
    for v, f in tb.forms.items():
        forms[v] = forms[v] + f if v in forms else f
    return VertexTerm(ta.scalar * tb.scalar, forms,
                      _merge_zpow(ta.zpow, tb.zpow))


def coincident_product(ta, tb, table):
    """Full product of two terms in the same variable: the contraction is a
    convergent scalar (valuations must grow along the series) and is folded
    into the result's scalar."""
    var = ta.only_var()
    if tb.only_var() != var:
        raise ValueError("coincident_product needs a shared variable")
    fa, fb = ta.form(var), tb.form(var)
    value = QSeries.one()
    fams = _contracting_families(fa, fb, table)
    if fams:
        slopes = [(sl + sr + sk, il + ir + ik)
                  for _, _, _, (sl, il), (sr, ir), (sk, ik) in fams]
        slope = min(s for s, _ in slopes)
        intercept = min(s + i for s, i in slopes) - slope
        if slope <= 0:
            raise NonconvergentCoincidentProduct(
                f"coincident contraction slope {slope} is not positive")
        cap = get_order()
        high = max(1, math.ceil((cap - intercept) / slope))
        series = contraction_series(fa, fb, table, high)
        total = series.evaluate_at(0)
        v = total.valuation()
        if v is not None and v <= 0:
            raise NonconvergentCoincidentProduct(
                "coincident contraction value has nonpositive valuation "
                f"{v}; its exponential does not converge q-adically")
        value = qs_exp(total)
    qp, zp = zero_mode_adjust(fa, fb, table)
    scalar = (ta.scalar * tb.scalar * value).shift(qp)
    zpow = _merge_zpow(ta.zpow, tb.zpow, {var: zp})
    return VertexTerm(scalar, {var: fa + fb}, zpow)


def coincident_current_product(terms_a, terms_b, table):
    return [coincident_product(ta, tb, table)
            for ta in terms_a for tb in terms_b]


# -- currents as term lists ----------------------------------------------------


def scale_current(terms, qs):
    return [t.scaled(qs) for t in terms]


def shift_current(terms, var, gamma):
    return [t.shifted(var, gamma) for t in terms]


def invert_current(terms):
    if len(terms) != 1:
        raise ValueError("only single-term currents have a group inverse")
    return [terms[0].inverse()]


def canonical_terms(terms):
    """Collect by normal-ordered identity, summing scalars; drop terms whose
    scalar vanishes in its window."""
    acc = {}
    for t in terms:
        k = t.key()
        prev = acc.get(k)
        acc[k] = t if prev is None else VertexTerm(
            prev.scalar + t.scalar, prev.forms, prev.zpow)
    return {k: t for k, t in acc.items() if not t.scalar.is_zero()}


def currents_equal(terms_a, terms_b, qorder=None):
    """Canonical comparison of two term lists.  Returns (ok, mismatches);
    scalars compare exactly, or through qorder when given."""
    ca = canonical_terms(terms_a)
    cb = canonical_terms(terms_b)
    mism = []
    for k in sorted(set(ca) | set(cb), key=repr):
        sa = ca[k].scalar if k in ca else QSeries.zero()
        sb = cb[k].scalar if k in cb else QSeries.zero()
        if qorder is None:
            same = sa == sb
        else:
            same = sa.eq_through(sb, qorder)
        if not same:
            mism.append((k, sa, sb))
    return (not mism, mism)


def _semantic_groups(terms):
    """Collect terms whose exponents agree in the exact rational normal
    form, summing scalars; returns [(forms, zpow, scalar)]."""
    groups = []
    for t in terms:
        vf = {v: f for v, f in t.forms.items() if not f.semantic_is_empty()}
        for g in groups:
            if g[1] != t.zpow or set(g[0]) != set(vf):
                continue
            if all(g[0][v].semantic_eq(vf[v]) for v in vf):
                g[2] = g[2] + t.scalar
                break
        else:
            groups.append([vf, dict(t.zpow), t.scalar])
    return groups


def currents_equivalent(terms_a, terms_b, qorder=None):
    """Semantic comparison of two term lists: exponents are matched by the
    exact rational normal form of every branch, so the same operator built
    from different profile decompositions still pairs up.  Scalars compare
    exactly, or through qorder when given.  Returns (ok, detail)."""
    ga = _semantic_groups(terms_a)
    gb = _semantic_groups(terms_b)

    def negligible(s):
        return s.is_zero() if qorder is None \
            else s.eq_through(QSeries.zero(), qorder)

    detail = []
    used = set()
    for vf, zp, sa in ga:
        match = None
        for i, (vg, zq, _) in enumerate(gb):
            if i in used or zq != zp or set(vg) != set(vf):
                continue
            if all(vg[v].semantic_eq(vf[v]) for v in vf):
                match = i
                break
        if match is None:
            if not negligible(sa):
                detail.append(f"left term with scalar {sa!r} has no "
                              "right-side partner")
            continue
        used.add(match)
        sb = gb[match][2]
        same = sa == sb if qorder is None else sa.eq_through(sb, qorder)
        if not same:
            detail.append(f"scalar mismatch: {sa!r} vs {sb!r}")
    for i, (_, _, sb) in enumerate(gb):
        if i not in used and not negligible(sb):
            detail.append(f"right term with scalar {sb!r} has no "
                          "left-side partner")
    return (not detail, detail)


# -- exchange verification -----------------------------------------------------


class _PairData:
    __slots__ = ("key", "scalar", "ztot", "xshift", "series")

    def __init__(self, key, scalar, ztot, xshift, series):
        self.key = key
        self.scalar = scalar
        self.ztot = ztot
        self.xshift = xshift
        self.series = series


def _pair_data(tleft, tright, table, high, ratio_var):
    """Reorder data for tleft * tright; the contraction series lives in
    (tright var / tleft var).  ratio_var is the variable whose power counts
    as +1 in the global x bookkeeping."""
    vl = tleft.only_var()
    vr = tright.only_var()
    if vl == vr:
        raise ValueError("exchange pairs need distinct variables")
    fl, fr = tleft.form(vl), tright.form(vr)
    series = contraction_series(fl, fr, table, high)
    qp, zp = zero_mode_adjust(fl, fr, table)
    scalar = (tleft.scalar * tright.scalar).shift(qp)
    zpow = _merge_zpow(tleft.zpow, tright.zpow, {vl: zp})
    ztot = sum(zpow.values(), Fraction(0))
    xshift = zpow.get(ratio_var, Fraction(0))
    fk = tuple(sorted(
        (v, k) for v, k in ((vl, fl.key()), (vr, fr.key()))
        if k != _EMPTY_FORM_KEY))
    return _PairData(fk, scalar, ztot, xshift, series)


def _engine_window(data, high, down):
    """exp of the contraction, scaled and x-shifted, as a one-sided window."""
    if data.series is None:
        e = xs_one()
    else:
        e = xs_exp(data.series, high)
        if down:
            e = e.flip()
    e = e.scale(data.scalar)
    s, b = _global_affine(e, down)
    d = data.xshift
    if d != 0:
        if d != int(d):
            raise IdentityFailed("variable-power adjustment is not an "
                                 f"integer x-power: {d}")
        d = int(d)
        e = e.shift_x(d)
        if s is not None:
            b = b - abs(s * d)
    return e, (s, b), data.series is not None


def _global_affine(e, down):
    """(slope, intercept) with coefficient valuation >= slope*|m| + intercept
    over the engine's entire support, window included."""
    tail = e.tail_dn if down else e.tail_up
    if tail is None:
        s = Fraction(0)
        b = None
    else:
        s, b = tail
    for m, c in e.c.items():
        v = c.valuation()
        t = c.trunc_q()
        if v is None:
            v = None if t is None else t + Fraction(1, 2)
        elif t is not None:
            v = min(v, t + Fraction(1, 2))
        if v is None:
            continue
        cand = v - s * abs(m)
        b = cand if b is None else min(b, cand)
    if b is None:
        b = Fraction(0)
    return s, b


def _certified_floor(affine, unbounded, clears, v_render, window):
    """Lower bound on the q-valuation of every convolution contribution
    dropped by the finite renders, uniform over |x-power| <= window.

    Each dropped tuple has some index out of render range.  With lam the
    engine's worst downward slope, valuations obey

      total >= sum_i (val_i(m_i) - lam|m_i|) + intercept + min(0, slope)*window

    and the Lagrangian-weighted factor profiles are superlinear, so the
    minimum over out-of-range tuples is certified by per-factor tail scans.
    Returns None when nothing is dropped (the comparison is then exact).
    """
    s, b = affine
    lam = max(Fraction(0), -s)
    const = b + min(Fraction(0), s) * window
    gmins = [fac.lagrangian_tail(0, lam) for fac in clears]
    cases = []
    for j, fac in enumerate(clears):
        t = fac.lagrangian_tail(v_render + 1, lam)
        if t is None:
            continue
        cases.append(t + sum((g for i, g in enumerate(gmins) if i != j),
                             Fraction(0)))
    if unbounded and clears:
        spread = _escape_spread_min(clears, v_render, lam,
                                    v_render + 1 - window)
        if spread is not None:
            cases.append(spread)
        # an infeasible spread means in-render clears cannot pull an escaped
        # engine power back into the window, so that case drops no terms
    if not cases:
        return None
    return const + min(cases)


def _escape_spread_min(clears, cap, lam, need):
    """Exact min of sum_j (val_j(p_j) - lam|p_j|) over clear x-powers p_j,
    each within its render range [-cap, cap], subject to |sum_j p_j| >= need.

    This is the engine-escape case: the clears must jointly bridge the gap
    between an out-of-render engine power and the comparison window.  Exact
    DP over signed totals; per-factor profiles make concentration bounds far
    too weak when many clears are present.  None when infeasible."""
    profiles = []
    floors = []
    for fac in clears:
        prof = {p: v - lam * abs(p)
                for p, v in fac.signed_vals(cap).items()}
        profiles.append(prof)
        floors.append(min(prof.values()))
    slack = sum(f for f in floors if f < 0)
    # cheap feasible value: one factor carries the whole bridge, the rest
    # sit at zero cost; used to prune hopeless profile entries and states
    best = None
    for prof in profiles:
        for p, g in prof.items():
            if abs(p) >= need and (best is None or g < best):
                best = g
    totals = {0: Fraction(0)}
    for j, prof in enumerate(profiles):
        rest = sum(f for i, f in enumerate(floors) if i > j and f < 0)
        nxt = {}
        for t0, g0 in totals.items():
            for p, g in prof.items():
                t = t0 + p
                gt = g0 + g
                if best is not None and gt + rest > best:
                    continue
                old = nxt.get(t)
                if old is None or gt < old:
                    nxt[t] = gt
        totals = nxt
        if not totals:
            break
    vals = [g for t, g in totals.items() if abs(t) >= need]
    if best is not None:
        vals.append(best)
    return min(vals) if vals else None


def _sum_or_none(a, b):
    return None if (a is None or b is None) else a + b


class _SideWindow:
    __slots__ = ("pieces", "floor_q")

    def __init__(self):
        self.pieces = []      # (XSeries, support_floor, support_ceil)
        self.floor_q = None   # None = exact; Fraction = certified floor

    def add_piece(self, xs, floor, ceil, bound):
        self.pieces.append((xs, floor, ceil))
        if bound is not None:
            self.floor_q = bound if self.floor_q is None \
                else min(self.floor_q, bound)

    def coeff(self, m):
        total = QSeries.zero()
        for xs, floor, ceil in self.pieces:
            if (floor is not None and m < floor) or \
               (ceil is not None and m > ceil):
                continue
            if xs.low <= m <= xs.high:
                total = total + xs.c.get(m, QSeries.zero())
            else:
                raise RuntimeError(
                    f"render window does not reach x^{m}; raise the guard")
        return total


def _build_side(entries, clears, pre, v_render, window, down):
    side = _SideWindow()
    rendered = []
    for fac in clears:
        lo = fac.support_floor()
        hi = fac.support_ceil()
        lo = -v_render if lo is None else max(lo, -v_render)
        hi = v_render if hi is None else min(hi, v_render)
        rendered.append(fac.render(lo, hi))
    for data in entries:
        if pre is not None:
            data = _PairData(data.key, data.scalar * pre, data.ztot,
                             data.xshift, data.series)
        e, affine, unbounded = _engine_window(data, v_render, down)
        conv = e
        floor_t, ceil_t = e.floor, e.ceil
        for fac, fxs in zip(clears, rendered):
            conv = conv.raw_mul_window(fxs, conv.low + fxs.low,
                                       conv.high + fxs.high)
            floor_t = _sum_or_none(floor_t, fac.support_floor())
            ceil_t = _sum_or_none(ceil_t, fac.support_ceil())
        bound = _certified_floor(affine, unbounded, clears, v_render, window)
        side.add_piece(conv, floor_t, ceil_t, bound)
    return side


def verify_exchange(label, side_a, side_b, table, *, clear_a=(), clear_b=(),
                    pre_a=None, pre_b=None, window=8, guard=4, min_qorder=0,
                    var_a="z", var_b="w"):
    """Check  pre_a * A(z) B(w) * prod(clear_a)  ==
              pre_b * B(w) A(z) * prod(clear_b)  as x = w/z windows.

    side_a, side_b: term lists for the two currents, in var_a and var_b.
    Both orderings are expanded pair by pair; terms sharing a normal-ordered
    identity are compared after clearing.  Raises IdentityFailed on a
    mismatch and GuardInsufficient when the certified q-depth at some
    x-power falls below min_qorder.  Returns a report dict.
    """
    w_cmp = int(window)
    v_render = w_cmp + int(guard)
    if v_render <= w_cmp:
        raise ValueError("guard must be positive")
    lhs = {}
    for ta in side_a:
        for tb in side_b:
            d = _pair_data(ta, tb, table, v_render, var_b)
            lhs.setdefault(d.key, []).append(d)
    rhs = {}
    for tb in side_b:
        for ta in side_a:
            d = _pair_data(tb, ta, table, v_render, var_b)
            rhs.setdefault(d.key, []).append(d)
    keys = sorted(set(lhs) | set(rhs), key=repr)
    worst = None
    for key in keys:
        el = lhs.get(key, [])
        er = rhs.get(key, [])
        ztots = {d.ztot for d in el} | {d.ztot for d in er}
        if len(ztots) > 1:
            raise IdentityFailed(
                f"{label}: sides disagree on the overall variable power "
                f"for a matched term: {sorted(ztots)}")
        sl = _build_side(el, list(clear_a), pre_a, v_render, w_cmp,
                         down=False)
        sr = _build_side(er, list(clear_b), pre_b, v_render, w_cmp,
                         down=True)
        bound = None
        for fq in (sl.floor_q, sr.floor_q):
            if fq is not None:
                bound = fq if bound is None else min(bound, fq)
        for m in range(-w_cmp, w_cmp + 1):
            cl = sl.coeff(m)
            cr = sr.coeff(m)
            t = None if bound is None else bound - Fraction(1, 2)
            for c in (cl, cr):
                tq = c.trunc_q()
                if tq is not None:
                    t = tq if t is None else min(t, tq)
            if t is None:
                t = get_order()
            if t < min_qorder:
                raise GuardInsufficient(
                    f"{label}: x^{m} certified only through q^{t} "
                    f"(needed {min_qorder}); raise the guard or the "
                    f"working order")
            if not cl.eq_through(cr, t):
                h = _first_mismatch(cl, cr, t)
                raise IdentityFailed(
                    f"{label}: sides differ at x^{m} q^{h}",
                    x_power=m, q_power=h, lhs=repr(cl), rhs=repr(cr))
            worst = t if worst is None else min(worst, t)
    return {
        "label": label,
        "window": w_cmp,
        "guard": int(guard),
        "keys": len(keys),
        "pairs": sum(len(v) for v in lhs.values())
        + sum(len(v) for v in rhs.values()),
        "certified_qorder": str(worst),
        "status": "ok",
    }


def _first_mismatch(a, b, through):
    hs = sorted(set(a.c) | set(b.c))
    for h in hs:
        if Fraction(h, 2) > through:
            break
        if a.c.get(h) != b.c.get(h):
            return Fraction(h, 2)
    return None
