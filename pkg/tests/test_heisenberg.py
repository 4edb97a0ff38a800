"""Mode-coefficient language and oscillator structure constants."""

from fractions import Fraction

import pytest

from qcurrents.heisenberg import (
    Atom,
    CommutatorTable,
    LinearForm,
    ModeCoeff,
    bare_half_phase,
    cartan_mode_coeffs,
    full_field,
    smoothed_half_phase,
)
from qcurrents.qscalar import (
    QSeries,
    q_integer,
    q_minus_qinv,
    qmono,
    qs_ratio,
    set_order,
)


@pytest.fixture(autouse=True)
def _order():
    set_order(30)
    yield
    set_order(30)


class TestAtom:
    def test_evaluate_matches_direct_arithmetic(self):
        atom = Atom(q_minus_qinv(), qexp_n=Fraction(3, 2), qexp_absn=-1,
                    num=(2,), den=(1, 3))
        for m in (2, -3, 1):
            direct = qs_ratio(
                q_minus_qinv().shift(Fraction(3, 2) * m - abs(m))
                * q_integer(2 * m),
                q_integer(m) * q_integer(3 * m))
            assert atom.evaluate(m) == direct, f"m={m}"

    def test_evaluate_rejects_zero(self):
        with pytest.raises(ValueError):
            Atom(1).evaluate(0)

    def test_valuation_affine_is_exact(self):
        atom = Atom(q_minus_qinv(), qexp_n=2, qexp_absn=1, num=(3,), den=(2,))
        for sign in (1, -1):
            s, b = atom.val_affine(sign)
            for u in range(1, 6):
                assert atom.evaluate(sign * u).valuation() == s * u + b

    def test_multi_atom_bound_is_valid(self):
        # atoms whose leading parts cancel: bound stays a lower bound
        mc = ModeCoeff([Atom(1, qexp_n=0), Atom(-1, qexp_n=2)])
        s, b = mc.val_bound(1)
        for u in range(1, 6):
            v = mc.evaluate(u).valuation()
            assert v is None or v >= s * u + b

    def test_substitute_neg(self):
        # an expression written in n, re-expressed in m = -n
        atom_n = Atom(qmono(2, 1), qexp_n=3, num=(1,), den=(2, 2))
        atom_m = atom_n.substitute_neg()
        for n in (1, 2, 5):
            assert atom_m.evaluate(-n) == atom_n.evaluate(n)

    def test_times_combines(self):
        a = Atom(qmono(2), qexp_n=1, num=(1,))
        b = Atom(qmono(3), qexp_absn=2, den=(2,))
        ab = a.times(b)
        for m in (1, -2, 3):
            # the chained product carries a narrower watermark than the
            # fused evaluation; agreement is through the weaker one
            chained = a.evaluate(m) * b.evaluate(m)
            assert ab.evaluate(m).eq_through(chained, chained.trunc_q())


class TestCommutatorTable:
    def test_frozen_kappa_values_k1(self):
        t = CommutatorTable(1)
        # [3][2] = q^-3 + 2q^-1 + 2q + q^3
        k1 = t.kappa("a", 1)
        assert k1.items() == [(-3, 1), (-1, 2), (1, 2), (3, 1)]
        assert t.kappa("b", 2) == (q_integer(2) * q_integer(2)).scale(
            Fraction(-1, 2))
        assert t.kappa("c", 3) == (q_integer(3) * q_integer(3)).scale(
            Fraction(1, 3))

    def test_critical_level_kills_a_family(self):
        t = CommutatorTable(-2)
        for n in (1, 2, 3, -1):
            assert t.kappa("a", n).is_exact_zero()
        assert t.kappa_affine("a") is None
        assert not t.kappa("b", 1).is_exact_zero()

    def test_kappa_is_odd(self):
        for k in (1, -2, 3):
            t = CommutatorTable(k)
            for f in ("a", "b", "c"):
                for n in (1, 2, 4):
                    assert t.kappa(f, -n) == -t.kappa(f, n)

    def test_kappa_affine_exact(self):
        for k in (1, 3):
            t = CommutatorTable(k)
            for f in ("a", "b", "c"):
                s, b = t.kappa_affine(f)
                for n in range(1, 5):
                    assert t.kappa(f, n).valuation() == s * n + b, (k, f, n)

    def test_zero_mode_pairings(self):
        t = CommutatorTable(1)
        assert t.pq("a") == 6 and t.pq("b") == -1 and t.pq("c") == 1
        assert CommutatorTable(-2).pq("a") == 0


class TestCartanModes:
    def test_composite_commutator_identity(self):
        # [H_n, H_{-n}] = [2n][kn]/n for the composite Cartan mode
        for k in (1, -2, 3):
            t = CommutatorTable(k)
            cf = cartan_mode_coeffs(k)
            for n in range(1, 5):
                lhs = QSeries.zero()
                for f, mc in cf.items():
                    lhs = lhs + mc.evaluate(n) * mc.evaluate(-n) * t.kappa(f, n)
                rhs = (q_integer(2 * n) * q_integer(k * n)).scale(
                    Fraction(1, n))
                assert lhs == rhs, (k, n)

    def test_critical_level_reduces_to_b_dressing(self):
        cf = cartan_mode_coeffs(-2)
        # at k = -2 the b weights are q^{|m|} + q^{-|m|}
        got = cf["b"].evaluate(3)
        assert got == qmono(1, 3) + qmono(1, -3)


class TestProfiles:
    def test_smoothed_half_phase(self):
        up = smoothed_half_phase(1)
        assert up.mode_coeff("a", 2) == qs_ratio(
            q_minus_qinv() * q_integer(2), q_integer(4))
        assert up.branch("a", -1) is None
        assert up.plnq == {"a": Fraction(1, 2)}
        dn = smoothed_half_phase(-1)
        assert dn.mode_coeff("a", -3) == qs_ratio(
            -q_minus_qinv() * q_integer(-3), q_integer(-6))
        assert dn.plnq == {"a": Fraction(-1, 2)}

    def test_bare_half_phase(self):
        dn = bare_half_phase("b", -1)
        assert dn.mode_coeff("b", -4) == -q_minus_qinv()
        assert dn.branch("b", 1) is None
        assert dn.plnq == {"b": Fraction(-1)}

    def test_full_field_offset_twists_modes_only(self):
        f = full_field("b", alpha=Fraction(1, 2))
        # coefficient of x_m is -q^{-alpha m}/[m]
        assert f.mode_coeff("b", 1) == qmono(-1, Fraction(-1, 2))
        assert f.mode_coeff("b", -2) == qs_ratio(
            qmono(-1, 1), q_integer(-2))
        assert f.plnz == {"b": Fraction(1)} and f.qc == {"b": Fraction(1)}
        assert f.plnq == {}

    def test_field_sum_merges_families(self):
        bc = full_field("b") + full_field("c")
        assert bc.qc == {"b": Fraction(1), "c": Fraction(1)}
        assert bc.mode_coeff("c", 2) == qs_ratio(qmono(-1), q_integer(2))

    def test_shift_twists_coefficients_and_lnq(self):
        f = full_field("b").shift(Fraction(3, 2))
        # z -> q^{3/2} z multiplies the z^{-m} coefficient by q^{-3m/2}
        assert f.mode_coeff("b", 2) == qs_ratio(qmono(-1, -3), q_integer(2))
        assert f.plnq == {"b": Fraction(3, 2)}
        assert f.plnz == {"b": Fraction(1)}

    def test_shift_composes(self):
        f = smoothed_half_phase(1).shift(1).shift(-1)
        assert f.mode_coeff("a", 3) == smoothed_half_phase(1).mode_coeff("a", 3)

    def test_ordering_flags(self):
        assert smoothed_half_phase(-1).is_creation_only() is False  # has P lnq
        v_plus_like = LinearForm([("a", -1, ModeCoeff([Atom(1)]))])
        assert v_plus_like.is_creation_only()
        assert not v_plus_like.is_annihilation_only()
        assert full_field("b").is_creation_only() is False
        assert full_field("b").is_annihilation_only() is False

    def test_negation(self):
        f = -full_field("c")
        assert f.mode_coeff("c", 1) == qs_ratio(qmono(1), q_integer(1))
        assert f.qc == {"c": Fraction(-1)}
