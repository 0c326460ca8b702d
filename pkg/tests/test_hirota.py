"""Bilinear derivative evaluator and the KP checks."""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gjvtau.exactalg import (
    FamilyError,
    TruncatedSeries,
    UPOLY_ONE,
    UPoly,
    mono,
    mono_var,
)
from gjvtau.gjv import assemble_tau_exponential, exp_join_of_q1
from gjvtau.hirota import (
    KP1,
    KP2,
    T_CONVENTION,
    HirotaPolynomial,
    check_kp,
    check_linearized_kp,
    hirota_apply,
    to_hirota_vars,
)
from gjvtau.hurwitz import cutjoin_series

F = Fraction

D1 = HirotaPolynomial("d1", ((F(1), (1,)),))
D1SQ = HirotaPolynomial("d1sq", ((F(1), (2,)),))


def t_series(terms, W=6):
    return TruncatedSeries("t", W, terms)


def test_hand_checks():
    t1 = TruncatedSeries.variable("t", 6, 1)
    assert str(hirota_apply(D1SQ, t1, t1)) == "-2"
    assert hirota_apply(D1, t1, t1).is_zero()


def test_kp1_on_the_polynomial_solution():
    tau = t_series({mono_var(2): UPOLY_ONE, mono((1, 2)): UPoly.const(F(1, 2))})
    assert hirota_apply(KP1, tau, tau).is_zero()


def test_kp1_weight():
    assert KP1.weight() == 4
    assert KP2.weight() == 5


small_t = st.lists(
    st.tuples(st.integers(1, 3), st.integers(-2, 2)), max_size=3
).map(
    lambda ts: sum(
        (TruncatedSeries.monomial("t", 6, mono((i, 1)), UPoly.const(c))
         for i, c in ts),
        TruncatedSeries.zero("t", 6),
    )
)


@settings(deadline=None)
@given(small_t, small_t)
def test_even_symmetry_and_odd_annihilation(f, g):
    assert hirota_apply(KP1, f, g) == hirota_apply(KP1, g, f)
    assert hirota_apply(D1, f, f).is_zero()


# ---------------------------------------------------------------------------
# variable convention
# ---------------------------------------------------------------------------


def test_convention_is_recorded():
    assert T_CONVENTION == "x_i = i*t_i"


def test_scaled_vs_direct():
    p2 = TruncatedSeries.variable("p", 4, 2)
    assert str(to_hirota_vars(p2)) == "2*t2"
    assert str(to_hirota_vars(p2, "direct")) == "t2"
    with pytest.raises(FamilyError):
        to_hirota_vars(to_hirota_vars(p2))


def test_direct_convention_fails_kp():
    # adjudication record: without the i-fold rescale the series is not a
    # tau function, first residual already in the constant term
    bad = to_hirota_vars(cutjoin_series(6, 3, UPOLY_ONE), "direct")
    rep = check_kp(bad)
    assert rep.status == "fail"
    assert rep.first_failure == "1"


# ---------------------------------------------------------------------------
# the three tau families
# ---------------------------------------------------------------------------


def test_kp_on_linear_tau():
    lin = t_series({mono_var(1): UPOLY_ONE}) + TruncatedSeries.const(
        "t", 6, UPOLY_ONE
    )
    rep = check_kp(lin, tau_label="linear")
    assert (rep.status, rep.reliable_weight) == ("pass", 6)


def test_kp_on_cutjoin_tau():
    cut = to_hirota_vars(cutjoin_series(6, 3, UPOLY_ONE))
    rep = check_kp(cut, tau_label="cutjoin")
    assert (rep.status, rep.reliable_weight) == ("pass", 2)
    assert rep.detail["u_hi"] == 6


def test_kp_on_closed_form_tau():
    cl = to_hirota_vars(assemble_tau_exponential(UPOLY_ONE, 6))
    rep = check_kp(cl, tau_label="closedform")
    assert (rep.status, rep.reliable_weight) == ("pass", 2)


def test_kp2_too():
    cut = to_hirota_vars(cutjoin_series(6, 3, UPOLY_ONE))
    rep = check_kp(cut, KP2, tau_label="cutjoin")
    assert (rep.status, rep.reliable_weight) == ("pass", 1)


def test_linearized_kp():
    rep = check_linearized_kp(to_hirota_vars(exp_join_of_q1(6)))
    assert (rep.status, rep.reliable_weight) == ("pass", 2)


def test_kp_catches_a_corrupted_tau():
    cut = to_hirota_vars(cutjoin_series(6, 3, UPOLY_ONE))
    bad = cut + TruncatedSeries.monomial(
        "t", 6, mono((1, 1), (3, 1)), UPoly.const(F(1, 7))
    )
    rep = check_kp(bad, tau_label="corrupt")
    assert rep.status == "fail"
    assert rep.first_failure == "1"
