"""Tests for kernel module."""

import math
import random
from fractions import Fraction

import gmpy2
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sb_stirling.dyadic import (
    TwoAdic,
    Valuation,
    alpha,
    backwards_binary,
    nu,
    nu_factorial,
    rational_mod,
    valuation_of,
)
from sb_stirling.errors import DomainError, PrecisionUnderflowError
from sb_stirling.kernel import (
    EvalRequest,
    U_2inf,
    U_factorial_pow2,
    eval_allj_sum,
    eval_P,
    eval_P_inf,
    eval_P_stirling,
    eval_P_truncated,
    eval_Phi,
    eval_T,
    odd_part_factorial,
    phi_nu,
    stirling2,
    stirling2_alternating,
    stirling_periodicity_bound,
)


def test_eval_P_of_one_is_one():
    """Test P_1(x) = 1 for every x."""
    for x in (-5, 0, 1, 17, 10**6):
        assert eval_P(1, x, 16) == TwoAdic(1, 16)


def test_eval_P_at_zero_has_valuation_alpha_minus_one():
    """Test P_n(0) = 2^(n-1)/n!."""
    for n in range(1, 40):
        assert valuation_of(eval_P(n, 0, 64)) == Valuation.finite(alpha(n) - 1)


def test_eval_P_small_values():
    """Test P_5(0) and a negative argument against exact rationals."""
    assert eval_P(5, 0, 20) == rational_mod(Fraction(16, 120), 20)
    # T_3(-1) = 3 + 1/3, divided by 3!
    assert eval_P(3, -1, 10) == rational_mod(Fraction(5, 9), 10)


def test_eval_P_rejects_bad_input():
    """Test domain checks."""
    with pytest.raises(DomainError):
        eval_P(0, 3)
    with pytest.raises(PrecisionUnderflowError):
        eval_P(3, 3, 0)


@pytest.mark.parametrize(
    "n,residue,expected",
    [
        (29, 2, [2, 3, 2, 4, 2, 3, 2, 5, 2]),
        (31, 2, [7, 8, 7, 9, 7, 8, 7, 10]),
        (23, 14, [4, 4, 4, 4]),
    ],
)
def test_valuation_sequences(n, residue, expected):
    """Test nu(P_n(16x + p)) for consecutive x."""
    values = [valuation_of(eval_P(n, 16 * x + residue, 64)) for x in range(len(expected))]
    assert values == [Valuation.finite(v) for v in expected]


def test_no_zero_class_of_23_at_random_points():
    """Test nu(P_23(16x + 14)) = 4 for large x."""
    rng = random.Random(23)
    for _ in range(64):
        x = rng.randrange(1 << 40)
        assert valuation_of(eval_P(23, 16 * x + 14, 64)) == Valuation.finite(4)


def test_eval_P_is_unsigned_odd_sum():
    """Test P_n(x) = 1/n! sum over odd j of C(n, j) j^x with no sign for even n."""
    for n in (2, 4, 6, 7):
        for x in range(6):
            odd_sum = sum(math.comb(n, j) * j**x for j in range(1, n + 1, 2))
            assert eval_P(n, x, 24) == rational_mod(Fraction(odd_sum, math.factorial(n)), 24)
    assert eval_P(2, 0, 8) == TwoAdic(1, 8)


def test_eval_P_matches_exact_T():
    """Test modular P_n against T_n / n! computed exactly."""
    for n in range(1, 21):
        for x in range(0, 41, 3):
            exact = Fraction(eval_T(n, x), int(gmpy2.fac(n)))
            assert eval_P(n, x, 32) == rational_mod(exact, 32)


def test_eval_T_values():
    """Test direct two-term sums."""
    assert eval_T(1, 5) == 1
    assert eval_T(3, 1) == 6
    assert eval_T(3, 2) == 12
    assert nu(eval_T(6, 7)) - nu_factorial(6) == valuation_of(eval_P(6, 7, 64)).value


def test_eval_P_truncated_precision():
    """Test the result carries x.prec + 1 - lg(n) bits."""
    result = eval_P_truncated(5, TwoAdic(123, 10))
    assert result.prec == 9
    assert result == eval_P(5, 123, 9)
    assert eval_P_truncated(5, TwoAdic(123, 10), prec=4).prec == 4
    with pytest.raises(PrecisionUnderflowError):
        eval_P_truncated(40, TwoAdic(3, 4))


def test_eval_P_truncated_agrees_with_every_lift():
    """Test P_n(x + 2^t) = P_n(x) to the achievable precision."""
    base = TwoAdic(14, 4)
    for lift in range(0, 64 * 16, 16):
        value = eval_P(23, 14 + lift, 64).truncate(base.prec + 1 - 4)
        assert value == eval_P_truncated(23, base)
    assert valuation_of(eval_P(23, 14 + 16 * 1000, 64)) == Valuation.finite(4)


def test_eval_request():
    """Test the request wrapper clamps to the achievable precision."""
    request = EvalRequest(5, TwoAdic(7, 10), prec=64)
    assert request.achievable_prec == 9
    assert request.evaluate().prec == 9
    assert EvalRequest(5, 7, prec=12).evaluate() == eval_P(5, 7, 12)
    with pytest.raises(DomainError):
        EvalRequest(0, 7)


def test_stirling2():
    """Test Stirling numbers of the second kind."""
    assert stirling2(4, 2) == 7
    assert stirling2(5, 2) == 15
    assert stirling2(6, 3) == 90
    assert stirling2(7, 7) == 1
    assert stirling2(3, 5) == 0
    assert stirling2(0, 0) == 1
    assert stirling2_alternating(6, 3) == 90
    with pytest.raises(DomainError):
        stirling2(-1, 0)


def test_eval_Phi():
    """Test Phi values, the 0^0 convention and cached valuations."""
    phi = eval_Phi(3, 2)
    assert phi.value == Fraction(2, 3)
    assert phi.valuation == Valuation.finite(1)
    assert eval_Phi(2, 1).valuation.is_infinite
    assert eval_Phi(1, 3).valuation.is_infinite
    for n in range(1, 20):
        assert phi_nu(n, 0) == Valuation.finite(alpha(n) - 1)


def test_phi_lower_bound():
    """Test nu(Phi_n(s)) >= s - [n/2]."""
    for n in range(1, 41):
        for s in range(0, 61, 4):
            assert phi_nu(n, s).ge(s - n // 2)


def test_eval_allj_sum():
    """Test all-j sums including 0^0 = 1."""
    assert eval_allj_sum(0, 0) == 1
    assert eval_allj_sum(2, 3) == 5
    assert eval_allj_sum(1, 0) == 2
    for delta in range(1, 10):
        for x in range(delta):
            assert eval_allj_sum(delta, x) == 2 * Fraction(eval_T(delta, x), int(gmpy2.fac(delta)))


def test_U_factorial_pow2_small():
    """Test odd parts of small power-of-two factorials."""
    assert U_factorial_pow2(1, 8) == TwoAdic(1, 8)
    assert U_factorial_pow2(2, 8) == TwoAdic(3, 8)
    for e in range(1, 10):
        assert U_factorial_pow2(e, 40).residue == odd_part_factorial(1 << e, 40)


@pytest.mark.parametrize("e", [1] + list(range(3, 17)))
def test_U_factorial_pow2_stabilises(e):
    """Test U(2^(e-1)!) = U(2^e!) mod 2^e."""
    assert U_factorial_pow2(e - 1, e) == U_factorial_pow2(e, e)


def test_U_factorial_pow2_does_not_stabilise_at_two():
    """Test U(2!) = 1 and U(4!) = 3 differ mod 4."""
    assert U_factorial_pow2(1, 2) != U_factorial_pow2(2, 2)


def test_U_2inf_leading_bits():
    """Test the first 13 bits of the odd part of (2^inf)!."""
    assert backwards_binary(U_2inf(13), 13) == "1101000101101"


def test_eval_P_inf_at_zero():
    """Test P_{2^inf+1}(0) = 2 / U(2^inf!)."""
    expected = TwoAdic.of(2, 20) * U_2inf(20).inverse()
    assert eval_P_inf(1, 0, 20) == expected


def test_eval_P_inf_matches_large_index():
    """Test the limit against P_{2^12+3}(x) at a precision within the congruence bound."""
    n = (1 << 12) + 3
    for x in range(0, 30):
        assert eval_P_inf(3, x, 4) == eval_P_stirling(n, x, 4)


def test_eval_P_inf_rejects_bad_input():
    """Test negative arguments and delta = 0 are rejected."""
    with pytest.raises(DomainError):
        eval_P_inf(0, 3)
    with pytest.raises(DomainError):
        eval_P_inf(3, -1)


def test_eval_P_stirling_matches_eval_P():
    """Test the Stirling expansion against the odd-j sum."""
    for n in range(1, 25):
        for x in range(0, 30):
            assert eval_P_stirling(n, x, 24) == eval_P(n, x, 24)


def test_stirling_periodicity_bound():
    """Test min(t + 1 - lg n, x - nu(n!))."""
    assert stirling_periodicity_bound(10, 3, 4) == 2
    assert stirling_periodicity_bound(40, 10, 4) == 9


@pytest.mark.property_based
@settings(max_examples=100)
@given(st.integers(1, 64), st.integers(0, 255), st.integers(4, 20))
def test_periodicity(n, x, t):
    """Test nu(P_n(x + 2^t) - P_n(x)) >= t + 1 - lg(n)."""
    bits = t + 1 - (n.bit_length() - 1)
    if bits < 1:
        return
    assert eval_P(n, x + (1 << t), 40).truncate(bits) == eval_P(n, x, 40).truncate(bits)
