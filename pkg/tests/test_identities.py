"""Tests for identities module."""

import pytest

from sb_stirling.identities import (
    check_binomial_shift,
    check_binomial_sum_identity,
    check_doubling_difference,
    check_factorial_ratio,
    check_periodicity,
    check_phi_lower_bound,
    check_phi_refinement,
    check_phi_unit_criterion,
    check_stirling_approximation,
    check_stirling_expansion,
    check_stirling_mod4,
    check_stirling_periodicity,
    check_tail_exponent,
    check_unit_criterion,
    run_identity_suite,
)
from sb_stirling.verify import all_passed


def test_binomial_sum_identity():
    """Test the telescoping binomial sum for n <= 20."""
    records = check_binomial_sum_identity(n_max=20, d_max=10)
    assert len(records) == 20
    assert all_passed(records)


def test_stirling_mod4():
    """Test the three mod 4 forms against S(k, n) and S(k, n - 1)."""
    assert all_passed(check_stirling_mod4(n_max=12, k_max=20))


def test_stirling_expansion():
    """Test the double-factorial expansion exactly."""
    assert all_passed(check_stirling_expansion(n_max=12, k_max=20))


def test_phi_refinement():
    """Test the lower bound, its equality case and the mod 4 form for n <= 24."""
    assert all_passed(check_phi_refinement(n_max=24))


def test_doubling_difference():
    """Test nu of the difference of consecutive doubled binomials."""
    records = check_doubling_difference(b_max=3, d_max=4)
    assert len(records) == 20
    assert all_passed(records)


def test_factorial_ratio():
    """Test U(d!) against the shifted odd parts mod 2^(e - lg d)."""
    assert all_passed(check_factorial_ratio(e_max=10))


def test_tail_exponent():
    """Test the exponent alpha(2^e - r) - 1 and its lower bound."""
    assert all_passed(check_tail_exponent(e_max=10))


def test_phi_lower_bound():
    """Test nu Phi_n(s) >= s - [n/2]."""
    assert all_passed(check_phi_lower_bound(n_max=20, s_max=40))


def test_phi_unit_criterion():
    """Test the unit criterion for Phi_{2^e + delta} with e <= 4."""
    records = check_phi_unit_criterion(e_max=4)
    assert len(records) == 4
    assert all_passed(records)


def test_binomial_shift():
    """Test shifting the top by 64i for P_23's class 14 mod 16."""
    assert all_passed(check_binomial_shift(x_values=range(4), i_values=range(1, 5)))


def test_stirling_periodicity():
    """Test S(x + 2^t, n) = S(x, n) to the periodicity bound."""
    assert all_passed(check_stirling_periodicity(n_max=8, x_span=8, t_max=5))


def test_unit_criterion():
    """Test P_n(x) is odd exactly when C(2x - n - 1, n - 1) is odd."""
    records = check_unit_criterion(n_max=24, x_max=64)
    assert len(records) == 24
    assert all_passed(records)


def test_periodicity():
    """Test P_n(x + 2^t) = P_n(x) mod 2^(t + 1 - lg n)."""
    assert all_passed(check_periodicity(n_max=16, t_max=10, x_values=(0, 5, 37)))


def test_stirling_approximation():
    """Test (-1)^(n+1) P_n(x) = S(x, n) mod 2^(x - nu(n!))."""
    assert all_passed(check_stirling_approximation(n_max=12, span=12))


@pytest.mark.slow
def test_identity_suite_defaults():
    """Test the whole suite at its default ranges."""
    assert all_passed(run_identity_suite())


@pytest.mark.slow
def test_unit_criterion_full_range():
    """Test the unit criterion for n <= 64 and x < 256."""
    assert all_passed(check_unit_criterion())


@pytest.mark.slow
def test_phi_unit_criterion_full_range():
    """Test the Phi unit criterion for e <= 7."""
    assert all_passed(check_phi_unit_criterion())
