"""Tests for verify module."""

import pytest

from sb_stirling.atlas_builder import AtlasBuilder
from sb_stirling.dyadic import Valuation
from sb_stirling.errors import DomainError
from sb_stirling.golden import load_reference
from sb_stirling.kernel import phi_nu
from sb_stirling.verify import (
    FAIL,
    PASS,
    CheckRecord,
    TermKey,
    ValuationCorrection,
    all_passed,
    binomial_nu,
    check,
    collect_terms,
    enumerate_min_terms,
    nu_factorial_half,
    predicted_valuation,
    read_report,
    small_offset_constant,
    split_zero_cases,
    term_cutoff,
    term_nu,
    theorem_prediction,
    verify_class_sum,
    verify_power_of_two_remark,
    verify_single_zero_family,
    verify_small_offset_family,
    verify_split_lemma,
    verify_split_zero_family,
    verify_valuation_formula,
    write_report,
)
from sb_stirling.zeros import CongruenceClass


def test_check_records():
    """Test pass/fail records and the report file."""
    good = check("demo", True, n=3)
    bad = check("demo", False, "off by one", n=4)
    assert good.status == PASS
    assert bad.status == FAIL
    assert all_passed([good])
    assert not all_passed([good, bad])
    assert CheckRecord("demo", {}, "skip").ok


def test_report_file(tmp_path):
    """Test records survive a write and read."""
    path = tmp_path / "reports" / "run.jsonl"
    records = [check("demo", True, n=3), check("demo", False, "x", n=4)]
    write_report(path, records)
    assert read_report(path) == records


def test_binomial_nu():
    """Test valuations of ordinary and negative-top binomials."""
    assert binomial_nu(8, 4) == Valuation.finite(1)
    assert binomial_nu(-3, 2) == Valuation.finite(1)
    assert binomial_nu(3, 5).is_infinite
    assert binomial_nu(3, -1).is_infinite


def test_term_nu_for_29():
    """Test the (4, 10) term in class 10 mod 16 of P_29."""
    assert term_nu(29, 4, 10, 0, 4, TermKey(4, 10)) == Valuation.finite(2)
    assert term_nu(29, 4, 10, 0, 1, TermKey(4, 10)) == Valuation.finite(2)


@pytest.mark.parametrize("j", [0, -1, 33, 64])
def test_term_nu_rejects_j_outside_range(j):
    """Test j must lie in 1..2^(m+d)."""
    with pytest.raises(DomainError):
        term_nu(29, 4, 10, 0, 1, TermKey(j, 10))


def test_term_nu_range_ends():
    """Test j = 1 and j = 2^(m+d) are both terms of the sum."""
    assert term_nu(29, 4, 10, 0, 1, TermKey(1, 10)) == Valuation.finite(4) + phi_nu(29, 11)
    assert term_nu(29, 4, 10, 0, 1, TermKey(32, 10)) == term_nu(29, 4, 10, 0, 6, TermKey(32, 10))
    with pytest.raises(DomainError):
        term_nu(29, 4, 10, 0, 1, TermKey(4, -1))


def test_term_cutoff():
    """Test terms from j + k = 17 on exceed 2 for P_29 mod 16."""
    assert term_cutoff(29, 4, 2) == 17


def test_enumerate_min_terms_for_29():
    """Test the three minimal terms of P_29 in class 10 mod 16."""
    found = enumerate_min_terms(29, 4, 10, 0, 2)
    assert found.minimum == 2
    assert found.keys == [TermKey(4, 10), TermKey(8, 6), TermKey(12, 2)]
    assert found.cutoff == 17


def test_enumerate_min_terms_widens_threshold():
    """Test a threshold below the minimum still finds the exact minimum."""
    found = enumerate_min_terms(29, 4, 10, 0, 0)
    assert found.minimum == 2
    assert len(found.keys) == 3


@pytest.mark.parametrize("e", range(3, 8))
def test_unique_minimum_for_offset_one(e):
    """Test P_{2^e+1} in class 0 has the unique minimal term (2^(e-1), 0)."""
    found = enumerate_min_terms((1 << e) + 1, e - 1, 0, 0, 0)
    assert found.minimum == 0
    assert found.keys == [TermKey(1 << (e - 1), 0)]


def test_collect_terms_agrees_with_minimum():
    """Test collected terms at the minimum are the minimal set."""
    terms = collect_terms(29, 4, 10, 0, 2)
    assert sorted(k for k, v in terms.items() if v == 2) == enumerate_min_terms(29, 4, 10, 0, 2).keys
    assert min(terms.values()) == 2


def test_small_offset_constant():
    """Test the constant c of the small-offset family."""
    assert small_offset_constant(2, 3, 0) == 2
    assert small_offset_constant(3, 3, 0) == 1
    assert small_offset_constant(3, 4, 1) == 1
    assert small_offset_constant(3, 1, 0) == 0


def test_small_offset_family(shallow_limits):
    """Test the family for e = 2 and e = 3 with every offset."""
    records = verify_small_offset_family([2, 3], d_max=3, x_count=4, limits=shallow_limits)
    assert records
    assert all_passed(records)


def test_small_offset_family_agrees_with_zero_finder(shallow_limits):
    """Test each class mod 2^(e-1) holds one found zero with the family constant."""
    records = verify_small_offset_family([2, 3], d_max=3, x_count=4, limits=shallow_limits)
    found = [r for r in records if r.check == "small-offset:zero-finder"]
    assert len(found) == 2 * 4 + 4 * 4
    assert all(r.status == PASS for r in found)
    assert {(r.params["n"], r.params["p"], r.params["c"]) for r in found if r.params["n"] == 11} == {
        (11, p, small_offset_constant(3, 3, p)) for p in range(4)
    }


def test_small_offset_family_rejects_e_below_two():
    """Test e < 2 is outside the family."""
    with pytest.raises(DomainError):
        verify_small_offset_family([1])


def test_power_of_two_remark():
    """Test n = 2^(e+1) has the unique minimum (2^(e-1), 0) in class 0."""
    records = verify_power_of_two_remark(range(2, 7))
    assert len(records) == 5
    assert all_passed(records)


def test_single_zero_family():
    """Test the single-zero minimal terms for 9 <= n <= 32."""
    records = verify_single_zero_family(range(9, 33))
    assert records
    assert all_passed(records)


def test_split_zero_family():
    """Test the split-zero minimal sets for 13 <= n <= 32."""
    assert split_zero_cases(29)
    records = verify_split_zero_family(range(13, 33))
    assert records
    assert all_passed(records)


def test_split_lemma():
    """Test binomial parity picks out h = lg(2^(e+1) - n + p)."""
    for n in range(13, 65):
        assert all_passed(verify_split_lemma(n))


def test_theorem_prediction():
    """Test family lookup for proven classes."""
    assert theorem_prediction(9, CongruenceClass(2, 1)) == ("small-offset", 0)
    assert theorem_prediction(3, CongruenceClass(0, 0)) is None
    assert theorem_prediction(9, CongruenceClass(5, 1)) is None


def test_class_sum_for_31():
    """Test P_31 in class 2 mod 16: terms at least 4, sum exactly 7."""
    records = verify_class_sum(31, CongruenceClass(4, 2), 7, range(8), range(5), term_floor=4)
    assert len(records) == 40
    assert all_passed(records)


def test_valuation_correction():
    """Test min(cap, 2 nu(z - centre))."""
    correction = ValuationCorrection(cap=9, centre=19)
    assert correction.value(19) == 9
    assert correction.value(21) == 2
    assert correction.value(19 + 1024) == 9


def test_predicted_valuation_without_zeros():
    """Test the parity term for n = 3 and n = 4."""
    assert nu_factorial_half(29) == 11
    assert predicted_valuation(1, 7, [], {}) == (0, 0)
    assert predicted_valuation(3, 0, [], {}) == (1, 0)
    assert predicted_valuation(3, 1, [], {}) == (0, 0)
    assert predicted_valuation(4, 1, [], {}) == (1, 0)
    assert predicted_valuation(4, 2, [], {}) == (0, 0)


def test_valuation_formula_on_small_atlas(small_atlas):
    """Test the formula against probes for n <= 12."""
    for n in small_atlas.n_values:
        result = verify_valuation_formula(n, small_atlas.zeros(n), samples=40, seed=n, corrections={})
        assert all_passed(result.records)
        assert result.tested > 0
        assert result.skip_rate < 0.5


@pytest.mark.slow
def test_valuation_formula_to_32():
    """Test the formula with 1000 random z for every n <= 32."""
    corrections = {
        c["n"]: ValuationCorrection(c["cap"], c["centre"]) for c in load_reference()["valuation_corrections"]
    }
    with AtlasBuilder() as builder:
        atlas = builder.build_atlas(range(1, 33))
    for n in atlas.n_values:
        assert not atlas.unresolved(n)
        result = verify_valuation_formula(n, atlas.zeros(n), samples=1000, seed=n, corrections=corrections)
        assert all_passed(result.records)
        assert result.skip_rate < 0.01
