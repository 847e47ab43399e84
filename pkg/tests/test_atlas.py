"""Tests for atlas module."""

import json

import pytest

from sb_stirling.atlas import (
    Atlas,
    atlas_summary,
    check_offset_relationship,
    check_zero_counts,
    classify_n,
    count_zeros,
    expected_zero_count,
    offset_relationship,
    scan_zero_bitruns,
    tag_theorems,
)
from sb_stirling.dyadic import TwoAdic
from sb_stirling.errors import DomainError
from sb_stirling.verify import all_passed
from sb_stirling.zeros import ClassReport, CongruenceClass, Verdict, ZeroRecord, ZeroStatus


def _zero_report(n, cls, c):
    record = ZeroRecord(n=n, cls=cls, zero_bits=TwoAdic(cls.residue, 20), c=c, witness_depth=20)
    return ClassReport(cls, Verdict.ZERO, zero=record)


def test_expected_zero_count():
    """Test 2[(n-1)/4] with the n = 13 mod 16 and recorded corrections."""
    assert expected_zero_count(1) == 0
    assert expected_zero_count(5) == 2
    assert expected_zero_count(13) == 4
    assert expected_zero_count(21) == 8
    assert expected_zero_count(29) == 12
    assert expected_zero_count(64) == 30
    assert expected_zero_count(21, exceptions={}) == 10
    with pytest.raises(DomainError):
        expected_zero_count(0)


def test_tag_theorems_matches_constant():
    """Test a zero is tagged only when its constant matches the family's."""
    reports = [_zero_report(9, CongruenceClass(2, 1), 0)]
    assert tag_theorems(9, reports) == 1
    zero = reports[0].zero
    assert zero.status is ZeroStatus.THEOREM_BACKED
    assert zero.status_label == "theorem:small-offset"

    reports = [_zero_report(9, CongruenceClass(2, 1), 1)]
    assert tag_theorems(9, reports) == 0
    assert reports[0].zero.status is ZeroStatus.EMPIRICAL


def test_tag_theorems_ignores_small_n():
    """Test indices below 5 have no family."""
    assert tag_theorems(3, [_zero_report(3, CongruenceClass(1, 0), 0)]) == 0


def test_atlas_add_requires_starting_classes(shallow_limits):
    """Test reports must cover the starting residues in order."""
    atlas = Atlas()
    reports = classify_n(5, shallow_limits)
    with pytest.raises(DomainError):
        atlas.add(5, list(reversed(reports)))
    atlas.add(5, reports)
    assert 5 in atlas
    assert atlas.n_values == [5]


def test_count_zeros(small_atlas):
    """Test zero leaves per n."""
    assert count_zeros(small_atlas, 4) == 0
    assert count_zeros(small_atlas, 5) == 2
    assert count_zeros(small_atlas, 99) == 0


def test_zero_counts_match_formula(small_atlas):
    """Test atlas counts against the closed-form count for n <= 12."""
    records = check_zero_counts(small_atlas)
    assert len(records) == 12
    assert all_passed(records)


def test_atlas_file_round_trip(small_atlas, atlas_file):
    """Test JSON lines write and read."""
    lines = atlas_file.read_text(encoding="utf-8").splitlines()
    first = json.loads(lines[0])
    assert first["n"] == 1
    assert set(first) == {
        "n",
        "log_modulus",
        "residue",
        "verdict",
        "v_or_c",
        "zero_bits_hex",
        "witness_depth",
        "status",
    }
    restored = Atlas.read(atlas_file)
    assert restored.n_values == small_atlas.n_values
    assert restored.zeros_by_n() == small_atlas.zeros_by_n()


def test_atlas_merge(small_atlas, shallow_limits):
    """Test merging replaces and adds entries."""
    atlas = Atlas()
    atlas.add(13, classify_n(13, shallow_limits))
    atlas.merge(small_atlas)
    assert atlas.n_values == list(range(1, 14))


def test_scan_zero_bitruns(small_atlas):
    """Test one run per zero, bounded by the witness depth."""
    runs = scan_zero_bitruns(small_atlas)
    assert len(runs) == sum(len(z) for z in small_atlas.zeros_by_n().values())
    assert all(0 <= run.longest_run <= run.witness_depth for run in runs)


def test_offset_relationship_one_zero_per_class(small_atlas):
    """Test P_9 has one zero in each class mod 4, P_1 having none."""
    rows = offset_relationship(small_atlas, 3, 1)
    assert len(rows) == 4
    assert all(not row.offset_has_zero for row in rows)
    assert all_passed(check_offset_relationship(small_atlas, 3, 1))


def test_offset_relationship_classifies_missing_offset(small_atlas, shallow_limits):
    """Test P_delta is classified when the atlas lacks it."""
    atlas = Atlas()
    atlas.add(9, small_atlas.reports[9])
    rows = offset_relationship(atlas, 3, 1, shallow_limits)
    assert [row.zeros for row in rows] == [1, 1, 1, 1]


def test_offset_relationship_needs_the_index(small_atlas):
    """Test a missing 2^e + delta is an error."""
    with pytest.raises(DomainError):
        offset_relationship(small_atlas, 5, 1)


def test_atlas_summary(small_atlas):
    """Test summary rows carry counts and the starting modulus."""
    rows = atlas_summary(small_atlas)
    assert [row["n"] for row in rows] == list(range(1, 13))
    row = rows[4]
    assert row["n"] == 5
    assert row["start_modulus"] == 2
    assert row["zeros"] == row["expected"] == 2
    assert row["theorem_backed"] <= row["zeros"]
    assert all(r["unresolved"] == 0 for r in rows)
