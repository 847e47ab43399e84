"""Tests for the sb-stirling command line."""

import argparse
import json
from unittest.mock import patch

import pytest

from sb_stirling.atlas import Atlas
from sb_stirling.atlas_cli.cli import (
    EXIT_FAIL,
    EXIT_OK,
    EXIT_UNRESOLVED,
    EXIT_USAGE,
    exit_code_for,
    main,
    parse_range,
)
from sb_stirling.errors import (
    ConfigError,
    PatternMismatchError,
    PrecisionUnderflowError,
    UnresolvedError,
)

SHALLOW = ["--depth", "16", "--cap", "512", "--max-log-modulus", "8"]


def run_cli(argv):
    with pytest.raises(SystemExit) as exc_info:
        main(argv)
    return exc_info.value.code


def test_parse_range():
    """Test single values, ranges and comma lists."""
    assert parse_range("5") == [5]
    assert parse_range("3..6") == [3, 4, 5, 6]
    assert parse_range("1, 4..5,9") == [1, 4, 5, 9]
    with pytest.raises(argparse.ArgumentTypeError):
        parse_range("6..3")
    with pytest.raises(argparse.ArgumentTypeError):
        parse_range("a..b")


def test_exit_codes():
    """Test the error class to exit code map."""
    assert exit_code_for(UnresolvedError("cap")) == EXIT_UNRESOLVED
    assert exit_code_for(ConfigError("bad")) == EXIT_USAGE
    assert exit_code_for(PrecisionUnderflowError("short")) == EXIT_USAGE
    assert exit_code_for(PatternMismatchError("c")) == EXIT_FAIL


def test_eval_uinf(clean_env, capsys):
    """Test the low 13 bits of U(2^inf!)."""
    assert run_cli(["eval", "--uinf", "--prec", "13"]) == EXIT_OK
    assert "1101000101101" in capsys.readouterr().out


def test_eval_p23(clean_env, capsys):
    """Test nu(P_23(14)) = 4."""
    assert run_cli(["eval", "--n", "23", "--x", "14", "--prec", "16"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "P_23(14)" in out
    assert "nu:      4" in out


def test_eval_stirling(clean_env, capsys):
    """Test S(5, 3) = 25."""
    assert run_cli(["eval", "--n", "3", "--x", "5", "--stirling"]) == EXIT_OK
    assert "= 25" in capsys.readouterr().out


def test_eval_missing_argument(clean_env, capsys):
    """Test a missing --x is a usage error."""
    assert run_cli(["eval", "--n", "5"]) == EXIT_USAGE
    assert "--x is required" in capsys.readouterr().out


def test_invalid_config_flag(clean_env):
    """Test workers < 1 is rejected before any work."""
    assert run_cli(["eval", "--uinf", "--workers", "0"]) == EXIT_USAGE


def test_unknown_suite(clean_env):
    """Test argparse rejects an unknown suite."""
    assert run_cli(["verify", "no-such-suite"]) == 2


def test_zeros_writes_atlas(clean_env, tmp_path, capsys):
    """Test n = 1..4 have no zeros and the atlas file is written."""
    out_path = tmp_path / "atlas.jsonl"
    code = run_cli(["zeros", "--n", "1..4", "--out", str(out_path), "--check-counts"] + SHALLOW)
    assert code == EXIT_OK
    atlas = Atlas.read(out_path)
    assert atlas.n_values == [1, 2, 3, 4]
    assert all(not atlas.zeros(n) for n in atlas.n_values)
    assert "zero counts: 4 passed" in capsys.readouterr().out


def test_zeros_resume(clean_env, atlas_file):
    """Test resuming keeps earlier indices in the output atlas."""
    code = run_cli(["zeros", "--n", "13", "--out", str(atlas_file), "--resume"] + SHALLOW)
    assert code == EXIT_OK
    assert Atlas.read(atlas_file).n_values == list(range(1, 14))


def test_zeros_unresolved(clean_env):
    """Test a class that needs splitting beyond the limit exits with 3."""
    assert run_cli(["zeros", "--n", "3", "--max-log-modulus", "0"]) == EXIT_UNRESOLVED


def test_compare_requires_atlas(clean_env, tmp_path):
    """Test a missing or unreadable atlas is a usage error."""
    assert run_cli(["compare"]) == EXIT_USAGE
    assert run_cli(["compare", "--atlas", str(tmp_path / "missing.jsonl")]) == EXIT_USAGE


def test_compare_skips_absent_rows(clean_env, atlas_file, capsys):
    """Test an atlas without golden rows passes with every row skipped."""
    assert run_cli(["compare", "--atlas", str(atlas_file), "--golden", "mod8"]) == EXIT_OK
    assert "0 failed, 16 other" in capsys.readouterr().out


def test_verify_remark_report(clean_env, tmp_path):
    """Test a suite run writes its check records."""
    report = tmp_path / "remark.jsonl"
    assert run_cli(["verify", "remark", "--e", "2..4", "--report", str(report)]) == EXIT_OK
    lines = report.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 3
    assert all(json.loads(line)["status"] == "pass" for line in lines)


def test_limits_congruence(clean_env, capsys):
    """Test a small congruence grid."""
    code = run_cli(["limits", "congruence", "--e", "3..4", "--delta", "0..2", "--x", "0..4"])
    assert code == EXIT_OK
    assert "30 passed" in capsys.readouterr().out


def test_limits_table(clean_env, capsys):
    """Test two rows of the expansion table against the reference rows."""
    assert run_cli(["limits", "table", "--e", "4..5"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "011011101000" in out
    assert "expansion table: 2 passed" in out


def test_zeros_passes_config_to_builder(clean_env, monkeypatch):
    """Test worker count, limits and cache directory reach the builder."""
    monkeypatch.setenv("SB_STIRLING_CACHE_DIR", "/tmp/sb-cache")
    with patch("sb_stirling.atlas_cli.cli.AtlasBuilder") as builder_cls:
        builder = builder_cls.return_value.__enter__.return_value
        builder.build_atlas.return_value = Atlas()
        assert run_cli(["zeros", "--n", "5..6", "--workers", "3", "--no-tag"] + SHALLOW) == EXIT_OK
    workers, limits, cache_dir, _ = builder_cls.call_args.args
    assert workers == 3
    assert limits.depth == 16
    assert cache_dir == "/tmp/sb-cache"
    builder.build_atlas.assert_called_once_with([5, 6], tag=False, existing=None)


@pytest.mark.parametrize(
    "argv",
    [
        ["verify", "four", "--e", "2", "--d-max", "3"] + SHALLOW,
        ["verify", "single", "--n", "9..12"],
        ["verify", "double", "--n", "29"],
        ["verify", "identities", "--n-max", "12", "--d-max", "4", "--e-max", "6"],
        ["verify", "p0", "--n-max", "8", "--x-max", "16"],
        ["verify", "per", "--n-max", "8", "--t-max", "6"],
        ["verify", "approx", "--n-max", "6", "--x-max", "8"],
    ],
)
def test_verify_short_suite_names(clean_env, argv):
    """Test the short suite names run their suites."""
    assert run_cli(argv) == EXIT_OK


def test_verify_cgen(clean_env, atlas_file, capsys):
    """Test cgen runs the valuation formula on atlas indices without zeros."""
    code = run_cli(["verify", "cgen", "--atlas", str(atlas_file), "--n", "1..4", "--samples", "50"])
    assert code == EXIT_OK
    assert "suite valuation-formula" in capsys.readouterr().out


def test_limits_table1(clean_env, capsys):
    """Test table1 prints the expansion table."""
    assert run_cli(["limits", "table1", "--e", "4..5"]) == EXIT_OK
    assert "expansion table: 2 passed" in capsys.readouterr().out


def test_limits_delthm(clean_env, capsys):
    """Test delthm runs the congruence grid."""
    code = run_cli(["limits", "delthm", "--e", "3", "--delta", "0..1", "--x", "0..2"])
    assert code == EXIT_OK
    assert "6 passed" in capsys.readouterr().out


def test_limits_specconj(clean_env, capsys):
    """Test specconj runs the periodic-difference grid."""
    code = run_cli(["limits", "specconj", "--d", "2", "--e", "6..7", "--residues", "4"])
    assert code == EXIT_OK
    assert "limits periodic: 8 passed" in capsys.readouterr().out


def test_limits_dconj(clean_env, capsys):
    """Test dconj prints the subsequence rows."""
    code = run_cli(["limits", "dconj", "--d", "2", "--i0", "5", "--e0", "4", "--j-max", "2", "--bits", "8"])
    assert code in (EXIT_OK, EXIT_FAIL)
    out = capsys.readouterr().out
    assert "truncation n =" in out
    assert "j= 2 e=  8" in out


@pytest.mark.parametrize("name, layout", [("t2", "mod8"), ("t3", "mod16")])
def test_compare_golden_short_names(clean_env, atlas_file, capsys, name, layout):
    """Test t2 and t3 select the mod 8 and mod 16 tables."""
    assert run_cli(["compare", "--atlas", str(atlas_file), "--golden", name]) == EXIT_OK
    short = capsys.readouterr().out
    assert run_cli(["compare", "--atlas", str(atlas_file), "--golden", layout]) == EXIT_OK
    assert capsys.readouterr().out == short
