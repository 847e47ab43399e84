#!/usr/bin/env python3
"""Command-line front end: evaluation, zero atlases, golden comparison, verification and limits."""

import argparse
import logging
import logging.handlers
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

from rich import print as rprint
from rich.markup import escape

from ..atlas import Atlas, atlas_summary, check_offset_relationship, check_zero_counts, scan_zero_bitruns
from ..atlas_builder import AtlasBuilder
from ..config import RunConfig, resolve_config
from ..dyadic import TwoAdic, backwards_binary, exact_valuation, lg, valuation_of
from ..errors import (
    ConfigError,
    DomainError,
    GoldenDataError,
    PrecisionUnderflowError,
    StirlingError,
    UnresolvedError,
    ZeroValuationError,
)
from ..golden import GOLDEN_ALIASES, compare_with_golden, golden_sets, load_expansion_reference, load_golden, load_reference
from ..identities import (
    check_phi_unit_criterion,
    check_periodicity,
    check_stirling_approximation,
    check_unit_criterion,
    run_identity_suite,
)
from ..kernel import U_2inf, eval_P, eval_P_inf, eval_Phi, stirling2
from ..limits import (
    ExpansionRow,
    RepeatingArgument,
    check_limit_zero_classes,
    check_subsequence_convergence,
    format_expansion_table,
    limit_expansion_table,
    periodic_points,
    run_congruence_point,
    run_periodic_point,
)
from ..verify import (
    FAIL,
    PASS,
    SKIP,
    CheckRecord,
    ValuationCorrection,
    all_passed,
    check,
    verify_power_of_two_remark,
    verify_single_zero_family,
    verify_small_offset_family,
    verify_split_zero_family,
    verify_valuation_formula,
    write_report,
)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_UNRESOLVED = 3

MAX_SHOWN = 20

SUITES = [
    "small-offset",
    "single",
    "double",
    "identities",
    "valuation-formula",
    "unit-criterion",
    "periodicity",
    "approx",
    "phi",
    "remark",
]

SUITE_ALIASES = {"four": "small-offset", "cgen": "valuation-formula", "p0": "unit-criterion", "per": "periodicity"}

LIMIT_ACTIONS = ["table", "congruence", "periodic", "subsequences", "zero-classes"]

LIMIT_ALIASES = {"table1": "table", "delthm": "congruence", "specconj": "periodic", "dconj": "subsequences"}


def setup_logger(log_file: Optional[str], log_level: str) -> logging.Logger:
    """Set up and configure logger."""
    logger = logging.getLogger("sb_stirling")
    logger.setLevel(getattr(logging, log_level.upper()))
    logger.propagate = False
    logger.handlers.clear()

    # Create console handler
    console_handler = logging.StreamHandler()
    console_formatter = logging.Formatter('%(levelname)s: %(message)s')
    console_handler.setFormatter(console_formatter)
    logger.addHandler(console_handler)

    # Create file handler if log file specified
    if log_file:
        file_handler = logging.handlers.RotatingFileHandler(
            log_file,
            maxBytes=10000,  # 10KB per file
            backupCount=3    # Keep 3 backup files
        )
        file_formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')
        file_handler.setFormatter(file_formatter)
        logger.addHandler(file_handler)

    return logger


def parse_range(text: str) -> List[int]:
    """Integers from "5", "17..32" or a comma list of either."""
    values: List[int] = []
    try:
        for part in text.split(","):
            part = part.strip()
            if ".." in part:
                low, high = part.split("..", 1)
                lo, hi = int(low), int(high)
                if hi < lo:
                    raise argparse.ArgumentTypeError(f"empty range '{part}'")
                values.extend(range(lo, hi + 1))
            else:
                values.append(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid range '{text}', expected e.g. 5, 17..32 or 1,4..6")
    return values


def _print_value(label: str, value: TwoAdic) -> None:
    rprint(f"[bold]{escape(label)}[/bold] mod 2^{value.prec}")
    rprint(f"  residue: 0x{value.residue:x}")
    rprint(f"  bits:    {backwards_binary(value, value.prec)}")
    rprint(f"  nu:      {escape(str(valuation_of(value)))}")


def _summarise(records: Sequence[CheckRecord], title: str) -> None:
    passed = sum(1 for r in records if r.status == PASS)
    failed = [r for r in records if r.status == FAIL]
    other = len(records) - passed - len(failed)
    for record in failed[:MAX_SHOWN]:
        rprint(f"[red]FAIL[/red] {escape(record.check)} {escape(str(record.params))} {escape(record.detail)}")
    if len(failed) > MAX_SHOWN:
        rprint(f"[red]... {len(failed) - MAX_SHOWN} more failures[/red]")
    colour = "green" if not failed else "red"
    rprint(f"[{colour}]{title}: {passed} passed, {len(failed)} failed, {other} other[/{colour}]")


def _finish(records: List[CheckRecord], title: str, config: RunConfig) -> int:
    _summarise(records, title)
    if config.report:
        write_report(Path(config.report), records)
        rprint(f"Report written to {escape(config.report)}")
    return EXIT_OK if all_passed(records) else EXIT_FAIL


def cmd_eval(args: argparse.Namespace, config: RunConfig, logger: logging.Logger) -> int:
    prec = config.prec
    if args.uinf:
        _print_value("U(2^inf!)", U_2inf(prec))
        return EXIT_OK
    if args.n is None:
        raise DomainError("--n is required unless --uinf is given")
    n = args.n
    if args.phi is not None:
        phi = eval_Phi(n, args.phi)
        rprint(f"[bold]Phi_{n}({args.phi})[/bold] = {phi.value}")
        rprint(f"  nu:      {escape(str(phi.valuation))}")
        return EXIT_OK
    if args.x is None:
        raise DomainError("--x is required")
    if args.stirling:
        value = stirling2(args.x, n)
        rprint(f"[bold]S({args.x},{n})[/bold] = {value}")
        rprint(f"  nu:      {escape(str(exact_valuation(value)))}")
        return EXIT_OK
    if args.limit:
        _print_value(f"lim_e P_(2^e+{n})({args.x})", eval_P_inf(n, args.x, prec))
        return EXIT_OK
    _print_value(f"P_{n}({args.x})", eval_P(n, args.x, prec))
    return EXIT_OK


def cmd_zeros(args: argparse.Namespace, config: RunConfig, logger: logging.Logger) -> int:
    existing = None
    if args.resume and config.atlas and Path(config.atlas).exists():
        existing = Atlas.read(config.atlas)
        logger.info(f"Resuming from {config.atlas} with {len(existing.n_values)} indices")
    with AtlasBuilder(config.workers, config.limits(), config.cache_dir, logger) as builder:
        atlas = builder.build_atlas(args.n, tag=not args.no_tag, existing=existing)

    if config.atlas:
        full = existing or Atlas()
        full.merge(atlas)
        full.write(config.atlas)
        rprint(f"Atlas written to {escape(config.atlas)}")

    unresolved = 0
    for row in atlas_summary(atlas):
        unresolved += row["unresolved"]
        marker = "" if row["zeros"] == row["expected"] else " [yellow](formula differs)[/yellow]"
        rprint(
            f"n={row['n']:>3} mod {row['start_modulus']:>3}: {row['zeros']:>3} zeros"
            f" (expected {row['expected']}, theorem-backed {row['theorem_backed']},"
            f" unresolved {row['unresolved']}){marker}"
        )

    if args.bitruns:
        for run in scan_zero_bitruns(atlas):
            rprint(f"n={run.n:>3} class {run.cls}: longest 0-run {run.longest_run} of {run.witness_depth} bits")

    if args.offsets:
        for n in atlas.n_values:
            if n < 3:
                continue
            e = lg(n - 1)
            delta = n - (1 << e)
            _summarise(check_offset_relationship(atlas, e, delta, config.limits()), f"offset n={n}")

    if unresolved:
        rprint(f"[yellow]{unresolved} classes unresolved within cap {config.cap}[/yellow]")
        return EXIT_UNRESOLVED
    if args.check_counts:
        return _finish(check_zero_counts(atlas), "zero counts", config)
    return EXIT_OK


def cmd_compare(args: argparse.Namespace, config: RunConfig, logger: logging.Logger) -> int:
    if not config.atlas:
        raise DomainError("--atlas is required")
    try:
        atlas = Atlas.read(config.atlas)
    except OSError as e:
        raise GoldenDataError(f"Cannot read atlas {config.atlas}: {e}") from e
    names = golden_sets(config.golden)
    if args.golden_file and len(names) != 1:
        raise GoldenDataError("--golden-file needs a single --golden set")
    records: List[CheckRecord] = []
    zeros = atlas.zeros_by_n()
    for name in names:
        table = load_golden(name, args.golden_file)
        records.extend(compare_with_golden(table, zeros))
    return _finish(records, "golden comparison", config)


def _load_or_build_atlas(n_values: Sequence[int], config: RunConfig, logger: logging.Logger) -> Atlas:
    if config.atlas and Path(config.atlas).exists():
        atlas = Atlas.read(config.atlas)
        missing = [n for n in n_values if n not in atlas]
        if not missing:
            return atlas
        logger.info(f"Atlas {config.atlas} lacks {missing}; classifying them")
    else:
        atlas, missing = Atlas(), list(n_values)
    with AtlasBuilder(config.workers, config.limits(), config.cache_dir, logger) as builder:
        atlas.merge(builder.build_atlas(missing))
    return atlas


def _valuation_formula(args: argparse.Namespace, config: RunConfig, logger: logging.Logger) -> List[CheckRecord]:
    n_values = args.n or list(range(1, 33))
    atlas = _load_or_build_atlas(n_values, config, logger)
    corrections = {
        c["n"]: ValuationCorrection(c["cap"], c["centre"]) for c in load_reference()["valuation_corrections"]
    }
    records: List[CheckRecord] = []
    for n in n_values:
        if atlas.unresolved(n):
            records.append(CheckRecord("valuation-formula", {"n": n}, SKIP, "atlas has unresolved classes"))
            continue
        result = verify_valuation_formula(n, atlas.zeros(n), args.samples, config.seed + n, corrections)
        records.extend(result.records)
        records.append(
            check(
                "valuation-formula:skip-rate",
                result.skip_rate < 0.01,
                f"skip rate {result.skip_rate:.4f}",
                n=n,
            )
        )
    return records


def cmd_verify(args: argparse.Namespace, config: RunConfig, logger: logging.Logger) -> int:
    suite = SUITE_ALIASES.get(args.suite, args.suite)
    n_values = args.n or list(range(5, 65))
    runners: Dict[str, Callable[[], List[CheckRecord]]] = {
        "small-offset": lambda: verify_small_offset_family(
            args.e or range(2, 9), args.delta or (1, 2, 3, 4), args.d_max or 6, limits=config.limits()
        ),
        "single": lambda: verify_single_zero_family(n_values),
        "double": lambda: verify_split_zero_family(n_values),
        "identities": lambda: run_identity_suite(args.n_max or 40, args.d_max or 10, args.e_max or 12),
        "valuation-formula": lambda: _valuation_formula(args, config, logger),
        "unit-criterion": lambda: check_unit_criterion(args.n_max or 64, args.x_max or 256),
        "periodicity": lambda: check_periodicity(args.n_max or 64, args.t_max or 20),
        "approx": lambda: check_stirling_approximation(args.n_max or 20, args.x_max or 24),
        "phi": lambda: check_phi_unit_criterion(args.e_max or 7),
        "remark": lambda: verify_power_of_two_remark(args.e or range(2, 8)),
    }
    logger.info(f"Running verification suite {suite}")
    return _finish(runners[suite](), f"suite {suite}", config)


def _expansion_records(rows: Sequence[ExpansionRow], find_n0: bool) -> List[CheckRecord]:
    reference = {row["e"]: row for row in load_expansion_reference()["rows"]}
    records = []
    for row in rows:
        known = reference.get(row.e)
        if known is None or len(row.bits) != len(known["bits"]):
            continue
        passed = row.bits == known["bits"] and row.difference_value == known["difference"]
        if find_n0:
            passed = passed and row.n0 == known["n0"]
        records.append(check("expansion-table", passed, f"got {row.to_dict()} expected {known}", e=row.e))
    return records


def cmd_limits(args: argparse.Namespace, config: RunConfig, logger: logging.Logger) -> int:
    action = LIMIT_ALIASES.get(args.action, args.action)
    if action == "table":
        rows = limit_expansion_table(args.e or range(4, 16), args.bits, args.find_n0)
        rprint(escape(format_expansion_table(rows)))
        return _finish(_expansion_records(rows, args.find_n0), "expansion table", config)

    if action == "zero-classes":
        if not args.delta:
            raise DomainError("--delta is required")
        records: List[CheckRecord] = []
        for delta in args.delta:
            records.extend(check_limit_zero_classes(delta, args.x or range(64, 128)))
        _summarise(records, "limit zero classes")
        return EXIT_OK

    if action == "subsequences":
        x = RepeatingArgument(args.d[0] if args.d else 2, args.i0, args.prefix, args.block)
        report = check_subsequence_convergence(x, args.e0, args.j_max, args.bits)
        rprint(f"truncation n = {report.truncation}")
        for row in report.rows:
            diff = "" if row.difference is None else f"  nu(diff) = {row.difference}"
            rprint(f"j={row.j:>2} e={row.e:>3} {row.bits}...{escape(diff)}")
        record = check("subsequences", report.monotone, "differences not monotone", i0=args.i0, e0=args.e0)
        return _finish([record], "subsequence convergence", config)

    with AtlasBuilder(config.workers, config.limits(), config.cache_dir, logger) as builder:
        if action == "congruence":
            points = [
                (e, delta, x)
                for e in (args.e or range(2, 13))
                for delta in (args.delta or range(0, 32))
                if delta < (1 << e)
                for x in (args.x or range(0, 65))
            ]
            records = builder.run_grid(run_congruence_point, points)
        else:
            points = periodic_points(args.i0, args.d or range(2, 8), args.e or range(6, 10), args.residues)
            records = builder.run_grid(run_periodic_point, points)
    return _finish(records, f"limits {action}", config)


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file with the same keys as the flags")
    common.add_argument("--workers", type=int, help="Worker processes (env SB_STIRLING_WORKERS)")
    common.add_argument("--cache-dir", help="Per-n atlas cache directory (env SB_STIRLING_CACHE_DIR)")
    common.add_argument("--prec", type=int, help="Default precision in bits (default: 64)")
    common.add_argument("--cap", type=int, help="Escalation cap in bits (default: 4096)")
    common.add_argument("--depth", type=int, help="Witness depth for extracted zeros (default: 48)")
    common.add_argument("--max-log-modulus", type=int, help="Deepest class split (default: 12)")
    common.add_argument("--report", help="Write check records as JSON lines")
    common.add_argument("--seed", type=int, help="Random seed for sampled checks")
    common.add_argument("--log-file", help="Log file path (optional)")
    common.add_argument(
        "--log-level",
        choices=["debug", "info", "warning", "error", "critical"],
        default="warning",
        help="Set the logging level (default: warning)"
    )
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(
        prog="sb-stirling",
        description="2-adic partial Stirling functions: evaluation, zeros and verification"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", parents=[common], help="Evaluate P_n(x), Phi_n(s), S(x,n) or U(2^inf!)")
    p.add_argument("--n", type=int, help="Index n")
    p.add_argument("--x", type=int, help="Argument x")
    p.add_argument("--phi", type=int, metavar="S", help="Print Phi_n(S) instead")
    p.add_argument("--stirling", action="store_true", help="Print the Stirling number S(x, n)")
    p.add_argument("--uinf", action="store_true", help="Print the odd part of (2^inf)!")
    p.add_argument("--limit", action="store_true", help="Evaluate lim_e P_(2^e+n)(x)")
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("zeros", parents=[common], help="Build a zero atlas")
    p.add_argument("--n", type=parse_range, required=True, help="Indices, e.g. 17..32")
    p.add_argument("--out", dest="atlas", help="Atlas output file (JSON lines)")
    p.add_argument("--resume", action="store_true", help="Reuse indices already in the output atlas")
    p.add_argument("--no-tag", action="store_true", help="Do not mark theorem-backed zeros")
    p.add_argument("--check-counts", action="store_true", help="Compare zero counts with the count formula")
    p.add_argument("--bitruns", action="store_true", help="Report the longest 0-run in each zero")
    p.add_argument("--offsets", action="store_true", help="Compare zeros of P_(2^e+d) with those of P_d")
    p.set_defaults(handler=cmd_zeros)

    p = sub.add_parser("compare", parents=[common], help="Compare an atlas with the golden tables")
    p.add_argument("--atlas", help="Atlas file")
    p.add_argument("--golden", choices=["mod8", "mod16", "all", *GOLDEN_ALIASES], help="Golden set (default: all)")
    p.add_argument("--golden-file", help="Picture file to use instead of the shipped one")
    p.set_defaults(handler=cmd_compare)

    p = sub.add_parser("verify", parents=[common], help="Run a verification suite")
    p.add_argument("suite", choices=SUITES + list(SUITE_ALIASES))
    p.add_argument("--e", type=parse_range, help="Exponents e")
    p.add_argument("--delta", type=parse_range, help="Offsets delta")
    p.add_argument("--n", type=parse_range, help="Indices n")
    p.add_argument("--n-max", type=int)
    p.add_argument("--d-max", type=int)
    p.add_argument("--e-max", type=int)
    p.add_argument("--x-max", type=int)
    p.add_argument("--t-max", type=int)
    p.add_argument("--samples", type=int, default=1000, help="Random z per n for the valuation formula")
    p.add_argument("--atlas", help="Atlas file for the valuation formula")
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("limits", parents=[common], help="Experiments on P_(2^e+delta) as e grows")
    p.add_argument("action", choices=LIMIT_ACTIONS + list(LIMIT_ALIASES))
    p.add_argument("--e", type=parse_range)
    p.add_argument("--delta", type=parse_range)
    p.add_argument("--x", type=parse_range)
    p.add_argument("--d", type=parse_range, help="Periods d")
    p.add_argument("--i0", type=int, default=5)
    p.add_argument("--residues", type=int, default=16, help="Prefixes per (d, e)")
    p.add_argument("--bits", type=int, default=12)
    p.add_argument("--find-n0", action="store_true", help="Also search the stable index n0 (slow for e >= 13)")
    p.add_argument("--prefix", type=int, default=0, help="Bits below i0 of the periodic argument")
    p.add_argument("--block", type=int, default=2, help="Repeating block of the periodic argument, lowest bit first")
    p.add_argument("--e0", type=int, default=6)
    p.add_argument("--j-max", type=int, default=4)
    p.set_defaults(handler=cmd_limits)

    return parser


def _config_flags(args: argparse.Namespace) -> Dict[str, object]:
    keys = ["workers", "cache_dir", "prec", "cap", "depth", "max_log_modulus", "report", "seed", "atlas", "golden"]
    return {key: getattr(args, key, None) for key in keys}


def exit_code_for(error: StirlingError) -> int:
    if isinstance(error, UnresolvedError):
        return EXIT_UNRESOLVED
    if isinstance(error, (DomainError, ConfigError, GoldenDataError, PrecisionUnderflowError, ZeroValuationError)):
        return EXIT_USAGE
    return EXIT_FAIL


def main(argv: Optional[Sequence[str]] = None):
    """Main entry point for the CLI."""
    parser = build_parser()
    args = parser.parse_args(argv)

    # Setup logger
    logger = setup_logger(args.log_file, args.log_level)

    try:
        config = resolve_config(args.config, _config_flags(args))
        code = args.handler(args, config, logger)
    except KeyboardInterrupt:
        rprint("\n[yellow]Run cancelled by user[/yellow]")
        sys.exit(EXIT_FAIL)
    except StirlingError as e:
        rprint(f"[red]Error: {escape(str(e))}[/red]")
        sys.exit(exit_code_for(e))
    sys.exit(code)


if __name__ == "__main__":
    main()
