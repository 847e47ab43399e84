"""The zero atlas: per-n class reports, their file format and what is read off them."""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Optional, Tuple, Union

from .dyadic import longest_zero_run
from .errors import DomainError
from .golden import load_reference
from .verify import SKIP, CheckRecord, check, theorem_prediction
from .zeros import (
    ClassReport,
    CongruenceClass,
    ZeroLimits,
    ZeroRecord,
    ZeroStatus,
    classify_index,
    report_from_records,
    report_to_records,
    starting_classes,
)

logger = logging.getLogger("sb_stirling.atlas")


def tag_theorems(n: int, reports: Iterable[ClassReport]) -> int:
    """Mark zeros covered by a proven family as theorem-backed.

    A zero is tagged only when it was extracted in the family's own class
    and its fitted c equals the family's constant.

    Returns:
        Number of zeros tagged
    """
    tagged = 0
    for report in reports:
        for zero in report.zero_records():
            prediction = theorem_prediction(n, zero.cls)
            if prediction is None:
                continue
            family, c = prediction
            if c == zero.c:
                zero.status = ZeroStatus.THEOREM_BACKED
                zero.theorem = family
                tagged += 1
            else:
                logger.warning(f"P_{n}: class {zero.cls} fitted c={zero.c} but {family} predicts {c}")
    return tagged


def classify_n(n: int, limits: Optional[ZeroLimits] = None, tag: bool = True) -> List[ClassReport]:
    reports = classify_index(n, limits)
    if tag:
        tag_theorems(n, reports)
    return reports


@dataclass(slots=True)
class Atlas:
    """Class reports per n, each list covering the starting residues in order."""

    reports: Dict[int, List[ClassReport]] = field(default_factory=dict)

    def add(self, n: int, reports: List[ClassReport]) -> None:
        expected = starting_classes(n)
        if [r.cls for r in reports] != expected:
            raise DomainError(f"reports for n={n} do not cover the starting classes mod 2^{expected[0].log_modulus}")
        self.reports[n] = reports

    @property
    def n_values(self) -> List[int]:
        return sorted(self.reports)

    def __contains__(self, n: int) -> bool:
        return n in self.reports

    def zeros(self, n: int) -> List[ZeroRecord]:
        return [z for report in self.reports.get(n, []) for z in report.zero_records()]

    def zeros_by_n(self) -> Dict[int, List[ZeroRecord]]:
        return {n: self.zeros(n) for n in self.n_values}

    def unresolved(self, n: int) -> List[ClassReport]:
        return [u for report in self.reports.get(n, []) for u in report.unresolved()]

    def to_records(self) -> Iterator[Dict[str, Any]]:
        for n in self.n_values:
            for report in self.reports[n]:
                yield from report_to_records(n, report)

    @classmethod
    def from_records(cls, records: Iterable[Dict[str, Any]]) -> "Atlas":
        by_n: Dict[int, List[Dict[str, Any]]] = {}
        for record in records:
            by_n.setdefault(record["n"], []).append(record)
        atlas = cls()
        for n, lines in by_n.items():
            it = iter(lines)
            reports = [report_from_records(it) for _ in starting_classes(n)]
            atlas.add(n, reports)
        return atlas

    def write(self, path: Union[str, Path]) -> None:
        """Write one JSON object per line, n ascending, each tree in preorder."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as f:
            for record in self.to_records():
                f.write(json.dumps(record) + "\n")

    @classmethod
    def read(cls, path: Union[str, Path]) -> "Atlas":
        with Path(path).open(encoding="utf-8") as f:
            return cls.from_records(json.loads(line) for line in f if line.strip())

    def merge(self, other: "Atlas") -> None:
        for n in other.n_values:
            self.reports[n] = other.reports[n]


def count_zeros(atlas: Atlas, n: int) -> int:
    """Zero leaves of P_n; unresolved leaves are left out and logged."""
    unresolved = atlas.unresolved(n)
    if unresolved:
        logger.warning(f"P_{n}: {len(unresolved)} unresolved classes not counted")
    return len(atlas.zeros(n))


def expected_zero_count(n: int, exceptions: Optional[Mapping[int, int]] = None) -> int:
    """2[(n-1)/4], less 2 when n = 13 mod 16, less the recorded exceptions."""
    if n < 1:
        raise DomainError(f"index n must be positive, got {n}")
    if exceptions is None:
        exceptions = {int(k): v for k, v in load_reference()["zero_count_exceptions"].items()}
    count = 2 * ((n - 1) // 4)
    if n % 16 == 13:
        count -= 2
    return count - exceptions.get(n, 0)


def check_zero_counts(atlas: Atlas) -> List[CheckRecord]:
    records = []
    for n in atlas.n_values:
        found = count_zeros(atlas, n)
        expected = expected_zero_count(n)
        unresolved = len(atlas.unresolved(n))
        records.append(
            check(
                "zero-count",
                found == expected and not unresolved,
                f"atlas {found} expected {expected} unresolved {unresolved}",
                n=n,
            )
        )
    return records


@dataclass(frozen=True, slots=True)
class BitRun:
    n: int
    cls: CongruenceClass
    longest_run: int
    witness_depth: int


def scan_zero_bitruns(atlas: Atlas) -> List[BitRun]:
    """Longest run of 0-bits in the extracted bits of every zero."""
    runs = []
    for n in atlas.n_values:
        for zero in atlas.zeros(n):
            run = longest_zero_run(zero.zero_bits, zero.witness_depth)
            runs.append(BitRun(n, zero.cls, run, zero.witness_depth))
    return runs


@dataclass(frozen=True, slots=True)
class OffsetRow:
    cls: CongruenceClass
    zeros: int
    offset_has_zero: bool


def offset_relationship(
    atlas: Atlas, e: int, delta: int, limits: Optional[ZeroLimits] = None
) -> List[OffsetRow]:
    """Zeros of P_(2^e + delta) per class mod 2^(e-1), next to whether P_delta has one there.

    P_delta is classified on the fly when the atlas lacks it.
    """
    if e < 1 or delta < 1:
        raise DomainError(f"need e >= 1 and delta >= 1, got e={e}, delta={delta}")
    n = (1 << e) + delta
    if n not in atlas:
        raise DomainError(f"atlas has no entry for n={n}")
    if delta in atlas:
        offset_zeros = atlas.zeros(delta)
    else:
        offset_zeros = [z for report in classify_n(delta, limits, tag=False) for z in report.zero_records()]
    zeros = atlas.zeros(n)
    rows = []
    for p in range(1 << (e - 1)):
        cls = CongruenceClass(e - 1, p)
        count = sum(1 for z in zeros if cls.contains(z.zero_bits.residue))
        has_zero = any(cls.contains(z.zero_bits.residue) for z in offset_zeros)
        rows.append(OffsetRow(cls, count, has_zero))
    return rows


def check_offset_relationship(
    atlas: Atlas, e: int, delta: int, limits: Optional[ZeroLimits] = None
) -> List[CheckRecord]:
    """One zero in every class where P_delta has none, except the recorded exceptions."""
    n = (1 << e) + delta
    known: Dict[Tuple[int, int], int] = {
        (x["log_modulus"], x["residue"]): x["zeros"]
        for x in load_reference()["offset_exceptions"]
        if x["n"] == n
    }
    records = []
    for row in offset_relationship(atlas, e, delta, limits):
        params = dict(n=n, log_modulus=row.cls.log_modulus, residue=row.cls.residue)
        key = (row.cls.log_modulus, row.cls.residue)
        if row.offset_has_zero:
            records.append(CheckRecord("offset", params, SKIP, f"P_{delta} has a zero here; {row.zeros} zeros"))
        elif key in known:
            records.append(
                check("offset:exception", row.zeros == known[key], f"{row.zeros} zeros, recorded {known[key]}", **params)
            )
        else:
            records.append(check("offset", row.zeros == 1, f"{row.zeros} zeros", **params))
    return records


def atlas_summary(atlas: Atlas) -> List[Dict[str, Any]]:
    """Per n: zero count, expected count, theorem-backed zeros and unresolved classes."""
    rows = []
    for n in atlas.n_values:
        zeros = atlas.zeros(n)
        rows.append(
            {
                "n": n,
                "start_modulus": 1 << starting_classes(n)[0].log_modulus,
                "zeros": len(zeros),
                "expected": expected_zero_count(n),
                "theorem_backed": sum(1 for z in zeros if z.status is ZeroStatus.THEOREM_BACKED),
                "unresolved": len(atlas.unresolved(n)),
            }
        )
    return rows
