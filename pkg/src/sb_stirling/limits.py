"""Experiments on P_{2^e + delta} as e grows.

* the congruence between P_{2^e+delta}(x) and the all-j sum over U(2^e!)
* the expansion table of P_{2^e+1}(z_n), z_n = 3 (1 + 8 + ... + 8^n)
* periodic differences P_{2^(e+d)+1}(x+1) - P_{2^e+1}(x+1) for arguments
  whose bits repeat with period d
* convergence of the subsequences P_{2^(e0+dj)+1}(x)
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from .dyadic import (
    TwoAdic,
    Valuation,
    backwards_binary,
    exact_valuation,
    lg,
    rational_mod,
    valuation_of,
)
from .errors import DomainError
from .kernel import U_factorial_pow2, eval_allj_sum, eval_P, eval_P_stirling
from .verify import FAIL, PASS, CheckRecord
from .zeros import probe_nu

logger = logging.getLogger("sb_stirling.limits")

PRECONDITION = "precondition"
DIFFERS = "differs"
EXACT_PREC = 64


def limit_congruence_bound(e: int, delta: int, x: int) -> Optional[int]:
    """e - max(lg(x - delta) + 1, lg(delta) - 1), None when both terms are absent."""
    terms = []
    if x > delta:
        terms.append(lg(x - delta) + 1)
    if delta > 0:
        terms.append(lg(delta) - 1)
    if not terms:
        return None
    return e - max(terms)


@dataclass(slots=True)
class CongruenceResult:
    e: int
    delta: int
    x: int
    required: Optional[int]
    achieved: Valuation
    passed: bool

    def to_record(self) -> CheckRecord:
        margin = None
        if self.required is not None and self.achieved.is_finite:
            margin = self.achieved.value - self.required
        return CheckRecord(
            "congruence",
            {"e": self.e, "delta": self.delta, "x": self.x},
            PASS if self.passed else FAIL,
            f"required={self.required} achieved={self.achieved} margin={margin}",
        )


def check_limit_congruence(e: int, delta: int, x: int) -> CongruenceResult:
    """Compare P_{2^e+delta}(x) with (1/U(2^e!)) (1/delta!) sum_j C(delta, j) j^x."""
    if not 0 <= delta < (1 << e):
        raise DomainError(f"delta must satisfy 0 <= delta < 2^{e}, got {delta}")
    if x < 0:
        raise DomainError(f"x must be nonnegative, got {x}")
    required = limit_congruence_bound(e, delta, x)
    prec = EXACT_PREC if required is None else max(required, 1) + 8
    n = (1 << e) + delta
    left = eval_P_stirling(n, x, prec)
    allj = eval_allj_sum(delta, x) if delta else Fraction(1 if x == 0 else 0)
    right = rational_mod(allj, prec) * U_factorial_pow2(e, prec).inverse()
    achieved = valuation_of(left - right)
    if required is None:
        passed = not achieved.is_finite
    else:
        passed = achieved.ge(required)
    return CongruenceResult(e, delta, x, required, achieved, passed)


def congruence_points(e_values: Iterable[int], delta_max: int, x_max: int) -> List[Tuple[int, int, int]]:
    points = []
    for e in e_values:
        for delta in range(min(1 << e, delta_max + 1)):
            for x in range(x_max + 1):
                points.append((e, delta, x))
    return points


def run_congruence_point(point: Tuple[int, int, int]) -> CheckRecord:
    return check_limit_congruence(*point).to_record()


def z_value(count: int) -> int:
    """z_n = 3 * sum_{i=0..n} 8^i, bits 110110...11."""
    return 3 * sum(8**i for i in range(count + 1))


def stable_index(e: int, bits: int) -> int:
    """Smallest n for which z_n fixes the low ``bits`` bits of P_{2^e+1}(z_n).

    z_{n+1} - z_n has valuation 3n + 3, so periodicity fixes 3n + 4 - e bits.
    """
    return max(0, -(-(e + bits - 4) // 3))


@dataclass(slots=True)
class ExpansionRow:
    e: int
    bits: str
    difference: Optional[Valuation] = None
    n0: Optional[int] = None

    @property
    def difference_value(self) -> Optional[int]:
        """Difference valuation with an all-zero truncation shown as its precision."""
        if self.difference is None:
            return None
        return self.difference.value

    def to_dict(self) -> Dict[str, Any]:
        return {"e": self.e, "bits": self.bits, "n0": self.n0, "difference": self.difference_value}


def find_n0(e: int, bits: int) -> int:
    """Smallest n0 with the low bits of P_{2^e+1}(z_n) the same for every n >= n0."""
    n = stable_index(e, bits)
    target = eval_P((1 << e) + 1, z_value(n), bits)
    while n > 0 and eval_P((1 << e) + 1, z_value(n - 1), bits) == target:
        n -= 1
    return n


def limit_expansion_row(e: int, bits: int = 12, with_n0: bool = False) -> ExpansionRow:
    """One row of the expansion table of P_{2^e+1}(z_n)."""
    if e < 1:
        raise DomainError(f"e must be positive, got {e}")
    z = z_value(stable_index(e, bits))
    value = eval_P((1 << e) + 1, z, bits)
    row = ExpansionRow(e, backwards_binary(value, bits))
    if e > 3:
        earlier = eval_P((1 << (e - 3)) + 1, z, bits)
        row.difference = valuation_of(value - earlier)
    if with_n0:
        row.n0 = find_n0(e, bits)
    logger.info(f"Expansion row e={e}: {row.bits}")
    return row


def limit_expansion_table(e_values: Iterable[int], bits: int = 12, with_n0: bool = False) -> List[ExpansionRow]:
    return [limit_expansion_row(e, bits, with_n0) for e in e_values]


def format_expansion_table(rows: Sequence[ExpansionRow]) -> str:
    """Aligned text: e, bits, n0, difference valuation."""
    lines = [f"{'e':>3} | {'P(z_n)':<16} {'n0':>3} {'diff':>5}"]
    lines.append("-" * len(lines[0]))
    for row in rows:
        n0 = "" if row.n0 is None else str(row.n0)
        diff = "" if row.difference is None else str(row.difference_value)
        lines.append(f"{row.e:>3} | {row.bits + '...':<16} {n0:>3} {diff:>5}")
    return "\n".join(lines)


@dataclass(frozen=True, slots=True)
class RepeatingArgument:
    """A 2-adic integer whose bits repeat with period d from position i0.

    ``prefix`` holds the bits below i0 and ``block`` the d repeating bits,
    lowest first.  ``length`` is the number of bits kept; None means the
    pattern continues forever and only truncations are finite.
    """

    period: int
    start: int
    prefix: int
    block: int
    length: Optional[int] = None

    def __post_init__(self):
        if self.period < 1 or self.start < 0:
            raise DomainError(f"invalid period {self.period} or start {self.start}")
        if not 0 <= self.prefix < (1 << self.start) or not 0 <= self.block < (1 << self.period):
            raise DomainError("prefix or block has too many bits")
        if self.length is not None and self.length < self.start:
            raise DomainError(f"length {self.length} is shorter than the prefix")

    def bit(self, i: int) -> int:
        if self.length is not None and i >= self.length:
            return 0
        if i < self.start:
            return (self.prefix >> i) & 1
        return (self.block >> ((i - self.start) % self.period)) & 1

    def truncate(self, n: int) -> int:
        """x[n] = sum_{i <= n} x_i 2^i."""
        return sum(1 << i for i in range(n + 1) if self.bit(i))

    @property
    def value(self) -> int:
        if self.length is None:
            raise DomainError("an infinite pattern has no finite value; use truncate()")
        return self.truncate(self.length - 1)

    @property
    def repeating_bits(self) -> int:
        """R(x) = lg(x) + 1 - (i0 + d)."""
        return lg(self.value) + 1 - (self.start + self.period)

    @classmethod
    def from_int(cls, x: int, start: int, period: int) -> "RepeatingArgument":
        """Read prefix and block from the bits of x; repeats are not checked."""
        block = (x >> start) & ((1 << period) - 1)
        return cls(period, start, x & ((1 << start) - 1), block, max(x.bit_length(), start))

    @classmethod
    def build(cls, prefix: int, block: int, start: int, period: int, min_repeats: int) -> "RepeatingArgument":
        """Shortest finite pattern with at least ``min_repeats`` repeating bits and a top bit of 1."""
        if block == 0:
            raise DomainError("a zero block has no repeating bits")
        length = start + period + min_repeats
        probe = cls(period, start, prefix, block)
        while not probe.bit(length - 1):
            length += 1
        return cls(period, start, prefix, block, length)


def literal_repeats(x: int, start: int, period: int) -> bool:
    """x_{i+d} = x_i for every i >= i0 with 2^(i+d) <= x."""
    i = start
    while (1 << (i + period)) <= x:
        if ((x >> i) & 1) != ((x >> (i + period)) & 1):
            return False
        i += 1
    return True


@dataclass(slots=True)
class PeriodicResult:
    i0: int
    d: int
    e: int
    x: int
    status: str
    required: int
    achieved: Optional[Valuation] = None
    reason: str = ""

    def to_record(self) -> CheckRecord:
        margin = None
        if self.achieved is not None:
            margin = self.achieved.value - self.required
        detail = self.reason or f"required={self.required} achieved={self.achieved} margin={margin}"
        return CheckRecord("periodic", {"i0": self.i0, "d": self.d, "e": self.e, "x": self.x}, self.status, detail)


def check_periodic_difference(i0: int, d: int, e: int, x: RepeatingArgument) -> PeriodicResult:
    """nu(P_{2^(e+d)+1}(x+1) - P_{2^e+1}(x+1)) >= e - i0 for a finite periodic x."""
    value = x.value
    required = e - i0
    result = PeriodicResult(i0, d, e, value, PRECONDITION, required)
    if (value >> i0) & 1:
        result.reason = f"bit {i0} of x is 1"
        return result
    if not literal_repeats(value, i0, d):
        result.reason = f"bits of x do not repeat with period {d} from {i0}"
        return result
    if x.repeating_bits < 2 * (e - i0) - 1:
        result.reason = f"R(x)={x.repeating_bits} < {2 * (e - i0) - 1}"
        return result
    prec = max(required, 1) + 8
    far = eval_P((1 << (e + d)) + 1, value + 1, prec)
    near = eval_P((1 << e) + 1, value + 1, prec)
    result.achieved = valuation_of(far - near)
    result.status = PASS if result.achieved.ge(required) else FAIL
    return result


def periodic_points(
    i0: int, d_values: Iterable[int], e_values: Iterable[int], residue_count: int = 16
) -> List[Tuple[int, int, int, RepeatingArgument]]:
    """Grid of conforming arguments: ``residue_count`` prefixes mod 2^i0 per (d, e)."""
    points = []
    residues = range(0, 1 << i0, max(1, (1 << i0) // residue_count))
    e_values = list(e_values)
    for d in d_values:
        for e in e_values:
            for prefix in list(residues)[:residue_count]:
                # bit i0 stays 0, the top block bit is 1
                block = ((prefix * 5 + 3) << 1 | (1 << (d - 1))) & ((1 << d) - 2)
                x = RepeatingArgument.build(prefix, block, i0, d, 2 * (e - i0) - 1)
                points.append((i0, d, e, x))
    return points


def run_periodic_point(point: Tuple[int, int, int, RepeatingArgument]) -> CheckRecord:
    return check_periodic_difference(*point).to_record()


@dataclass(slots=True)
class SubsequenceRow:
    j: int
    e: int
    bits: str
    difference: Optional[Valuation] = None


@dataclass(slots=True)
class SubsequenceReport:
    x: RepeatingArgument
    e0: int
    truncation: int
    rows: List[SubsequenceRow] = field(default_factory=list)

    @property
    def monotone(self) -> bool:
        values = [r.difference.value for r in self.rows if r.difference is not None]
        return all(a <= b for a, b in zip(values, values[1:]))


def check_subsequence_convergence(
    x: RepeatingArgument, e0: int, j_max: int, bits: int = 16
) -> SubsequenceReport:
    """P_{2^(e0+dj)+1}(x[n]) for j <= j_max and the valuations of successive differences.

    The truncation n satisfies n >= 2(e + d) - i0 + 8 for the largest e.
    """
    d = x.period
    e_last = e0 + d * j_max
    truncation = max(2 * (e_last + d) - x.start + 8, bits + e_last)
    argument = x.truncate(truncation)
    report = SubsequenceReport(x, e0, truncation)
    previous: Optional[TwoAdic] = None
    for j in range(j_max + 1):
        e = e0 + d * j
        value = eval_P((1 << e) + 1, argument, bits)
        row = SubsequenceRow(j, e, backwards_binary(value, bits))
        if previous is not None:
            row.difference = valuation_of(value - previous)
        report.rows.append(row)
        previous = value
    if not report.monotone:
        logger.warning(f"Subsequence differences for e0={e0} are not monotone")
    return report


def check_limit_zero_classes(delta: int, x_values: Iterable[int]) -> List[CheckRecord]:
    """nu of the all-j sum against nu(P_delta(x)) for x much larger than delta."""
    records = []
    for x in x_values:
        allj = exact_valuation(eval_allj_sum(delta, x))
        odd = probe_nu(delta, x)
        same = allj.is_finite and odd.equals(allj.value)
        records.append(
            CheckRecord(
                "zero-classes",
                {"delta": delta, "x": x},
                PASS if same else DIFFERS,
                f"all_j={allj} odd_j={odd}",
            )
        )
    return records
