"""Locating and certifying the 2-adic zeros of P_n.

A class 2^m x + p either gets a no-zero certificate (P_n has one constant
valuation on every residue mod 2^t, and t is large enough for periodicity to
carry it over the whole class), a zero whose bits are read off the valuations
f(x) = nu(P_n(2^m x + p)) - c, or it is split into its two children.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, Iterator, List, Optional, Tuple

from .dyadic import DEFAULT_PREC, ESCALATION_CAP, TwoAdic, Valuation, lg, min_prime, valuation_of
from .errors import DomainError, PatternMismatchError, UnresolvedError
from .kernel import eval_P

logger = logging.getLogger("sb_stirling.zeros")


@dataclass(frozen=True, slots=True)
class CongruenceClass:
    """The residue class p mod 2^m."""

    log_modulus: int
    residue: int

    def __post_init__(self):
        if self.log_modulus < 0 or not 0 <= self.residue < (1 << self.log_modulus):
            raise DomainError(f"invalid class {self.residue} mod 2^{self.log_modulus}")

    @property
    def modulus(self) -> int:
        return 1 << self.log_modulus

    def point(self, x: int) -> int:
        return (x << self.log_modulus) + self.residue

    def children(self) -> Tuple["CongruenceClass", "CongruenceClass"]:
        m = self.log_modulus
        return (
            CongruenceClass(m + 1, self.residue),
            CongruenceClass(m + 1, self.residue + (1 << m)),
        )

    def contains(self, z: int) -> bool:
        return z % self.modulus == self.residue

    def contains_class(self, other: "CongruenceClass") -> bool:
        return other.log_modulus >= self.log_modulus and self.contains(other.residue)

    def __str__(self) -> str:
        return f"{self.residue} mod 2^{self.log_modulus}"


@dataclass(slots=True)
class ZeroLimits:
    """Search limits for the zero finder."""

    start_prec: int = DEFAULT_PREC
    cap: int = ESCALATION_CAP
    depth: int = 48
    max_log_modulus: int = 12
    sample_log: int = 5
    d_max: int = 6
    certify_span: int = 10
    min_prime_samples: int = 8


class ZeroStatus(str, Enum):
    EMPIRICAL = "empirical"
    THEOREM_BACKED = "theorem"


@dataclass(slots=True)
class ZeroRecord:
    """An isolated zero of P_n.

    ``zero_bits`` holds the low ``witness_depth`` bits of the zero itself.
    """

    n: int
    cls: CongruenceClass
    zero_bits: TwoAdic
    c: int
    witness_depth: int
    status: ZeroStatus = ZeroStatus.EMPIRICAL
    theorem: Optional[str] = None

    @property
    def status_label(self) -> str:
        if self.status is ZeroStatus.THEOREM_BACKED:
            return f"theorem:{self.theorem}"
        return self.status.value

    def x0_bits(self) -> TwoAdic:
        """Bits of x0 where the zero is 2^m x0 + p."""
        m = self.cls.log_modulus
        return TwoAdic(self.zero_bits.residue >> m, self.witness_depth - m)

    def predicted_nu(self, x: int) -> Optional[int]:
        """nu(x - x0) + c when the known bits of x0 decide it, else None."""
        x0 = self.x0_bits()
        diff = (x - x0.residue) % x0.modulus
        if diff == 0:
            return None
        return valuation_of(TwoAdic(diff, x0.prec)).value + self.c


class Verdict(str, Enum):
    NO_ZERO = "no_zero"
    ZERO = "zero"
    SPLIT = "split"
    UNRESOLVED = "unresolved"


@dataclass(slots=True)
class ClassReport:
    """Outcome of classifying one congruence class."""

    cls: CongruenceClass
    verdict: Verdict
    v: Optional[int] = None
    t_used: Optional[int] = None
    zero: Optional[ZeroRecord] = None
    children: List["ClassReport"] = field(default_factory=list)
    reason: Optional[str] = None

    def walk(self) -> Iterator["ClassReport"]:
        """Preorder traversal, parent before children."""
        yield self
        for child in self.children:
            yield from child.walk()

    def leaves(self) -> Iterator["ClassReport"]:
        return (r for r in self.walk() if r.verdict is not Verdict.SPLIT)

    def zero_records(self) -> List[ZeroRecord]:
        return [r.zero for r in self.leaves() if r.verdict is Verdict.ZERO]

    def unresolved(self) -> List["ClassReport"]:
        return [r for r in self.leaves() if r.verdict is Verdict.UNRESOLVED]


@dataclass(slots=True)
class MinPrimeViolation:
    x: int
    d: int
    expected: Valuation
    observed: Valuation


@dataclass(slots=True)
class MinPrimeReport:
    n: int
    cls: CongruenceClass
    c: int
    violations: List[MinPrimeViolation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def probe_nu(n: int, point: int, cap: int = ESCALATION_CAP, start_prec: int = DEFAULT_PREC) -> Valuation:
    """Valuation of P_n(point), doubling the precision until it is finite.

    Returns AtLeast(cap) when every bit up to the cap is zero.
    """
    prec = min(start_prec, cap)
    while True:
        v = valuation_of(eval_P(n, point, prec))
        if v.is_finite or prec >= cap:
            return v
        prec = min(2 * prec, cap)
        logger.debug(f"Escalating P_{n}({point}) to precision {prec}")


def _f(n: int, cls: CongruenceClass, c: int, x: int, limits: ZeroLimits) -> Valuation:
    return probe_nu(n, cls.point(x), limits.cap, limits.start_prec).shift(-c)


def extract_zero(
    n: int,
    cls: CongruenceClass,
    c: int,
    depth: int = 48,
    cap: int = ESCALATION_CAP,
    limits: Optional[ZeroLimits] = None,
) -> ZeroRecord:
    """Read the bits of x0 from f(x) = nu(P_n(2^m x + p)) - c = nu(x - x0).

    f(0) is the lowest set bit e_0 of x0, f(2^e_0) the next one, and so on
    until a probe shows ``depth`` bits agree.

    Raises:
        PatternMismatchError: a probe is negative or the bit positions do not
            strictly increase
        UnresolvedError: a probe reached the escalation cap
    """
    limits = limits or ZeroLimits(cap=cap, depth=depth)
    partial = 0
    last = -1
    while True:
        value = probe_nu(n, cls.point(partial), cap, limits.start_prec)
        if not value.is_finite:
            raise UnresolvedError(
                f"P_{n} vanishes to precision {cap} at {cls.point(partial)}",
                point=cls.point(partial),
            )
        bit = value.value - c
        if bit < 0:
            raise PatternMismatchError(f"nu(P_{n}) below fitted constant {c} in class {cls}")
        if bit >= depth:
            break
        if bit <= last:
            raise PatternMismatchError(
                f"bit positions stopped increasing ({last} then {bit}) for P_{n} in class {cls}"
            )
        partial += 1 << bit
        last = bit
    m = cls.log_modulus
    witness = m + depth
    return ZeroRecord(
        n=n,
        cls=cls,
        zero_bits=TwoAdic.of(cls.point(partial), witness),
        c=c,
        witness_depth=witness,
    )


def verify_min_prime(
    n: int,
    cls: CongruenceClass,
    c: int,
    x_samples: Iterable[int],
    d_max: int,
    limits: Optional[ZeroLimits] = None,
) -> MinPrimeReport:
    """Check f(x + 2^d) = min'(f(x), d) on samples."""
    limits = limits or ZeroLimits()
    report = MinPrimeReport(n=n, cls=cls, c=c)
    for x in x_samples:
        a = _f(n, cls, c, x, limits)
        if a.is_finite and a.value < 0:
            report.violations.append(MinPrimeViolation(x, -1, Valuation.at_least(0), a))
            continue
        for d in range(d_max + 1):
            expected = min_prime(a, d)
            observed = _f(n, cls, c, x + (1 << d), limits)
            if expected.is_finite:
                ok = observed.equals(expected.value)
            else:
                ok = observed.ge(expected.value)
            if not ok:
                report.violations.append(MinPrimeViolation(x, d, expected, observed))
    return report


def certify_no_zero(
    n: int, cls: CongruenceClass, t_max: Optional[int] = None, limits: Optional[ZeroLimits] = None
) -> Optional[Tuple[int, int]]:
    """Look for (v, t) proving that P_n has no zero in the class.

    Every residue y mod 2^t in the class must give nu(P_n(y)) = v with
    v < t + 1 - lg n; periodicity mod 2^t then fixes the valuation on the
    whole class.

    Returns:
        (v, t) when certified, None otherwise
    """
    limits = limits or ZeroLimits()
    m = cls.log_modulus
    t_start = max(m, lg(n))
    if t_max is None:
        t_max = t_start + limits.certify_span
    values: Dict[int, Valuation] = {}
    common: Optional[int] = None
    for t in range(t_start, t_max + 1):
        for y in range(cls.residue, 1 << t, cls.modulus):
            if y in values:
                continue
            v = probe_nu(n, y, limits.cap, limits.start_prec)
            values[y] = v
            if not v.is_finite:
                return None
            if common is None:
                common = v.value
            elif v.value != common:
                return None
        if common is not None and common < t + 1 - lg(n):
            return common, t
    return None


def start_log_modulus(n: int) -> int:
    if n < 1:
        raise DomainError(f"index n must be positive, got {n}")
    if n == 1:
        return 0
    return max(0, lg(n - 1) - 1)


def starting_classes(n: int) -> List[CongruenceClass]:
    m = start_log_modulus(n)
    return [CongruenceClass(m, p) for p in range(1 << m)]


def fit_constant(n: int, cls: CongruenceClass, limits: ZeroLimits) -> Optional[int]:
    """Minimum finite nu over the first 2^s points of the class."""
    finite = []
    for x in range(1 << limits.sample_log):
        v = probe_nu(n, cls.point(x), limits.cap, limits.start_prec)
        if v.is_finite:
            finite.append(v.value)
    return min(finite) if finite else None


def _split(n: int, cls: CongruenceClass, limits: ZeroLimits, why: str) -> ClassReport:
    if cls.log_modulus + 1 > limits.max_log_modulus:
        logger.warning(f"P_{n}: class {cls} unresolved at split limit ({why})")
        return ClassReport(cls, Verdict.UNRESOLVED, reason=f"split limit reached: {why}")
    logger.info(f"P_{n}: splitting class {cls} ({why})")
    children = [classify(n, child, limits) for child in cls.children()]
    return ClassReport(cls, Verdict.SPLIT, children=children)


def classify(n: int, cls: CongruenceClass, limits: Optional[ZeroLimits] = None) -> ClassReport:
    """Classify one class: certified no zero, one zero, split, or unresolved."""
    limits = limits or ZeroLimits()
    certificate = certify_no_zero(n, cls, limits=limits)
    if certificate is not None:
        v, t = certificate
        return ClassReport(cls, Verdict.NO_ZERO, v=v, t_used=t)

    c = fit_constant(n, cls, limits)
    if c is None:
        return _split(n, cls, limits, "no finite valuation among samples")

    samples = range(min(limits.min_prime_samples, 1 << limits.sample_log))
    check = verify_min_prime(n, cls, c, samples, limits.d_max, limits)
    if not check.ok:
        return _split(n, cls, limits, f"{len(check.violations)} min' violations with c={c}")

    try:
        record = extract_zero(n, cls, c, limits.depth, limits.cap, limits)
    except PatternMismatchError as e:
        return _split(n, cls, limits, str(e))
    except UnresolvedError as e:
        logger.warning(f"P_{n}: class {cls} unresolved: {e.reason}")
        return ClassReport(cls, Verdict.UNRESOLVED, reason=e.reason)
    return ClassReport(cls, Verdict.ZERO, zero=record)


def classify_index(n: int, limits: Optional[ZeroLimits] = None) -> List[ClassReport]:
    """Classify every starting class of P_n, in residue order."""
    limits = limits or ZeroLimits()
    return [classify(n, cls, limits) for cls in starting_classes(n)]


def report_to_records(n: int, report: ClassReport) -> List[Dict[str, Any]]:
    """Atlas lines for one report tree, preorder."""
    records = []
    for node in report.walk():
        record: Dict[str, Any] = {
            "n": n,
            "log_modulus": node.cls.log_modulus,
            "residue": node.cls.residue,
            "verdict": node.verdict.value,
            "v_or_c": -1,
            "zero_bits_hex": None,
            "witness_depth": None,
            "status": node.verdict.value,
        }
        if node.verdict is Verdict.NO_ZERO:
            record.update(v_or_c=node.v, witness_depth=node.t_used, status="certified")
        elif node.verdict is Verdict.ZERO:
            zero = node.zero
            record.update(
                v_or_c=zero.c,
                zero_bits_hex=format(zero.zero_bits.residue, "x"),
                witness_depth=zero.witness_depth,
                status=zero.status_label,
            )
        elif node.verdict is Verdict.UNRESOLVED:
            record["status"] = node.reason or "unresolved"
        records.append(record)
    return records


def report_from_records(records: Iterator[Dict[str, Any]]) -> ClassReport:
    """Rebuild one report tree from its preorder atlas lines."""
    record = next(records)
    cls = CongruenceClass(record["log_modulus"], record["residue"])
    verdict = Verdict(record["verdict"])
    if verdict is Verdict.SPLIT:
        children = [report_from_records(records), report_from_records(records)]
        return ClassReport(cls, verdict, children=children)
    if verdict is Verdict.NO_ZERO:
        return ClassReport(cls, verdict, v=record["v_or_c"], t_used=record["witness_depth"])
    if verdict is Verdict.UNRESOLVED:
        return ClassReport(cls, verdict, reason=record["status"])
    status = record["status"]
    theorem = None
    zero_status = ZeroStatus.EMPIRICAL
    if status.startswith("theorem:"):
        zero_status = ZeroStatus.THEOREM_BACKED
        theorem = status.split(":", 1)[1]
    depth = record["witness_depth"]
    zero = ZeroRecord(
        n=record["n"],
        cls=cls,
        zero_bits=TwoAdic(int(record["zero_bits_hex"], 16), depth),
        c=record["v_or_c"],
        witness_depth=depth,
        status=zero_status,
        theorem=theorem,
    )
    return ClassReport(cls, verdict, zero=zero)
