"""Exact identities and congruences behind the zero theorems.

Every check returns CheckRecords, one per parameter group, with the first
few counterexamples in the detail field.
"""

import logging
from fractions import Fraction
from typing import Iterable, Iterator, List, Sequence, Tuple

import gmpy2

from .dyadic import alpha, exact_valuation, generalized_binomial, lg, nu, nu_factorial, odd_part
from .kernel import eval_P, phi_nu, stirling2, stirling_periodicity_bound
from .verify import CheckRecord, check

logger = logging.getLogger("sb_stirling.identities")

MAX_DETAIL = 5


def _summary(name: str, failures: List[str], **params) -> CheckRecord:
    return check(name, not failures, "; ".join(failures[:MAX_DETAIL]), **params)


def _power(i: int, k: int) -> int:
    # 0^0 = 1
    return 1 if k == 0 else i**k


def _comb(a: int, b: int) -> int:
    return generalized_binomial(a, b)


def check_binomial_sum_identity(n_max: int = 40, d_max: int = 10) -> List[CheckRecord]:
    """sum_i C(2n, 2i+1) C(i, n-d-1) = 2^(2d+1) C(n+d, 2d+1)."""
    records = []
    for n in range(1, n_max + 1):
        failures = []
        for d in range(d_max + 1):
            left = sum(_comb(2 * n, 2 * i + 1) * _comb(i, n - d - 1) for i in range(n))
            right = (1 << (2 * d + 1)) * _comb(n + d, 2 * d + 1)
            if left != right:
                failures.append(f"d={d}: {left} != {right}")
        records.append(_summary("identity:binomial-sum", failures, n=n))
    return records


def _weighted_sum(top: int, b: int, k: int) -> int:
    return sum(_comb(top, 2 * i + b) * _power(i, k) for i in range((top - b) // 2 + 1))


def check_stirling_mod4(n_max: int = 32, k_max: int = 48) -> List[CheckRecord]:
    """(1/n!) sum_i C(2n+eps, 2i+b) i^k against S(k, n) and S(k, n-1) mod 4."""
    records = []
    for n in range(1, n_max + 1):
        failures = []
        fact = int(gmpy2.fac(n))
        for k in range(k_max + 1):
            s0 = stirling2(k, n, check=False)
            s1 = stirling2(k, n - 1, check=False)
            cases = (
                (0, 0, s0 + 2 * n * s1),
                (1, 0, (2 * n + 1) * s0 + 2 * (n + 1) * s1),
                (1, 1, s0 + 2 * (n + 1) * s1),
            )
            for eps, b, expected in cases:
                value = Fraction(_weighted_sum(2 * n + eps, b, k), fact)
                if not exact_valuation(value - expected).ge(2):
                    failures.append(f"k={k} eps={eps} b={b}")
        records.append(_summary("identity:stirling-mod4", failures, n=n))
    return records


def _double_factorial_odd(d: int) -> int:
    result = 1
    for i in range(d + 1):
        result *= 2 * i + 1
    return result


def check_stirling_expansion(n_max: int = 32, k_max: int = 48) -> List[CheckRecord]:
    """(1/n!) sum_i C(2n, 2i+1) i^k = sum_d 2^(d+1) C(n+d, d) S(k, n-1-d) / (2d+1)!!."""
    records = []
    for n in range(1, n_max + 1):
        failures = []
        fact = int(gmpy2.fac(n))
        for k in range(k_max + 1):
            left = Fraction(_weighted_sum(2 * n, 1, k), fact)
            right = sum(
                Fraction((1 << (d + 1)) * _comb(n + d, d) * stirling2(k, n - 1 - d, check=False), _double_factorial_odd(d))
                for d in range(n)
            )
            if left != right:
                failures.append(f"k={k}")
        records.append(_summary("identity:stirling-expansion", failures, n=n))
    return records


def check_phi_refinement(n_max: int = 48) -> List[CheckRecord]:
    """nu Phi_n(k) >= alpha(n) - 1 - alpha(k), equality iff C(n-1-k, k) odd, and the mod 4 form."""
    records = []
    for n in range(1, n_max + 1):
        failures = []
        for k in range(n):
            bound = alpha(n) - 1 - alpha(k)
            v = phi_nu(n, k)
            odd = _comb(n - 1 - k, k) % 2 == 1
            if not v.ge(bound) or v.equals(bound) != odd:
                failures.append(f"k={k}: nu={v} bound={bound}")
            total = sum(_comb(n, 2 * i + 1) * _power(i, k) for i in range((n - 1) // 2 + 1))
            value = Fraction(total, int(gmpy2.fac(k))) / Fraction(2) ** (n - 1 - 2 * k)
            expected = _comb(n - 1 - k, k)
            if (n - 1) % 2 == 0 and k % 2 == 0:
                expected += 2 * _comb(n - 1 - k, k - 2)
            if not exact_valuation(value - expected).ge(2):
                failures.append(f"k={k}: mod 4 form")
        records.append(_summary("identity:phi-refinement", failures, n=n))
    return records


def _binomial_units(top: int, j_max: int, prec: int) -> Iterator[Tuple[int, int, int]]:
    """(j, nu C(top, j), odd part of C(top, j) mod 2^prec) for 1 <= j <= j_max."""
    mod = 1 << prec
    unit = 1
    exponent = 0
    for j in range(1, j_max + 1):
        factor = top - j + 1
        exponent += nu(factor) - nu(j)
        unit = unit * odd_part(factor) * int(gmpy2.invert(odd_part(j), mod)) % mod
        yield j, exponent, unit


def check_doubling_difference(b_max: int = 6, d_max: int = 8, prec: int = 64) -> List[CheckRecord]:
    """nu(C(2^(d+1+b), j)/2^(d+1) - C(2^(d+b), j)/2^d) = 2b + d - lg(j-1) - nu(j)."""
    records = []
    mod = 1 << prec
    for b in range(b_max + 1):
        for d in range(d_max + 1):
            size = 1 << (d + b)
            failures = []
            rows = zip(_binomial_units(2 * size, size, prec), _binomial_units(size, size, prec))
            for (j, e_big, u_big), (_, e_small, u_small) in rows:
                if j < 2:
                    continue
                big = e_big - (d + 1)
                small = e_small - d
                base = min(big, small)
                diff = (u_big << (big - base)) - (u_small << (small - base))
                diff %= mod
                expected = 2 * b + d - lg(j - 1) - nu(j)
                if diff == 0 or base + nu(diff) != expected:
                    failures.append(f"j={j}")
            records.append(_summary("identity:doubling-difference", failures, b=b, d=d))
    return records


def check_factorial_ratio(e_max: int = 12) -> List[CheckRecord]:
    """2^E/(d! 2^e!) = 2^E/(2^e + d)! mod 2^(e - lg d), E = 2^e + d - 1 - alpha(d).

    Both sides are units, so this is U(d!) = prod_{i<=d} U(2^e + i) mod 2^(e - lg d).
    """
    records = []
    for e in range(1, e_max + 1):
        failures = []
        mod = 1 << e
        low = 1
        high = 1
        for d in range(1, 1 << e):
            low = low * odd_part(d) % mod
            high = high * odd_part((1 << e) + d) % mod
            precision = 1 << (e - lg(d))
            if (low - high) % precision:
                failures.append(f"d={d}")
        records.append(_summary("identity:factorial-ratio", failures, e=e))
    return records


def check_tail_exponent(e_max: int = 12) -> List[CheckRecord]:
    """nu(2^(2^e-r-1)/(2^e-r)!) = e - 1 - alpha(r-1) >= e - 1 - lg(D) for 0 < r <= D."""
    records = []
    for e in range(1, e_max + 1):
        failures = []
        for r in range(1, 1 << e):
            exponent = (1 << e) - r - 1 - nu_factorial((1 << e) - r)
            if exponent != e - 1 - alpha(r - 1) or exponent < e - 1 - lg(r):
                failures.append(f"r={r}")
        records.append(_summary("identity:tail-exponent", failures, e=e))
    return records


def check_phi_lower_bound(n_max: int = 40, s_max: int = 60) -> List[CheckRecord]:
    """nu Phi_n(s) >= s - [n/2]."""
    records = []
    for n in range(1, n_max + 1):
        failures = [f"s={s}" for s in range(s_max + 1) if not phi_nu(n, s).ge(s - n // 2)]
        records.append(_summary("identity:phi-lower-bound", failures, n=n))
    return records


def check_phi_unit_criterion(e_max: int = 7) -> List[CheckRecord]:
    """nu Phi_{2^e+delta}(k) >= 0, equality iff C(2^(e-1) - 1 - [delta/2], k - delta) odd."""
    records = []
    for e in range(1, e_max + 1):
        failures = []
        for delta in range(1 << e):
            n = (1 << e) + delta
            for k in range((1 << (e + 1)) + 1):
                v = phi_nu(n, k)
                odd = _comb((1 << (e - 1)) - 1 - delta // 2, k - delta) % 2 == 1
                if not v.ge(0) or v.equals(0) != odd:
                    failures.append(f"n={n} k={k}")
        records.append(_summary("phi", failures, e=e))
    return records


def check_binomial_shift(
    x_values: Iterable[int] = range(16), i_values: Iterable[int] = range(1, 9), k_max: int = 14
) -> List[CheckRecord]:
    """nu(C(16x+64i+14, k) - C(16x+14, k)) >= 3 + nu(i) + nu C(16x+14, k)."""
    failures = []
    i_values = list(i_values)
    for x in x_values:
        base_top = 16 * x + 14
        for i in i_values:
            for k in range(k_max + 1):
                base = _comb(base_top, k)
                diff = _comb(base_top + 64 * i, k) - base
                if diff and nu(diff) < 3 + nu(i) + nu(base):
                    failures.append(f"x={x} i={i} k={k}")
    return [_summary("identity:binomial-shift", failures, k_max=k_max)]


def check_stirling_periodicity(n_max: int = 12, x_span: int = 12, t_max: int = 6) -> List[CheckRecord]:
    """S(x + 2^t, n) = S(x, n) mod 2^min(t + 1 - lg n, x - nu(n!)) for x >= n."""
    records = []
    for n in range(1, n_max + 1):
        failures = []
        for x in range(n, n + x_span + 1):
            for t in range(lg(n), t_max + 1):
                bound = stirling_periodicity_bound(x, t, n)
                if bound < 1:
                    continue
                diff = stirling2(x + (1 << t), n, check=False) - stirling2(x, n, check=False)
                if diff % (1 << bound):
                    failures.append(f"x={x} t={t}")
        records.append(_summary("identity:stirling-periodicity", failures, n=n))
    return records


def check_unit_criterion(n_max: int = 64, x_max: int = 256) -> List[CheckRecord]:
    """P_n(x) is a unit iff C(2x - n - 1, n - 1) is odd."""
    records = []
    for n in range(1, n_max + 1):
        failures = []
        for x in range(x_max):
            unit = eval_P(n, x, 1).residue == 1
            odd = _comb(2 * x - n - 1, n - 1) % 2 == 1
            if unit != odd:
                failures.append(f"x={x}")
        records.append(_summary("unit-criterion", failures, n=n))
    return records


def check_periodicity(
    n_max: int = 64, t_max: int = 20, x_values: Sequence[int] = (0, 1, 5, 37, 200, 1001)
) -> List[CheckRecord]:
    """P_n(x + 2^t) = P_n(x) mod 2^(t + 1 - lg n)."""
    records = []
    for n in range(1, n_max + 1):
        failures = []
        for t in range(lg(n), t_max + 1):
            prec = t + 1 - lg(n)
            for x in x_values:
                if eval_P(n, x + (1 << t), prec) != eval_P(n, x, prec):
                    failures.append(f"t={t} x={x}")
        records.append(_summary("periodicity", failures, n=n))
    return records


def check_stirling_approximation(n_max: int = 20, span: int = 24) -> List[CheckRecord]:
    """(-1)^(n+1) P_n(x) = S(x, n) mod 2^(x - nu(n!)) for x >= n."""
    records = []
    for n in range(1, n_max + 1):
        failures = []
        for x in range(n, n + span + 1):
            prec = x - nu_factorial(n)
            if prec < 1:
                continue
            value = eval_P(n, x, prec).residue
            sign = 1 if n % 2 else -1
            if (sign * value - stirling2(x, n, check=False)) % (1 << prec):
                failures.append(f"x={x}")
        records.append(_summary("approx", failures, n=n))
    return records


def run_identity_suite(n_max: int = 40, d_max: int = 10, e_max: int = 12) -> List[CheckRecord]:
    """All exact identities at their default ranges."""
    records: List[CheckRecord] = []
    records.extend(check_binomial_sum_identity(n_max, d_max))
    records.extend(check_stirling_mod4())
    records.extend(check_stirling_expansion())
    records.extend(check_phi_refinement())
    records.extend(check_doubling_difference())
    records.extend(check_factorial_ratio(e_max))
    records.extend(check_tail_exponent(e_max))
    records.extend(check_phi_lower_bound())
    records.extend(check_binomial_shift())
    records.extend(check_stirling_periodicity())
    logger.info(f"Identity suite produced {len(records)} records")
    return records
