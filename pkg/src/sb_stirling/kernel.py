"""Evaluators for the partial Stirling functions and their companions.

P_n(x) = (1/n!) * sum over odd j of C(n, j) * j^x is evaluated modularly;
T_n, S(x, n), Phi_n and the all-j sums are evaluated exactly.  The odd part of
2^e! and its 2-adic limit are computed by polynomial doubling, and the limit
function P_{2^inf + delta} is built on top of them.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, List, Optional, Tuple, Union

import gmpy2

from .dyadic import (
    TwoAdic,
    Valuation,
    alpha,
    exact_valuation,
    lg,
    nu,
    nu_factorial,
    pow_mod,
)
from .errors import ArithmeticInvariantError, DomainError, PrecisionUnderflowError

logger = logging.getLogger("sb_stirling.kernel")

GUARD_BITS = 2
ROW_CACHE_LIMIT = 4096


def _check_index(n: int) -> None:
    if n < 1:
        raise DomainError(f"index n must be positive, got {n}")


def _check_prec(prec: int) -> None:
    if prec < 1:
        raise PrecisionUnderflowError(f"precision must be positive, got {prec}")


def _odd_binomial_terms(n: int) -> Iterator[Tuple[int, gmpy2.mpz]]:
    """Yield (j, C(n, j)) for odd j using the rolling product."""
    c = gmpy2.mpz(1)
    for j in range(n):
        c = c * (n - j) // (j + 1)
        if j % 2 == 0:
            yield j + 1, c


@lru_cache(maxsize=128)
def _odd_binomial_row(n: int) -> Tuple[Tuple[int, gmpy2.mpz], ...]:
    return tuple(_odd_binomial_terms(n))


def odd_binomials(n: int) -> Iterator[Tuple[int, gmpy2.mpz]]:
    if n <= ROW_CACHE_LIMIT:
        return iter(_odd_binomial_row(n))
    return _odd_binomial_terms(n)


@lru_cache(maxsize=32)
def _odd_part_factorial(m: int) -> gmpy2.mpz:
    f = gmpy2.fac(m)
    return f >> nu_factorial(m)


def odd_part_factorial(m: int, prec: int) -> int:
    """U(m!) mod 2^prec."""
    if m < 0:
        raise DomainError(f"factorial of negative number {m}")
    return int(_odd_part_factorial(m) % (gmpy2.mpz(1) << prec))


@dataclass(frozen=True, slots=True)
class EvalRequest:
    """One evaluation of P_n.

    Args:
        n: Positive index
        x: Integer argument or truncated 2-adic argument
        prec: Requested output precision
    """

    n: int
    x: Union[int, TwoAdic]
    prec: int = 64

    def __post_init__(self):
        _check_index(self.n)
        _check_prec(self.prec)

    @property
    def achievable_prec(self) -> int:
        if isinstance(self.x, TwoAdic):
            return min(self.prec, self.x.prec + 1 - lg(self.n))
        return self.prec

    def evaluate(self) -> TwoAdic:
        if isinstance(self.x, TwoAdic):
            return eval_P_truncated(self.n, self.x, self.prec)
        return eval_P(self.n, self.x, self.prec)


def eval_P(n: int, x: int, prec: int = 64) -> TwoAdic:
    """Evaluate P_n(x) modulo 2^prec.

    The odd-j sum is formed modulo 2^(prec + nu(n!) + 2).  It must be divisible
    by 2^nu(n!); after the shift the odd part of n! is inverted.

    Args:
        n: Positive index
        x: Any integer, negative values allowed
        prec: Output precision

    Returns:
        P_n(x) as a TwoAdic of precision ``prec``
    """
    _check_index(n)
    _check_prec(prec)
    vf = nu_factorial(n)
    work = prec + vf + GUARD_BITS
    mod = gmpy2.mpz(1) << work
    total = gmpy2.mpz(0)
    for j, c in odd_binomials(n):
        total += (c % mod) * pow_mod(j, x, work)
    total %= mod
    if total % (gmpy2.mpz(1) << vf):
        raise ArithmeticInvariantError(
            f"odd-j sum for n={n}, x={x} is not divisible by 2^{vf}"
        )
    low = gmpy2.mpz(1) << (prec + GUARD_BITS)
    unit = gmpy2.invert(odd_part_factorial(n, prec + GUARD_BITS), low)
    return TwoAdic.of(int((total >> vf) * unit % low), prec)


def eval_P_truncated(n: int, x: TwoAdic, prec: Optional[int] = None) -> TwoAdic:
    """Evaluate P_n at a truncated argument.

    P_n(x + 2^t) agrees with P_n(x) modulo 2^(t + 1 - lg n), so the result
    carries exactly that many bits (or ``prec`` if smaller).
    """
    _check_index(n)
    achievable = x.prec + 1 - lg(n)
    if x.prec < lg(n) or achievable < 1:
        raise PrecisionUnderflowError(
            f"argument known mod 2^{x.prec} is too coarse for n={n} (lg n = {lg(n)})"
        )
    if prec is not None:
        achievable = min(achievable, prec)
    return eval_P(n, x.residue, achievable)


def eval_T(n: int, x: int) -> int:
    """Exact T_n(x) = sum over odd j of C(n, j) * j^x."""
    _check_index(n)
    if x < 0:
        raise DomainError(f"eval_T needs x >= 0, got {x}")
    return int(sum(c * gmpy2.mpz(j) ** x for j, c in odd_binomials(n)))


_stirling_rows: List[List[int]] = [[1]]


def _stirling_row(x: int) -> List[int]:
    while len(_stirling_rows) <= x:
        prev = _stirling_rows[-1]
        size = len(prev)
        row = [0] * (size + 1)
        for k in range(1, size + 1):
            row[k] = (k * prev[k] if k < size else 0) + prev[k - 1]
        _stirling_rows.append(row)
    return _stirling_rows[x]


def stirling2_alternating(x: int, n: int) -> int:
    """S(x, n) from the alternating sum (1/n!) sum (-1)^(n-j) C(n, j) j^x."""
    total = sum(
        (-1) ** (n - j) * int(gmpy2.comb(n, j)) * (j**x if (j or x) else 1)
        for j in range(n + 1)
    )
    quotient, remainder = divmod(total, int(gmpy2.fac(n)))
    if remainder:
        raise ArithmeticInvariantError(f"alternating sum for S({x},{n}) is not divisible by {n}!")
    return quotient


def stirling2(x: int, n: int, check: bool = True) -> int:
    """Stirling number of the second kind S(x, n).

    Uses the triangular recurrence; with ``check`` the alternating-sum formula
    must agree.
    """
    if x < 0 or n < 0:
        raise DomainError(f"stirling2 needs x, n >= 0, got x={x}, n={n}")
    if n > x:
        return 0
    value = _stirling_row(x)[n]
    if check and value != stirling2_alternating(x, n):
        raise ArithmeticInvariantError(f"recurrence and alternating sum disagree for S({x},{n})")
    return value


@dataclass(frozen=True, slots=True)
class PhiValue:
    """Exact Phi_n(s) stored as numerator over n!."""

    numerator: int
    n: int

    @property
    def value(self) -> Fraction:
        return Fraction(self.numerator, int(gmpy2.fac(self.n)))

    @property
    def valuation(self) -> Valuation:
        if self.numerator == 0:
            return Valuation.infinite()
        return Valuation.finite(nu(self.numerator) - nu_factorial(self.n))


@lru_cache(maxsize=1 << 16)
def eval_Phi(n: int, s: int) -> PhiValue:
    """Phi_n(s) = (1/n!) sum_i C(n, 2i+1) (2i)^s, with 0^0 = 1."""
    _check_index(n)
    if s < 0:
        raise DomainError(f"eval_Phi needs s >= 0, got {s}")
    numerator = gmpy2.mpz(0)
    for j, c in odd_binomials(n):
        base = j - 1
        if base == 0:
            if s == 0:
                numerator += c
            continue
        numerator += c * gmpy2.mpz(base) ** s
    return PhiValue(int(numerator), n)


def phi_nu(n: int, s: int) -> Valuation:
    return eval_Phi(n, s).valuation


def eval_allj_sum(delta: int, x: int) -> Fraction:
    """(1/delta!) sum over all j of C(delta, j) j^x, with 0^0 = 1."""
    if delta < 0 or x < 0:
        raise DomainError(f"eval_allj_sum needs delta, x >= 0, got {delta}, {x}")
    total = sum(int(gmpy2.comb(delta, j)) * (j**x if (j or x) else 1) for j in range(delta + 1))
    return Fraction(total, int(gmpy2.fac(delta)))


def _taylor_shift(coeffs: List[int], mod: int) -> List[int]:
    out = list(coeffs)
    size = len(out)
    for i in range(size - 1):
        for k in range(size - 2, i - 1, -1):
            out[k] = (out[k] + out[k + 1]) % mod
    return out


def _scale_doubling(coeffs: List[int], mod: int) -> List[int]:
    return [(c << i) % mod for i, c in enumerate(coeffs)]


def _poly_mul(a: List[int], b: List[int], degree: int, mod: int) -> List[int]:
    out = [0] * min(len(a) + len(b) - 1, degree)
    for i, ai in enumerate(a):
        if not ai:
            continue
        for k, bk in enumerate(b[: len(out) - i]):
            out[i + k] += ai * bk
    return [c % mod for c in out]


@lru_cache(maxsize=64)
def _odd_products(prec: int) -> Tuple[int, ...]:
    """Products of odd numbers below 2^k mod 2^prec, for k = 1..prec.

    G_N(Y) = prod_{i<N} (2(NY + i) + 1) satisfies G_2N(Y) = G_N(2Y) G_N(2Y + 1),
    and its Y^i coefficient is divisible by 2^i, so degree < prec suffices.
    """
    mod = 1 << prec
    g = [1, 2 % mod]
    products = []
    for _ in range(prec):
        products.append(g[0] % mod)
        left = _scale_doubling(g, mod)
        right = _scale_doubling(_taylor_shift(g, mod), mod)
        g = _poly_mul(left, right, prec, mod)
    logger.debug(f"Computed odd products below 2^k mod 2^{prec}")
    return tuple(products)


def U_factorial_pow2(e: int, prec: int) -> TwoAdic:
    """Odd part of (2^e)! modulo 2^prec."""
    if e < 0:
        raise DomainError(f"exponent must be nonnegative, got {e}")
    _check_prec(prec)
    work = max(prec, 3)
    mod = 1 << work
    # the product of all units mod 2^work is 1 once work >= 3
    products = _odd_products(work)
    result = 1
    for k in range(1, min(e, work) + 1):
        result = result * products[k - 1] % mod
    return TwoAdic.of(result, prec)


def U_2inf(prec: int) -> TwoAdic:
    """The 2-adic limit of U(2^e!) as e grows, modulo 2^prec."""
    _check_prec(prec)
    return U_factorial_pow2(max(prec, 3), prec)


def eval_P_inf(delta: int, x: int, prec: int = 64) -> TwoAdic:
    """Limit of P_{2^e + delta}(x) as e grows.

    Equals the all-j sum divided by U(2^inf!).  Only nonnegative x is
    supported.
    """
    if delta < 1:
        raise DomainError(f"delta must be positive, got {delta}")
    if x < 0:
        raise DomainError(f"the limit function is only defined here for x >= 0, got {x}")
    _check_prec(prec)
    vf = nu_factorial(delta)
    work = prec + vf + GUARD_BITS
    mod = gmpy2.mpz(1) << work
    total = gmpy2.mpz(0)
    for j in range(delta + 1):
        total += int(gmpy2.comb(delta, j)) * pow_mod(j, x, work)
    total %= mod
    if total % (gmpy2.mpz(1) << vf):
        raise ArithmeticInvariantError(
            f"all-j sum for delta={delta}, x={x} is not divisible by 2^{vf}"
        )
    low_prec = prec + GUARD_BITS
    low = gmpy2.mpz(1) << low_prec
    unit = odd_part_factorial(delta, low_prec) * U_2inf(low_prec).residue
    return TwoAdic.of(int((total >> vf) * gmpy2.invert(unit % low, low) % low), prec)


def eval_P_stirling(n: int, x: int, prec: int = 64) -> TwoAdic:
    """P_n(x) for x >= 0 via S(x, k) * 2^(n-k-1) / (n-k)!.

    Expanding j^x in falling factorials gives the sum over k < n with k <= x;
    the k = n term is S(x, n) when n is odd.  Cost grows with x, not n.
    """
    _check_index(n)
    _check_prec(prec)
    if x < 0:
        raise DomainError(f"eval_P_stirling needs x >= 0, got {x}")
    mod = gmpy2.mpz(1) << prec
    top = min(x, n - 1)
    lowest = n - top
    unit = gmpy2.mpz(odd_part_factorial(lowest, prec))
    # units[i] = U((lowest + i)!) mod 2^prec
    units = [unit]
    for m in range(lowest + 1, n + 1):
        unit = unit * (m >> nu(m)) % mod
        units.append(unit)
    total = gmpy2.mpz(0)
    row = _stirling_row(x)
    for k in range(top + 1):
        s = row[k] if k < len(row) else 0
        if not s:
            continue
        shift = alpha(n - k) - 1
        if shift >= prec:
            continue
        inverse = gmpy2.invert(units[n - k - lowest], mod)
        total += (gmpy2.mpz(s) << shift) * inverse
    if n % 2 and x >= n:
        total += row[n]
    return TwoAdic.of(int(total % mod), prec)


def stirling_periodicity_bound(x: int, t: int, n: int) -> int:
    """Precision of S(x + 2^t, n) = S(x, n) for x >= n."""
    return min(t + 1 - lg(n), x - nu_factorial(n))
