"""Exact and truncated 2-adic arithmetic.

Everything else in the package is built on the helpers here: valuations,
digit counts, odd parts, binomials, modular powers, and the two value types
``TwoAdic`` (a residue together with the number of known low-order bits) and
``Valuation`` (an exact exponent, or a lower bound when a truncation is all
zeros).
"""

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, Union

import gmpy2

from .errors import DomainError, PrecisionUnderflowError, ZeroValuationError

DEFAULT_PREC = 64
ESCALATION_CAP = 4096


class ValuationKind(str, Enum):
    FINITE = "finite"
    AT_LEAST = "at_least"
    INFINITE = "infinite"


@dataclass(frozen=True, slots=True)
class Valuation:
    """2-adic valuation of a possibly truncated quantity.

    ``FINITE`` carries the exact exponent, ``AT_LEAST`` the precision of an
    all-zero truncation, ``INFINITE`` marks an exact zero.
    """

    kind: ValuationKind
    value: int = 0

    @classmethod
    def finite(cls, v: int) -> "Valuation":
        return cls(ValuationKind.FINITE, int(v))

    @classmethod
    def at_least(cls, b: int) -> "Valuation":
        return cls(ValuationKind.AT_LEAST, int(b))

    @classmethod
    def infinite(cls) -> "Valuation":
        return cls(ValuationKind.INFINITE, 0)

    @property
    def is_finite(self) -> bool:
        return self.kind is ValuationKind.FINITE

    @property
    def is_infinite(self) -> bool:
        return self.kind is ValuationKind.INFINITE

    def ge(self, c: int) -> bool:
        """True when the valuation is certainly at least ``c``."""
        if self.kind is ValuationKind.INFINITE:
            return True
        return self.value >= c

    def gt(self, c: int) -> bool:
        """True when the valuation is certainly larger than ``c``."""
        if self.kind is ValuationKind.INFINITE:
            return True
        if self.kind is ValuationKind.AT_LEAST:
            return self.value > c
        return self.value > c

    def equals(self, c: int) -> bool:
        return self.kind is ValuationKind.FINITE and self.value == c

    def admits(self, c: int) -> bool:
        """True when an exact exponent ``c`` is compatible with this value."""
        if self.kind is ValuationKind.FINITE:
            return self.value == c
        if self.kind is ValuationKind.AT_LEAST:
            return c >= self.value
        return False

    def shift(self, k: int) -> "Valuation":
        if self.kind is ValuationKind.INFINITE:
            return self
        return Valuation(self.kind, self.value + k)

    def __add__(self, other: Union[int, "Valuation"]) -> "Valuation":
        if isinstance(other, Valuation):
            if self.is_infinite or other.is_infinite:
                return Valuation.infinite()
            kind = ValuationKind.FINITE
            if ValuationKind.AT_LEAST in (self.kind, other.kind):
                kind = ValuationKind.AT_LEAST
            return Valuation(kind, self.value + other.value)
        return self.shift(other)

    def sort_key(self) -> tuple:
        if self.kind is ValuationKind.INFINITE:
            return (float("inf"), 2)
        return (self.value, 0 if self.kind is ValuationKind.FINITE else 1)

    def __str__(self) -> str:
        if self.kind is ValuationKind.FINITE:
            return str(self.value)
        if self.kind is ValuationKind.AT_LEAST:
            return f">={self.value}"
        return "inf"


def nu(n: int) -> int:
    """Exponent of 2 in a nonzero integer."""
    if n == 0:
        raise ZeroValuationError("nu(0) is undefined; use valuation_of for truncations")
    return int(gmpy2.bit_scan1(gmpy2.mpz(abs(n))))


def alpha(n: int) -> int:
    """Number of 1-bits of a nonnegative integer."""
    if n < 0:
        raise DomainError(f"alpha expects a nonnegative integer, got {n}")
    return int(gmpy2.popcount(gmpy2.mpz(n)))


def lg(n: int) -> int:
    """Floor of log2 for a positive integer."""
    if n < 1:
        raise DomainError(f"lg expects a positive integer, got {n}")
    return int(n).bit_length() - 1


def nu_factorial(n: int) -> int:
    if n < 0:
        raise DomainError(f"nu_factorial expects n >= 0, got {n}")
    return n - alpha(n)


def nu_binomial(m: int, k: int) -> int:
    if k < 0 or m < 0:
        raise DomainError(f"nu_binomial expects 0 <= k <= m, got m={m}, k={k}")
    if k > m:
        raise DomainError(f"nu_binomial expects k <= m, got m={m}, k={k}")
    return alpha(k) + alpha(m - k) - alpha(m)


def odd_part(n: int) -> int:
    """Odd part U(n) = n / 2^nu(n), sign preserved."""
    if n == 0:
        raise ZeroValuationError("odd part of 0 is undefined")
    return n >> nu(n) if n > 0 else -((-n) >> nu(n))


def pow_mod(base: int, exp: int, prec: int) -> int:
    """base^exp mod 2^prec; negative exponents need an odd base."""
    if prec < 0:
        raise DomainError(f"precision must be nonnegative, got {prec}")
    mod = gmpy2.mpz(1) << prec
    if prec == 0:
        return 0
    if exp < 0:
        if base % 2 == 0:
            raise DomainError(f"negative exponent {exp} needs an odd base, got {base}")
        inverse = gmpy2.invert(gmpy2.mpz(base) % mod, mod)
        return int(gmpy2.powmod(inverse, -exp, mod))
    # 0^0 = 1
    return int(gmpy2.powmod(gmpy2.mpz(base) % mod, exp, mod))


def generalized_binomial(a: int, k: int) -> int:
    """C(a, k) for any integer a, with C(a, k) = a(a-1)...(a-k+1)/k!."""
    if k < 0:
        return 0
    if a >= 0:
        return int(gmpy2.comb(a, k)) if k <= a else 0
    value = int(gmpy2.comb(k - a - 1, k))
    return -value if k % 2 else value


@dataclass(frozen=True, slots=True)
class TwoAdic:
    """A 2-adic integer known modulo 2^prec."""

    residue: int
    prec: int

    def __post_init__(self):
        if self.prec < 1:
            raise PrecisionUnderflowError(f"precision must be positive, got {self.prec}")
        if not 0 <= self.residue < (1 << self.prec):
            raise DomainError(f"residue {self.residue} is not reduced mod 2^{self.prec}")

    @classmethod
    def of(cls, value: int, prec: int) -> "TwoAdic":
        """Reduce an arbitrary integer modulo 2^prec."""
        if prec < 1:
            raise PrecisionUnderflowError(f"precision must be positive, got {prec}")
        return cls(int(value) % (1 << prec), prec)

    @property
    def modulus(self) -> int:
        return 1 << self.prec

    def bit(self, i: int) -> int:
        if i >= self.prec:
            raise DomainError(f"bit {i} is beyond precision {self.prec}")
        return (self.residue >> i) & 1

    def truncate(self, prec: int) -> "TwoAdic":
        if prec > self.prec:
            raise PrecisionUnderflowError(f"cannot raise precision from {self.prec} to {prec}")
        return TwoAdic.of(self.residue, prec)

    def _coerce(self, other: Union[int, "TwoAdic"]) -> "TwoAdic":
        if isinstance(other, TwoAdic):
            return other
        return TwoAdic.of(other, self.prec)

    def __add__(self, other: Union[int, "TwoAdic"]) -> "TwoAdic":
        other = self._coerce(other)
        return TwoAdic.of(self.residue + other.residue, min(self.prec, other.prec))

    __radd__ = __add__

    def __sub__(self, other: Union[int, "TwoAdic"]) -> "TwoAdic":
        other = self._coerce(other)
        return TwoAdic.of(self.residue - other.residue, min(self.prec, other.prec))

    def __rsub__(self, other: int) -> "TwoAdic":
        return self._coerce(other) - self

    def __neg__(self) -> "TwoAdic":
        return TwoAdic.of(-self.residue, self.prec)

    def __mul__(self, other: Union[int, "TwoAdic"]) -> "TwoAdic":
        other = self._coerce(other)
        return TwoAdic.of(self.residue * other.residue, min(self.prec, other.prec))

    __rmul__ = __mul__

    def inverse(self) -> "TwoAdic":
        """Multiplicative inverse of a unit."""
        if self.residue % 2 == 0:
            raise DomainError("only odd residues are invertible")
        return TwoAdic(int(gmpy2.invert(self.residue, self.modulus)), self.prec)

    def divide(self, other: Union[int, "TwoAdic"]) -> "TwoAdic":
        """Exact quotient; precision drops by the divisor's valuation."""
        other = self._coerce(other)
        divisor_val = valuation_of(other)
        if not divisor_val.is_finite:
            raise ZeroValuationError("division by a truncation that is all zeros")
        v = divisor_val.value
        prec = min(self.prec, other.prec) - v
        if prec < 1:
            raise PrecisionUnderflowError("quotient has no remaining precision")
        if self.residue % (1 << v):
            raise DomainError("dividend is not divisible by the divisor's power of 2")
        unit = TwoAdic.of(other.residue >> v, prec).inverse()
        return TwoAdic.of((self.residue >> v) * unit.residue, prec)

    def to_dict(self) -> Dict[str, Any]:
        return {"residue_hex": format(self.residue, "x"), "prec": self.prec}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TwoAdic":
        return cls(int(data["residue_hex"], 16), int(data["prec"]))

    def __str__(self) -> str:
        return f"{self.residue:#x} (mod 2^{self.prec})"


def valuation_of(z: TwoAdic) -> Valuation:
    if z.residue == 0:
        return Valuation.at_least(z.prec)
    return Valuation.finite(nu(z.residue))


def exact_valuation(q: Union[int, Fraction]) -> Valuation:
    """Valuation of an exact integer or rational; zero gives INFINITE."""
    if q == 0:
        return Valuation.infinite()
    if isinstance(q, Fraction):
        return Valuation.finite(nu(q.numerator) - nu(q.denominator))
    return Valuation.finite(nu(q))


def backwards_binary(z: TwoAdic, bits: int) -> str:
    """Low-order bit first rendering of the first ``bits`` bits."""
    if bits > z.prec:
        raise DomainError(f"requested {bits} bits but only {z.prec} are known")
    return "".join(str((z.residue >> i) & 1) for i in range(bits))


def parse_backwards_binary(text: str) -> TwoAdic:
    text = text.strip().rstrip(".").replace("⋯", "")
    if not text or set(text) - {"0", "1"}:
        raise DomainError(f"not a backwards binary string: {text!r}")
    residue = sum(1 << i for i, ch in enumerate(text) if ch == "1")
    return TwoAdic(residue, len(text))


def binomial_mod(m: int, k: int, prec: int) -> TwoAdic:
    """C(m, k) mod 2^prec for huge m and moderate k.

    The product of the k factors (m - i)/(i + 1) is formed with even parts
    counted separately so the unit part never loses precision.
    """
    if m < 0 or k < 0:
        raise DomainError(f"binomial_mod expects m, k >= 0, got m={m}, k={k}")
    if k > m:
        return TwoAdic(0, prec)
    mod = gmpy2.mpz(1) << prec
    numerator = gmpy2.mpz(1)
    denominator = gmpy2.mpz(1)
    exponent = 0
    for i in range(k):
        top = m - i
        bottom = i + 1
        v_top = nu(top)
        v_bottom = nu(bottom)
        exponent += v_top - v_bottom
        numerator = (numerator * (top >> v_top)) % mod
        denominator = (denominator * (bottom >> v_bottom)) % mod
    if exponent >= prec:
        return TwoAdic(0, prec)
    unit = numerator * gmpy2.invert(denominator, mod) % mod
    return TwoAdic.of(int(unit) << exponent, prec)


def rational_mod(q: Union[int, Fraction], prec: int) -> TwoAdic:
    """Reduce a 2-integral rational modulo 2^prec."""
    q = Fraction(q)
    if q == 0:
        return TwoAdic(0, prec)
    den_val = nu(q.denominator)
    if nu(q.numerator) < den_val:
        raise DomainError(f"{q} is not a 2-adic integer")
    mod = gmpy2.mpz(1) << prec
    unit = gmpy2.invert(gmpy2.mpz(q.denominator >> den_val) % mod, mod)
    return TwoAdic.of(int((q.numerator >> den_val) * unit % mod), prec)


def min_prime(a: Valuation, d: int) -> Valuation:
    """Expected f(x + 2^d) given f(x) = a when f(x) = nu(x - z0).

    min'(a, d) is min(a, d) when they differ and "more than a" when equal.
    """
    if a.kind is ValuationKind.INFINITE:
        return Valuation.finite(d)
    if a.kind is ValuationKind.AT_LEAST:
        if d < a.value:
            return Valuation.finite(d)
        return Valuation.at_least(a.value)
    if a.value != d:
        return Valuation.finite(min(a.value, d))
    return Valuation.at_least(d + 1)


def longest_zero_run(z: TwoAdic, bits: int) -> int:
    """Longest run of 0-bits among the low ``bits`` bits."""
    best = run = 0
    for ch in backwards_binary(z, bits):
        run = run + 1 if ch == "0" else 0
        best = max(best, run)
    return best
