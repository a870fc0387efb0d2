from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Iterable, Tuple, Union

import sympy

Scalar = Union[int, Fraction]


class CyclotomicRing:
    """ℚ[ζ]/(Φ_N(ζ)), elements stored as coefficient vectors of length φ(N)."""

    def __init__(self, N: int):
        if N < 1:
            raise ValueError("N must be positive")
        self.N = N
        x = sympy.Symbol("x")
        coeffs = sympy.Poly(sympy.cyclotomic_poly(N, x), x).all_coeffs()
        # monic, highest degree first
        self.modulus: Tuple[Fraction, ...] = tuple(Fraction(int(c)) for c in coeffs)
        self.degree = len(self.modulus) - 1

    def __eq__(self, other) -> bool:
        return isinstance(other, CyclotomicRing) and other.N == self.N

    def __hash__(self) -> int:
        return hash(("CyclotomicRing", self.N))

    def __repr__(self) -> str:
        return f"CyclotomicRing({self.N})"

    def reduce(self, coeffs: Iterable[Fraction]) -> Tuple[Fraction, ...]:
        """Remainder of Σ coeffs[i] ζ^i modulo Φ_N."""
        a = [Fraction(c) for c in coeffs]
        d = self.degree
        for top in range(len(a) - 1, d - 1, -1):
            c = a[top]
            if not c:
                continue
            # subtract c·ζ^(top-d)·Φ_N
            for i, m in enumerate(self.modulus):
                a[top - i] -= c * m
        a = a[:d] + [Fraction(0)] * max(0, d - len(a))
        return tuple(a)

    def element(self, coeffs: Iterable[Scalar]) -> "CyclotomicNumber":
        return CyclotomicNumber(self, self.reduce(coeffs))

    def scalar(self, value: Scalar) -> "CyclotomicNumber":
        return self.element([value])

    def zeta(self, k: int = 1) -> "CyclotomicNumber":
        """ζ^k, exponent taken mod N."""
        return _zeta_power(self, k % self.N)


@lru_cache(maxsize=None)
def _zeta_power(ring: CyclotomicRing, k: int) -> "CyclotomicNumber":
    return ring.element([0] * k + [1])


class CyclotomicNumber:
    """An element of a CyclotomicRing with exact rational coordinates."""

    __slots__ = ("ring", "coeffs")

    def __init__(self, ring: CyclotomicRing, coeffs: Tuple[Fraction, ...]):
        self.ring = ring
        self.coeffs = coeffs

    def _lift(self, other) -> "CyclotomicNumber":
        if isinstance(other, CyclotomicNumber):
            if other.ring != self.ring:
                raise ValueError(f"mixing {self.ring} and {other.ring}")
            return other
        if isinstance(other, (int, Rational)) and not isinstance(other, bool):
            return self.ring.scalar(Fraction(other))
        return NotImplemented

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return CyclotomicNumber(self.ring, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    __radd__ = __add__

    def __neg__(self) -> "CyclotomicNumber":
        return CyclotomicNumber(self.ring, tuple(-a for a in self.coeffs))

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, Rational)) and not isinstance(other, bool):
            f = Fraction(other)
            return CyclotomicNumber(self.ring, tuple(a * f for a in self.coeffs))
        other = self._lift(other)
        if other is NotImplemented:
            return other
        prod = [Fraction(0)] * (2 * self.ring.degree)
        for i, a in enumerate(self.coeffs):
            if not a:
                continue
            for j, b in enumerate(other.coeffs):
                if b:
                    prod[i + j] += a * b
        return self.ring.element(prod)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Rational)) and not isinstance(other, bool):
            return self * (Fraction(1) / Fraction(other))
        return NotImplemented

    def __pow__(self, exponent: int) -> "CyclotomicNumber":
        if exponent < 0:
            raise ValueError("negative powers are not supported")
        result = self.ring.scalar(1)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            exponent >>= 1
            if exponent:
                base = base * base
        return result

    def __bool__(self) -> bool:
        return any(self.coeffs)

    def is_rational(self) -> bool:
        return not any(self.coeffs[1:])

    def __eq__(self, other) -> bool:
        other = self._lift(other)
        if other is NotImplemented:
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self) -> int:
        if self.is_rational():
            return hash(self.coeffs[0] if self.coeffs else Fraction(0))
        return hash((self.ring.N, self.coeffs))

    def __str__(self) -> str:
        parts = []
        for i, c in enumerate(self.coeffs):
            if not c:
                continue
            if i == 0:
                parts.append(str(c))
            else:
                power = "ζ" if i == 1 else f"ζ^{i}"
                parts.append(power if c == 1 else f"{c}*{power}")
        return "(" + " + ".join(parts) + ")" if parts else "0"

    def __repr__(self) -> str:
        return f"CyclotomicNumber(N={self.ring.N}, {self})"
