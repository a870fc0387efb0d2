from fractions import Fraction
from math import factorial
from numbers import Rational
from typing import Callable, Iterator, List, Sequence, Tuple, Union

from diffalg.diffpoly import DiffPoly
from diffalg.errors import IrrationalConstant, NotDivisible, TruncationMismatch

Scalar = Union[int, Fraction]


class EpsSeries:
    """
    Truncated Laurent series Σ_{k >= min_exp} ε^k c_k with DiffPoly coefficients.

    Powers >= trunc are unknown and never stored. The zero series has no
    coefficients and min_exp == trunc. Instances are immutable.
    """

    __slots__ = ("min_exp", "coeffs", "trunc")

    def __init__(self, coeffs: Sequence[DiffPoly], trunc: int, min_exp: int = 0):
        coeffs = list(coeffs[: max(0, trunc - min_exp)])
        start = 0
        while start < len(coeffs) and not coeffs[start]:
            start += 1
        end = len(coeffs)
        while end > start and not coeffs[end - 1]:
            end -= 1
        if start == end:
            self.min_exp = trunc
            self.coeffs: Tuple[DiffPoly, ...] = ()
        else:
            self.min_exp = min_exp + start
            self.coeffs = tuple(coeffs[start:end])
        self.trunc = trunc

    # --- constructors -----------------------------------------------------

    @classmethod
    def zero(cls, trunc: int) -> "EpsSeries":
        return cls((), trunc, trunc)

    @classmethod
    def from_poly(cls, p: Union[DiffPoly, Scalar], trunc: int) -> "EpsSeries":
        if not isinstance(p, DiffPoly):
            p = DiffPoly.constant(p)
        return cls((p,), trunc, 0)

    @classmethod
    def monomial(cls, p: DiffPoly, power: int, trunc: int) -> "EpsSeries":
        return cls((p,), trunc, power)

    # --- inspection -------------------------------------------------------

    def coefficient(self, k: int) -> DiffPoly:
        if k >= self.trunc:
            raise TruncationMismatch(k, self.trunc)
        idx = k - self.min_exp
        if 0 <= idx < len(self.coeffs):
            return self.coeffs[idx]
        return DiffPoly.zero()

    def terms(self) -> Iterator[Tuple[int, DiffPoly]]:
        for idx, c in enumerate(self.coeffs):
            if c:
                yield self.min_exp + idx, c

    @property
    def valuation(self) -> int:
        return self.min_exp

    @property
    def max_exp(self) -> int:
        return self.min_exp + len(self.coeffs) - 1

    def leading(self) -> DiffPoly:
        return self.coeffs[0] if self.coeffs else DiffPoly.zero()

    def is_zero(self) -> bool:
        return not self.coeffs

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def monomial_count(self) -> int:
        return sum(len(c) for c in self.coeffs)

    def is_w_only(self) -> bool:
        return all(c.is_w_only() for c in self.coeffs)

    # --- truncation -------------------------------------------------------

    def truncate(self, n: int) -> "EpsSeries":
        if n >= self.trunc:
            return self
        return EpsSeries(self.coeffs, n, self.min_exp)

    def extend(self, n: int) -> "EpsSeries":
        """Declare the unknown tail zero up to ε^n (for series that are polynomials in ε)."""
        if n <= self.trunc:
            return self.truncate(n)
        return EpsSeries(self.coeffs, n, self.min_exp)

    # --- arithmetic -------------------------------------------------------

    def _coerce(self, other) -> "EpsSeries":
        if isinstance(other, EpsSeries):
            return other
        if isinstance(other, DiffPoly):
            return EpsSeries.from_poly(other, max(self.trunc, 0))
        if isinstance(other, (float, complex)):
            raise IrrationalConstant(other)
        if isinstance(other, (int, Rational)):
            return EpsSeries.from_poly(DiffPoly.constant(other), max(self.trunc, 0))
        return NotImplemented

    def __add__(self, other) -> "EpsSeries":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        trunc = min(self.trunc, other.trunc)
        lo = min(self.min_exp, other.min_exp)
        if lo >= trunc:
            return EpsSeries.zero(trunc)
        coeffs: List[DiffPoly] = [DiffPoly.zero()] * (trunc - lo)
        for series in (self, other):
            for k, c in series.terms():
                if k < trunc:
                    coeffs[k - lo] = coeffs[k - lo] + c
        return EpsSeries(coeffs, trunc, lo)

    __radd__ = __add__

    def __neg__(self) -> "EpsSeries":
        return EpsSeries([-c for c in self.coeffs], self.trunc, self.min_exp)

    def __sub__(self, other) -> "EpsSeries":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> "EpsSeries":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def scale(self, factor: Union[Scalar, DiffPoly]) -> "EpsSeries":
        """Multiply by an exact constant or polynomial (valuation 0, no truncation loss)."""
        return EpsSeries([c * factor for c in self.coeffs], self.trunc, self.min_exp)

    def __mul__(self, other) -> "EpsSeries":
        if isinstance(other, (DiffPoly, int, Rational)) and not isinstance(other, bool):
            return self.scale(other)
        if isinstance(other, (float, complex)):
            raise IrrationalConstant(other)
        if not isinstance(other, EpsSeries):
            return NotImplemented
        trunc = min(self.trunc + other.min_exp, other.trunc + self.min_exp)
        lo = self.min_exp + other.min_exp
        if lo >= trunc:
            return EpsSeries.zero(trunc)
        coeffs: List[DiffPoly] = [DiffPoly.zero()] * (trunc - lo)
        for i, a in enumerate(self.coeffs):
            if not a:
                continue
            for j, b in enumerate(other.coeffs):
                if i + j >= trunc - lo:
                    break
                if b:
                    coeffs[i + j] = coeffs[i + j] + a * b
        return EpsSeries(coeffs, trunc, lo)

    def __rmul__(self, other) -> "EpsSeries":
        return self.__mul__(other)

    def __pow__(self, exponent: int) -> "EpsSeries":
        if exponent < 0:
            raise ValueError("negative powers are not supported")
        result = EpsSeries.from_poly(DiffPoly.constant(1), self.trunc - self.min_exp)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            exponent >>= 1
            if exponent:
                base = base * base
        return result

    def shift(self, k: int) -> "EpsSeries":
        """Multiply by ε^k."""
        if self.is_zero():
            return EpsSeries.zero(self.trunc + k)
        return EpsSeries(self.coeffs, self.trunc + k, self.min_exp + k)

    def div_eps(self, k: int = 1) -> "EpsSeries":
        """
        Divide by ε^k inside R[[ε]].

        Raises:
            NotDivisible: a coefficient below ε^k is nonzero
        """
        if not self.is_zero() and self.min_exp < k:
            raise NotDivisible(k, self.min_exp)
        return self.shift(-k)

    def map(self, fn: Callable[[DiffPoly], DiffPoly]) -> "EpsSeries":
        return EpsSeries([fn(c) for c in self.coeffs], self.trunc, self.min_exp)

    def partial(self) -> "EpsSeries":
        return self.map(DiffPoly.partial)

    def partial_n(self, n: int) -> "EpsSeries":
        return self.map(lambda c: c.partial_n(n))

    # --- comparison -------------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, EpsSeries):
            return NotImplemented
        return (
            self.trunc == other.trunc
            and self.min_exp == other.min_exp
            and self.coeffs == other.coeffs
        )

    def __hash__(self) -> int:
        return hash((self.trunc, self.min_exp, self.coeffs))

    def equal_mod(self, other: "EpsSeries", n: int) -> bool:
        """Equality of all coefficients below ε^n (both must be known there)."""
        if n > min(self.trunc, other.trunc):
            raise TruncationMismatch(n, min(self.trunc, other.trunc))
        return (self - other).truncate(n).is_zero()

    def __str__(self) -> str:
        if self.is_zero():
            return f"O(ε^{self.trunc})"
        parts = [f"({c})ε^{k}" for k, c in self.terms()]
        return " + ".join(parts) + f" + O(ε^{self.trunc})"

    def __repr__(self) -> str:
        return f"EpsSeries({self})"


def exp_shift(k: int, p: DiffPoly, trunc: int) -> EpsSeries:
    """E_k(p) = Σ_{m < trunc} (kε)^m ∂^m p / m!."""
    if trunc < 1:
        raise ValueError("exp_shift needs trunc >= 1")
    coeffs = []
    current = p
    for m in range(trunc):
        if m:
            current = current.partial()
        coeffs.append(current * Fraction(k ** m, factorial(m)))
    return EpsSeries(coeffs, trunc, 0)
