from math import factorial
from numbers import Number
from typing import Union

import numpy as np

Scalar = Union[Number, np.ndarray]


class Jet:
    """
    Truncated Taylor series Σ_{k<L} c_k τ^k in a local coordinate τ.

    Coefficients are numpy arrays of shape (L, ...) so one jet carries a
    whole grid of expansion points at once.
    """

    __array_priority__ = 1000

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        self.coeffs = np.asarray(coeffs, dtype=np.complex128)

    @classmethod
    def constant(cls, value, length: int, shape=()) -> "Jet":
        coeffs = np.zeros((length,) + tuple(shape), dtype=np.complex128)
        coeffs[0] = value
        return cls(coeffs)

    @classmethod
    def from_derivatives(cls, derivatives) -> "Jet":
        """Jet from the values of f, f', f'', ... at the expansion points."""
        derivatives = np.asarray(derivatives, dtype=np.complex128)
        scale = np.array([1.0 / factorial(k) for k in range(derivatives.shape[0])])
        return cls(derivatives * scale.reshape((-1,) + (1,) * (derivatives.ndim - 1)))

    @property
    def length(self) -> int:
        return self.coeffs.shape[0]

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[0]

    def derivative(self, k: int) -> np.ndarray:
        """k-th derivative at τ = 0."""
        return factorial(k) * self.coeffs[k]

    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        return Jet.constant(other, self.length, self.coeffs.shape[1:])

    def __add__(self, other) -> "Jet":
        if isinstance(other, Jet):
            return Jet(self.coeffs + other.coeffs)
        out = self.coeffs.copy()
        out[0] = out[0] + other
        return Jet(out)

    __radd__ = __add__

    def __neg__(self) -> "Jet":
        return Jet(-self.coeffs)

    def __sub__(self, other) -> "Jet":
        return self + (-other)

    def __rsub__(self, other) -> "Jet":
        return (-self) + other

    def __mul__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            if np.ndim(other) == 0:
                return Jet(self.coeffs * other)
            return Jet(self.coeffs * np.asarray(other)[None, ...])
        a, b = self.coeffs, other.coeffs
        out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=np.complex128)
        for k in range(self.length):
            for i in range(k + 1):
                out[k] += a[i] * b[k - i]
        return Jet(out)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Jet":
        if isinstance(other, Jet):
            raise TypeError("division by a jet is not supported")
        return self * (1.0 / other)

    def __pow__(self, exponent: int) -> "Jet":
        if exponent < 0:
            raise ValueError("negative powers are not supported")
        result = self._lift(1.0)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            exponent >>= 1
            if exponent:
                base = base * base
        return result

    def __repr__(self) -> str:
        return f"Jet(length={self.length}, shape={self.coeffs.shape[1:]})"
