from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Mapping, NamedTuple, Tuple, Union

from diffalg.sparse import SparsePoly

X_AXIS = "X"
Y_AXIS = "Y"


class LatticeGen(NamedTuple):
    """Shift variable X_offset (A-sequence) or Y_offset (B-sequence)."""
    axis: str
    offset: int

    def shifted(self, n: int) -> "LatticeGen":
        return LatticeGen(self.axis, self.offset + n)

    def __str__(self) -> str:
        return f"{self.axis}{self.offset}"


class LatticePoly(SparsePoly[LatticeGen]):
    """Polynomial in the shift variables X_j, Y_j with rational coefficients."""

    __slots__ = ()

    def shift(self, n: int) -> "LatticePoly":
        if n == 0:
            return self
        return self.map_generators(lambda g: g.shifted(n))

    def offsets(self) -> Tuple[int, int]:
        """(min, max) offset present; (0, 0) for constants."""
        found = [g.offset for mono in self.terms for g, _ in mono]
        if not found:
            return 0, 0
        return min(found), max(found)


def X(j: int = 0) -> LatticePoly:
    return LatticePoly.generator(LatticeGen(X_AXIS, j))


def Y(j: int = 0) -> LatticePoly:
    return LatticePoly.generator(LatticeGen(Y_AXIS, j))


def lconst(value) -> LatticePoly:
    return LatticePoly.constant(value)


@dataclass(frozen=True)
class LatticePair:
    """(P1, P2): the lattice equation dA_n/dt = P1 shifted by n, dB_n/dt = P2 shifted by n."""
    p1: LatticePoly
    p2: LatticePoly

    @classmethod
    def zero(cls) -> "LatticePair":
        return cls(LatticePoly.zero(), LatticePoly.zero())

    def __add__(self, other: "LatticePair") -> "LatticePair":
        return LatticePair(self.p1 + other.p1, self.p2 + other.p2)

    def __sub__(self, other: "LatticePair") -> "LatticePair":
        return LatticePair(self.p1 - other.p1, self.p2 - other.p2)

    def __neg__(self) -> "LatticePair":
        return LatticePair(-self.p1, -self.p2)

    def scale(self, factor: Union[int, Fraction]) -> "LatticePair":
        return LatticePair(self.p1.scale(factor), self.p2.scale(factor))

    def __mul__(self, factor: Union[int, Fraction]) -> "LatticePair":
        return self.scale(factor)

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return self.p1.is_zero() and self.p2.is_zero()

    def offsets(self) -> Tuple[int, int]:
        lo1, hi1 = self.p1.offsets()
        lo2, hi2 = self.p2.offsets()
        return min(lo1, lo2), max(hi1, hi2)

    def __str__(self) -> str:
        return f"({self.p1}, {self.p2})"


@dataclass(frozen=True)
class BandTemplate:
    """
    Translation-equivariant band matrix stored by its row-0 template.

    entries[d] is the (0, d) entry; the (n, n + d) entry is entries[d]
    shifted by n.
    """
    entries: Mapping[int, LatticePoly] = field(default_factory=dict)

    def __post_init__(self):
        cleaned = {d: p for d, p in self.entries.items() if p}
        object.__setattr__(self, "entries", cleaned)

    @property
    def half_width(self) -> int:
        return max((abs(d) for d in self.entries), default=0)

    def entry(self, d: int) -> LatticePoly:
        return self.entries.get(d, LatticePoly.zero())

    def __add__(self, other: "BandTemplate") -> "BandTemplate":
        merged: Dict[int, LatticePoly] = dict(self.entries)
        for d, p in other.entries.items():
            merged[d] = merged.get(d, LatticePoly.zero()) + p
        return BandTemplate(merged)

    def __neg__(self) -> "BandTemplate":
        return BandTemplate({d: -p for d, p in self.entries.items()})

    def __sub__(self, other: "BandTemplate") -> "BandTemplate":
        return self + (-other)

    def __matmul__(self, other: "BandTemplate") -> "BandTemplate":
        # (MN)_{0,d} = Σ_{d1+d2=d} M_{0,d1} N_{d1,d1+d2}
        product: Dict[int, LatticePoly] = {}
        for d1, m in sorted(self.entries.items()):
            for d2, n in sorted(other.entries.items()):
                d = d1 + d2
                product[d] = product.get(d, LatticePoly.zero()) + m * n.shift(d1)
        return BandTemplate(product)

    def power(self, k: int) -> "BandTemplate":
        if k < 1:
            raise ValueError("band powers start at 1")
        result = self
        for _ in range(k - 1):
            result = result @ self
        return result

    def commutator(self, other: "BandTemplate") -> "BandTemplate":
        return (self @ other) - (other @ self)

    def strict_upper(self) -> "BandTemplate":
        return BandTemplate({d: p for d, p in self.entries.items() if d > 0})

    def readout(self) -> LatticePair:
        """(diagonal entry, superdiagonal entry) of row 0."""
        return LatticePair(self.entry(0), self.entry(1))


def lax_matrix() -> BandTemplate:
    """C: ones on the subdiagonal, X on the diagonal, Y on the superdiagonal."""
    return BandTemplate({-1: lconst(1), 0: X(0), 1: Y(0)})
