from abc import ABC, abstractmethod
from enum import Enum
from fractions import Fraction
from typing import Dict, List, NamedTuple, Tuple

from diffalg.sparse import SparsePoly
from hierarchy.lattice import X_AXIS, LatticeGen, LatticePoly
from poisson.cyclotomic import CyclotomicNumber

A_AXIS = "A"
B_AXIS = "B"


class BracketId(str, Enum):
    P1 = "p1"
    P2 = "p2"


class PoissonGen(NamedTuple):
    """A_index or B_index on the cycle Z/N."""
    axis: str
    index: int

    def __str__(self) -> str:
        return f"{self.axis}{self.index}"


class PoissonPoly(SparsePoly[PoissonGen]):
    """Polynomial in A_k, B_k with rational or cyclotomic coefficients."""

    __slots__ = ()

    _scalar_types = (int, Fraction, CyclotomicNumber)


class CyclicPoissonAlgebra(ABC):
    """
    Polynomials in A_0..A_{N-1}, B_0..B_{N-1} with a quadratic or linear
    Poisson bracket given on generators and extended by Leibniz.
    """

    bracket_id: BracketId

    def __init__(self, N: int):
        if N < 3:
            raise ValueError("the cyclic bracket tables need N >= 3")
        self.N = N
        self._cache: Dict[Tuple[PoissonGen, PoissonGen], PoissonPoly] = {}

    def A(self, k: int) -> PoissonPoly:
        return PoissonPoly.generator(PoissonGen(A_AXIS, k % self.N))

    def B(self, k: int) -> PoissonPoly:
        return PoissonPoly.generator(PoissonGen(B_AXIS, k % self.N))

    def generators(self) -> List[PoissonPoly]:
        return [self.A(k) for k in range(self.N)] + [self.B(k) for k in range(self.N)]

    def gen(self, g: PoissonGen) -> PoissonPoly:
        return self.A(g.index) if g.axis == A_AXIS else self.B(g.index)

    @abstractmethod
    def _table(self, a: PoissonGen, b: PoissonGen) -> PoissonPoly:
        """{a, b} on generators."""

    def generator_bracket(self, a: PoissonGen, b: PoissonGen) -> PoissonPoly:
        key = (a, b)
        value = self._cache.get(key)
        if value is None:
            value = self._table(a, b)
            self._cache[key] = value
        return value

    def bracket(self, x: PoissonPoly, y: PoissonPoly) -> PoissonPoly:
        """Bilinear, antisymmetric Leibniz extension of the generator table."""
        gx = x.generators()
        gy = y.generators()
        if not gx or not gy:
            return PoissonPoly.zero()
        dy = {b: y.diff(b) for b in gy}
        total = PoissonPoly.zero()
        for a in gx:
            da = None
            for b in gy:
                ab = self.generator_bracket(a, b)
                if not ab:
                    continue
                if da is None:
                    da = x.diff(a)
                total = total + da * dy[b] * ab
        return total

    def lattice_image(self, poly: LatticePoly, k: int) -> PoissonPoly:
        """X_j -> A_{k+j}, Y_j -> B_{k+j}."""
        def assign(gen: LatticeGen) -> PoissonPoly:
            return self.A(k + gen.offset) if gen.axis == X_AXIS else self.B(k + gen.offset)

        return poly.evaluate(assign, zero=PoissonPoly.zero())


class P1Algebra(CyclicPoissonAlgebra):
    """{B_n, A_n} = -2B_n, {B_{n-1}, A_n} = 2B_{n-1}."""

    bracket_id = BracketId.P1

    def _table(self, a: PoissonGen, b: PoissonGen) -> PoissonPoly:
        N = self.N
        if a.axis == b.axis:
            return PoissonPoly.zero()
        if a.axis == B_AXIS:
            return -self._table(b, a)
        # {A_i, B_j}
        i, j = a.index, b.index
        if j == i:
            return self.B(i).scale(2)
        if j == (i - 1) % N:
            return self.B(j).scale(-2)
        return PoissonPoly.zero()


class P2Algebra(CyclicPoissonAlgebra):
    """
    {A_k, A_{k+1}} = B_k, {B_k, A_{k+1}} = B_k A_{k+1},
    {B_k, A_k} = -B_k A_k, {B_k, B_{k+1}} = B_k B_{k+1}.
    """

    bracket_id = BracketId.P2

    def _table(self, a: PoissonGen, b: PoissonGen) -> PoissonPoly:
        N = self.N
        i, j = a.index, b.index
        if a.axis == A_AXIS and b.axis == A_AXIS:
            if j == (i + 1) % N:
                return self.B(i)
            if j == (i - 1) % N:
                return -self.B(j)
            return PoissonPoly.zero()
        if a.axis == B_AXIS and b.axis == B_AXIS:
            if j == (i + 1) % N:
                return self.B(i) * self.B(j)
            if j == (i - 1) % N:
                return -(self.B(j) * self.B(i))
            return PoissonPoly.zero()
        if a.axis == A_AXIS:
            return -self._table(b, a)
        # {B_i, A_j}
        if j == (i + 1) % N:
            return self.B(i) * self.A(j)
        if j == i:
            return -(self.B(i) * self.A(i))
        return PoissonPoly.zero()


def make_algebra(N: int, bracket_id: BracketId) -> CyclicPoissonAlgebra:
    if BracketId(bracket_id) is BracketId.P1:
        return P1Algebra(N)
    return P2Algebra(N)
