from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Union

import structlog

from deform.errors import OrderNotReached, ResidualNonzero
from deform.recursion import FlowSpec, flow_derivation, flow_label, ideal_residual
from deform.state import DeformationState
from diffalg.derivation import TameDerivation, derive, substitute_sigma
from diffalg.diffpoly import DiffPoly
from diffalg.series import EpsSeries
from shared.workers import WorkerPool, map_ordered

logger = structlog.get_logger(__name__)


@dataclass(frozen=True)
class InducedDerivation:
    """
    The flow D̄_k on R_0[[ε]]: D̄_k(w^(0)) = σ_Q(D_k(w^(0))).

    It acts on w-only series as the ∂-commuting derivation with that image.
    """
    img_w: EpsSeries
    source: str

    @property
    def trunc(self) -> int:
        return self.img_w.trunc

    def as_derivation(self) -> TameDerivation:
        return TameDerivation(EpsSeries.zero(self.trunc), self.img_w)

    def __call__(self, p: Union[EpsSeries, DiffPoly]) -> EpsSeries:
        return derive(self.as_derivation(), p)

    def __add__(self, other: "InducedDerivation") -> "InducedDerivation":
        return InducedDerivation(self.img_w + other.img_w, f"{self.source}+{other.source}")

    def __sub__(self, other: "InducedDerivation") -> "InducedDerivation":
        return InducedDerivation(self.img_w - other.img_w, f"{self.source}-{other.source}")

    def scale(self, factor: Union[int, Fraction]) -> "InducedDerivation":
        return InducedDerivation(self.img_w.scale(factor), f"{factor}*{self.source}")

    def truncate(self, n: int) -> "InducedDerivation":
        return InducedDerivation(self.img_w.truncate(n), self.source)


def induce(
    state: DeformationState,
    k: FlowSpec,
    N: Optional[int] = None,
    flow: Optional[TameDerivation] = None,
) -> InducedDerivation:
    """
    D̄_k with image σ_Q(D_k(w^(0))) modulo ε^N (default: the state order).

    Raises:
        ResidualNonzero: D_k does not preserve the ideal modulo ε^N
    """
    N = state.order if N is None else N
    if state.order < N:
        raise OrderNotReached(N, state.order)
    D = flow if flow is not None else flow_derivation(k, N, state.gauge)
    label = flow_label(k)
    rho = ideal_residual(D, state.Q, N)
    if not rho.is_zero():
        logger.warning("Flow leaves the ideal", flow=label, order=rho.min_exp)
        raise ResidualNonzero(label, rho.min_exp, str(rho.leading()))
    Q = state.Q.truncate(N).extend(N)
    img_w = substitute_sigma(Q, D.truncate(N).img_w).truncate(N)
    logger.debug("Flow induced", flow=label, trunc=N, monomials=img_w.monomial_count())
    return InducedDerivation(img_w, label)


def induce_many(
    state: DeformationState,
    ks: Sequence[FlowSpec],
    N: Optional[int] = None,
    pool: Optional[WorkerPool] = None,
) -> List[InducedDerivation]:
    return map_ordered(lambda k: induce(state, k, N), ks, pool)


def commute_check(a: InducedDerivation, b: InducedDerivation, N: int) -> EpsSeries:
    """[D̄_a, D̄_b](w^(0)) modulo ε^N; zero for commuting flows."""
    if min(a.trunc, b.trunc) < N:
        raise OrderNotReached(N, min(a.trunc, b.trunc))
    a, b = a.truncate(N), b.truncate(N)
    return (derive(a.as_derivation(), b.img_w) - derive(b.as_derivation(), a.img_w)).truncate(N)
