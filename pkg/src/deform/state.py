from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Dict, Optional, Tuple

import structlog
from pydantic import BaseModel, Field, field_validator

from diffalg import codec
from diffalg.diffpoly import DiffPoly, w
from diffalg.series import EpsSeries
from hierarchy.toda import SLOW_LABEL, slow_scale

logger = structlog.get_logger(__name__)

DEFAULT_RECURSION_CANDIDATES = ("-1/2", "1/2", "-1", "1")


def _check_fraction(value: str) -> str:
    try:
        Fraction(value)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational number: {value!r}") from exc
    return value


class GaugeRecord(BaseModel):
    """Every convention the construction fixes by choice, attached to all cached results"""
    slow_combination: str = Field(
        SLOW_LABEL,
        description="Toda combination used as the defining slow flow"
    )
    slow_sign: int = Field(
        1,
        description="Sign applied to the normalized defining flow"
    )
    slow_scale: Optional[str] = Field(
        None,
        description="Normalizing scalar read off the ε^0 images (filled in when resolved)"
    )
    eps_power: int = Field(
        -1,
        description="Power of ε multiplying every conjugated flow"
    )
    integration_constant: str = Field(
        "zero",
        description="Rule for the additive constant of each antiderivative"
    )
    recursion_candidates: Tuple[str, ...] = Field(
        DEFAULT_RECURSION_CANDIDATES,
        description="Values tried for the recursion constant c at the first nonzero order"
    )
    recursion_constant: Optional[str] = Field(
        None,
        description="The recursion constant c once frozen"
    )
    pivot_offset: int = Field(
        1,
        description="Added to ε-valuations of normalized flows to report characteristic numbers"
    )

    @field_validator("slow_sign")
    @classmethod
    def validate_sign(cls, v: int) -> int:
        if v not in (1, -1):
            raise ValueError("slow_sign must be 1 or -1")
        return v

    @field_validator("slow_scale", "recursion_constant")
    @classmethod
    def validate_optional_fraction(cls, v: Optional[str]) -> Optional[str]:
        return v if v is None else _check_fraction(v)

    @field_validator("recursion_candidates")
    @classmethod
    def validate_candidates(cls, v: Tuple[str, ...]) -> Tuple[str, ...]:
        if not v:
            raise ValueError("at least one recursion constant candidate is required")
        for item in v:
            _check_fraction(item)
            if Fraction(item) == 0:
                raise ValueError("the recursion constant cannot be zero")
        return tuple(v)

    @field_validator("integration_constant")
    @classmethod
    def validate_integration_constant(cls, v: str) -> str:
        if v != "zero":
            raise ValueError("only the zero integration constant is supported")
        return v

    def resolved(self) -> "GaugeRecord":
        """Fill in slow_scale from the flow itself when unset."""
        if self.slow_scale is not None:
            return self
        return self.model_copy(update={"slow_scale": codec.encode_fraction(slow_scale())})

    @property
    def flow_factor(self) -> Fraction:
        """slow_sign · slow_scale."""
        scale = Fraction(self.slow_scale) if self.slow_scale is not None else slow_scale()
        return self.slow_sign * scale

    @property
    def constant(self) -> Optional[Fraction]:
        return None if self.recursion_constant is None else Fraction(self.recursion_constant)

    def key_fields(self) -> Dict[str, Any]:
        """Inputs that determine the construction (the resolved constant is an output)."""
        data = self.resolved().model_dump(mode="json")
        data.pop("recursion_constant")
        return data


class ObstructionRecord(BaseModel):
    """One step of the recursion"""
    order: int
    obstruction: str = Field(..., description="G_n in canonical text form")
    exact: bool = Field(..., description="Whether δ(G_n) vanished")
    correction: str = Field(..., description="Q_n in canonical text form")
    monomials: int = Field(..., description="Monomial count of Q_n")
    weight: Optional[int] = Field(
        None,
        description="Common combined weight 2·amp_w + diff of Q_n (None if zero or mixed)"
    )


@dataclass(frozen=True)
class DeformationState:
    """
    Q in R_0[[ε]] built up to `order`.

    The defining residual vanishes modulo ε^order. Q carries coefficients
    Q_0 .. Q_order, the last one still open (zero unless order is 0, where
    Q_0 = w^(0) is the starting point).
    """
    Q: EpsSeries
    order: int
    gauge: GaugeRecord
    log: Tuple[ObstructionRecord, ...] = field(default_factory=tuple)

    def coefficient(self, n: int) -> DiffPoly:
        return self.Q.coefficient(n)

    def truncated_to(self, order: int) -> "DeformationState":
        if order >= self.order:
            return self
        return replace(
            self,
            Q=self.Q.truncate(max(order, 1)).extend(order + 1),
            order=order,
            log=tuple(r for r in self.log if r.order < order),
        )

    def to_payload(self) -> Dict[str, Any]:
        return {
            "order": self.order,
            "Q": codec.encode_series(self.Q),
            "gauge": self.gauge.model_dump(mode="json"),
            "log": [r.model_dump(mode="json") for r in self.log],
        }

    @classmethod
    def from_payload(cls, data: Dict[str, Any]) -> "DeformationState":
        return cls(
            Q=codec.decode_series(data["Q"]),
            order=int(data["order"]),
            gauge=GaugeRecord.model_validate(data["gauge"]),
            log=tuple(ObstructionRecord.model_validate(r) for r in data["log"]),
        )


def initial_state(gauge: Optional[GaugeRecord] = None) -> DeformationState:
    """Q = w^(0) at order 0."""
    gauge = (gauge or GaugeRecord()).resolved()
    return DeformationState(Q=EpsSeries.from_poly(w(0), 1), order=0, gauge=gauge)
