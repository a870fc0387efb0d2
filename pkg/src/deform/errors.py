from dataclasses import dataclass
from typing import Any


@dataclass
class ObstructionNotExact(Exception):
    """The obstruction G_n has nonzero variational derivative"""
    order: int
    obstruction: Any

    def __str__(self):
        return f"obstruction at ε^{self.order} is not a total derivative: {self.obstruction}"


@dataclass
class CorrectionFailed(Exception):
    """The residual survived the correction step"""
    order: int
    residual: Any

    def __str__(self):
        return f"residual does not vanish at ε^{self.order} after correction: {self.residual}"


@dataclass
class ResidualNonzero(Exception):
    """A flow does not preserve the ideal generated by v^(0) - Q"""
    flow: str
    order: int
    residual: Any

    def __str__(self):
        return f"flow {self.flow} leaves the ideal at ε^{self.order}: {self.residual}"


@dataclass
class TruncationTooShallow(Exception):
    """The elimination needs more ε-orders than the flows carry"""
    needed: int
    available: int

    def __str__(self):
        return (
            f"truncation ε^{self.available} too shallow; "
            f"at least ε^{self.needed} required"
        )


@dataclass
class OrderNotReached(Exception):
    """The deformation state is not deep enough for the requested operation"""
    requested: int
    order: int

    def __str__(self):
        return f"state known to order {self.order}, order {self.requested} requested"


@dataclass
class CacheCorrupted(Exception):
    """A cache file failed its content hash"""
    path: str
    expected: str
    actual: str

    def __str__(self):
        return (
            f"cache file {self.path} content hash {self.actual[:16]} "
            f"does not match recorded {self.expected[:16]}"
        )
