from dataclasses import dataclass
from typing import Any


@dataclass
class NotTame(Exception):
    """Conjugation left a negative ε-power in a derivation image"""
    component: str
    min_exp: int

    def __str__(self):
        return (
            f"derivation is not tame: image of {self.component} starts at "
            f"ε^{self.min_exp}"
        )


@dataclass
class NotDivisible(ArithmeticError):
    """Division by ε^k of a series whose valuation is below k"""
    power: int
    valuation: int

    def __str__(self):
        return f"cannot divide by ε^{self.power}: series has valuation {self.valuation}"


@dataclass
class NotExact(Exception):
    """The polynomial is not a total derivative (nonzero variational derivative)"""
    polynomial: Any
    variational_derivative: Any

    def __str__(self):
        return (
            f"{self.polynomial} is not a total derivative; "
            f"δ = {self.variational_derivative}"
        )


@dataclass
class JetTooShort(Exception):
    """Jet evaluation needs a derivative order the supplied jets do not have"""
    letter: str
    needed: int
    available: int

    def __str__(self):
        return (
            f"jet of {self.letter} has {self.available} entries, "
            f"order {self.needed} required"
        )


@dataclass
class IrrationalConstant(TypeError):
    """A non-rational number entered an exact computation"""
    value: Any

    def __str__(self):
        return f"exact arithmetic received non-rational constant {self.value!r}"


@dataclass
class TruncationMismatch(ValueError):
    """A coefficient at or beyond the known truncation was requested"""
    requested: int
    trunc: int

    def __str__(self):
        return f"coefficient ε^{self.requested} is unknown (series known mod ε^{self.trunc})"
