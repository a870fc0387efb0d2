from dataclasses import dataclass
from typing import Any


@dataclass
class RecursionBroken(Exception):
    """The KdV recursion met a non-exact element"""
    n: int
    element: Any

    def __str__(self):
        return f"KdV recursion broken at K_{self.n}: {self.element} has no antiderivative"


@dataclass
class LeadingTermMismatch(Exception):
    """A conjugated flow does not have the leading term its normalization needs"""
    component: str
    expected: Any
    actual: Any

    def __str__(self):
        return (
            f"leading term of {self.component} is {self.actual}, "
            f"not a rational multiple of {self.expected}"
        )
