from dataclasses import dataclass
from typing import Any


@dataclass
class Blowup(Exception):
    """Integration produced non-finite values"""
    step: int
    time: float

    def __str__(self):
        return f"non-finite lattice values at step {self.step} (t = {self.time:.6g})"


@dataclass
class PoleHit(Exception):
    """A closed-form expression was evaluated at or too near a pole"""
    form: str
    point: Any

    def __str__(self):
        return f"{self.form} has a pole at {self.point}"


@dataclass
class LatticeError(ValueError):
    """Invalid periodic lattice data"""
    message: str

    def __str__(self):
        return self.message
