import json
from pathlib import Path
from typing import List, Union

import numpy as np
from pydantic import BaseModel, Field, field_validator

from numlab.taylor import Jet


class TrigTerm(BaseModel):
    m: int = Field(..., description="Frequency index in exp(2πimx)")
    re: float = Field(..., description="Real part of the coefficient")
    im: float = Field(0.0, description="Imaginary part of the coefficient")


class TrigSpec(BaseModel):
    """Fourier coefficients of a periodic test function g"""
    terms: List[TrigTerm] = Field(..., description="Nonzero Fourier coefficients")

    @field_validator("terms")
    @classmethod
    def validate_terms(cls, v: List[TrigTerm]) -> List[TrigTerm]:
        if len({t.m for t in v}) != len(v):
            raise ValueError("duplicate frequency in trig spec")
        return v

    @classmethod
    def cosine(cls, m: int = 1, amplitude: float = 1.0) -> "TrigSpec":
        """amplitude·cos(2πmx)."""
        if m == 0:
            return cls(terms=[TrigTerm(m=0, re=amplitude)])
        half = amplitude / 2
        return cls(terms=[TrigTerm(m=-m, re=half), TrigTerm(m=m, re=half)])

    @classmethod
    def sine(cls, m: int = 1, amplitude: float = 1.0) -> "TrigSpec":
        """amplitude·sin(2πmx)."""
        half = amplitude / 2
        return cls(terms=[TrigTerm(m=-m, re=0.0, im=half), TrigTerm(m=m, re=0.0, im=-half)])

    @classmethod
    def zero(cls) -> "TrigSpec":
        return cls(terms=[])

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "TrigSpec":
        return cls.model_validate(json.loads(Path(path).read_text(encoding="utf-8")))


class TrigFunction:
    """g(x) = Σ c_m exp(2πimx) with exact derivatives of every order."""

    def __init__(self, spec: TrigSpec):
        self.spec = spec
        self.freqs = np.array([t.m for t in spec.terms], dtype=np.float64)
        self.coeffs = np.array([complex(t.re, t.im) for t in spec.terms], dtype=np.complex128)

    def derivative(self, order: int, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if not len(self.freqs):
            return np.zeros_like(x, dtype=np.complex128)
        factors = self.coeffs * (2j * np.pi * self.freqs) ** order
        phases = np.exp(2j * np.pi * np.multiply.outer(x, self.freqs))
        return phases @ factors

    def __call__(self, x) -> np.ndarray:
        return self.derivative(0, x)

    def jets(self, x, count: int) -> List[np.ndarray]:
        """[g(x), g'(x), ..., g^(count-1)(x)]."""
        return [self.derivative(k, x) for k in range(count)]

    def taylor_jets(self, x, count: int, length: int) -> List[Jet]:
        """Taylor jets in τ of g^(k)(x + τ), k < count, each of the given length."""
        derivs = [self.derivative(k, x) for k in range(count + length - 1)]
        return [Jet.from_derivatives(derivs[k:k + length]) for k in range(count)]
