"""
Canonical JSON form of the exact objects.

A polynomial is a list of monomials {"c": "num/den", "f": [[letter, index, exp], ...]}
in graded lexicographic order; a series is {"min_exp", "coeffs", "trunc"}; a
derivation is {"img_v", "img_w"}. `dumps` is byte-stable, so two equal objects
always serialize to the same text and hash.
"""
import hashlib
import json
from fractions import Fraction
from typing import Any, Callable, Dict, List, Type, TypeVar

from diffalg.derivation import TameDerivation
from diffalg.diffpoly import DiffPoly, Generator
from diffalg.series import EpsSeries
from diffalg.sparse import SparsePoly

P = TypeVar("P", bound=SparsePoly)


def encode_fraction(value: Fraction) -> str:
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def decode_fraction(text: str) -> Fraction:
    return Fraction(text)


def encode_poly(
    p: SparsePoly, encode_gen: Callable[[Any], List[Any]] = lambda g: [g.letter, g.order]
) -> List[Dict[str, Any]]:
    return [
        {"c": encode_fraction(c), "f": [encode_gen(g) + [e] for g, e in mono]}
        for mono, c in p.sorted_terms()
    ]


def decode_poly(
    data: List[Dict[str, Any]],
    klass: Type[P] = DiffPoly,
    decode_gen: Callable[[List[Any]], Any] = lambda f: Generator(f[0], int(f[1])),
) -> P:
    terms = {}
    for entry in data:
        mono = tuple(sorted((decode_gen(f[:-1]), int(f[-1])) for f in entry["f"]))
        terms[mono] = decode_fraction(entry["c"])
    return klass(terms)


def encode_series(s: EpsSeries) -> Dict[str, Any]:
    return {
        "min_exp": s.min_exp,
        "coeffs": [encode_poly(c) for c in s.coeffs],
        "trunc": s.trunc,
    }


def decode_series(data: Dict[str, Any]) -> EpsSeries:
    coeffs = [decode_poly(c) for c in data["coeffs"]]
    return EpsSeries(coeffs, int(data["trunc"]), int(data["min_exp"]))


def encode_derivation(D: TameDerivation) -> Dict[str, Any]:
    return {"img_v": encode_series(D.img_v), "img_w": encode_series(D.img_w)}


def decode_derivation(data: Dict[str, Any]) -> TameDerivation:
    return TameDerivation(decode_series(data["img_v"]), decode_series(data["img_w"]))


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def content_hash(obj: Any) -> str:
    return hashlib.sha256(dumps(obj).encode("utf-8")).hexdigest()
