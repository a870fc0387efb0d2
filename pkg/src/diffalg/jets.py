from typing import Any, Sequence, Union

from diffalg.diffpoly import V, W, DiffPoly, Generator
from diffalg.errors import JetTooShort
from diffalg.series import EpsSeries


def jet_eval(
    p: Union[EpsSeries, DiffPoly],
    jets_f: Sequence[Any],
    jets_g: Sequence[Any],
    h: Any,
    N: int,
    exact: bool = False,
) -> Any:
    """
    Evaluate Σ_{n<N} h^n P_n(f, g): v^(j) -> jets_f[j], w^(j) -> jets_g[j], ε -> h.

    Jets may be numbers, numpy arrays or any ring elements that mix with
    floats (e.g. numlab.taylor.Jet). Coefficients are turned into floats first
    unless `exact` is set, in which case they stay Fractions.

    Raises:
        JetTooShort: p needs a derivative order beyond the supplied jets
        TruncationMismatch: N exceeds the known truncation of p
    """
    if isinstance(p, DiffPoly):
        p = EpsSeries.from_poly(p, N)
    jets = {V: jets_f, W: jets_g}

    def assign(gen: Generator):
        jet = jets[gen.letter]
        if gen.order >= len(jet):
            raise JetTooShort(gen.letter, gen.order, len(jet))
        return jet[gen.order]

    coeff = None if exact else float
    total: Any = 0
    for n in range(min(p.min_exp, N), N):
        c = p.coefficient(n)
        if not c:
            continue
        total = total + (h ** n) * c.evaluate(assign, zero=0, coeff=coeff)
    return total
