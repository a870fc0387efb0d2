from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from pydantic import BaseModel, Field

from diffalg.jets import jet_eval
from hierarchy.lattice import X_AXIS, LatticeGen, LatticePair, LatticePoly
from hierarchy.toda import toda_to_eps
from numlab.errors import Blowup, LatticeError

logger = structlog.get_logger(__name__)

PROGRESS_EVERY = 2000


@dataclass(frozen=True)
class PeriodicLattice:
    """Sequences A_k, B_k with k taken mod N."""
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=np.complex128)
        B = np.asarray(self.B, dtype=np.complex128)
        if A.ndim != 1 or A.shape != B.shape:
            raise LatticeError(f"A and B must be 1-d arrays of equal length, got {A.shape} and {B.shape}")
        if A.size == 0:
            raise LatticeError("empty lattice")
        if np.any(B == 0):
            raise LatticeError("B must be nonzero at every site")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def N(self) -> int:
        return self.A.size

    @classmethod
    def constant(cls, N: int, a: complex, b: complex) -> "PeriodicLattice":
        return cls(np.full(N, a, dtype=np.complex128), np.full(N, b, dtype=np.complex128))


def random_lattice(N: int, rng: np.random.Generator, scale: float = 0.1) -> PeriodicLattice:
    """Real lattice near the degenerate point A = -2, B = 1."""
    A = -2.0 + scale * rng.standard_normal(N)
    B = 1.0 + scale * rng.standard_normal(N)
    return PeriodicLattice(A, B)


def _evaluate(poly: LatticePoly, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    N = A.size

    def assign(gen: LatticeGen) -> np.ndarray:
        if abs(gen.offset) >= N:
            raise LatticeError(f"offset {gen.offset} does not fit in period {N}")
        seq = A if gen.axis == X_AXIS else B
        return np.roll(seq, -gen.offset)

    return poly.evaluate(assign, zero=np.zeros(N, dtype=np.complex128), coeff=float)


def lattice_flow_eval(pair: LatticePair, lat: PeriodicLattice) -> Tuple[np.ndarray, np.ndarray]:
    """(dA_n/dt, dB_n/dt) for every site n: X_j -> A_{n+j}, Y_j -> B_{n+j}."""
    return _evaluate(pair.p1, lat.A, lat.B), _evaluate(pair.p2, lat.A, lat.B)


def integrate_flow(
    lat: PeriodicLattice,
    pair: LatticePair,
    t_end: float,
    steps: int,
) -> PeriodicLattice:
    """
    Classical RK4 integration of the lattice flow from t = 0 to t_end.

    Raises:
        Blowup: a stage produced inf or nan
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if pair.is_zero():
        return lat
    dt = t_end / steps
    A, B = lat.A.copy(), lat.B.copy()

    def field(a: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return _evaluate(pair.p1, a, b), _evaluate(pair.p2, a, b)

    for step in range(1, steps + 1):
        k1a, k1b = field(A, B)
        k2a, k2b = field(A + 0.5 * dt * k1a, B + 0.5 * dt * k1b)
        k3a, k3b = field(A + 0.5 * dt * k2a, B + 0.5 * dt * k2b)
        k4a, k4b = field(A + dt * k3a, B + dt * k3b)
        A = A + dt / 6.0 * (k1a + 2 * k2a + 2 * k3a + k4a)
        B = B + dt / 6.0 * (k1b + 2 * k2b + 2 * k3b + k4b)
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
            raise Blowup(step, step * dt)
        if step % PROGRESS_EVERY == 0:
            logger.debug("RK4 progress", step=step, steps=steps)
    return PeriodicLattice(A, B)


def lax_dense(lat: PeriodicLattice, copies: int = 1) -> np.ndarray:
    """
    The periodic tridiagonal matrix of C on `copies` concatenated periods.

    Row n holds 1 at n-1, A_n at n and B_n at n+1 (indices wrap).
    """
    A = np.tile(lat.A, copies)
    B = np.tile(lat.B, copies)
    size = A.size
    if size < 3:
        raise LatticeError("the dense Lax matrix needs at least 3 sites")
    C = np.diag(A)
    idx = np.arange(size)
    C[idx, (idx + 1) % size] = B
    C[(idx + 1) % size, idx] = 1.0
    return C


def trace_invariants(lat: PeriodicLattice, m_max: int) -> np.ndarray:
    """
    Per-period traces of C^m for m = 1..m_max.

    Enough periods are stacked that no closed path of length m wraps around,
    so the result is the band-arithmetic sum over one period of diag(C^m).
    """
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    copies = m_max // lat.N + 1
    while copies * lat.N < 3:
        copies += 1
    C = lax_dense(lat, copies)
    out = np.empty(m_max, dtype=np.complex128)
    power = np.eye(C.shape[0], dtype=np.complex128)
    for m in range(1, m_max + 1):
        power = power @ C
        out[m - 1] = np.trace(power) / copies
    return out


class IsospectralRow(BaseModel):
    flow: str
    m: int
    initial: str = Field(..., description="tr_m at t = 0, repr of the complex value")
    drift: float = Field(..., description="|tr_m(t_end) - tr_m(0)|")


def isospectral_drift(
    flows: Dict[str, LatticePair],
    lat: PeriodicLattice,
    t_end: float,
    steps: int,
    m_max: int,
) -> List[IsospectralRow]:
    """Integrate each flow and report the drift of every trace invariant."""
    start = trace_invariants(lat, m_max)
    rows = []
    for label, pair in flows.items():
        end = trace_invariants(integrate_flow(lat, pair, t_end, steps), m_max)
        drift = np.abs(end - start)
        logger.info("Flow integrated", flow=label, steps=steps, max_drift=float(drift.max()))
        rows += [
            IsospectralRow(flow=label, m=m + 1, initial=f"{start[m]:.12g}", drift=float(drift[m]))
            for m in range(m_max)
        ]
    return rows


def flow_commutator_defect(
    lat: PeriodicLattice,
    first: LatticePair,
    second: LatticePair,
    t: float,
    steps: int,
) -> float:
    """max |(φ_second ∘ φ_first)(lat) - (φ_first ∘ φ_second)(lat)| after time t each."""
    ab = integrate_flow(integrate_flow(lat, first, t, steps), second, t, steps)
    ba = integrate_flow(integrate_flow(lat, second, t, steps), first, t, steps)
    return float(max(np.abs(ab.A - ba.A).max(), np.abs(ab.B - ba.B).max()))


def rk4_error_ratio(lat: PeriodicLattice, pair: LatticePair, t_end: float, steps: int) -> float:
    """
    Ratio of successive endpoint differences for steps, 2·steps and 4·steps.

    A fourth-order integrator gives a ratio near 16.
    """
    ends = [integrate_flow(lat, pair, t_end, steps * f) for f in (1, 2, 4)]
    d1 = max(np.abs(ends[0].A - ends[1].A).max(), np.abs(ends[0].B - ends[1].B).max())
    d2 = max(np.abs(ends[1].A - ends[2].A).max(), np.abs(ends[1].B - ends[2].B).max())
    return float(d1 / d2)


def shift_consistency_order(
    pair: LatticePair,
    f,
    g,
    h_list: Sequence[float],
    N: int,
    npoints: int = 64,
) -> Tuple[List[float], Optional[float]]:
    """
    Compare the lattice expression of `pair` at spacing h with the ε-series
    image of toda_to_eps(pair) truncated at ε^N and evaluated at ε = h.

    f and g are TrigFunctions for the A- and B-sequences (A_j = f(x + jh)).

    Returns:
        (max errors per h, fitted slope of log error against log h)
    """
    D = toda_to_eps(pair, N)
    xs = np.arange(npoints) / npoints
    jets_f = f.jets(xs, N)
    jets_g = g.jets(xs, N)
    errors = []
    for h in h_list:
        def assign(gen: LatticeGen) -> np.ndarray:
            fn = f if gen.axis == X_AXIS else g
            return fn(xs + gen.offset * h)

        zero = np.zeros(npoints, dtype=np.complex128)
        lat_v = pair.p1.evaluate(assign, zero=zero, coeff=float)
        lat_w = pair.p2.evaluate(assign, zero=zero, coeff=float)
        ser_v = jet_eval(D.img_v, jets_f, jets_g, h, N)
        ser_w = jet_eval(D.img_w, jets_f, jets_g, h, N)
        err = float(max(np.abs(lat_v - ser_v).max(), np.abs(lat_w - ser_w).max()))
        logger.debug("Shift consistency", h=h, error=err)
        errors.append(err)
    return errors, fit_slope(h_list, errors)


def fit_slope(h_list: Sequence[float], values: Sequence[float]) -> Optional[float]:
    """Least-squares slope of log(values) against log(h); None if any value is 0."""
    values = np.asarray(values, dtype=np.float64)
    if len(values) < 2 or np.any(values <= 0):
        return None
    slope, _ = np.polyfit(np.log(np.asarray(h_list, dtype=np.float64)), np.log(values), 1)
    return float(slope)
