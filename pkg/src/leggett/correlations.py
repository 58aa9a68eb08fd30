"""Quantum correlations, the three-setting Leggett statistic E3 and its bound L3."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import brentq

from .settings import PAIR_LABELS, build_triad
from .statespace import (
    OAM,
    SAM,
    InvalidInputError,
    PoincareVector,
    SpinOrbitState,
    measurement_state,
    prepare_phi_plus,
)

VALUE_TOL = 1e-12
INPUT_TOL = 1e-9
NEAR_ZERO_SIGMAS = 3.0

E3_CSV_HEADER = ("phi_deg", "e3", "l3", "sigma_e3")


def _check_phi(phi: float) -> float:
    phi = float(phi)
    if not (0.0 <= phi <= 180.0):
        raise InvalidInputError(f"phi must lie in [0, 180] degrees, got {phi}")
    return phi


@dataclass(frozen=True)
class CorrelationValue:
    value: float
    sigma: float = 0.0
    floored: bool = False

    def __post_init__(self):
        if abs(self.value) > 1 + VALUE_TOL:
            raise InvalidInputError(f"correlation {self.value} outside [-1, 1]")
        if self.sigma < 0:
            raise InvalidInputError(f"negative sigma {self.sigma}")


@dataclass(frozen=True)
class E3Point:
    phi: float
    e3: float
    l3: float
    sigma_e3: float = 0.0

    def __post_init__(self):
        if not (0 <= self.e3 <= 2 + VALUE_TOL):
            raise InvalidInputError(f"E3 = {self.e3} outside [0, 2]")
        if not (4 / 3 - VALUE_TOL <= self.l3 <= 2 + VALUE_TOL):
            raise InvalidInputError(f"L3 = {self.l3} outside [4/3, 2]")

    @property
    def gap(self) -> float:
        return self.e3 - self.l3


@dataclass(frozen=True)
class E3Statistic:
    e3: float
    sigma_e3: float
    flags: tuple = field(default=())


def quantum_correlation(
    state: SpinOrbitState, a: PoincareVector, b: PoincareVector
) -> CorrelationValue:
    """Born-rule correlation sum_{x,y} x y P(x, y) for settings a (SAM) and b (OAM)."""
    psi = state.vector.reshape(2, 2)  # psi[sam, oam]
    total = 0.0
    for x, va in ((1, a), (-1, -a)):
        ea = measurement_state(va, SAM).vector
        for y, vb in ((1, b), (-1, -b)):
            eb = measurement_state(vb, OAM).vector
            amp = ea.conj() @ psi @ eb.conj()
            total += x * y * abs(amp) ** 2
    return CorrelationValue(float(np.clip(total, -1.0, 1.0)))


def e3_quantum(phi: float, state: SpinOrbitState | None = None) -> float:
    """E3 from Born-rule correlations on the canonical triad at ``phi``."""
    phi = _check_phi(phi)
    state = state or prepare_phi_plus()
    corr = [quantum_correlation(state, a, b) for _, a, b in build_triad(phi).pairs()]
    return e3_from_correlations(corr).e3


def e3_quantum_closed_form(phi: float, visibility: float = 1.0) -> float:
    return visibility * 2 * abs(math.cos(math.radians(_check_phi(phi)) / 2))


def leggett_bound(phi: float) -> float:
    phi = _check_phi(phi)
    return 2 - (2 / 3) * abs(math.sin(math.radians(phi) / 2))


def e3_from_correlations(corr: Sequence[CorrelationValue]) -> E3Statistic:
    """E3 = (1/3) sum_i |C_i + C'_i| with first-order error propagation.

    ``corr`` is in pair order (1, 1p, 2, 2p, 3, 3p).  The sign of each
    ``C_i + C'_i`` is frozen at its measured value, so the absolute value
    drops out of the propagation; pairs whose sum lies within three sigma of
    zero are flagged because the linearization is poor there.
    """
    corr = list(corr)
    if len(corr) != 6:
        raise InvalidInputError(f"need six correlations, got {len(corr)}")
    for c in corr:
        if abs(c.value) > 1 + INPUT_TOL:
            raise InvalidInputError(f"correlation {c.value} outside [-1, 1]")
    total, var = 0.0, 0.0
    flags = []
    for i in range(3):
        c, cp = corr[2 * i], corr[2 * i + 1]
        s = c.value + cp.value
        pair_var = c.sigma**2 + cp.sigma**2
        total += abs(s)
        var += pair_var
        if pair_var > 0 and abs(s) < NEAR_ZERO_SIGMAS * math.sqrt(pair_var):
            flags.append(f"near_zero_sum:{PAIR_LABELS[2 * i]}")
        if c.floored or cp.floored:
            flags.append(f"sigma_floored:{PAIR_LABELS[2 * i]}")
    return E3Statistic(total / 3, math.sqrt(var) / 3, tuple(flags))


def _bisect(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-9) -> float:
    flo = f(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def violation_window(
    e3_curve: Callable[[float], float], scan_step: float = 0.25, tol: float = 1e-9
) -> tuple[float, float] | None:
    """Outermost angles (deg) where ``e3_curve`` exceeds L3, or None.

    A coarse scan locates the sign changes of E3 - L3, then each endpoint is
    refined by bisection.  A curve that touches the bound at phi = 0 (the ideal
    case) gets lower endpoint 0.
    """
    def gap(p):
        return e3_curve(p) - leggett_bound(p)

    grid = np.arange(0.0, 180.0 + scan_step / 2, scan_step)
    grid[-1] = min(grid[-1], 180.0)
    positive = [gap(p) > 0 for p in grid]
    if not any(positive):
        return None
    first = positive.index(True)
    last = len(positive) - 1 - positive[::-1].index(True)
    if first == 0:
        low = 0.0
    elif abs(gap(0.0)) <= 1e-15 and all(gap(p) >= 0 for p in grid[:first]):
        low = 0.0
    else:
        low = _bisect(gap, grid[first - 1], grid[first], tol)
    high = 180.0 if last == len(grid) - 1 else _bisect(gap, grid[last], grid[last + 1], tol)
    return low, high


def ideal_violation_window(visibility: float = 1.0) -> tuple[float, float] | None:
    """Window where the (visibility-scaled) quantum E3 beats L3; (0, 4 atan(1/3)) ideally."""
    return violation_window(lambda p: e3_quantum_closed_form(p, visibility))


def max_violation(visibility: float = 1.0) -> tuple[float, float]:
    """Angle (deg) and size of the largest E3 - L3 gap.

    The gap V 2cos(x) - 2 + (2/3) sin(x), x = phi/2, is concave on
    [0, 90 deg]; its stationary point is the root of -2V sin(x) + (2/3) cos(x).
    """
    def slope(phi):
        x = math.radians(phi) / 2
        return -2 * visibility * math.sin(x) + (2 / 3) * math.cos(x)

    if slope(180.0) >= 0:
        where = 180.0
    else:
        where = brentq(slope, 0.0, 180.0, xtol=1e-12, rtol=4 * np.finfo(float).eps)
    return where, e3_quantum_closed_form(where, visibility) - leggett_bound(where)


def theory_curve(phis: Iterable[float]) -> list[E3Point]:
    return [E3Point(p, e3_quantum(p), leggett_bound(p)) for p in phis]


# --- CSV -------------------------------------------------------------------

def fmt(x: float) -> str:
    # repr is the shortest string that round-trips the double exactly
    return repr(float(x))


def write_e3_csv(points: Iterable[E3Point], stream=None) -> str:
    buf = stream if stream is not None else io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(E3_CSV_HEADER)
    for p in points:
        w.writerow([fmt(p.phi), fmt(p.e3), fmt(p.l3), fmt(p.sigma_e3)])
    return buf.getvalue() if stream is None else ""


def read_e3_csv(text: str) -> list[E3Point]:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
    if not rows or tuple(rows[0]) != E3_CSV_HEADER:
        raise InvalidInputError(f"expected header {','.join(E3_CSV_HEADER)}")
    return [E3Point(*(float(v) for v in r)) for r in rows[1:]]
