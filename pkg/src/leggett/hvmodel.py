"""Leggett-type crypto-contextual hidden-variable models.

A hidden state ``lam = (u, v)`` fixes the outcome means ``<x> = u.a`` and
``<y> = v.b``.  The joint outcome law may depend on both settings, so for
each measurement context it is pinned down by one extra number, the
correlation ``c``, which is free inside the Frechet interval allowed by the
two means.  A model is a finite mixture of hidden states, and a *selector*
assigns a ``c`` to every (hidden state, setting pair) combination.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.spatial.transform import Rotation

from .correlations import leggett_bound
from .settings import PAIR_LABELS, SettingsTriad
from .statespace import InvalidInputError, PoincareVector

CLAMP_TOL = 1e-12
RANGE_TOL = 1e-12
MIN_BUDGET = 1000

SIDE_X = "X"
SIDE_Y = "Y"

# outcome order for JointOutcomeDistribution.p
OUTCOMES = ((1, 1), (1, -1), (-1, 1), (-1, -1))


@dataclass(frozen=True)
class HiddenState:
    u: PoincareVector
    v: PoincareVector


@dataclass(frozen=True)
class JointOutcomeDistribution:
    """P(x, y) over ((+,+), (+,-), (-,+), (-,-))."""

    p: tuple

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.shape != (4,):
            raise InvalidInputError("joint distribution needs four probabilities")
        if np.any(p < -CLAMP_TOL):
            raise InvalidInputError(f"negative probability in {p.tolist()}")
        if np.any(p < 0):
            p = np.clip(p, 0.0, None)
            p = p / p.sum()
        if abs(p.sum() - 1.0) > 1e-12:
            raise InvalidInputError(f"probabilities sum to {p.sum()}")
        object.__setattr__(self, "p", tuple(float(q) for q in p))

    def mean_x(self) -> float:
        return sum(x * q for (x, _), q in zip(OUTCOMES, self.p))

    def mean_y(self) -> float:
        return sum(y * q for (_, y), q in zip(OUTCOMES, self.p))

    def correlation(self) -> float:
        return sum(x * y * q for (x, y), q in zip(OUTCOMES, self.p))

    def marginal_x(self) -> tuple[float, float]:
        """(P(x=+1), P(x=-1))."""
        return self.p[0] + self.p[1], self.p[2] + self.p[3]


@dataclass(frozen=True)
class HiddenModel:
    support: tuple

    def __post_init__(self):
        support = tuple((h, float(w)) for h, w in self.support)
        if not support:
            raise InvalidInputError("model needs at least one hidden state")
        w = np.array([w for _, w in support])
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise InvalidInputError(f"weights must be a probability vector, got {w.tolist()}")
        object.__setattr__(self, "support", support)

    @classmethod
    def single(cls, u: PoincareVector, v: PoincareVector) -> "HiddenModel":
        return cls(((HiddenState(u, v), 1.0),))

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        w = np.array([w for _, w in self.support])
        u = np.array([h.u.array for h, _ in self.support])
        v = np.array([h.v.array for h, _ in self.support])
        return w, u, v


def marginal_mean(h: HiddenState, setting: PoincareVector, side: str = SIDE_X) -> float:
    if side == SIDE_X:
        return h.u.dot(setting)
    if side == SIDE_Y:
        return h.v.dot(setting)
    raise InvalidInputError(f"side must be {SIDE_X!r} or {SIDE_Y!r}")


def frechet_bounds(m1, m2):
    """Vectorized Frechet interval (c_min, c_max) for +/-1 variables with means m1, m2."""
    m1, m2 = np.asarray(m1, dtype=float), np.asarray(m2, dtype=float)
    return -1 + np.abs(m1 + m2), 1 - np.abs(m1 - m2)


def correlation_range(m1: float, m2: float) -> tuple[float, float]:
    """Attainable E[xy] for x, y in {+1, -1} with E[x] = m1, E[y] = m2."""
    if abs(m1) > 1 + RANGE_TOL or abs(m2) > 1 + RANGE_TOL:
        raise InvalidInputError(f"means must lie in [-1, 1], got ({m1}, {m2})")
    lo, hi = frechet_bounds(m1, m2)
    return float(lo), float(hi)


def build_joint(h: HiddenState, a: PoincareVector, b: PoincareVector, c: float) -> JointOutcomeDistribution:
    m1, m2 = h.u.dot(a), h.v.dot(b)
    lo, hi = correlation_range(m1, m2)
    if not (lo - RANGE_TOL <= c <= hi + RANGE_TOL):
        raise InvalidInputError(f"correlation {c} outside admissible [{lo}, {hi}]")
    return JointOutcomeDistribution(tuple((1 + x * m1 + y * m2 + x * y * c) / 4 for x, y in OUTCOMES))


def _pair_settings(triad: SettingsTriad) -> tuple[np.ndarray, np.ndarray]:
    """(6, 3) SAM and OAM setting arrays in pair order 1, 1p, 2, 2p, 3, 3p."""
    a, b, bp = triad.arrays()
    sam = np.repeat(a, 2, axis=0)
    oam = np.empty((6, 3))
    oam[0::2], oam[1::2] = b, bp
    return sam, oam


def pair_means(u: np.ndarray, v: np.ndarray, triad: SettingsTriad) -> tuple[np.ndarray, np.ndarray]:
    """Means (..., 6) of both sides for hidden states u, v of shape (..., 3)."""
    sam, oam = _pair_settings(triad)
    return u @ sam.T, v @ oam.T


def extreme_selector(model: HiddenModel, triad: SettingsTriad, signs) -> np.ndarray:
    """Correlations at the Frechet extremes: sign +1 -> c_max, -1 -> c_min.

    ``signs`` is (6,) for all hidden states or (n_states, 6).
    """
    _, u, v = model.arrays()
    m1, m2 = pair_means(u, v, triad)
    lo, hi = frechet_bounds(m1, m2)
    signs = np.broadcast_to(np.asarray(signs), lo.shape)
    return np.where(signs > 0, hi, lo)


def e3_from_arrays(weights, u, v, corr, sam, oam) -> np.ndarray:
    """Batched E3 of finite mixtures.

    Shapes: weights (..., K), u and v (..., K, 3), corr (..., K, 6), settings
    ``sam`` and ``oam`` (..., 6, 3).  Raises if any correlation leaves its
    Frechet interval.
    """
    m1 = np.einsum("...kj,...pj->...kp", u, sam)
    m2 = np.einsum("...kj,...pj->...kp", v, oam)
    lo, hi = frechet_bounds(m1, m2)
    if np.any(corr < lo - RANGE_TOL) or np.any(corr > hi + RANGE_TOL):
        raise InvalidInputError("selector value outside its Frechet interval")
    c = np.einsum("...k,...kp->...p", weights, corr)
    return np.abs(c[..., 0::2] + c[..., 1::2]).sum(axis=-1) / 3


def model_e3(model: HiddenModel, triad: SettingsTriad, selector) -> float:
    """E3 = (1/3) sum_i |C(a_i, b_i) + C(a_i, b'_i)| with C the rho-weighted correlation.

    ``selector`` gives the per-(hidden state, pair) correlation, shape
    (n_states, 6) in pair order 1, 1p, 2, 2p, 3, 3p.
    """
    w, u, v = model.arrays()
    corr = np.asarray(selector, dtype=float)
    if corr.shape != (len(w), 6):
        raise InvalidInputError(f"selector must have shape ({len(w)}, 6), got {corr.shape}")
    sam, oam = _pair_settings(triad)
    return float(e3_from_arrays(w, u, v, corr, sam, oam))


# --- optimizer ---------------------------------------------------------------

def single_state_best(u: np.ndarray, v: np.ndarray, triad: SettingsTriad):
    """Best E3 over Frechet-extreme selectors for single hidden states.

    For pair i, |c_i + c'_i| is largest with both correlations at c_max or
    both at c_min: the sum is monotone in each, so mixed choices only land
    between those two sums.  That collapses the 2**6 sign patterns to 2**3
    independent choices.  Returns (E3 (...,), signs (..., 3)).
    """
    m1, m2 = pair_means(u, v, triad)
    lo, hi = frechet_bounds(m1, m2)
    top = hi[..., 0::2] + hi[..., 1::2]
    bottom = -(lo[..., 0::2] + lo[..., 1::2])
    signs = np.where(top >= bottom, 1, -1)
    return np.maximum(top, bottom).sum(axis=-1) / 3, signs


def _sphere_points(n: int) -> np.ndarray:
    """Fibonacci lattice of n points, including both poles when n > 1."""
    if n == 1:
        return np.array([[0.0, 0.0, 1.0]])
    k = np.arange(n)
    z = 1 - 2 * k / (n - 1)
    r = np.sqrt(np.clip(1 - z * z, 0.0, None))
    golden = math.pi * (3 - math.sqrt(5))
    return np.stack([r * np.cos(golden * k), r * np.sin(golden * k), z], axis=1)


def _from_angles(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    tu, pu, tv, pv = x
    u = np.array([math.sin(tu) * math.cos(pu), math.sin(tu) * math.sin(pu), math.cos(tu)])
    v = np.array([math.sin(tv) * math.cos(pv), math.sin(tv) * math.sin(pv), math.cos(tv)])
    return u, v


def _to_angles(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.array([
        math.acos(float(np.clip(u[2], -1, 1))), math.atan2(u[1], u[0]),
        math.acos(float(np.clip(v[2], -1, 1))), math.atan2(v[1], v[0]),
    ])


@dataclass(frozen=True)
class HVOptimum:
    phi: float
    best_e3: float
    l3: float
    u: PoincareVector
    v: PoincareVector
    selector_signs: tuple
    budget: int
    evaluations: int

    @property
    def gap(self) -> float:
        """Distance below the bound, L3 - best E3."""
        return self.l3 - self.best_e3

    def to_dict(self) -> dict:
        return {
            "phi_deg": self.phi,
            "best_e3": self.best_e3,
            "l3": self.l3,
            "gap": self.gap,
            "u": [self.u.x, self.u.y, self.u.z],
            "v": [self.v.x, self.v.y, self.v.z],
            "selector_signs": list(self.selector_signs),
            "budget": self.budget,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def maximize_e3(triad: SettingsTriad, budget: int = 20000, seed: int = 0,
                n_starts: int = 8, chunk: int = 200_000) -> HVOptimum:
    """Largest E3 a Leggett model reaches on ``triad``, searched numerically.

    Only single hidden states are scanned.  With selectors fixed, E3 of a
    mixture is a weighted average inside each absolute value, so
    E3(mixture) <= sum_k w_k E3(lam_k) <= max_k E3(lam_k); selectors may
    differ per hidden state, so the best single state is the best model.

    Half the budget goes to a Fibonacci grid on both spheres (rotated by a
    seeded random rotation), the rest to Nelder-Mead refinement of the best
    ``n_starts`` grid points.
    """
    if budget < MIN_BUDGET:
        raise InvalidInputError(f"budget must be at least {MIN_BUDGET}, got {budget}")
    n = max(2, int(math.isqrt(budget // 2)))
    pts = _sphere_points(n)
    if seed:
        pts = Rotation.random(random_state=seed).apply(pts)

    # scan the product grid in row chunks to bound memory
    values = np.empty((n, n))
    rows = max(1, chunk // n)
    for i in range(0, n, rows):
        uu = pts[i:i + rows, None, :]
        values[i:i + rows] = single_state_best(np.broadcast_to(uu, (uu.shape[0], n, 3)),
                                               np.broadcast_to(pts[None], (uu.shape[0], n, 3)),
                                               triad)[0]
    evaluations = n * n

    flat = values.ravel()
    # stable sort keeps ties in lexicographic grid order
    order = np.argsort(-flat, kind="stable")[:n_starts]
    best_val = float(flat[order[0]])
    best_u, best_v = pts[order[0] // n], pts[order[0] % n]

    remaining = budget - evaluations
    per_start = remaining // max(1, len(order))

    def objective(x):
        u, v = _from_angles(x)
        return -float(single_state_best(u, v, triad)[0])

    if per_start >= 20:
        for idx in order:
            x0 = _to_angles(pts[idx // n], pts[idx % n])
            res = minimize(objective, x0, method="Nelder-Mead",
                           options={"maxfev": per_start, "xatol": 1e-10, "fatol": 1e-13})
            evaluations += res.nfev
            if -res.fun > best_val + 1e-15:
                best_val = -float(res.fun)
                best_u, best_v = _from_angles(res.x)

    u = PoincareVector.normalized(best_u)
    v = PoincareVector.normalized(best_v)
    e3, signs = single_state_best(u.array, v.array, triad)
    pair_signs = tuple(int(s) for s in np.repeat(signs, 2))
    return HVOptimum(triad.phi, float(e3), leggett_bound(triad.phi), u, v,
                     pair_signs, int(budget), int(evaluations))


def enumerate_sign_patterns() -> list[tuple[int, ...]]:
    """All 2**6 Frechet-extreme selector patterns in pair order."""
    return list(itertools.product((1, -1), repeat=len(PAIR_LABELS)))
