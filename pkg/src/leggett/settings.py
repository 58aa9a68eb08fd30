"""Measurement-setting triads {a_i, b_i, b'_i} for the three-setting Leggett test."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .statespace import InvalidInputError, PoincareVector

PAIR_LABELS = ("1", "1p", "2", "2p", "3", "3p")

CONSTRUCTED_TOL = 1e-9
EXTERNAL_TOL = 1e-6

# below this norm a difference/sum vector is treated as zero
_DEGENERATE_NORM = 1e-12

PASS = "pass"
FAIL = "fail"
VACUOUS = "vacuous-pass"


def _check_phi(phi: float) -> float:
    phi = float(phi)
    if not (0.0 <= phi <= 180.0):
        raise InvalidInputError(f"phi must lie in [0, 180] degrees, got {phi}")
    return phi


@dataclass(frozen=True)
class SettingsTriad:
    phi: float
    a: tuple
    b: tuple
    b_prime: tuple

    def __post_init__(self):
        for name in ("a", "b", "b_prime"):
            vecs = tuple(getattr(self, name))
            if len(vecs) != 3 or not all(isinstance(v, PoincareVector) for v in vecs):
                raise InvalidInputError(f"{name} must hold three PoincareVectors")
            object.__setattr__(self, name, vecs)
        object.__setattr__(self, "phi", float(self.phi))

    def pairs(self) -> Iterator[tuple[str, PoincareVector, PoincareVector]]:
        """Yield ``(label, a_i, b)`` in the order 1, 1p, 2, 2p, 3, 3p."""
        for i in range(3):
            yield PAIR_LABELS[2 * i], self.a[i], self.b[i]
            yield PAIR_LABELS[2 * i + 1], self.a[i], self.b_prime[i]

    def swapped(self) -> "SettingsTriad":
        return SettingsTriad(self.phi, self.a, self.b_prime, self.b)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(np.array([v.array for v in vs]) for vs in (self.a, self.b, self.b_prime))


def build_triad(phi: float) -> SettingsTriad:
    """Canonical triad: two equatorial pairs around H and A, one meridian pair around A."""
    phi = _check_phi(phi)
    h = math.radians(phi) / 2
    c, s = math.cos(h), math.sin(h)
    a = (PoincareVector(1, 0, 0), PoincareVector(0, 1, 0), PoincareVector(0, 1, 0))
    b = (PoincareVector(c, s, 0), PoincareVector(-s, c, 0), PoincareVector(0, c, s))
    bp = (PoincareVector(c, -s, 0), PoincareVector(s, c, 0), PoincareVector(0, c, -s))
    return SettingsTriad(phi, a, b, bp)


def _angle(u: np.ndarray, v: np.ndarray) -> float:
    return math.atan2(float(np.linalg.norm(np.cross(u, v))), float(np.dot(u, v)))


@dataclass(frozen=True)
class ConstraintResult:
    name: str
    status: str
    residual: float

    @property
    def ok(self) -> bool:
        return self.status != FAIL


@dataclass(frozen=True)
class ConstraintReport:
    phi: float
    tol: float
    equal_angle: ConstraintResult
    orthogonal_differences: ConstraintResult
    parallel_sums: ConstraintResult

    @property
    def results(self) -> tuple[ConstraintResult, ...]:
        return (self.equal_angle, self.orthogonal_differences, self.parallel_sums)

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.results)


def validate_triad(t: SettingsTriad, tol: float = CONSTRUCTED_TOL) -> ConstraintReport:
    """Check the three geometric constraints and report measured residuals.

    Residuals: max |angle(b_i, b'_i) - phi| (rad); max |d_i . d_j| over the
    normalized differences; max angle between b_i + b'_i and the line of a_i
    (rad).  Zero differences (phi = 0) or zero sums (phi = 180) make the
    corresponding constraint vacuous.
    """
    a, b, bp = t.arrays()
    phi = math.radians(t.phi)

    angle_res = max(abs(_angle(b[i], bp[i]) - phi) for i in range(3))
    equal_angle = ConstraintResult("equal_angle", PASS if angle_res < tol else FAIL, angle_res)

    d = b - bp
    dn = np.linalg.norm(d, axis=1)
    if np.any(dn < _DEGENERATE_NORM):
        ortho = ConstraintResult("orthogonal_differences", VACUOUS, 0.0)
    else:
        du = d / dn[:, None]
        res = max(abs(float(du[i] @ du[j])) for i, j in ((0, 1), (0, 2), (1, 2)))
        ortho = ConstraintResult("orthogonal_differences", PASS if res < tol else FAIL, res)

    s = b + bp
    sn = np.linalg.norm(s, axis=1)
    if np.any(sn < _DEGENERATE_NORM):
        par = ConstraintResult("parallel_sums", VACUOUS, 0.0)
    else:
        # undirected: parallel or antiparallel both satisfy the constraint
        res = max(
            math.atan2(float(np.linalg.norm(np.cross(s[i], a[i]))), abs(float(s[i] @ a[i])))
            for i in range(3)
        )
        par = ConstraintResult("parallel_sums", PASS if res < tol else FAIL, res)

    return ConstraintReport(t.phi, tol, equal_angle, ortho, par)


def sweep_grid(start: float = 0.0, stop: float = 180.0, step: float = 4.0) -> list[SettingsTriad]:
    """Triads at start, start + step, ... up to and including ``stop``."""
    start, stop, step = float(start), float(stop), float(step)
    if not step > 0:
        raise InvalidInputError(f"grid step must be positive, got {step}")
    if start > stop:
        raise InvalidInputError(f"grid start {start} exceeds stop {stop}")
    _check_phi(start)
    _check_phi(stop)
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [build_triad(min(start + k * step, stop)) for k in range(n)]


# --- JSON ------------------------------------------------------------------

def triad_to_dict(t: SettingsTriad) -> dict:
    def rows(vs):
        return [[v.x, v.y, v.z] for v in vs]

    return {"phi_deg": t.phi, "a": rows(t.a), "b": rows(t.b), "b_prime": rows(t.b_prime)}


def triad_from_dict(doc: dict, tol: float = EXTERNAL_TOL) -> SettingsTriad:
    """Parse an external triad; vectors are renormalized if within ``tol`` of unit length."""
    try:
        phi = doc["phi_deg"]
        groups = [doc[k] for k in ("a", "b", "b_prime")]
    except (KeyError, TypeError) as exc:
        raise InvalidInputError(f"triad document missing field: {exc}") from None

    def vec(row):
        arr = np.asarray(row, dtype=float)
        if arr.shape != (3,):
            raise InvalidInputError(f"vector must have 3 components, got {row!r}")
        n = np.linalg.norm(arr)
        if abs(n - 1.0) > tol:
            raise InvalidInputError(f"vector {row!r} is not unit within {tol}")
        try:
            return PoincareVector.from_array(arr)
        except InvalidInputError:
            return PoincareVector.from_array(arr / n)

    a, b, bp = ([vec(r) for r in g] for g in groups)
    return SettingsTriad(_check_phi(phi), tuple(a), tuple(b), tuple(bp))


def dumps_triads(triads: list[SettingsTriad]) -> str:
    return json.dumps([triad_to_dict(t) for t in triads], indent=2)


def loads_triads(text: str, tol: float = EXTERNAL_TOL) -> list[SettingsTriad]:
    doc = json.loads(text)
    if isinstance(doc, dict):
        doc = [doc]
    return [triad_from_dict(d, tol) for d in doc]
