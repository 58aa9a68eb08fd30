"""Poincare-sphere geometry and the two-qubit spin-orbit state space.

Conventions
-----------
Both spheres put the north pole at ``+z``: ``|L>`` on the SAM sphere and
``|m=+1>`` on the OAM sphere.  Bloch components of a state
``c_plus|north> + c_minus|south>`` are::

    x = 2 Re(c_plus c_minus*)
    y = 2 Im(c_plus c_minus*)
    z = |c_plus|^2 - |c_minus|^2

so ``+x`` is ``|H>`` and ``+y`` is ``|A> = (|H> + |V>)/sqrt(2)`` on the SAM
sphere.  The 4-D basis is ordered ``|L,+1>, |L,-1>, |R,+1>, |R,-1>``, i.e. the
Kronecker product SAM (x) OAM.

OAM measurement settings are given in *hologram* coordinates, where the x and
y axes are inverted relative to the bare map above.  The inversion is applied
in :func:`measurement_state` only.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

SAM = "SAM"
OAM = "OAM"
SPHERES = (SAM, OAM)

UNIT_TOL = 1e-12
BASIS_LABELS = ("L,+1", "L,-1", "R,+1", "R,-1")


class InvalidInputError(ValueError):
    """Raised when an argument violates a documented precondition."""


class UnsupportedChargeError(InvalidInputError):
    pass


def _check_sphere(sphere: str) -> str:
    if sphere not in SPHERES:
        raise InvalidInputError(f"unknown sphere {sphere!r}; expected one of {SPHERES}")
    return sphere


@dataclass(frozen=True)
class PoincareVector:
    """Unit vector on a Poincare sphere (setting or hidden state)."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            object.__setattr__(self, name, float(getattr(self, name)))
        norm2 = self.x * self.x + self.y * self.y + self.z * self.z
        if not np.isfinite(norm2) or abs(norm2 - 1.0) > UNIT_TOL:
            raise InvalidInputError(
                f"not a unit vector: ({self.x}, {self.y}, {self.z}), |v|^2 = {norm2}"
            )

    @classmethod
    def from_array(cls, arr: Iterable[float]) -> "PoincareVector":
        x, y, z = (float(c) for c in arr)
        return cls(x, y, z)

    @classmethod
    def normalized(cls, arr: Iterable[float]) -> "PoincareVector":
        v = np.asarray(list(arr), dtype=float)
        n = np.linalg.norm(v)
        if v.shape != (3,) or n == 0.0:
            raise InvalidInputError("cannot normalize a zero or non-3-vector")
        return cls.from_array(v / n)

    @classmethod
    def from_angles(cls, polar: float, azimuth: float) -> "PoincareVector":
        """Build from polar angle (from +z) and azimuth (from +x), radians."""
        s = np.sin(polar)
        return cls(s * np.cos(azimuth), s * np.sin(azimuth), np.cos(polar))

    @property
    def array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def dot(self, other: "PoincareVector") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def __neg__(self) -> "PoincareVector":
        return PoincareVector(-self.x, -self.y, -self.z)


@dataclass(frozen=True)
class QubitState:
    c_plus: complex
    c_minus: complex
    sphere: str = SAM

    def __post_init__(self):
        object.__setattr__(self, "c_plus", complex(self.c_plus))
        object.__setattr__(self, "c_minus", complex(self.c_minus))
        _check_sphere(self.sphere)
        norm2 = abs(self.c_plus) ** 2 + abs(self.c_minus) ** 2
        if abs(norm2 - 1.0) > UNIT_TOL:
            raise InvalidInputError(f"qubit state not normalized: |psi|^2 = {norm2}")

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.c_plus, self.c_minus], dtype=complex)

    def canonical(self) -> "QubitState":
        c = _canonical_phase(self.vector)
        return QubitState(c[0], c[1], self.sphere)

    def overlap(self, other: "QubitState") -> float:
        """|<other|self>|^2."""
        return float(abs(np.vdot(other.vector, self.vector)) ** 2)


@dataclass(frozen=True)
class SpinOrbitState:
    """Pure state in SAM (x) OAM restricted to m = +/-1."""

    amplitudes: tuple

    def __post_init__(self):
        amps = tuple(complex(a) for a in self.amplitudes)
        if len(amps) != 4:
            raise InvalidInputError(f"need 4 amplitudes, got {len(amps)}")
        norm2 = sum(abs(a) ** 2 for a in amps)
        if abs(norm2 - 1.0) > UNIT_TOL:
            raise InvalidInputError(f"spin-orbit state not normalized: |psi|^2 = {norm2}")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_vector(cls, vec: Sequence[complex]) -> "SpinOrbitState":
        return cls(tuple(np.asarray(vec, dtype=complex).ravel()))

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.amplitudes, dtype=complex)

    def canonical(self) -> "SpinOrbitState":
        return SpinOrbitState.from_vector(_canonical_phase(self.vector))

    def equals_up_to_phase(self, other: "SpinOrbitState", tol: float = 1e-12) -> bool:
        return abs(abs(np.vdot(self.vector, other.vector)) - 1.0) <= tol


@dataclass(frozen=True)
class QPlate:
    q: float = 0.5
    tuned: bool = True

    def __post_init__(self):
        if not float(2 * self.q).is_integer():
            raise InvalidInputError(f"q-plate charge must be half-integer, got {self.q}")


def _canonical_phase(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=complex)
    nz = np.flatnonzero(np.abs(c) > 1e-15)
    if nz.size == 0:
        return c
    lead = c[nz[0]]
    return c * (abs(lead) / lead)


def vector_to_state(v: PoincareVector, sphere: str = SAM) -> QubitState:
    """Pure state whose Bloch vector is ``v`` with ``c_plus`` real, non-negative."""
    if not isinstance(v, PoincareVector):
        v = PoincareVector.from_array(v)
    _check_sphere(sphere)
    # atan2 keeps full precision near the poles, where acos(z) does not
    theta = np.arctan2(np.hypot(v.x, v.y), v.z)
    azimuth = np.arctan2(v.y, v.x)
    c_plus = np.cos(theta / 2)
    c_minus = np.sin(theta / 2) * np.exp(-1j * azimuth)
    # renormalize away the last ulp so the state invariant holds exactly
    n = np.sqrt(c_plus**2 + abs(c_minus) ** 2)
    return QubitState(c_plus / n, c_minus / n, sphere)


def state_to_vector(s) -> PoincareVector:
    """Bloch vector of a qubit state (QubitState or a pair of amplitudes)."""
    c = s.vector if isinstance(s, QubitState) else np.asarray(s, dtype=complex).ravel()
    if c.shape != (2,):
        raise InvalidInputError("a qubit state has exactly two amplitudes")
    norm2 = float(np.sum(np.abs(c) ** 2))
    if norm2 == 0.0:
        raise InvalidInputError("zero-norm state has no Bloch vector")
    cross = c[0] * np.conj(c[1])
    vec = np.array(
        [2 * cross.real, 2 * cross.imag, abs(c[0]) ** 2 - abs(c[1]) ** 2]
    ) / norm2
    return PoincareVector.normalized(vec)


def overlap_probability(a: PoincareVector, b: PoincareVector) -> float:
    """Born probability of finding state ``a`` in a projection onto ``b``."""
    return 0.5 * (1.0 + a.dot(b))


def measurement_state(v: PoincareVector, sphere: str) -> QubitState:
    """State singled out by a projective setting ``v`` on the given sphere.

    OAM settings are expressed in hologram coordinates; their x and y
    components are inverted before mapping to amplitudes.  With this choice
    the q-plate state yields C(a, b) = -a.b exactly.
    """
    _check_sphere(sphere)
    if sphere == OAM:
        v = PoincareVector(-v.x, -v.y, v.z)
    return vector_to_state(v, sphere)


def projector(v: PoincareVector, sphere: str) -> np.ndarray:
    psi = measurement_state(v, sphere).vector
    return np.outer(psi, psi.conj())


def apply_qplate(pol: QubitState, qp: QPlate | None = None) -> SpinOrbitState:
    """q-plate acting on a polarization state carrying no OAM.

    ``a|L> + b|R>`` becomes ``a|R,+2q> + b|L,-2q>``; only q = 1/2 keeps the
    output inside the modeled m = +/-1 subspace.
    """
    qp = qp or QPlate()
    if qp.q != 0.5:
        raise UnsupportedChargeError(
            f"q = {qp.q} sends m=0 to m=+/-{2 * qp.q}, outside the m=+/-1 subspace"
        )
    if pol.sphere != SAM:
        raise InvalidInputError("q-plate input must be a polarization (SAM) state")
    alpha, beta = pol.c_plus, pol.c_minus
    # basis order |L,+1>, |L,-1>, |R,+1>, |R,-1>
    return SpinOrbitState((0.0, beta, alpha, 0.0))


def prepare_phi_plus() -> SpinOrbitState:
    s = 1 / np.sqrt(2)
    return SpinOrbitState((0.0, s, s, 0.0))


def reduced_density_matrix(state: SpinOrbitState, keep: str = SAM) -> np.ndarray:
    _check_sphere(keep)
    m = state.vector.reshape(2, 2)  # rows: SAM, cols: OAM
    return m @ m.conj().T if keep == SAM else (m.T @ m.T.conj().T)


PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def local_observable(v: PoincareVector, sphere: str) -> np.ndarray:
    """Dichotomic observable P(v) - P(-v) for one sphere."""
    return projector(v, sphere) - projector(-v, sphere)


def local_expectation(state: SpinOrbitState, v: PoincareVector, sphere: str) -> float:
    """Single-side expectation value of the +/-1 outcome for setting ``v``."""
    obs = local_observable(v, sphere)
    eye = np.eye(2)
    op = np.kron(obs, eye) if sphere == SAM else np.kron(eye, obs)
    psi = state.vector
    return float(np.real(np.vdot(psi, op @ psi)))


# --- polarization optics -------------------------------------------------

# columns: |L>, |R> expressed in the (H, V) Jones basis
CIRCULAR_TO_LINEAR = np.array([[1, 1], [-1j, 1j]], dtype=complex) / np.sqrt(2)


def jones_vector(state: QubitState) -> np.ndarray:
    return CIRCULAR_TO_LINEAR @ state.vector


def rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [-s, c]])


def waveplate(fast_axis_deg: float, retardance: float) -> np.ndarray:
    """Jones matrix of a linear retarder, fast axis measured from horizontal."""
    t = np.deg2rad(fast_axis_deg)
    core = np.diag([1.0, np.exp(1j * retardance)])
    return rotation(-t) @ core @ rotation(t)


def half_wave_plate(angle_deg: float) -> np.ndarray:
    return waveplate(angle_deg, np.pi)


def quarter_wave_plate(angle_deg: float) -> np.ndarray:
    return waveplate(angle_deg, np.pi / 2)


H_POLARIZER = np.array([[1, 0], [0, 0]], dtype=complex)


def waveplate_transmission(state: QubitState, hwp_deg: float, qwp_deg: float) -> float:
    """Probability that ``state`` passes HWP -> QWP -> horizontal polarizer."""
    out = H_POLARIZER @ quarter_wave_plate(qwp_deg) @ half_wave_plate(hwp_deg) @ jones_vector(state)
    return float(np.sum(np.abs(out) ** 2))


def _wrap(angle: float, period: float) -> float:
    a = angle % period
    return 0.0 if period - a < 1e-9 or a < 1e-12 else a


def waveplate_projection_angles(a: PoincareVector) -> tuple[float, float]:
    """Plate orientations (hwp, qwp) in degrees that project onto SAM state ``a``.

    The QWP at ``q`` maps back to H only an ellipse with azimuth ``q`` and
    ellipticity ``+/-q``; the HWP at ``h`` mirrors azimuth ``psi -> 2h - psi``
    and flips handedness.  Candidates built from both sign choices are checked
    against the Jones matrices and the smallest valid hwp angle is kept.
    """
    state = vector_to_state(a, SAM)
    e = jones_vector(state)
    s1 = abs(e[0]) ** 2 - abs(e[1]) ** 2
    s2 = 2 * np.real(e[0] * np.conj(e[1]))
    s3 = 2 * np.imag(e[0] * np.conj(e[1]))
    psi = 0.5 * np.degrees(np.arctan2(s2, s1))
    chi = 0.5 * np.degrees(np.arctan2(s3, np.hypot(s1, s2)))

    candidates = set()
    for q in (chi, -chi):
        for h in ((psi + q) / 2, (psi - q) / 2, (-psi + q) / 2, (-psi - q) / 2, 0.0):
            candidates.add((float(_wrap(h, 90.0)), float(_wrap(q, 180.0))))
    valid = sorted(
        (h, q) for h, q in candidates if waveplate_transmission(state, h, q) > 1 - 1e-9
    )
    if not valid:  # pragma: no cover - the analytic candidates always contain a solution
        raise RuntimeError(f"no wave-plate setting found for {a}")
    return valid[0]
