"""Bloch-sphere geometry and exact single-qubit predictions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

NORM_ACCEPT_TOL = 1e-9   # construction tolerance on the input norm
ANTIPODAL_TOL = 1e-12


@dataclass(frozen=True)
class BlochVector:
    """Unit 3-vector. Inputs within 1e-9 of unit norm are renormalized, others rejected."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        norm = math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)
        if abs(norm - 1.0) > NORM_ACCEPT_TOL:
            raise ValueError(f"Bloch vector norm {norm!r} is not within {NORM_ACCEPT_TOL} of 1")
        # renormalize only outside the unit tolerance: construction is then
        # idempotent, so negation round-trips bit-exactly
        if abs(norm - 1.0) > 1e-12:
            object.__setattr__(self, "x", self.x / norm)
            object.__setattr__(self, "y", self.y / norm)
            object.__setattr__(self, "z", self.z / norm)

    @classmethod
    def from_array(cls, v) -> BlochVector:
        v = np.asarray(v, dtype=float)
        return cls(float(v[0]), float(v[1]), float(v[2]))

    @classmethod
    def from_angles(cls, theta: float, phi: float) -> BlochVector:
        s = math.sin(theta)
        return cls(s * math.cos(phi), s * math.sin(phi), math.cos(theta))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def dot(self, other: BlochVector) -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def antipode(self) -> BlochVector:
        return BlochVector(-self.x, -self.y, -self.z)


def _perp_label(label: str | None) -> str | None:
    if label is None:
        return None
    return label[:-1] if label.endswith("'") else label + "'"


@dataclass(frozen=True)
class PureState:
    """Pure qubit state stored as a Bloch vector; the label is metadata only."""

    bloch: BlochVector
    label: str | None = field(default=None, compare=False)

    def vec(self) -> np.ndarray:
        return self.bloch.as_array()

    def describe(self) -> str:
        if self.label is not None:
            return self.label
        b = self.bloch
        return f"({b.x:+.4f},{b.y:+.4f},{b.z:+.4f})"


@dataclass(frozen=True)
class MeasurementBasis:
    """Orthonormal qubit basis: two antipodal Bloch vectors."""

    outcomes: tuple[PureState, PureState]
    label: str | None = field(default=None, compare=False)

    def __post_init__(self):
        a, b = self.outcomes
        gap = max(abs(a.bloch.x + b.bloch.x), abs(a.bloch.y + b.bloch.y), abs(a.bloch.z + b.bloch.z))
        if gap > ANTIPODAL_TOL:
            raise ValueError(f"basis outcomes are not antipodal (gap {gap:g})")

    def describe(self) -> str:
        if self.label is not None:
            return self.label
        return "{" + self.outcomes[0].describe() + "," + self.outcomes[1].describe() + "}"


@dataclass(frozen=True)
class Ensemble:
    """Weighted mixture of pure states prepared by independent classical randomness."""

    entries: tuple[tuple[float, PureState], ...]

    def __post_init__(self):
        if not self.entries:
            raise ValueError("ensemble must contain at least one state")
        weights = [w for w, _ in self.entries]
        if any(w < 0.0 for w in weights):
            raise ValueError("ensemble weights must be nonnegative")
        if abs(sum(weights) - 1.0) > 1e-12:
            raise ValueError(f"ensemble weights sum to {sum(weights)!r}, expected 1")

    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.entries])

    def states(self) -> tuple[PureState, ...]:
        return tuple(s for _, s in self.entries)

    def describe(self) -> str:
        return "+".join(f"{w:g}*{s.describe()}" for w, s in self.entries)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """2x2 Hermitian, unit-trace, positive-semidefinite matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError("density operator must be a 2x2 matrix")
        if np.abs(m - m.conj().T).max() > 1e-12:
            raise ValueError("density operator is not Hermitian")
        if abs(np.trace(m) - 1.0) > 1e-12:
            raise ValueError("density operator trace differs from 1")
        if np.linalg.eigvalsh(m).min() < -1e-12:
            raise ValueError("density operator has a negative eigenvalue")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


def born_probability(phi: PureState, psi: PureState) -> float:
    """Probability of outcome phi on preparation psi: (1 + phi.psi)/2 in Bloch form."""
    p = 0.5 * (1.0 + phi.bloch.dot(psi.bloch))
    return min(1.0, max(0.0, p))


def orthogonal_complement(psi: PureState) -> PureState:
    """The unique state orthogonal to psi (antipodal Bloch vector)."""
    return PureState(psi.bloch.antipode(), _perp_label(psi.label))


def bloch_to_amplitudes(psi: PureState) -> np.ndarray:
    """Complex amplitudes (cos(theta/2), e^{i phi} sin(theta/2)).

    Global phase fixed by a real nonnegative first amplitude; when that
    amplitude is 0 the second is fixed to 1.  The azimuth is defined as 0
    at the poles.
    """
    z = min(1.0, max(-1.0, psi.bloch.z))
    if z == 1.0:
        return np.array([1.0, 0.0], dtype=complex)
    if z == -1.0:
        return np.array([0.0, 1.0], dtype=complex)
    theta = math.acos(z)
    phi = math.atan2(psi.bloch.y, psi.bloch.x)
    a = math.cos(0.5 * theta)
    b = complex(math.cos(phi), math.sin(phi)) * math.sin(0.5 * theta)
    return np.array([a, b], dtype=complex)


def amplitudes_to_bloch(amps) -> BlochVector:
    """Bloch vector of a (normalized) amplitude pair, insensitive to global phase."""
    a, b = complex(amps[0]), complex(amps[1])
    cross = a.conjugate() * b
    return BlochVector(2.0 * cross.real, 2.0 * cross.imag, abs(a) ** 2 - abs(b) ** 2)


def ensemble_density_operator(ensemble: Ensemble) -> DensityOperator:
    """Density operator sum_j p_j |psi_j><psi_j| of the mixture."""
    r = np.zeros(3)
    for w, s in ensemble.entries:
        r = r + w * s.vec()
    x, y, z = r
    m = np.array(
        [[0.5 * (1.0 + z), 0.5 * (x - 1j * y)],
         [0.5 * (x + 1j * y), 0.5 * (1.0 - z)]],
        dtype=complex,
    )
    return DensityOperator(m)


def density_operators_equal(a: DensityOperator, b: DensityOperator, tol: float) -> bool:
    """True iff the matrices agree entrywise within tol."""
    return bool(np.abs(a.matrix - b.matrix).max() <= tol)


def half_half_mixture(psi: PureState) -> Ensemble:
    """The 50/50 mixture of psi and its orthogonal complement."""
    return Ensemble(((0.5, psi), (0.5, orthogonal_complement(psi))))


PLUS_Z = PureState(BlochVector(0.0, 0.0, 1.0), "+z")
MINUS_Z = PureState(BlochVector(0.0, 0.0, -1.0), "-z")
PLUS_X = PureState(BlochVector(1.0, 0.0, 0.0), "+x")
MINUS_X = PureState(BlochVector(-1.0, 0.0, 0.0), "-x")
PLUS_Y = PureState(BlochVector(0.0, 1.0, 0.0), "+y")
MINUS_Y = PureState(BlochVector(0.0, -1.0, 0.0), "-y")


def state_from_catalog_entry(entry: dict) -> PureState:
    """Parse one state-catalog JSON entry.

    Accepted forms: {"bloch": [x, y, z], "label": ...} or
    {"theta": t, "phi": p, "label": ...} with angles in radians.
    """
    label = entry.get("label")
    if label is not None and not isinstance(label, str):
        raise ValueError("catalog entry label must be a string")
    if "bloch" in entry:
        v = entry["bloch"]
        if not isinstance(v, (list, tuple)) or len(v) != 3:
            raise ValueError("catalog entry 'bloch' must be a 3-element list")
        return PureState(BlochVector(float(v[0]), float(v[1]), float(v[2])), label)
    if "theta" in entry and "phi" in entry:
        return PureState(BlochVector.from_angles(float(entry["theta"]), float(entry["phi"])), label)
    raise ValueError("catalog entry needs either 'bloch' or 'theta'/'phi' fields")
