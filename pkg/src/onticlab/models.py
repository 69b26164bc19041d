"""Hidden-variable models of a qubit on the unit sphere.

Two physical models are provided: a single-sphere model whose preparation
density is a cosine cap around the prepared Bloch vector, and a two-sphere
model that pins the first sphere to the prepared vector exactly and draws
the second uniformly.  Two deliberately broken fixtures ship alongside them
so the property checkers can be shown to fail.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

from .integrate import sphere_points_from_uniforms, substream_key, uniform_blocks
from .qubit import (
    MINUS_X,
    MINUS_Y,
    MINUS_Z,
    PLUS_X,
    PLUS_Y,
    PLUS_Z,
    BlochVector,
    MeasurementBasis,
    PureState,
    orthogonal_complement,
)

SUPPORT_TOL = 1e-12      # distance fallback for point-measure support membership
RELABEL_MARK = "*"       # marker used on checker-synthesized basis descriptors


def step(x):
    """Heaviside step with the convention step(0) = 0; accepts scalars or arrays."""
    return np.heaviside(x, 0.0)


@dataclass(frozen=True)
class SinglePoint:
    """Ontic state of a single-sphere model: one point on S2."""

    point: BlochVector


@dataclass(frozen=True)
class PairPoint:
    """Ontic state of a two-sphere model.

    `prepared` records which state the first component was pinned to when it
    was set by a point measure; support membership checks use it before
    falling back to a vector-distance test.
    """

    first: BlochVector
    second: BlochVector
    prepared: PureState | None = field(default=None, compare=False)


OnticState = SinglePoint | PairPoint


@dataclass(frozen=True)
class SingleBatch:
    """Vectorized batch of SinglePoint states: an (n, 3) array of unit rows."""

    points: np.ndarray

    def __len__(self) -> int:
        return len(self.points)

    def item(self, i: int) -> SinglePoint:
        return SinglePoint(BlochVector.from_array(self.points[i]))


@dataclass(frozen=True)
class PairBatch:
    """Vectorized batch of PairPoint states.

    `prepared` is a single PureState when every row was pinned to the same
    preparation, a per-row tuple for mixtures, or None for reference draws.
    """

    first: np.ndarray
    second: np.ndarray
    prepared: PureState | tuple[PureState | None, ...] | None = None

    def __len__(self) -> int:
        return len(self.first)

    def item(self, i: int) -> PairPoint:
        tag = self.prepared[i] if isinstance(self.prepared, tuple) else self.prepared
        return PairPoint(
            BlochVector.from_array(self.first[i]),
            BlochVector.from_array(self.second[i]),
            tag,
        )


Batch = SingleBatch | PairBatch


class OntologicalModel(ABC):
    """Sampler, support predicate and response function of one model.

    All capabilities are pure functions of their arguments plus (seed, index),
    and scalar variants agree bit-for-bit with the corresponding batch row.
    """

    name: str = "abstract"
    has_density: bool = False

    @abstractmethod
    def prepare_batch(self, psi: PureState, seed: int, start: int, count: int) -> Batch:
        """Draw ontic states for sample indices start..start+count-1 of mu_psi."""

    @abstractmethod
    def reference_batch(self, seed: int, start: int, count: int) -> Batch:
        """Draw from the reference measure on the full ontic space."""

    @abstractmethod
    def in_support_batch(self, psi: PureState, batch: Batch) -> np.ndarray:
        """Boolean membership of each batch row in the support of mu_psi."""

    @abstractmethod
    def response_batch(self, basis: MeasurementBasis, outcome_index: int, batch: Batch) -> np.ndarray:
        """Response probability of the selected outcome at each batch row."""

    def density_batch(self, psi: PureState, batch: Batch) -> np.ndarray | None:
        """Density of mu_psi w.r.t. the reference measure, or None when singular."""
        return None

    def sample_prepared(self, psi: PureState, seed: int, index: int) -> OnticState:
        return self.prepare_batch(psi, seed, index, 1).item(0)

    def sample_reference(self, seed: int, index: int) -> OnticState:
        return self.reference_batch(seed, index, 1).item(0)

    def in_support(self, psi: PureState, lam: OnticState) -> bool:
        if isinstance(lam, PairPoint) and lam.prepared is not None and lam.prepared == psi:
            return True
        return bool(self.in_support_batch(psi, self._as_batch(lam))[0])

    def response(self, basis: MeasurementBasis, outcome_index: int, lam: OnticState) -> float:
        return float(self.response_batch(basis, outcome_index, self._as_batch(lam))[0])

    def density(self, psi: PureState, lam: OnticState) -> float | None:
        vals = self.density_batch(psi, self._as_batch(lam))
        return None if vals is None else float(vals[0])

    @staticmethod
    def _as_batch(lam: OnticState) -> Batch:
        if isinstance(lam, SinglePoint):
            return SingleBatch(lam.point.as_array()[None, :])
        return PairBatch(
            lam.first.as_array()[None, :],
            lam.second.as_array()[None, :],
            (lam.prepared,),
        )


def _require_single(batch: Batch) -> np.ndarray:
    if not isinstance(batch, SingleBatch):
        raise ValueError("expected a single-sphere ontic state, got a sphere pair")
    return batch.points


def _require_pair(batch: Batch) -> PairBatch:
    if not isinstance(batch, PairBatch):
        raise ValueError("expected a sphere-pair ontic state, got a single point")
    return batch


def _tangent_frame(axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    helper = np.array([0.0, 0.0, 1.0]) if abs(axis[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = np.cross(helper, axis)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(axis, e1)


def _cap_points(axis: np.ndarray, key: int, start: int, count: int) -> np.ndarray:
    """Sample the cosine-cap density (1/pi) * max(0, axis . lam) exactly.

    In the frame with `axis` at the pole, cos(theta) = sqrt(1 - u) for u
    uniform on [0, 1), which keeps axis . lam strictly positive; the azimuth
    is uniform.
    """
    u = uniform_blocks(key, start, count)
    t = np.sqrt(1.0 - u[:, 0])
    s = np.sqrt(1.0 - t * t)
    phi = (2.0 * np.pi) * u[:, 1]
    e1, e2 = _tangent_frame(axis)
    sc, ss = s * np.cos(phi), s * np.sin(phi)
    out = np.empty((count, 3))
    for k in range(3):
        out[:, k] = sc * e1[k] + ss * e2[k] + t * axis[k]
    out /= np.sqrt(out[:, 0] ** 2 + out[:, 1] ** 2 + out[:, 2] ** 2)[:, None]
    return out


def _point_mass_rows(psi: PureState, count: int) -> np.ndarray:
    return np.tile(psi.vec(), (count, 1))


def _distance_support(points: np.ndarray, psi: PureState) -> np.ndarray:
    return np.abs(points - psi.vec()).max(axis=1) <= SUPPORT_TOL


class KochenSpeckerModel(OntologicalModel):
    """Single-sphere model with cosine-cap preparations and step responses."""

    name = "ks"
    has_density = True

    def prepare_batch(self, psi, seed, start, count):
        key = substream_key(seed, self.name, "prepare", psi.vec().tobytes())
        return SingleBatch(_cap_points(psi.vec(), key, start, count))

    def reference_batch(self, seed, start, count):
        u = uniform_blocks(substream_key(seed, self.name, "reference"), start, count)
        return SingleBatch(sphere_points_from_uniforms(u[:, 0], u[:, 1]))

    def density_batch(self, psi, batch):
        pts = _require_single(batch)
        return np.maximum(0.0, pts @ psi.vec()) / np.pi

    def in_support_batch(self, psi, batch):
        return _require_single(batch) @ psi.vec() > 0.0

    def response_batch(self, basis, outcome_index, batch):
        pts = _require_single(batch)
        return (pts @ basis.outcomes[outcome_index].vec() > 0.0).astype(float)


class BellMerminModel(OntologicalModel):
    """Two-sphere model: point measure on the first sphere, uniform second sphere."""

    name = "bell-mermin"
    has_density = False   # the point-measure factor admits no density

    def prepare_batch(self, psi, seed, start, count):
        key = substream_key(seed, self.name, "prepare", psi.vec().tobytes())
        u = uniform_blocks(key, start, count)
        second = sphere_points_from_uniforms(u[:, 0], u[:, 1])
        return PairBatch(_point_mass_rows(psi, count), second, psi)

    def reference_batch(self, seed, start, count):
        u = uniform_blocks(substream_key(seed, self.name, "reference"), start, count)
        return PairBatch(
            sphere_points_from_uniforms(u[:, 0], u[:, 1]),
            sphere_points_from_uniforms(u[:, 2], u[:, 3]),
            None,
        )

    def in_support_batch(self, psi, batch):
        return _distance_support(_require_pair(batch).first, psi)

    def response_batch(self, basis, outcome_index, batch):
        b = _require_pair(batch)
        total = b.first + b.second
        return (total @ basis.outcomes[outcome_index].vec() > 0.0).astype(float)


class _PointMeasureFixture(OntologicalModel):
    """Shared base for the negative controls: point measures on a single sphere."""

    def prepare_batch(self, psi, seed, start, count):
        return SingleBatch(_point_mass_rows(psi, count))

    def reference_batch(self, seed, start, count):
        u = uniform_blocks(substream_key(seed, self.name, "reference"), start, count)
        return SingleBatch(sphere_points_from_uniforms(u[:, 0], u[:, 1]))

    def in_support_batch(self, psi, batch):
        return _distance_support(_require_single(batch), psi)


class ConstantResponseModel(_PointMeasureFixture):
    """Negative control: every response is 1/2, breaking determinism and the Born rule."""

    name = "const-half"

    def response_batch(self, basis, outcome_index, batch):
        return np.full(len(batch), 0.5)


class LabelReadingModel(_PointMeasureFixture):
    """Negative control: flips its response on marked basis labels.

    Descriptors whose label contains RELABEL_MARK get the complementary
    response, so the measurement-noncontextuality checker catches it.  The
    second outcome is defined as the complement of the first so responses
    sum to 1 even at the point-measure draws on decision boundaries.
    """

    name = "label-reader"

    def response_batch(self, basis, outcome_index, batch):
        pts = _require_single(batch)
        hit = (pts @ basis.outcomes[0].vec() > 0.0).astype(float)
        vals = hit if outcome_index == 0 else 1.0 - hit
        if basis.label is not None and RELABEL_MARK in basis.label:
            return 1.0 - vals
        return vals


_KS = KochenSpeckerModel()
_BM = BellMerminModel()


def ks_density(psi: PureState, lam: OnticState) -> float:
    """Preparation density (1/pi) * max(0, psi . lam) of the single-sphere model."""
    if not isinstance(lam, SinglePoint):
        raise ValueError("ks_density is defined on single-sphere ontic states")
    return float(np.maximum(0.0, psi.bloch.dot(lam.point)) / np.pi)


def ks_sample(psi: PureState, seed: int, index: int) -> SinglePoint:
    """One draw from the single-sphere model's preparation distribution."""
    lam = _KS.sample_prepared(psi, seed, index)
    assert isinstance(lam, SinglePoint)
    return lam


def ks_response(basis: MeasurementBasis, outcome_index: int, lam: OnticState) -> float:
    """step(outcome . lam) for the selected outcome of the basis."""
    return _KS.response(basis, outcome_index, lam)


def bm_sample(psi: PureState, seed: int, index: int) -> PairPoint:
    """One draw from the two-sphere model: (psi exactly, uniform point)."""
    lam = _BM.sample_prepared(psi, seed, index)
    assert isinstance(lam, PairPoint)
    return lam


def bm_response(basis: MeasurementBasis, outcome_index: int, lam: OnticState) -> float:
    """step(outcome . (first + second)) for the selected outcome."""
    return _BM.response(basis, outcome_index, lam)


def bm_density(psi: PureState, lam: OnticState) -> None:
    """Always None: the point-measure factor has no density w.r.t. the product measure."""
    return None


@dataclass(frozen=True)
class StateCatalog:
    """The states that can be prepared and the bases that can be measured."""

    states: tuple[PureState, ...]
    bases: tuple[MeasurementBasis, ...]

    def __post_init__(self):
        known = {s.bloch for s in self.states}
        for basis in self.bases:
            for outcome in basis.outcomes:
                if outcome.bloch not in known:
                    raise ValueError(f"basis outcome {outcome.describe()} missing from catalog states")

    def closed_under_complements(self, tol: float = SUPPORT_TOL) -> bool:
        vecs = np.array([s.vec() for s in self.states])
        for s in self.states:
            if np.abs(vecs + s.vec()).max(axis=1).min() > tol:
                return False
        return True


def default_catalog() -> StateCatalog:
    """The six axis states with their three measurement bases."""
    return StateCatalog(
        states=(PLUS_Z, MINUS_Z, PLUS_X, MINUS_X, PLUS_Y, MINUS_Y),
        bases=(
            MeasurementBasis((PLUS_Z, MINUS_Z), "z"),
            MeasurementBasis((PLUS_X, MINUS_X), "x"),
            MeasurementBasis((PLUS_Y, MINUS_Y), "y"),
        ),
    )


def random_states(seed: int, count: int) -> tuple[PureState, ...]:
    """Uniformly random pure states with stable labels r00, r01, ..."""
    u = uniform_blocks(substream_key(seed, "random-states"), 0, count)
    pts = sphere_points_from_uniforms(u[:, 0], u[:, 1])
    return tuple(
        PureState(BlochVector.from_array(pts[i]), f"r{i:02d}") for i in range(count)
    )


def catalog_from_states(states) -> StateCatalog:
    """Build a catalog from bare states: close under complements, pair into bases."""
    closed: list[PureState] = []
    seen: set[BlochVector] = set()
    for s in states:
        for candidate in (s, orthogonal_complement(s)):
            if candidate.bloch not in seen:
                seen.add(candidate.bloch)
                closed.append(candidate)
    bases = []
    paired: set[BlochVector] = set()
    for s in closed:
        if s.bloch in paired:
            continue
        partner = orthogonal_complement(s)
        for other in closed:
            if other.bloch == partner.bloch:
                partner = other
                break
        paired.add(s.bloch)
        paired.add(partner.bloch)
        bases.append(MeasurementBasis((s, partner), s.describe()))
    return StateCatalog(tuple(closed), tuple(bases))


MODEL_NAMES = ("ks", "bell-mermin", "const-half", "label-reader")


def make_model(name: str) -> OntologicalModel:
    """Instantiate a model by its registry name."""
    registry = {
        "ks": KochenSpeckerModel,
        "bell-mermin": BellMerminModel,
        "const-half": ConstantResponseModel,
        "label-reader": LabelReadingModel,
    }
    if name not in registry:
        raise ValueError(f"unknown model {name!r}; valid names: {', '.join(MODEL_NAMES)}")
    return registry[name]()
