"""Seeded Monte Carlo estimation and deterministic quadrature on the unit sphere.

Sampling is counter-based: every sample index maps to its own Philox counter
block, so the value drawn for (seed, index) never depends on batch sizes or
on how batches are scheduled.  Quadrature uses a Gauss-Legendre product grid
in u = cos(theta), split at the equator, with a midpoint rule in azimuth.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import PreconditionError
from .qubit import BlochVector

WEIGHT_SUM_TOL = 1e-10
DENSITY_NORM_TOL = 1e-3


def substream_key(seed: int, *tags) -> int:
    """Derive an independent 128-bit Philox key from a seed and purpose tags.

    Distinct tag tuples give statistically independent streams, which keeps
    e.g. mixture-component choices decoupled from the component draws.
    """
    h = hashlib.sha256()
    h.update(int(seed).to_bytes(8, "little", signed=False))
    for tag in tags:
        h.update(b"\x1f")
        h.update(tag if isinstance(tag, bytes) else str(tag).encode("utf-8"))
    return int.from_bytes(h.digest()[:16], "little")


def uniform_blocks(key: int, start: int, count: int) -> np.ndarray:
    """Return a (count, 4) array of uniforms in [0, 1).

    Row i holds the four outputs of Philox counter block start + i under the
    given key, so any sub-range of indices reproduces bit-identically.
    """
    gen = np.random.Generator(np.random.Philox(key=key, counter=int(start)))
    return gen.random(4 * count).reshape(count, 4)


def sphere_points_from_uniforms(u0: np.ndarray, u1: np.ndarray) -> np.ndarray:
    """Map pairs of uniforms to points on S2 via z = 2*u0 - 1, azimuth = 2*pi*u1."""
    z = 2.0 * u0 - 1.0
    phi = (2.0 * np.pi) * u1
    r = np.sqrt(1.0 - z * z)
    out = np.empty((len(z), 3))
    out[:, 0] = r * np.cos(phi)
    out[:, 1] = r * np.sin(phi)
    out[:, 2] = z
    return out


def uniform_sphere_batch(seed: int, start: int, count: int) -> np.ndarray:
    """(count, 3) array of i.i.d. uniform sphere points for indices start..start+count-1."""
    u = uniform_blocks(int(seed), start, count)
    return sphere_points_from_uniforms(u[:, 0], u[:, 1])


def uniform_sphere_sampler(seed: int, index: int) -> BlochVector:
    """The uniform-on-S2 point assigned to (seed, index)."""
    return BlochVector.from_array(uniform_sphere_batch(seed, index, 1)[0])


@dataclass(frozen=True)
class McConfig:
    """Sampling budget for Monte Carlo estimates."""

    n_samples: int = 1_000_000
    seed: int = 42
    batch_size: int = 100_000

    def __post_init__(self):
        if self.n_samples < 100:
            raise ValueError("n_samples must be at least 100")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.seed < 0 or self.seed >= 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo mean with its standard error (sample std / sqrt(n))."""

    mean: float
    std_error: float
    n: int
    seed: int


def mc_expectations(
    fs: Sequence[Callable],
    sampler: Callable[[int, int, int], object],
    cfg: McConfig,
) -> list[McEstimate]:
    """Estimate E[f] for several integrands over one shared sample stream.

    sampler(seed, start, count) must return a batch covering sample indices
    start..start+count-1; each f maps a batch to a float array of the same
    length.  Batches are reduced in index order, so results are a pure
    function of (fs, sampler, cfg).
    """
    if not fs:
        raise ValueError("need at least one integrand")
    n = cfg.n_samples
    s1 = [0.0] * len(fs)
    s2 = [0.0] * len(fs)
    for start in range(0, n, cfg.batch_size):
        count = min(cfg.batch_size, n - start)
        batch = sampler(cfg.seed, start, count)
        for k, f in enumerate(fs):
            vals = np.asarray(f(batch), dtype=float)
            if vals.shape != (count,):
                raise ValueError(f"integrand {k} returned shape {vals.shape}, expected ({count},)")
            if not np.isfinite(vals).all():
                raise ValueError(f"integrand {k} produced non-finite values")
            s1[k] += float(vals.sum())
            s2[k] += float((vals * vals).sum())
    out = []
    for k in range(len(fs)):
        mean = s1[k] / n
        var = max(0.0, (s2[k] - n * mean * mean) / (n - 1))
        out.append(McEstimate(mean=mean, std_error=float(np.sqrt(var / n)), n=n, seed=cfg.seed))
    return out


def mc_expectation(f: Callable, sampler: Callable, cfg: McConfig) -> McEstimate:
    """Estimate E[f] under the sampler's distribution; see mc_expectations."""
    return mc_expectations([f], sampler, cfg)[0]


@lru_cache(maxsize=8)
def _grid_arrays(n_polar: int, n_azimuth: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n_polar)
    # Gauss-Legendre panels on [-1, 0] and [0, 1]: integrands with an
    # equatorial kink or step stay smooth on each panel.
    u = np.concatenate([0.5 * (x - 1.0), 0.5 * (x + 1.0)])
    wu = np.concatenate([0.5 * w, 0.5 * w])
    # Midpoint rule in azimuth keeps axis-aligned meridional discontinuities
    # on cell boundaries instead of on nodes.
    phi = (2.0 * np.pi) * (np.arange(n_azimuth) + 0.5) / n_azimuth
    uu, pp = np.meshgrid(u, phi, indexing="ij")
    r = np.sqrt(1.0 - uu * uu)
    points = np.stack([r * np.cos(pp), r * np.sin(pp), uu], axis=-1).reshape(-1, 3)
    weights = np.repeat(wu * (2.0 * np.pi / n_azimuth), n_azimuth)
    assert abs(weights.sum() - 4.0 * np.pi) <= WEIGHT_SUM_TOL
    points.setflags(write=False)
    weights.setflags(write=False)
    return points, weights


@dataclass(frozen=True)
class QuadratureGrid:
    """Product quadrature grid over S2.

    n_polar is the Gauss-Legendre order per hemisphere panel in u = cos(theta)
    (2 * n_polar polar nodes in total); n_azimuth is the uniform midpoint
    azimuth count.  Weights are positive and sum to the sphere area 4*pi.
    """

    n_polar: int = 128
    n_azimuth: int = 256

    def __post_init__(self):
        if self.n_polar < 1 or self.n_azimuth < 1:
            raise ValueError("grid orders must be positive")

    @property
    def points(self) -> np.ndarray:
        return _grid_arrays(self.n_polar, self.n_azimuth)[0]

    @property
    def weights(self) -> np.ndarray:
        return _grid_arrays(self.n_polar, self.n_azimuth)[1]


def sphere_quadrature(f: Callable[[np.ndarray], np.ndarray], grid: QuadratureGrid | None = None) -> float:
    """Approximate the surface integral of f over S2.

    f receives an (N, 3) array of unit vectors and returns N values.  Exact
    (to 1e-10) for polynomials of degree <= 2*n_polar - 1 with azimuthal
    harmonics of order < n_azimuth / 2; discontinuous integrands converge
    with degraded accuracy.
    """
    grid = grid or QuadratureGrid()
    return float(grid.weights @ np.asarray(f(grid.points), dtype=float))


def tv_distance(
    f: Callable[[np.ndarray], np.ndarray],
    g: Callable[[np.ndarray], np.ndarray],
    grid: QuadratureGrid | None = None,
) -> float:
    """Total variation distance (1/2) * integral of |f - g| between sphere densities.

    Both inputs must be nonnegative and integrate to 1 within 1e-3 on the grid.
    """
    grid = grid or QuadratureGrid()
    pts, wts = grid.points, grid.weights
    fv = np.asarray(f(pts), dtype=float)
    gv = np.asarray(g(pts), dtype=float)
    for name, vals in (("f", fv), ("g", gv)):
        if vals.min() < 0.0:
            raise PreconditionError(f"density {name} takes negative values")
        total = float(wts @ vals)
        if abs(total - 1.0) > DENSITY_NORM_TOL:
            raise PreconditionError(f"density {name} integrates to {total:.6f}, not 1")
    return 0.5 * float(wts @ np.abs(fv - gv))
