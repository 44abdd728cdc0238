"""Quadrature grids on the unit disk, radial intervals and the unit n-ball.

Conventions
-----------
* :class:`DiskGrid` integrates against the *normalized* area measure
  ``dA = dx dy / pi`` (total mass 1).
* :class:`RadialGrid` integrates against ``r**(dim-1) dr`` on ``[0, 1]``.
* :class:`BallSampler` integrates against *unnormalized* Lebesgue measure
  ``dx`` on the unit ball of R^n (total mass ``c_n``).

Discontinuous radial integrands are handled by splitting the radial
interval at the jump radii (``splits``); each sub-interval gets its own
Gauss-Legendre rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import special


def gauss_legendre(n: int, a: float = 0.0, b: float = 1.0):
    """Gauss-Legendre nodes and weights mapped to ``[a, b]``."""
    x, w = leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def _split_points(splits: Sequence[float]) -> np.ndarray:
    pts = sorted({float(s) for s in splits if 0.0 < float(s) < 1.0})
    return np.array([0.0, *pts, 1.0])


def split_gauss(n: int, splits: Sequence[float] = ()):
    """Composite Gauss-Legendre rule on [0, 1] with ``n`` nodes per piece."""
    edges = _split_points(splits)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        x, w = gauss_legendre(n, a, b)
        nodes.append(x)
        weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


@dataclass(frozen=True)
class BallSpec:
    """Dimension-dependent constants of the unit ball B_n.

    ``rho`` is the radius of the concentric ball B0 holding half the volume.
    """

    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"dimension must be >= 2, got {self.n}")

    @property
    def rho(self) -> float:
        return 2.0 ** (-1.0 / self.n)

    @property
    def volume(self) -> float:
        """c_n, the Lebesgue volume of the unit ball."""
        return math.pi ** (self.n / 2) / math.gamma(self.n / 2 + 1)

    @property
    def sphere_area(self) -> float:
        return self.n * self.volume

    def sigma(self, x) -> np.ndarray:
        """-1 on B0, +1 on B minus B0, 0 off B (points as rows of ``x``)."""
        r = radii(x)
        return np.where(r < self.rho, -1.0, np.where(r < 1.0, 1.0, 0.0))


def radii(x) -> np.ndarray:
    """Euclidean norms of points given as complex numbers or rows."""
    x = np.asarray(x)
    if np.iscomplexobj(x) or x.ndim <= 1:
        return np.abs(x)
    return np.linalg.norm(x, axis=-1)


@dataclass(frozen=True, eq=False)
class DiskGrid:
    """Product polar grid on the unit disk for the normalized area measure.

    Radial nodes are Gauss-Legendre in ``r`` (per split piece) with the
    Jacobian ``2 r dr`` folded into the weights; angular nodes are
    equispaced so that ``e^{ik theta}`` integrates to zero exactly for
    ``0 < |k| < n_theta``.
    """

    n_r: int
    n_theta: int
    splits: tuple = ()
    r: np.ndarray = field(repr=False, default=None)
    theta: np.ndarray = field(repr=False, default=None)
    points: np.ndarray = field(repr=False, default=None)
    weights: np.ndarray = field(repr=False, default=None)

    @property
    def size(self) -> int:
        return self.points.size

    @property
    def is_product(self) -> bool:
        return self.n_r > 0

    def refined(self, factor: int = 2) -> "DiskGrid":
        if not self.is_product:
            raise ValueError("free-point grids cannot be refined")
        return build_disk_grid(self.n_r * factor, self.n_theta * factor, self.splits)

    def rotation_shift(self, phi: float) -> Optional[int]:
        """Index shift realizing rotation by ``phi`` if grid-compatible."""
        k = phi * self.n_theta / (2 * math.pi)
        if abs(k - round(k)) < 1e-9:
            return int(round(k)) % self.n_theta
        return None


def build_disk_grid(n_r: int, n_theta: int, splits: Sequence[float] = ()) -> DiskGrid:
    """Build a :class:`DiskGrid` with ``n_r`` radial nodes per split piece."""
    if n_r < 1:
        raise ValueError("n_r must be >= 1")
    if n_theta < 4:
        raise ValueError("n_theta must be >= 4 for angular symmetry")
    rn, rw = split_gauss(n_r, splits)
    theta = 2 * math.pi * np.arange(n_theta) / n_theta
    # 2 r dr * dtheta / (2 pi)
    wr = 2.0 * rn * rw
    points = (rn[:, None] * np.exp(1j * theta)[None, :]).ravel()
    weights = (wr[:, None] * np.full(n_theta, 1.0 / n_theta)[None, :]).ravel()
    for arr in (rn, theta, points, weights):
        arr.setflags(write=False)
    return DiskGrid(n_r, n_theta, tuple(sorted(splits)), rn, theta, points, weights)


def free_point_grid(points, weights=None) -> DiskGrid:
    """Scattered points in the closed disk with equal (or given) weights.

    Weights default to ``1/N`` each, i.e. the points are treated as a
    uniform sample of the normalized area measure.
    """
    pts = np.asarray(points, dtype=complex).ravel()
    if pts.size == 0:
        raise ValueError("no points")
    if np.any(np.abs(pts) > 1 + 1e-12):
        raise ValueError("points must lie in the closed unit disk")
    w = np.full(pts.size, 1.0 / pts.size) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != pts.shape or np.any(w < 0):
        raise ValueError("weights must be nonnegative and aligned with points")
    return DiskGrid(0, 0, (), np.empty(0), np.empty(0), pts, w)


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Quadrature for ``int_0^1 f(r) r**(dim-1) dr``."""

    n_pts: int
    dim: int
    splits: tuple = ()
    nodes: np.ndarray = field(repr=False, default=None)
    weights: np.ndarray = field(repr=False, default=None)

    @property
    def size(self) -> int:
        return self.nodes.size


def build_radial_grid(n_pts: int, dim: int, splits: Sequence[float] = ()) -> RadialGrid:
    if n_pts < 2:
        raise ValueError("n_pts must be >= 2")
    if dim < 2:
        raise ValueError("dim must be >= 2")
    # Gauss-Jacobi on the piece touching 0 absorbs r^{dim-1} exactly;
    # outer pieces fold it into Gauss-Legendre weights
    x, w = split_gauss(n_pts, splits)
    w = w * x ** (dim - 1)
    edge = min(splits) if splits else 1.0
    t, wj = special.roots_jacobi(n_pts, 0.0, dim - 1.0)
    x[:n_pts] = edge * (1 + t) / 2
    w[:n_pts] = wj * (edge / 2) ** dim
    x.setflags(write=False)
    w.setflags(write=False)
    return RadialGrid(n_pts, dim, tuple(sorted(splits)), x, w)


def uniform_directions(rng: np.random.Generator, count: int, n: int) -> np.ndarray:
    """``count`` uniformly distributed unit vectors in R^n."""
    v = rng.standard_normal((count, n))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


@dataclass(frozen=True, eq=False)
class BallSampler:
    """Radial Gauss-Legendre times Monte-Carlo directions on B_n.

    Weights realize unnormalized Lebesgue measure. Node ``(i, j)`` sits at
    ``r_i * u_j``; points are stored direction-major so that
    ``values.reshape(n_dirs, n_r_total)`` groups samples by direction.
    """

    spec: BallSpec
    n_r: int
    n_dirs: int
    seed: int = 0
    splits: tuple = ()
    directions: np.ndarray = field(repr=False, default=None)
    r: np.ndarray = field(repr=False, default=None)
    rw: np.ndarray = field(repr=False, default=None)
    points: np.ndarray = field(repr=False, default=None)
    weights: np.ndarray = field(repr=False, default=None)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def integrate_with_error(self, values) -> tuple:
        """Integral and its Monte-Carlo standard error over directions."""
        vals = np.asarray(values).reshape(self.n_dirs, self.r.size)
        per_dir = self.spec.sphere_area * (vals @ self.rw)
        est = per_dir.mean()
        err = per_dir.std(ddof=1) / math.sqrt(self.n_dirs) if self.n_dirs > 1 else float("inf")
        return est, err

    def uniform_points(self, count: int, stream: int = 1) -> np.ndarray:
        """Uniform random points in the ball, reproducible per (seed, stream)."""
        rng = np.random.default_rng([self.seed, stream])
        u = uniform_directions(rng, count, self.spec.n)
        rad = rng.random(count) ** (1.0 / self.spec.n)
        return u * rad[:, None]

    def sphere_points(self, radius: float, count: int, stream: int = 2) -> np.ndarray:
        rng = np.random.default_rng([self.seed, stream])
        return radius * uniform_directions(rng, count, self.spec.n)


def build_ball_sampler(spec: BallSpec, n_r: int = 32, n_dirs: int = 4096,
                       seed: int = 0, splits: Sequence[float] = ()) -> BallSampler:
    if n_dirs < 2:
        raise ValueError("need at least two directions")
    rng = np.random.default_rng(seed)
    u = uniform_directions(rng, n_dirs, spec.n)
    r, w = split_gauss(n_r, splits)
    rw = w * r ** (spec.n - 1)
    points = (u[:, None, :] * r[None, :, None]).reshape(-1, spec.n)
    weights = np.tile(rw, n_dirs) * (spec.sphere_area / n_dirs)
    for arr in (u, r, rw, points, weights):
        arr.setflags(write=False)
    return BallSampler(spec, n_r, n_dirs, seed, tuple(sorted(splits)), u, r, rw, points, weights)


@dataclass(frozen=True, eq=False)
class Field:
    """Complex samples of a function aligned with a grid's nodes.

    ``evaluator`` is an optional callable on the grid's point format; ``tag``
    names the catalog entry or data source the values came from.
    """

    values: np.ndarray
    tag: str = ""
    evaluator: Optional[Callable] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    @classmethod
    def sample(cls, func: Callable, grid, tag: str = "") -> "Field":
        return cls(np.asarray(func(grid.points), dtype=complex), tag, func)

    def resample(self, grid) -> "Field":
        if self.evaluator is None:
            raise ValueError("field has no evaluator to resample")
        return Field.sample(self.evaluator, grid, self.tag)


Grid = Union[DiskGrid, RadialGrid, BallSampler]


def _nodes(g) -> int:
    return g.nodes.size if isinstance(g, RadialGrid) else g.size


def integrate(f, g: Grid) -> complex:
    """Sum ``w_i f_i`` over the grid nodes.

    ``f`` may be a :class:`Field` or a plain array of samples.
    """
    values = f.values if isinstance(f, Field) else np.asarray(f)
    if values.size != _nodes(g):
        raise ValueError(f"field has {values.size} values, grid has {_nodes(g)} nodes")
    return complex(np.dot(g.weights, values.ravel()))


def integrate_func(func: Callable, g: Grid) -> complex:
    pts = g.nodes if isinstance(g, RadialGrid) else g.points
    return integrate(np.asarray(func(pts), dtype=complex), g)


def refinement_estimate(func: Callable, grid: DiskGrid) -> tuple:
    """Integral of ``func`` on ``grid`` and the change under 2x refinement."""
    coarse = integrate_func(func, grid)
    fine = integrate_func(func, grid.refined())
    return fine, abs(fine - coarse)
