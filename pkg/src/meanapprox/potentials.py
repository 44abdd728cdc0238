"""Cauchy and Newton potentials, peak-set functionals and related checks.

Singular integrals ``int K(x - y) g(x) dx`` are evaluated in polar
coordinates centred at ``y``: along each ray ``x = y + s u`` the kernel
singularity cancels against the Jacobian ``s^(n-1)``, and rays are split
wherever the density can jump (spheres ``|x| = r`` for radial densities,
region boundaries for indicator sets). Directions are equispaced in 2D, a
Gauss x trapezoid product rule about the axis through ``y`` in 3D, and
Monte-Carlo beyond.

Normalizations: the fundamental solution is ``E = log|x| / (2 pi)`` in
2D and ``|x|^(2-n) / ((2-n) A_n)`` for n >= 3 (``A_n`` the area of the unit
sphere), so ``Laplacian E = delta``. The Cauchy transform uses the
normalized area measure ``dA = dx dy / pi``; Newton potentials and the
peak-set integrals use Lebesgue measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, optimize

from .certificates import CERTIFIED, INCONCLUSIVE, REFUTED, Verdict
from .grid import (BallSpec, DiskGrid, Field, build_ball_sampler, build_disk_grid,
                   gauss_legendre, radii, uniform_directions)


class SingularEvaluation(ValueError):
    """Evaluation point too close to quadrature nodes of a sampled density."""


def _rows(x, n=2) -> np.ndarray:
    x = np.asarray(x)
    if np.iscomplexobj(x):
        x = x.ravel()
        return np.column_stack([x.real, x.imag])
    return np.atleast_2d(np.asarray(x, dtype=float)).reshape(-1, n)


def _cplx(x) -> np.ndarray:
    return x[:, 0] + 1j * x[:, 1]


# --------------------------------------------------------------------------
# densities


class Density:
    """A bounded function on R^n with known jump surfaces.

    ``crossings(y, U)`` returns an ``(N, K)`` array of ray parameters ``s``
    at which ``x = y + s u`` may cross a jump surface (NaN for none).
    """

    dim = 2

    def __call__(self, x) -> np.ndarray:
        raise NotImplementedError

    def crossings(self, y, U) -> np.ndarray:
        return np.empty((U.shape[0], 0))


def _sphere_hits(y, U, r, centre=None):
    c = np.zeros_like(y) if centre is None else np.asarray(centre, dtype=float)
    d = y - c
    b = U @ d
    disc = b * b - (d @ d - r * r)
    sq = np.sqrt(np.where(disc >= 0, disc, np.nan))
    return np.stack([-b - sq, -b + sq], axis=1)


class RadialDensity(Density):
    """``g(x) = func(x)`` with jumps only on the spheres ``|x| = r`` in ``breaks``."""

    def __init__(self, func: Callable, breaks: Sequence[float] = (), dim: int = 2, name: str = ""):
        self.func, self.breaks, self.dim, self.name = func, tuple(breaks), dim, name

    def __call__(self, x):
        return self.func(_rows(x, self.dim))

    def crossings(self, y, U):
        if not self.breaks:
            return np.empty((U.shape[0], 0))
        return np.concatenate([_sphere_hits(y, U, r) for r in self.breaks], axis=1)


def sigma_density(spec: BallSpec) -> RadialDensity:
    """-1 on B0, +1 on the rest of the unit ball."""
    return RadialDensity(spec.sigma, (spec.rho, 1.0), spec.n, "sigma")


def ball_indicator(spec: BallSpec, radius: float = 1.0) -> RadialDensity:
    return RadialDensity(lambda x: (radii(x) < radius).astype(float), (radius,), spec.n,
                         f"chi_B({radius:g})")


def band_density(spec: BallSpec, edges: Sequence[float], values: Sequence[float]) -> RadialDensity:
    """Piecewise-constant radial density: ``values[i]`` on ``edges[i] <= |x| < edges[i+1]``."""
    edges = np.asarray(edges, dtype=float)
    vals = np.asarray(values, dtype=float)

    def f(x):
        r = radii(x)
        idx = np.clip(np.searchsorted(edges, r, side="right") - 1, 0, len(vals) - 1)
        return np.where((r < edges[-1]) & (r >= edges[0]), vals[idx], 0.0)

    return RadialDensity(f, tuple(edges[1:]), spec.n, "bands")


# --------------------------------------------------------------------------
# regions


class RegionSpec(Density):
    """Indicator of a subset of R^n (catalog shapes below)."""

    name = "region"
    bound = 1.0  # all points satisfy |x| <= bound

    def contains(self, x) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x):
        return self.contains(_rows(x, self.dim)).astype(float)

    scan_points = 512

    def crossings(self, y, U):
        """Generic boundary search: scan each ray, bisect membership changes.

        Subclasses with explicit boundaries override this.
        """
        hits = _sphere_hits(y, U, self.bound)
        lo = np.maximum(np.nan_to_num(hits[:, 0], nan=0.0), 0.0)
        hi = np.maximum(np.nan_to_num(hits[:, 1], nan=0.0), lo)
        t = np.linspace(0.0, 1.0, self.scan_points)
        S = lo[:, None] + (hi - lo)[:, None] * t[None, :]
        inside = self.contains((y + S[..., None] * U[:, None, :]).reshape(-1, self.dim))
        inside = inside.reshape(S.shape)
        flips = inside[:, 1:] != inside[:, :-1]
        rows, cols = np.nonzero(flips)
        if rows.size == 0:
            return np.empty((U.shape[0], 0))
        a, b = S[rows, cols], S[rows, cols + 1]
        fa = inside[rows, cols]
        for _ in range(52):
            m = 0.5 * (a + b)
            fm = self.contains(y + m[:, None] * U[rows])
            same = fm == fa
            a, b = np.where(same, m, a), np.where(same, b, m)
        counts = np.bincount(rows, minlength=U.shape[0])
        out = np.full((U.shape[0], counts.max()), np.nan)
        slot = np.arange(rows.size) - np.repeat(np.cumsum(counts) - counts, counts)
        out[rows, slot] = 0.5 * (a + b)
        return out

    def angular_measure(self, r: float) -> float:
        """Surface measure of ``{u : r u in F}`` on the unit sphere."""
        n_dir = 4096
        if self.dim == 2:
            th = 2 * math.pi * (np.arange(n_dir) + 0.5) / n_dir
            u = np.column_stack([np.cos(th), np.sin(th)])
            return 2 * math.pi * float(np.mean(self.contains(r * u)))
        u = uniform_directions(np.random.default_rng(0), n_dir, self.dim)
        return BallSpec(self.dim).sphere_area * float(np.mean(self.contains(r * u)))

    def measure(self, n_dirs: int = 4096, seed: int = 0) -> float:
        """Lebesgue measure, by exact ray lengths from the origin."""
        y = np.zeros(self.dim)
        rule = ray_rule(y, self.dim, [self], n_dirs=n_dirs, n_s=1, seed=seed, far=self.bound)
        # integral of s^(n-1) ds over inside segments
        seg = rule.segments
        inside = self.contains(rule.midpoints)
        pw = (seg[:, 1] ** self.dim - seg[:, 0] ** self.dim) / self.dim
        return float(np.sum(rule.dir_weight[rule.seg_dir] * pw * inside))

    def normalized_area(self, n_dirs: int = 8192) -> float:
        return self.measure(n_dirs) / math.pi

    def boundary_points(self, count: int) -> np.ndarray:
        return np.empty((0, self.dim))


class Ball(RegionSpec):
    def __init__(self, radius: float, centre=None, dim: int = 2):
        self.radius, self.dim = float(radius), dim
        self.centre = np.zeros(dim) if centre is None else np.asarray(centre, dtype=float)
        self.bound = float(np.linalg.norm(self.centre)) + self.radius
        self.name = f"ball(r={radius:g})"

    def contains(self, x):
        return np.linalg.norm(_rows(x, self.dim) - self.centre, axis=1) < self.radius

    def crossings(self, y, U):
        return _sphere_hits(y, U, self.radius, self.centre)

    def angular_measure(self, r):
        if np.allclose(self.centre, 0):
            return BallSpec(self.dim).sphere_area if r < self.radius else 0.0
        return super().angular_measure(r)

    def boundary_points(self, count):
        if self.dim != 2:
            return super().boundary_points(count)
        th = 2 * math.pi * np.arange(count) / count
        return self.centre + self.radius * np.column_stack([np.cos(th), np.sin(th)])


class HalfSpace(RegionSpec):
    """``{x : x . normal > offset}`` (unbounded; intersect with a ball)."""

    def __init__(self, normal, offset: float = 0.0):
        self.normal = np.asarray(normal, dtype=float) / np.linalg.norm(normal)
        self.offset, self.dim = float(offset), self.normal.size
        self.bound = math.inf

    def contains(self, x):
        return _rows(x, self.dim) @ self.normal > self.offset

    def crossings(self, y, U):
        un = U @ self.normal
        with np.errstate(divide="ignore", invalid="ignore"):
            s = (self.offset - y @ self.normal) / un
        return np.where(np.abs(un) > 1e-300, s, np.nan)[:, None]


class Ellipse(RegionSpec):
    def __init__(self, a: float, b: float, angle: float = 0.0, centre=(0.0, 0.0)):
        self.a, self.b, self.angle, self.dim = float(a), float(b), float(angle), 2
        self.centre = np.asarray(centre, dtype=float)
        self.bound = float(np.linalg.norm(self.centre)) + max(a, b)
        c, s = math.cos(angle), math.sin(angle)
        self._R = np.array([[c, s], [-s, c]])  # world -> body
        self.name = f"ellipse(a={a:.4g},b={b:.4g},angle={angle:.4g})"

    def _body(self, x):
        return (_rows(x) - self.centre) @ self._R.T

    def contains(self, x):
        p = self._body(x)
        return (p[:, 0] / self.a) ** 2 + (p[:, 1] / self.b) ** 2 < 1

    def crossings(self, y, U):
        p0 = ((y - self.centre) @ self._R.T) / [self.a, self.b]
        d = (U @ self._R.T) / [self.a, self.b]
        A = np.sum(d * d, axis=1)
        B = d @ p0
        C = p0 @ p0 - 1
        disc = B * B - A * C
        sq = np.sqrt(np.where(disc >= 0, disc, np.nan))
        return np.stack([(-B - sq) / A, (-B + sq) / A], axis=1)

    def boundary_points(self, count):
        t = 2 * math.pi * np.arange(count) / count
        body = np.column_stack([self.a * np.cos(t), self.b * np.sin(t)])
        return body @ self._R + self.centre


class Intersection(RegionSpec):
    def __init__(self, *parts: RegionSpec):
        self.parts, self.dim = parts, parts[0].dim
        self.bound = min(p.bound for p in parts)
        self.name = " & ".join(p.name for p in parts)

    def contains(self, x):
        out = np.ones(_rows(x, self.dim).shape[0], dtype=bool)
        for p in self.parts:
            out &= p.contains(x)
        return out

    def crossings(self, y, U):
        return np.concatenate([p.crossings(y, U) for p in self.parts], axis=1)

    def boundary_points(self, count):
        pts = np.concatenate([p.boundary_points(count) for p in self.parts])
        return pts[self._near_closure(pts)] if pts.size else pts

    def _near_closure(self, pts, eps=1e-9):
        ok = np.ones(len(pts), dtype=bool)
        for p in self.parts:
            if isinstance(p, HalfSpace):
                ok &= pts @ p.normal >= p.offset - eps
            elif isinstance(p, Ball):
                ok &= np.linalg.norm(pts - p.centre, axis=1) <= p.radius + eps
        return ok


class Difference(RegionSpec):
    """``outer`` minus ``hole``."""

    def __init__(self, outer: RegionSpec, hole: RegionSpec):
        self.outer, self.hole, self.dim = outer, hole, outer.dim
        self.bound = outer.bound
        self.name = f"{outer.name} - {hole.name}"

    def contains(self, x):
        return self.outer.contains(x) & ~self.hole.contains(x)

    def crossings(self, y, U):
        return np.concatenate([self.outer.crossings(y, U), self.hole.crossings(y, U)], axis=1)

    def angular_measure(self, r):
        if isinstance(self.outer, Ball) and isinstance(self.hole, Ball) and \
                np.allclose(self.outer.centre, 0) and np.allclose(self.hole.centre, 0):
            return self.outer.angular_measure(r) - min(self.hole.angular_measure(r),
                                                       self.outer.angular_measure(r))
        return super().angular_measure(r)

    def boundary_points(self, count):
        return np.concatenate([self.outer.boundary_points(count), self.hole.boundary_points(count)])


def annulus(r_in: float, r_out: float = 1.0, dim: int = 2) -> RegionSpec:
    return Difference(Ball(r_out, dim=dim), Ball(r_in, dim=dim))


def half_disk(angle: float = 0.0) -> RegionSpec:
    return Intersection(Ball(1.0), HalfSpace([math.cos(angle), math.sin(angle)]))


class Cusp(RegionSpec):
    """``{1 - s + i t : |t| < s^power, 0 < s < s_max}`` touching the circle at 1."""

    def __init__(self, power: float = 3.0, s_max: float = 0.5):
        self.power, self.s_max, self.dim = float(power), float(s_max), 2
        self.name = f"cusp(power={power:g})"

    def contains(self, x):
        p = _rows(x)
        s = 1 - p[:, 0]
        return (s > 0) & (s < self.s_max) & (np.abs(p[:, 1]) < np.abs(s) ** self.power) \
            & (np.sum(p * p, axis=1) < 1)

    def angular_measure(self, r):
        if r >= 1 or r <= 1 - self.s_max:
            return 0.0
        th_max = math.acos(min(1.0, (1 - self.s_max) / r))
        phi = lambda th: (1 - r * math.cos(th)) ** self.power - r * math.sin(th)
        if phi(th_max) >= 0:
            return 2 * th_max
        return 2 * optimize.brentq(phi, 0.0, th_max, xtol=1e-300, rtol=1e-14)

    def measure(self, n_dirs: int = 4096, seed: int = 0) -> float:
        # width 2 min(s^p, sqrt(2s - s^2)) at depth s (the disk clips the tip only for p < 1)
        width = lambda s: 2 * min(s ** self.power, math.sqrt(max(2 * s - s * s, 0.0)))
        return float(integrate.quad(width, 0.0, self.s_max, epsabs=1e-14, limit=200)[0])


class Cap(RegionSpec):
    """``{x in B : |x - pole| < eps}`` for a unit vector ``pole``."""

    def __init__(self, eps: float, pole=None, dim: int = 2):
        self.eps, self.dim = float(eps), dim
        self.pole = np.eye(dim)[0] if pole is None else np.asarray(pole, dtype=float)
        self.name = f"cap(eps={eps:g})"

    def contains(self, x):
        p = _rows(x, self.dim)
        return (np.linalg.norm(p - self.pole, axis=1) < self.eps) & (np.linalg.norm(p, axis=1) < 1)

    def crossings(self, y, U):
        return np.concatenate([_sphere_hits(y, U, self.eps, self.pole), _sphere_hits(y, U, 1.0)], axis=1)

    def angular_measure(self, r):
        if r >= 1:
            return 0.0
        cos_min = (r * r + 1 - self.eps ** 2) / (2 * r) if r > 0 else math.inf
        if cos_min >= 1:
            return 0.0
        if cos_min <= -1:
            return BallSpec(self.dim).sphere_area
        if self.dim == 2:
            return 2 * math.acos(cos_min)
        if self.dim == 3:
            return 2 * math.pi * (1 - cos_min)
        return super().angular_measure(r)


# --------------------------------------------------------------------------
# polar rules centred at an evaluation point


@dataclass
class RayRule:
    """Quadrature in polar coordinates around ``y``.

    For node ``k``: ``x = y + s u`` and weight ``w`` = (direction weight) x
    (Gauss weight in ``s``); the Jacobian ``s^(n-1)`` is NOT included, so
    callers multiply by ``kernel(s, u) * s^(n-1)`` analytically.
    """

    y: np.ndarray
    x: np.ndarray
    s: np.ndarray
    u: np.ndarray
    w: np.ndarray
    segments: np.ndarray
    midpoints: np.ndarray
    seg_dir: np.ndarray
    dir_weight: np.ndarray
    node_seg: np.ndarray
    dirs: np.ndarray


def _composite_gl(total, a, b, per=32, cuts=()):
    pieces = max(1, total // per)
    edges = np.unique(np.concatenate([np.linspace(a, b, pieces + 1),
                                      [c for c in cuts if a < c < b]]))
    parts = [gauss_legendre(per, lo, hi) for lo, hi in zip(edges[:-1], edges[1:])]
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def _frame(axis):
    # orthonormal completion of a unit 3-vector
    e1 = np.linalg.svd(axis[None, :])[2][1]
    return e1, np.cross(axis, e1)


def _directions(y, n, n_dirs, seed, far, radii_breaks=()):
    ry = float(np.linalg.norm(y))
    # cosines (w.r.t. -y) of rays tangent to the spheres |x| = r < |y|
    tang = [math.sqrt(1 - (r / ry) ** 2) for r in radii_breaks if 0 < r < ry]
    if n == 2:
        centre = math.atan2(-y[1], -y[0]) if ry > 0 else 0.0
        cuts = [centre + sgn * math.acos(c) for c in tang for sgn in (-1, 1)]
        if ry <= far:
            if not cuts:
                th = 2 * math.pi * (np.arange(n_dirs) + 0.5) / n_dirs
                return np.column_stack([np.cos(th), np.sin(th)]), np.full(n_dirs, 2 * math.pi / n_dirs)
            # tangent rays to break circles are where the integrand loses smoothness
            th, wt = _composite_gl(n_dirs, centre - math.pi, centre + math.pi, cuts=cuts)
            return np.column_stack([np.cos(th), np.sin(th)]), wt
        half = math.asin(far / ry)
        th, wt = _composite_gl(n_dirs, centre - half, centre + half, cuts=cuts)
        return np.column_stack([np.cos(th), np.sin(th)]), wt
    if n == 3:
        # product rule about the axis through y: Gauss in cos(angle), trapezoid in azimuth
        axis = -y / ry if ry > 0 else np.array([0.0, 0.0, 1.0])
        t_lo = math.sqrt(1 - (far / ry) ** 2) if ry > far else -1.0
        n_t = max(32, int(round(math.sqrt(n_dirs / 2))))
        n_phi = max(8, n_dirs // n_t)
        t, wt = _composite_gl(n_t, t_lo, 1.0, per=min(32, n_t), cuts=tang)
        phi = 2 * math.pi * (np.arange(n_phi) + 0.5) / n_phi
        e1, e2 = _frame(axis)
        T, PH = np.meshgrid(t, phi, indexing="ij")
        st = np.sqrt(1 - T * T)
        U = (T[..., None] * axis + st[..., None] * (np.cos(PH)[..., None] * e1 + np.sin(PH)[..., None] * e2))
        W = np.repeat(wt, n_phi) * (2 * math.pi / n_phi)
        return U.reshape(-1, 3), W
    rng = np.random.default_rng(seed)
    return uniform_directions(rng, n_dirs, n), np.full(n_dirs, BallSpec(n).sphere_area / n_dirs)


def ray_rule(y, n: int, densities: Sequence[Density] = (), n_dirs: int = 2048, n_s: int = 16,
             seed: int = 0, far: float = 1.0, clip_ball: bool = True) -> RayRule:
    """Polar rule around ``y`` covering the ball of radius ``far``.

    Rays are split at the boundary of that ball and at every crossing
    reported by ``densities``; each piece gets ``n_s`` Gauss nodes.
    """
    y = np.asarray(y, dtype=float).reshape(n)
    rb = sorted({float(r) for d in densities for r in getattr(d, "breaks", ())} | {far})
    U, dw = _directions(y, n, n_dirs, seed, far, rb)
    hits = _sphere_hits(y, U, far)
    inside = float(y @ y) <= far * far
    s_in = np.where(inside, 0.0, hits[:, 0])
    s_out = hits[:, 1]
    if inside:
        s_out = np.maximum(s_out, 0.0)
    valid = np.isfinite(s_in) & np.isfinite(s_out) & (s_out > s_in)
    s_in = np.where(valid, np.maximum(s_in, 0.0), 0.0)
    s_out = np.where(valid, s_out, 0.0)
    extra = [d.crossings(y, U) for d in densities]
    cuts = np.concatenate([s_in[:, None], s_out[:, None], *extra], axis=1)
    cuts = np.where(np.isfinite(cuts), cuts, s_out[:, None])
    cuts = np.clip(cuts, s_in[:, None], s_out[:, None])
    cuts.sort(axis=1)
    a, b = cuts[:, :-1], cuts[:, 1:]
    keep = (b - a) > 0
    seg_dir = np.nonzero(keep)[0]
    seg = np.stack([a[keep], b[keep]], axis=1)
    gx, gw = gauss_legendre(n_s, 0.0, 1.0)
    length = seg[:, 1] - seg[:, 0]
    s = (seg[:, :1] + length[:, None] * gx[None, :]).ravel()
    w = (dw[seg_dir][:, None] * length[:, None] * gw[None, :]).ravel()
    node_seg = np.repeat(np.arange(seg.shape[0]), n_s)
    uu = U[seg_dir][node_seg]
    x = y + s[:, None] * uu
    mid = y + (0.5 * seg.sum(axis=1))[:, None] * U[seg_dir]
    return RayRule(y, x, s, uu, w, seg, mid, seg_dir, dw, node_seg, U)


def _eval_density(g, x):
    return np.asarray(g(x), dtype=complex)


def _sphere_area(n):
    return BallSpec(n).sphere_area


# --------------------------------------------------------------------------
# Cauchy transform and Ahlfors-Beurling


def cauchy_transform(g, z: complex, grid: Optional[DiskGrid] = None, n_dirs: int = 4096,
                     n_s: int = 16) -> complex:
    """``int g(w) / (z - w) dA(w)`` with ``dA = dx dy / pi``.

    ``g`` is a :class:`Density` / :class:`RegionSpec` (desingularized polar
    rule around ``z``) or a :class:`Field` on ``grid`` (direct quadrature;
    refuses evaluation within one grid cell of a node).
    """
    if isinstance(g, Field) or (grid is not None and not isinstance(g, Density)):
        vals = g.values if isinstance(g, Field) else np.asarray(g, dtype=complex)
        if grid is None or vals.size != grid.size:
            raise ValueError("sampled density needs its grid")
        d = np.abs(z - grid.points)
        nz = vals != 0
        cell = 2 * math.pi / grid.n_theta + 1.0 / grid.n_r
        if np.any(nz) and np.min(d[nz]) < cell and abs(z) < 1 + cell:
            raise SingularEvaluation(f"z={z} lies within a grid cell of the support")
        return complex(np.dot(grid.weights, vals / (z - grid.points)))
    y = np.array([z.real, z.imag])
    far = max(1.0, getattr(g, "bound", 1.0))
    if not math.isfinite(far):
        far = 1.0
    rule = ray_rule(y, 2, [g], n_dirs=n_dirs, n_s=1 if isinstance(g, RegionSpec) else n_s, far=far)
    if isinstance(g, RegionSpec):
        # indicator: exact inside length per segment
        inside = g.contains(rule.midpoints)
        length = rule.segments[:, 1] - rule.segments[:, 0]
        U = rule.dirs[rule.seg_dir]
        e = U[:, 0] - 1j * U[:, 1]
        return complex(-np.sum(rule.dir_weight[rule.seg_dir] * e * length * inside) / math.pi)
    vals = _eval_density(g, rule.x)
    e = rule.u[:, 0] - 1j * rule.u[:, 1]
    return complex(-np.sum(rule.w * e * vals) / math.pi)


def default_probes(region: Optional[RegionSpec] = None, n_r: int = 12, n_t: int = 64,
                   n_boundary: int = 360) -> np.ndarray:
    """Probe points: a polar grid on the closed disk plus region boundary points."""
    r = np.linspace(0.0, 1.0, n_r + 1)[1:]
    t = 2 * math.pi * np.arange(n_t) / n_t
    pts = (r[:, None] * np.exp(1j * t)[None, :]).ravel()
    if region is not None:
        b = region.boundary_points(n_boundary)
        if b.size:
            pts = np.concatenate([pts, _cplx(b)])
    return np.concatenate([[0.0], pts])


@dataclass
class ABResult:
    max_modulus: float
    argmax: complex
    verdict: Verdict


AB_BOUND = 1 / math.sqrt(2)


def ahlfors_beurling_check(region: RegionSpec, probes=None, tol: float = 1e-3,
                           n_dirs: int = 4096) -> ABResult:
    """Max of ``|C_F|`` over probes against the disk bound ``1/sqrt(2)``."""
    area = region.normalized_area()
    if abs(area - 0.5) > 1e-2:
        raise ValueError(f"region normalized area {area:.4f} not within 1e-2 of 1/2")
    probes = default_probes(region) if probes is None else np.atleast_1d(np.asarray(probes, dtype=complex))
    vals = np.array([abs(cauchy_transform(region, complex(p), n_dirs=n_dirs)) for p in probes])
    i = int(np.argmax(vals))
    mx = float(vals[i])
    witness = {"max_modulus": mx, "argmax": [float(probes[i].real), float(probes[i].imag)],
               "bound": AB_BOUND, "area": area, "probes": int(len(probes))}
    status = CERTIFIED if mx <= AB_BOUND + tol else REFUTED
    return ABResult(mx, complex(probes[i]), Verdict(status, witness, "Thm 3.6 proof (Ahlfors-Beurling)"))


def random_equal_area_regions(seed: int = 0) -> list:
    """Three seeded non-disk regions of normalized area 1/2 inside the disk."""
    rng = np.random.default_rng(seed)
    a = rng.uniform(0.9, 0.98)
    ell = Ellipse(a, 0.5 / a, angle=rng.uniform(0, math.pi))
    half = half_disk(rng.uniform(0, 2 * math.pi))
    rho = 2 ** -0.5
    off = rng.uniform(0.05, 0.25) * np.exp(1j * rng.uniform(0, 2 * math.pi))
    holed = Difference(Ball(1.0), Ball(rho, centre=[off.real, off.imag]))
    holed.name = f"disk minus ball(r={rho:.4f}, c={off:.3f})"
    return [ell, half, holed]


# --------------------------------------------------------------------------
# Newton potentials and the operator L


def fundamental_solution(s, n: int):
    s = np.asarray(s, dtype=float)
    if n == 2:
        return np.log(s) / (2 * math.pi)
    return s ** (2.0 - n) / ((2.0 - n) * _sphere_area(n))


def newton_potential(g, y, spec: BallSpec, n_dirs: int = 4096, n_s: int = 24,
                     seed: int = 0, grid=None) -> float:
    """``(E * g)(y) = int E(y - x) g(x) dx`` over the unit ball."""
    n = spec.n
    if np.iscomplexobj(y):
        y = np.array([np.real(y), np.imag(y)])
    y = np.asarray(y, dtype=float).reshape(n)
    if isinstance(g, Field):
        if grid is None:
            raise ValueError("sampled density needs its grid")
        pts = _rows(grid.points, n)
        d = np.linalg.norm(pts - y, axis=1)
        if np.min(d) < 1e-2 and np.linalg.norm(y) < 1 + 1e-2:
            raise SingularEvaluation("y within a grid cell of the nodes")
        w = grid.weights * (math.pi if n == 2 and isinstance(grid, DiskGrid) else 1.0)
        return float(np.real(np.dot(w, fundamental_solution(d, n) * g.values)))
    rule = ray_rule(y, n, [g], n_dirs=n_dirs, n_s=n_s, seed=seed)
    s = rule.s
    if n == 2:
        k = s * np.log(s) / (2 * math.pi)
    else:
        k = s / ((2.0 - n) * _sphere_area(n))
    return float(np.real(np.sum(rule.w * k * _eval_density(g, rule.x))))


def ball_potential_closed_form(radius: float, y, n: int) -> float:
    """``E * chi_{|x| < radius}`` at ``y`` (Newton's theorem)."""
    r = float(np.linalg.norm(y))
    R = radius
    if n == 2:
        if r <= R:
            return 0.5 * (R * R * math.log(R) - 0.5 * (R * R - r * r))
        return 0.5 * R * R * math.log(r)
    vol = BallSpec(n).volume * R ** n
    if r >= R:
        return vol * fundamental_solution(r, n)
    # interior: shell theorem, inner ball as point mass plus outer shells
    inner = BallSpec(n).volume * r ** n * fundamental_solution(r, n) if r > 0 else 0.0
    # int_r^R E(t) t^{n-1} area dt with E(t) = t^{2-n}/((2-n) area)
    shells = (R * R - r * r) / (2 * (2.0 - n))
    return inner + shells


def L_apply_potential(g, y, spec: BallSpec, n_dirs: int = 4096, n_s: int = 16,
                      seed: int = 0) -> float:
    """``L_y (E * g)(y)`` with ``L = sum x_j d/dx_j + (n-2)/2``.

    Equals ``-(1/(2 A_n)) int (|x|^2 - |y|^2) / |x - y|^n g(x) dx`` in
    every dimension n >= 2 (for n = 2 this uses ``int g = 0``). In polar
    coordinates around ``y`` the kernel times ``s^(n-1)`` is ``2 y.u + s``.
    """
    n = spec.n
    y = np.asarray(y, dtype=float).reshape(n)
    rule = ray_rule(y, n, [g], n_dirs=n_dirs, n_s=n_s, seed=seed)
    k = 2 * (rule.u @ y) + rule.s
    return float(np.real(-np.sum(rule.w * k * _eval_density(g, rule.x)) / (2 * _sphere_area(n))))


def lemma61_terms(g, y, spec: BallSpec, n_dirs: int = 4096, n_s: int = 16, seed: int = 0):
    """``(|L E*g (y)|, |L E*sigma (y)|)`` on a common node set.

    On ``|y| = rho`` the sigma integrand is nonnegative at every node, so
    the discrete comparison inherits the pointwise bound ``|g| <= 1``.
    """
    n = spec.n
    y = np.asarray(y, dtype=float).reshape(n)
    sig = sigma_density(spec)
    rule = ray_rule(y, n, [g, sig], n_dirs=n_dirs, n_s=n_s, seed=seed)
    k = (2 * (rule.u @ y) + rule.s) * rule.w / (2 * _sphere_area(n))
    lg = abs(np.sum(k * _eval_density(g, rule.x)))
    ls = abs(np.sum(k * sig(rule.x)))
    return float(lg), float(ls)


# --------------------------------------------------------------------------
# annihilators


def harmonic_test_functions(n: int, K: int) -> list:
    """Harmonic polynomials ``1, Re/Im (x_i + i x_j)^k`` (k <= K) and, for
    n >= 3, ``x_i x_j x_l`` for distinct indices."""
    funcs = [("1", lambda x: np.ones(x.shape[0]))]
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(1, K + 1):
                funcs.append((f"Re(x{i}+ix{j})^{k}", lambda x, i=i, j=j, k=k: ((x[:, i] + 1j * x[:, j]) ** k).real))
                funcs.append((f"Im(x{i}+ix{j})^{k}", lambda x, i=i, j=j, k=k: ((x[:, i] + 1j * x[:, j]) ** k).imag))
    if n >= 3:
        for i in range(n):
            for j in range(i + 1, n):
                for l in range(j + 1, n):
                    funcs.append((f"x{i}x{j}x{l}", lambda x, i=i, j=j, l=l: x[:, i] * x[:, j] * x[:, l]))
    return funcs


@dataclass
class AnnihilationCheck:
    ok: bool
    worst: str
    residual: float
    tolerance: float
    residuals: dict = field(default_factory=dict)


def check_ball_annihilation(g: Density, spec: BallSpec, K: int = 4, tol: float = 1e-3,
                            n_r: int = 24, n_dirs: int = 4096, seed: int = 0) -> AnnihilationCheck:
    """Moments of ``g`` against harmonic polynomials on the unit ball.

    n = 2 uses the polar product grid (split at ``g``'s jump radii); n >= 3
    uses the Monte-Carlo ball sampler and allows 3 standard errors.
    """
    breaks = tuple(b for b in getattr(g, "breaks", ()) if 0 < b < 1)
    res = {}
    worst, wval, ok = "", 0.0, True
    if spec.n == 2:
        grid = build_disk_grid(n_r, max(64, 8 * K), breaks)
        x = _rows(grid.points)
        gv = _eval_density(g, x)
        for name, h in harmonic_test_functions(2, K):
            v = abs(np.dot(grid.weights, gv * h(x))) * math.pi
            res[name] = float(v)
            if v > wval:
                worst, wval = name, v
        ok = wval <= tol
    else:
        smp = build_ball_sampler(spec, n_r, n_dirs, seed, breaks)
        gv = _eval_density(g, smp.points)
        for name, h in harmonic_test_functions(spec.n, K):
            est, err = smp.integrate_with_error(gv * h(smp.points))
            v = abs(est)
            res[name] = float(v)
            if v > tol + 3 * err:
                ok = False
            if v > wval:
                worst, wval = name, v
    return AnnihilationCheck(ok, worst, float(wval), tol, res)


def random_annihilator(spec: BallSpec, rng: np.random.Generator, degree: int = 3,
                       n_modes: int = 3, max_l: int = 4, sigma_mix: float = 0.0) -> RadialDensity:
    """Bounded (sup <= 1) function annihilating harmonic functions on the ball.

    ``g = a(r) + sum_l b_l(r) Y_l(x/|x|)`` where each angular factor is a
    zonal/axial harmonic of degree ``l`` and ``int_0^1 b_l(r) r^{l+n-1} dr = 0``
    (``l = 0`` for ``a``); optionally blended with sigma.
    """
    n = spec.n
    rs = np.linspace(0, 1, 2001)

    def radial_part(l):
        q = rng.standard_normal(degree + 1)
        # subtract the constant making int q r^{l+n-1} dr vanish
        mom = sum(q[k] / (k + l + n) for k in range(degree + 1))
        q[0] -= mom * (l + n)
        return np.polynomial.Polynomial(q)

    a = radial_part(0)
    modes = []
    for _ in range(n_modes):
        l = int(rng.integers(1, max_l + 1))
        axis = rng.standard_normal(n)
        axis /= np.linalg.norm(axis)
        modes.append((l, axis, float(rng.uniform(0, 2 * math.pi)), radial_part(l)))
    bound = np.max(np.abs(a(rs))) + sum(np.max(np.abs(b(rs))) for *_, b in modes)
    scale = (1 - sigma_mix) / bound if bound > 0 else 0.0

    def angular(l, axis, phase, xhat):
        if n == 2:
            th = np.arctan2(xhat[:, 1], xhat[:, 0])
            return np.cos(l * th + phase)
        return np.polynomial.legendre.Legendre.basis(l)(xhat @ axis)

    def g(x):
        r = radii(x)
        safe = np.where(r > 0, r, 1.0)
        xhat = x / safe[:, None]
        val = a(r) + sum(b(r) * angular(l, ax, ph, xhat) for l, ax, ph, b in modes)
        out = scale * val + sigma_mix * spec.sigma(x)
        return np.where(r < 1, out, 0.0)

    return RadialDensity(g, (spec.rho, 1.0) if sigma_mix else (1.0,), n, "random annihilator")


def cor74_compare(g: Density, y, spec: BallSpec, tol: float = 1e-6, n_dirs: int = 4096,
                  n_s: int = 24, seed: int = 0, annihilation_tol: float = 1e-3) -> Verdict:
    """Is ``|E*g(y)| <= |E*sigma(y)|`` for a bounded annihilator ``g``?"""
    y = np.asarray(y, dtype=float).reshape(spec.n)
    ref = "Cor 7.4"
    check = check_ball_annihilation(g, spec, tol=annihilation_tol, seed=seed)
    if not check.ok:
        return Verdict(INCONCLUSIVE, {"annihilation_worst": check.worst,
                                      "annihilation_residual": check.residual,
                                      "blocking_tolerance": check.tolerance}, ref)
    sig = sigma_density(spec)
    vg, vs = _potential_pair(g, sig, y, spec, n_dirs, n_s, seed)
    witness = {"|E*g|": abs(vg), "|E*sigma|": abs(vs), "margin": abs(vs) - abs(vg),
               "|y|": float(np.linalg.norm(y)), "valid_radius": bool(np.linalg.norm(y) <= spec.rho ** 2 + 1e-12)}
    if abs(vg) <= abs(vs) + tol:
        return Verdict(CERTIFIED, witness, ref)
    return Verdict(REFUTED, witness, ref)


def _potential_pair(g, sig, y, spec, n_dirs, n_s, seed):
    n = spec.n
    rule = ray_rule(y, n, [g, sig], n_dirs=n_dirs, n_s=n_s, seed=seed)
    s = rule.s
    k = s * np.log(s) / (2 * math.pi) if n == 2 else s / ((2.0 - n) * _sphere_area(n))
    vg = float(np.real(np.sum(rule.w * k * _eval_density(g, rule.x))))
    vs = float(np.sum(rule.w * k * sig(rule.x)))
    return vg, vs


# --------------------------------------------------------------------------
# modified Schwarz potential of the sphere


def schwarz_potential(x, spec: BallSpec):
    """Solution of ``Laplacian v = 1`` with ``v = grad v = 0`` on the unit sphere.

    Singular at the origin.
    """
    r = radii(np.atleast_2d(np.asarray(x, dtype=float))) if not np.iscomplexobj(x) else np.abs(x)
    r = np.atleast_1d(r)
    if np.any(r == 0):
        raise ValueError("the modified Schwarz potential is singular at 0")
    n = spec.n
    if n == 2:
        v = 0.25 * (r * r - 1) - 0.5 * np.log(r)
    else:
        v = r * r / (2 * n) + r ** (2.0 - n) / (n * (n - 2)) - 1 / (2 * (n - 2))
    return v if v.size > 1 else float(v[0])


# --------------------------------------------------------------------------
# peak sets


class PoleFamily:
    """Harmonic functions with poles ``z_j = (1 + d_j) e`` outside the ball.

    2D: ``u_j(z) = Re(zeta / (z - z_j)^2)`` with ``zeta = e^{i phase} e^2``;
    n >= 3: the second derivative along ``e`` of ``|x - z_j|^(2-n)``.
    Default distances ``d_j = 2^-j``. The default phase pi/2 makes ``u_j``
    vanish along the inward normal, which keeps the mass far from the
    boundary point small.
    """

    def __init__(self, dim: int = 2, direction=None, distances=None,
                 include_constant: bool = True, phase: float = math.pi / 2):
        self.phase = float(phase)
        self.dim = dim
        e = np.eye(dim)[0] if direction is None else np.asarray(direction, dtype=float)
        self.e = e / np.linalg.norm(e)
        self.distances = np.asarray(distances if distances is not None else 2.0 ** -np.arange(1, 21), dtype=float)
        if np.any(self.distances <= 0):
            raise ValueError("poles must lie strictly outside the closed ball")
        self.include_constant = include_constant

    def poles(self) -> np.ndarray:
        return (1 + self.distances)[:, None] * self.e[None, :]

    def angular(self, U):
        """Angular factor of ``u_j`` along rays ``z_j + s u`` (``u_j = ang / s^n``)."""
        if self.dim == 2:
            e2 = np.exp(1j * self.phase) * complex(self.e[0], self.e[1]) ** 2
            return np.real(e2 * (U[:, 0] - 1j * U[:, 1]) ** 2)
        c = U @ self.e
        n = self.dim
        return (n - 2) * (n * c * c - 1)

    def evaluate(self, j: int, x) -> np.ndarray:
        x = _rows(x, self.dim)
        d = x - self.poles()[j]
        s = np.linalg.norm(d, axis=1)
        return self.angular(d / s[:, None]) / s ** self.dim


def _pole_integrals(F: RegionSpec, fam: PoleFamily, pole, n_dirs, seed):
    """(int_F |u|, int_F u, int_{B-F} |u|) for one pole, exact along rays."""
    n = fam.dim
    rule = ray_rule(pole, n, [F], n_dirs=n_dirs, n_s=1, seed=seed, far=1.0)
    seg = rule.segments
    ok = seg[:, 0] > 0
    logs = np.where(ok, np.log(np.where(ok, seg[:, 1], 1) / np.where(ok, seg[:, 0], 1)), 0.0)
    ang = fam.angular(rule.u)
    dw = rule.dir_weight[rule.seg_dir]
    inF = F.contains(rule.midpoints)
    f_abs = float(np.sum(dw * np.abs(ang) * logs * inF))
    f_int = float(np.sum(dw * ang * logs * inF))
    out_abs = float(np.sum(dw * np.abs(ang) * logs * ~inF))
    return f_abs, f_int, out_abs


@dataclass
class PeakBounds:
    A_lower: float
    B_lower: float
    A_terms: list
    B_terms: list


def peak_lower_bounds(F: RegionSpec, fam: PoleFamily, n_dirs: int = 8192, seed: int = 0) -> PeakBounds:
    """Certified lower bounds for ``A(F)`` and ``B(F)`` over the unit ball."""
    A, B = [], []
    for pole in fam.poles():
        fa, fi, oa = _pole_integrals(F, fam, pole, n_dirs, seed)
        A.append(fa / oa if oa > 0 else math.inf)
        B.append(abs(fi) / oa if oa > 0 else math.inf)
    if fam.include_constant:
        spec = BallSpec(fam.dim)
        mF = F.measure(n_dirs)
        rest = spec.volume - mF
        if mF > 0:
            A.append(mF / rest if rest > 0 else math.inf)
            B.append(mF / rest if rest > 0 else math.inf)
        else:
            A.append(0.0)
            B.append(0.0)
    if not A:
        return PeakBounds(0.0, 0.0, [], [])
    return PeakBounds(float(max(A)), float(max(B)), A, B)


@dataclass
class ThinnessResult:
    integral: float
    levels: list
    partial_sums: list
    converged: bool
    verdict: str
    tail_depth: Optional[float] = None
    tail_integral: Optional[float] = None


NOT_WEAK_PEAK = "not-weak-peak"
INAPPLICABLE = "criterion-inapplicable"


def thinness_check(F: RegionSpec, spec: BallSpec, levels: Sequence[int] = (10, 15, 20, 25),
                   n_gl: int = 24, rel_tol: float = 0.05) -> ThinnessResult:
    """Estimate ``int_F dist(x, boundary)^(-n) dx`` on dyadic boundary shells.

    Shell ``k`` covers ``2^-(k+1) <= 1 - |x| <= 2^-k``. The partial sums at
    the requested depths must settle (relative change below ``rel_tol``)
    for the thinness criterion to apply.
    """
    n = spec.n
    shells = []
    for k in range(max(levels)):
        d0, d1 = 2.0 ** -(k + 1), 2.0 ** -k
        dd, wd = gauss_legendre(n_gl, d0, d1)
        val = 0.0
        for d, wgt in zip(dd, wd):
            r = 1 - d
            val += wgt * F.angular_measure(r) * r ** (n - 1) / d ** n
        shells.append(val)
    cum = np.cumsum(shells)
    partial = [float(cum[L - 1]) for L in levels]
    changes = [abs(b - a) / abs(b) if b else 0.0 for a, b in zip(partial[:-1], partial[1:])]
    converged = all(c < rel_tol for c in changes) and shells[-1] <= shells[len(shells) // 2]
    if not converged:
        return ThinnessResult(partial[-1], list(levels), partial, False, INAPPLICABLE)
    total = partial[-1]
    half_vol = spec.volume / 2
    depth = None
    tail = None
    for k in range(len(shells)):
        t = float(total - (cum[k - 1] if k else 0.0))
        if t < half_vol:
            depth, tail = 2.0 ** -k, t
            break
    return ThinnessResult(total, list(levels), partial, True, NOT_WEAK_PEAK, depth, tail)


def extension_growth(F: RegionSpec, degrees: Sequence[int], n_r: int = 48, n_t: int = 192) -> list:
    """Minimal weighted-L2 extensions of ``1_F`` to annihilators of harmonic
    polynomials of degree ``<= K``; returns ``(K, L2 norm, sup norm)``.

    The L2 norm is non-decreasing in K (nested constraints).
    """
    grid = build_disk_grid(n_r, n_t)
    x = _rows(grid.points)
    inF = F.contains(x)
    w = grid.weights
    out = []
    for K in degrees:
        H = np.stack([h(x) for _, h in harmonic_test_functions(2, K)], axis=0)
        A = H[:, ~inF] * w[~inF]
        b = -(H[:, inF] @ w[inF])
        Wi = 1.0 / w[~inF]
        M = (A * Wi) @ A.T
        lam = np.linalg.lstsq(M, b, rcond=1e-13)[0]
        g = Wi * (A.T @ lam)
        l2 = math.sqrt(float(np.dot(w[~inF], g * g)) / max(float(w[~inF].sum()), 1e-300))
        out.append((K, l2, float(np.max(np.abs(g)))))
    return out
