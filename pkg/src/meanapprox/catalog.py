"""Named test functions, regions and sample-file ingestion.

Function references are strings ``kind:params``::

    monomial:n,m        z^n conj(z)^m
    conj_shift:a        conj(z) + a
    chi_disk:r0         indicator of |z| < r0
    radial:id           a(|z|) from RADIAL
    prop53:a            ((z - a) / (conj(z) - a))^2
    smooth:name         entry of SMOOTH
    newton:y1,y2[,y3]@n Newton kernel with pole y in dimension n
    samples:path.csv    sampled data (see read_samples)
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .grid import BallSpec, DiskGrid, Field, build_disk_grid, free_point_grid, gauss_legendre, split_gauss
from . import potentials as pot

RHO2 = 2 ** -0.5

RADIAL = {
    "r": (lambda r: r, ()),
    "r2": (lambda r: r * r, ()),
    "abs_shift": (lambda r: np.abs(r - 0.5), ()),
    "cos": (lambda r: np.cos(math.pi * r), ()),
    "step": (lambda r: (r < RHO2).astype(float), (RHO2,)),
    "two_valued": (lambda r: np.where(r < RHO2, 1.0 + 0j, 1j), (RHO2,)),
}

SMOOTH = {
    "zzbar": lambda z: z * np.conj(z),
    "expbar": lambda z: z * np.exp(np.conj(z)),
    "gauss": lambda z: np.exp(-np.abs(z) ** 2),
    "rational": lambda z: 1.0 / (2.0 - np.conj(z)),
    "poly": lambda z: 1 + z - 0.5 * np.conj(z) ** 2 + z * z * np.conj(z),
    "cosx": lambda z: np.cos(3 * z.real),
    "sinxy": lambda z: np.sin(z.real) * np.cos(2 * z.imag),
    "mixed": lambda z: z ** 3 * np.conj(z) + 1j * np.conj(z) ** 2,
    "abs": lambda z: np.abs(z) + 0j,
    "logbump": lambda z: np.log(2.0 + z * np.conj(z)) + 0j,
}


@dataclass
class FunctionRef:
    """A resolved catalog entry.

    ``evaluator`` acts on complex points (dim 2) or point rows (dim >= 3
    kernels). ``splits`` are radii where the function jumps or changes sign,
    used to align grids.
    """

    text: str
    kind: str
    params: tuple
    dim: int = 2
    evaluator: Optional[Callable] = field(default=None, repr=False)
    splits: tuple = ()
    samples: Optional[Field] = field(default=None, repr=False)
    grid: Optional[DiskGrid] = field(default=None, repr=False)

    def field_on(self, grid: DiskGrid) -> Field:
        if self.samples is not None:
            if grid is not self.grid:
                raise ValueError("sampled data live on their own grid")
            return self.samples
        if self.dim != 2:
            raise ValueError(f"{self.text} is not a planar function")
        return Field.sample(self.evaluator, grid, self.text)


def _floats(text):
    return tuple(float(t) for t in text.split(",") if t.strip())


def parse_function(text: str) -> FunctionRef:
    kind, _, arg = text.partition(":")
    if kind == "monomial":
        n, m = (int(t) for t in arg.split(","))
        return FunctionRef(text, kind, (n, m), evaluator=lambda z: z ** n * np.conj(z) ** m)
    if kind == "conj_shift":
        a = complex(arg)
        return FunctionRef(text, kind, (a,), evaluator=lambda z: np.conj(z) + a)
    if kind == "chi_disk":
        r0 = float(arg)
        if not 0 < r0 <= 1:
            raise ValueError("chi_disk radius must lie in (0, 1]")
        return FunctionRef(text, kind, (r0,), evaluator=lambda z: (np.abs(z) < r0).astype(complex),
                           splits=(r0,) if r0 < 1 else ())
    if kind == "radial":
        if arg not in RADIAL:
            raise ValueError(f"unknown radial id {arg!r}; choose from {sorted(RADIAL)}")
        a, splits = RADIAL[arg]
        return FunctionRef(text, kind, (arg,), evaluator=lambda z: np.asarray(a(np.abs(z)), dtype=complex),
                           splits=splits)
    if kind == "prop53":
        a = float(arg)
        return FunctionRef(text, kind, (a,), evaluator=lambda z: ((z - a) / (np.conj(z) - a)) ** 2)
    if kind == "smooth":
        if arg not in SMOOTH:
            raise ValueError(f"unknown smooth function {arg!r}; choose from {sorted(SMOOTH)}")
        return FunctionRef(text, kind, (arg,), evaluator=SMOOTH[arg])
    if kind == "newton":
        ys, _, n = arg.partition("@")
        y = _floats(ys)
        n = int(n) if n else len(y)
        if len(y) != n or n < 2:
            raise ValueError("newton pole needs n coordinates, n >= 2")
        from .oracles import newton_kernel
        return FunctionRef(text, kind, (y, n), dim=n, evaluator=newton_kernel(y, BallSpec(n)))
    if kind == "samples":
        fld, grid = read_samples(arg)
        return FunctionRef(text, kind, (arg,), samples=fld, grid=grid)
    raise ValueError(f"unknown function kind {kind!r}")


# --------------------------------------------------------------------------
# sample files


def write_samples(path, grid: DiskGrid, values) -> None:
    """CSV with ``r,theta,re,im`` (product grid) or ``x,y,re,im`` (free points)."""
    vals = values.values if isinstance(values, Field) else np.asarray(values, dtype=complex)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if grid.is_product:
            w.writerow(["r", "theta", "re", "im"])
            rr = np.repeat(grid.r, grid.n_theta)
            tt = np.tile(grid.theta, grid.r.size)
            for a, b, v in zip(rr, tt, vals):
                w.writerow([repr(float(a)), repr(float(b)), repr(float(v.real)), repr(float(v.imag))])
        else:
            w.writerow(["x", "y", "re", "im"])
            for z, v in zip(grid.points, vals):
                w.writerow([repr(float(z.real)), repr(float(z.imag)), repr(float(v.real)), repr(float(v.imag))])


def read_samples(path):
    """Inverse of :func:`write_samples`; returns ``(Field, grid)``.

    ``r,theta`` files must lie on a standard product grid (recognized from
    the node values); ``x,y`` files become equal-weight free-point grids.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError("empty samples file")
    head = [h.strip() for h in rows[0]]
    data = np.array([[float(t) for t in row] for row in rows[1:] if row], dtype=float)
    if data.ndim != 2 or data.shape[1] != 4:
        raise ValueError("samples file needs four columns")
    vals = data[:, 2] + 1j * data[:, 3]
    if head == ["x", "y", "re", "im"]:
        grid = free_point_grid(data[:, 0] + 1j * data[:, 1])
        return Field(vals, tag=f"samples:{path}"), grid
    if head != ["r", "theta", "re", "im"]:
        raise ValueError(f"unrecognized header {head}")
    grid = _match_product_grid(data[:, 0], data[:, 1])
    return Field(vals, tag=f"samples:{path}"), grid


def _match_product_grid(r, theta):
    rs = np.unique(r)
    n_theta = np.unique(theta).size
    if rs.size * n_theta != r.size:
        raise ValueError("r,theta samples are not a full product grid")
    for pieces in range(1, 5):
        n_r = rs.size // pieces
        if rs.size % pieces or n_r < 2:
            continue
        x, _ = gauss_legendre(n_r, 0.0, 1.0)
        # each Gauss block is an affine image of the reference nodes
        ends = []
        for k in range(pieces - 1):
            blk = rs[k * n_r:(k + 1) * n_r]
            scale = (blk[-1] - blk[0]) / (x[-1] - x[0])
            ends.append(blk[0] - scale * x[0] + scale)
        # the fit can miss the written split radius by a few ulps
        near = [[e + k * np.spacing(e) for k in range(-3, 4)] for e in ends]
        for splits in itertools.product(*near):
            if list(splits) != sorted(splits) or not all(0 < t < 1 for t in splits):
                continue
            if np.array_equal(split_gauss(n_r, splits)[0], rs):
                cand = build_disk_grid(n_r, n_theta, splits)
                if np.allclose(np.repeat(cand.r, n_theta), r, rtol=0, atol=1e-12) and \
                        np.allclose(np.tile(cand.theta, cand.r.size), theta, rtol=0, atol=1e-12):
                    return cand
    raise ValueError("r,theta samples do not match a standard product grid")


# --------------------------------------------------------------------------
# regions and densities


def parse_region(text: str) -> pot.RegionSpec:
    """``D0``, ``disk:r``, ``annulus:r_in``, ``half[:angle]``, ``ellipse:a,b[,angle]``,
    ``cusp3`` / ``cusp:power``, ``cap:eps``, ``random:k`` (k-th seeded equal-area
    region); an ``@n`` suffix selects the dimension where meaningful."""
    body, _, dim = text.partition("@")
    n = int(dim) if dim else 2
    kind, _, arg = body.partition(":")
    args = _floats(arg) if arg else ()
    if kind == "D0":
        return pot.Ball(BallSpec(n).rho, dim=n)
    if kind == "disk":
        return pot.Ball(args[0], dim=n)
    if kind == "annulus":
        return pot.annulus(args[0], 1.0, dim=n)
    if kind == "half":
        return pot.half_disk(args[0] if args else 0.0)
    if kind == "ellipse":
        return pot.Ellipse(args[0], args[1], args[2] if len(args) > 2 else 0.0)
    if kind.startswith("cusp"):
        power = args[0] if args else float(kind[4:] or 3)
        return pot.Cusp(power)
    if kind == "cap":
        return pot.Cap(args[0], dim=n)
    if kind == "random":
        k = int(args[0]) if args else 0
        return pot.random_equal_area_regions(0)[k]
    if kind == "empty":
        return pot.Ball(0.0, dim=n)
    raise ValueError(f"unknown region {text!r}")


def parse_density(text: str, spec: BallSpec, seed: int = 0) -> pot.Density:
    """``sigma``, ``-sigma``, ``chi_ball[:r]``, ``zero``, ``bands`` (balanced
    radial sign pattern), ``random[:k]`` (k-th seeded random annihilator)."""
    kind, _, arg = text.partition(":")
    if kind == "sigma":
        return pot.sigma_density(spec)
    if kind == "-sigma":
        return pot.RadialDensity(lambda x: -spec.sigma(x), (spec.rho, 1.0), spec.n, "-sigma")
    if kind == "chi_ball":
        return pot.ball_indicator(spec, float(arg) if arg else 1.0)
    if kind == "zero":
        return pot.RadialDensity(lambda x: np.zeros(x.shape[0]), (), spec.n, "zero")
    if kind == "bands":
        return balanced_bands(spec)
    if kind == "random":
        rng = np.random.default_rng(seed)
        g = None
        for _ in range(int(arg or 0) + 1):
            g = pot.random_annihilator(spec, rng)
        return g
    raise ValueError(f"unknown density {text!r}")


def balanced_bands(spec: BallSpec) -> pot.RadialDensity:
    """``+1, -1, -1, +1`` on four shells of equal volume: a radial sign
    pattern with zero mean, hence a harmonic annihilator."""
    edges = [(k / 4) ** (1 / spec.n) for k in range(5)]
    return pot.band_density(spec, edges, [1.0, -1.0, -1.0, 1.0])


def parse_weight(text: str) -> Callable:
    """Positive reweighting functions ``rho`` for residual reweighting."""
    named = {
        "bump": lambda z: 1.0 + np.abs(z) ** 2,
        "linear": lambda z: 0.5 + np.abs(z),
        "tilt": lambda z: 0.3 + np.real(z) ** 2,
    }
    if text in named:
        return named[text]
    c = float(text.partition(":")[2] if text.startswith("const:") else text)
    if not c > 0:
        raise ValueError("weight must be positive")
    return lambda z: np.full(np.shape(z), c)
