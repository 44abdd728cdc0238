"""Approximating subspaces on the disk and the discrete L2 projection.

Basis elements are monomials ``z**a * conj(z)**b``:

* ``analytic``   -- 1, z, ..., z**m
* ``harmonic2d`` -- 1, z, ..., z**m, conj(z), ..., conj(z)**m
* ``constants``  -- 1
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import DiskGrid, Field

KINDS = ("analytic", "harmonic2d", "constants")


@dataclass(frozen=True)
class BasisSpec:
    kind: str
    degree: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown basis kind {self.kind!r}")
        if self.degree < 0:
            raise ValueError("degree must be >= 0")
        if self.kind == "constants" and self.degree != 0:
            object.__setattr__(self, "degree", 0)

    @property
    def exponents(self) -> list:
        """``(a, b)`` pairs for each element ``z**a conj(z)**b``."""
        m = self.degree
        if self.kind == "constants":
            return [(0, 0)]
        ex = [(k, 0) for k in range(m + 1)]
        if self.kind == "harmonic2d":
            ex += [(0, k) for k in range(1, m + 1)]
        return ex

    @property
    def dim(self) -> int:
        return len(self.exponents)

    def index(self, a: int, b: int) -> int:
        return self.exponents.index((a, b))

    def __str__(self):
        return "constants" if self.kind == "constants" else f"{self.kind}:{self.degree}"

    @classmethod
    def parse(cls, text: str) -> "BasisSpec":
        kind, _, deg = text.partition(":")
        return cls(kind, int(deg) if deg else 0)


def design_matrix(spec: BasisSpec, points) -> np.ndarray:
    z = np.asarray(points, dtype=complex).ravel()
    zc = np.conj(z)
    cols = [z ** a * zc ** b for a, b in spec.exponents]
    return np.stack(cols, axis=1)


def _check(c, spec):
    c = np.asarray(c, dtype=complex).ravel()
    if c.size != spec.dim:
        raise ValueError(f"{c.size} coefficients for a basis of dimension {spec.dim}")
    return c


def eval_combo(c, spec: BasisSpec, points) -> Field:
    """Values of ``sum_k c_k phi_k`` at ``points`` (complex array)."""
    c = _check(c, spec)
    values = design_matrix(spec, points) @ c
    return Field(values, tag=f"combo[{spec}]")


def gram(spec: BasisSpec, grid: DiskGrid) -> np.ndarray:
    phi = design_matrix(spec, grid.points)
    return (phi.conj().T * grid.weights) @ phi


def project_l2(omega, spec: BasisSpec, grid: DiskGrid, cond_max: float = 1e12) -> np.ndarray:
    """Coefficients of the discrete L2(dA) projection of ``omega``.

    Raises
    ------
    np.linalg.LinAlgError
        If the Gram matrix is numerically singular (grid too coarse for
        the requested degree).
    """
    values = omega.values if isinstance(omega, Field) else np.asarray(omega, dtype=complex)
    if values.size != grid.size:
        raise ValueError("field not aligned with grid")
    phi = design_matrix(spec, grid.points)
    G = (phi.conj().T * grid.weights) @ phi
    rhs = (phi.conj().T * grid.weights) @ values
    diag = np.real(np.diag(G))
    if np.min(diag) <= 0 or np.max(diag) / np.min(diag) > cond_max:
        raise np.linalg.LinAlgError("Gram matrix singular: grid too coarse for basis")
    off = G - np.diag(np.diag(G))
    if np.max(np.abs(off), initial=0.0) <= 1e-13 * np.max(diag):
        return rhs / np.diag(G)
    if np.linalg.cond(G) > cond_max:
        raise np.linalg.LinAlgError("Gram matrix singular: grid too coarse for basis")
    return np.linalg.solve(G, rhs)


def boundary_norm(c, spec: BasisSpec, p: float, n_theta: int = 1024) -> float:
    """``(int_T |f|^p dtheta/2pi)^(1/p)`` by the trapezoid rule."""
    if p < 1:
        raise ValueError("p must be >= 1")
    c = _check(c, spec)
    z = np.exp(2j * math.pi * np.arange(n_theta) / n_theta)
    f = design_matrix(spec, z) @ c
    return float(np.mean(np.abs(f) ** p) ** (1.0 / p))
