"""Finite-dimensional best L^p(dA) approximation on a disk grid.

The discrete problem is

    minimize_c  sum_i w_i |omega_i - (Phi c)_i|^p

over complex coefficients ``c`` (treated as paired real unknowns). For
``p <= 2`` it is solved by iteratively reweighted least squares on the
smoothed objective ``sum w (|r|^2 + eps^2)^(p/2)`` with a geometric
continuation in ``eps``; for ``p > 2`` damped Newton steps are used on the
same smoothed objective.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .basis import BasisSpec, design_matrix, eval_combo, project_l2, boundary_norm
from .grid import DiskGrid, Field

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverOptions:
    p: float = 1.0
    eps0: float = 1e-1
    gamma: float = 0.3
    eps_min: float = 1e-7
    max_outer: int = 40
    max_inner: int = 500
    step_tol: float = 1e-12
    grad_tol: float = 1e-7
    flat_probes: int = 8
    flat_delta: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if not (self.eps0 > self.eps_min > 0):
            raise ValueError("need eps0 > eps_min > 0")
        if not (0 < self.gamma < 1):
            raise ValueError("gamma must lie in (0, 1)")

    @property
    def q(self) -> float:
        return math.inf if self.p == 1 else self.p / (self.p - 1)

    def schedule(self) -> list:
        eps, out = self.eps0, []
        while eps > self.eps_min and len(out) < self.max_outer - 1:
            out.append(eps)
            eps *= self.gamma
        out.append(self.eps_min)
        return out


@dataclass
class ApproxSolution:
    coeffs: np.ndarray
    spec: BasisSpec
    p: float
    lam: float
    residual: Field
    iterations: int
    eps: float
    converged: bool
    grad_norm: float
    flat: bool = False
    stage_objectives: list = field(default_factory=list)


def _objective(r, w, p):
    return float(np.dot(w, np.abs(r) ** p))


def _lp_norm(r, w, p):
    return _objective(r, w, p) ** (1.0 / p)


def _smoothed(r, w, p, eps):
    return float(np.dot(w, (np.abs(r) ** 2 + eps ** 2) ** (p / 2)))


def _smoothed_grad(phi, r, w, p, eps):
    # d/dc-bar of sum w (|r|^2+eps^2)^(p/2), as a complex vector; its norm
    # equals half the real-parameter gradient norm.
    u = w * (p / 2) * (np.abs(r) ** 2 + eps ** 2) ** (p / 2 - 1)
    return -(phi.conj().T @ (u * r))


def _wls(phi, omega, u):
    G = (phi.conj().T * u) @ phi
    rhs = (phi.conj().T * u) @ omega
    return np.linalg.solve(G, rhs)


def _real_jac(phi):
    # dr/dx for x = [Re c, Im c]; r = omega - phi c
    J = -np.concatenate([phi, 1j * phi], axis=1)
    return J.real, J.imag


def _newton(phi, omega, w, p, eps, c, max_iter, step_tol):
    d = phi.shape[1]
    Jr, Ji = _real_jac(phi)
    x = np.concatenate([c.real, c.imag])
    F = lambda x: _smoothed(omega - phi @ (x[:d] + 1j * x[d:]), w, p, eps)
    it = 0
    for it in range(1, max_iter + 1):
        r = omega - phi @ (x[:d] + 1j * x[d:])
        t = np.abs(r) ** 2 + eps ** 2
        d1 = w * p * t ** (p / 2 - 1)            # 2 * psi'(t) * w
        d2 = w * p * (p - 2) * t ** (p / 2 - 2)  # 4 * psi''(t) * w
        a = r.real[:, None] * Jr + r.imag[:, None] * Ji
        g = a.T @ d1
        H = (Jr.T * d1) @ Jr + (Ji.T * d1) @ Ji + (a.T * d2) @ a
        step = np.linalg.solve(H, -g)
        f0, s = F(x), 1.0
        while F(x + s * step) > f0 and s > 1e-12:
            s *= 0.5
        x = x + s * step
        if np.linalg.norm(s * step) <= step_tol * max(1.0, np.linalg.norm(x)):
            break
    return x[:d] + 1j * x[d:], it


def solve_best(omega, spec: BasisSpec, opts: SolverOptions, grid: DiskGrid) -> ApproxSolution:
    """Best discrete L^p approximation of ``omega`` from span(spec).

    Never returns silently on failure: ``converged`` is False when the
    final stationarity residual exceeds ``opts.grad_tol``.
    """
    values = omega.values if isinstance(omega, Field) else np.asarray(omega, dtype=complex)
    if values.size != grid.size:
        raise ValueError("field not aligned with grid")
    p, w = opts.p, grid.weights
    phi = design_matrix(spec, grid.points)
    c = project_l2(values, spec, grid)
    scale = max(1.0, float(np.max(np.abs(values), initial=0.0)))
    total_iters, stages = 0, []

    if p == 2:
        r = values - phi @ c
        grad = float(np.linalg.norm(_smoothed_grad(phi, r, w, 2.0, 0.0)))
        return _finish(values, spec, c, phi, w, p, 0.0, 1, grad <= opts.grad_tol * scale,
                       grad, [_objective(r, w, p)], opts, grid)

    eps = opts.eps0
    for eps in opts.schedule():
        e = eps * scale
        if p <= 2:
            for _ in range(opts.max_inner):
                r = values - phi @ c
                u = w * (np.abs(r) ** 2 + e ** 2) ** (p / 2 - 1)
                c_new = _wls(phi, values, u)
                total_iters += 1
                moved = np.linalg.norm(c_new - c)
                c = c_new
                if moved <= opts.step_tol * max(1.0, np.linalg.norm(c)):
                    break
        else:
            c, its = _newton(phi, values, w, p, e, c, opts.max_inner, opts.step_tol)
            total_iters += its
        stages.append(_objective(values - phi @ c, w, p))
    e = eps * scale
    r = values - phi @ c
    grad = float(np.linalg.norm(_smoothed_grad(phi, r, w, p, e)))
    converged = grad <= opts.grad_tol * scale
    if not converged:
        log.warning("solve_best: stationarity residual %.3e above tolerance", grad)
    return _finish(values, spec, c, phi, w, p, e, total_iters, converged, grad, stages, opts, grid)


def _finish(values, spec, c, phi, w, p, eps, iters, converged, grad, stages, opts, grid):
    r = values - phi @ c
    sol = ApproxSolution(
        coeffs=c, spec=spec, p=p, lam=_lp_norm(r, w, p),
        residual=Field(r, tag="residual"), iterations=iters, eps=eps,
        converged=bool(converged), grad_norm=grad, stage_objectives=stages,
    )
    if p == 1 and opts.flat_probes > 0:
        report = flatness_probe(values, sol, spec, grid, opts.flat_probes,
                                delta=opts.flat_delta, seed=opts.seed)
        sol.flat = report.flat
    return sol


def f_star_values(sol: ApproxSolution, grid: DiskGrid) -> np.ndarray:
    return design_matrix(sol.spec, grid.points) @ sol.coeffs


def residual_reweight(omega, f_star, rho) -> Field:
    """``rho*omega + (1-rho)*f_star``; keeps the sign of ``omega - f_star``."""
    om = omega.values if isinstance(omega, Field) else np.asarray(omega, dtype=complex)
    fs = f_star.values if isinstance(f_star, Field) else np.asarray(f_star, dtype=complex)
    rh = rho.values if isinstance(rho, Field) else np.asarray(rho)
    if np.iscomplexobj(rh):
        if np.any(np.abs(rh.imag) > 0):
            raise ValueError("weight rho must be real")
        rh = rh.real
    if np.any(~(rh > 0)):
        raise ValueError("weight rho must be strictly positive")
    return Field(rh * om + (1.0 - rh) * fs, tag="reweighted")


@dataclass
class FlatnessReport:
    flat: bool
    max_deviation: float
    min_deviation: float
    threshold: float
    deviations: list


def flatness_probe(omega, sol: ApproxSolution, spec: BasisSpec, grid: DiskGrid,
                   n_dirs: int = 8, delta: float = 0.05, seed: int = 0,
                   rel_tol: float = 1e-6) -> FlatnessReport:
    """Probe the L1 objective around ``sol`` along random unit directions.

    Coordinate directions (real and imaginary parts of each coefficient)
    are always included. A direction is flat when moving ``+-delta`` along
    it changes the distance by at most ``10 * delta * rel_tol`` relative to
    the distance; the solution is flagged flat if any probed direction is.
    """
    values = omega.values if isinstance(omega, Field) else np.asarray(omega, dtype=complex)
    phi = design_matrix(spec, grid.points)
    w = grid.weights
    base = values - phi @ sol.coeffs
    lam = _lp_norm(base, w, 1.0)
    d = spec.dim
    dirs = [np.eye(d, dtype=complex)[k] for k in range(d)] + [1j * np.eye(d)[k] for k in range(d)]
    rng = np.random.default_rng(seed)
    for _ in range(n_dirs):
        v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        dirs.append(v / np.linalg.norm(v))
    threshold = 10 * delta * rel_tol
    devs = []
    for v in dirs:
        step = phi @ v
        dev = max(abs(_lp_norm(base - s * delta * step, w, 1.0) - lam) for s in (1, -1))
        devs.append(dev / lam if lam > 0 else dev)
    devs = np.array(devs)
    return FlatnessReport(bool(np.min(devs) <= threshold), float(devs.max()),
                          float(devs.min()), threshold, devs.tolist())


def objective_at(omega, coeffs, spec: BasisSpec, grid: DiskGrid, p: float) -> float:
    values = omega.values if isinstance(omega, Field) else np.asarray(omega, dtype=complex)
    r = values - design_matrix(spec, grid.points) @ np.asarray(coeffs, dtype=complex)
    return _lp_norm(r, grid.weights, p)


def modulus_Dt(c, spec: BasisSpec, t: float, p: float, grid: DiskGrid) -> float:
    """``|| f(e^{it} z) + f(e^{-it} z) - 2 f(z) ||_p`` on the grid.

    ``f`` is known through its coefficients, so rotated samples are exact.
    """
    z = grid.points
    rot = lambda a: design_matrix(spec, a * z) @ np.asarray(c, dtype=complex)
    v = rot(np.exp(1j * t)) + rot(np.exp(-1j * t)) - 2 * rot(1.0)
    return _lp_norm(v, grid.weights, p)


def loglog_slope(ts, values) -> float:
    return float(np.polyfit(np.log(ts), np.log(values), 1)[0])


def boundary_norm_sweep(omega, p: float, degrees, grid: DiskGrid,
                        opts: Optional[SolverOptions] = None, n_theta: int = 1024) -> list:
    """Boundary H^p norms of the best analytic approximants of each degree."""
    opts = opts or SolverOptions(p=p)
    if opts.p != p:
        opts = SolverOptions(**{**opts.__dict__, "p": p})
    out = []
    for m in degrees:
        spec = BasisSpec("analytic", m)
        sol = solve_best(omega, spec, opts, grid)
        if not sol.converged:
            raise RuntimeError(f"solver did not converge at degree {m}")
        out.append(boundary_norm(sol.coeffs, spec, p, n_theta))
    return out
