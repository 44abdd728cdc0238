"""Acceptance suite: one check per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` or ``python tests/test_acceptance.py``.
"""

import contextlib
import hashlib
import io
import math
import sys

import numpy as np
import pytest

from meanapprox import catalog
from meanapprox import potentials as P
from meanapprox.basis import BasisSpec, project_l2
from meanapprox.certificates import badly_approximable_test, check_annihilation, dbar, prop53_witness
from meanapprox.cli import main as cli_main
from meanapprox.grid import BallSpec, Field, build_ball_sampler, build_disk_grid, build_radial_grid
from meanapprox.oracles import (MonomialProblem, aghr_verify, monomial_best, monomial_constant,
                                newton_sign_certificate, radial_best_constant)
from meanapprox.solver import (SolverOptions, boundary_norm_sweep, loglog_slope, modulus_Dt,
                               objective_at, residual_reweight, solve_best)

RHO2 = 2 ** -0.5


def _solve(func, grid, spec, p=1.0):
    om = Field.sample(func, grid)
    return om, solve_best(om, spec, SolverOptions(p=p), grid)


def c01_monomial_oracle():
    g = build_disk_grid(128, 256)
    _, sol = _solve(lambda z: z * np.conj(z), g, BasisSpec("analytic", 4))
    ok = abs(sol.coeffs[0] - 0.5) < 1e-2 and abs(sol.lam - 0.25) < 1e-2
    return ok, f"c0={sol.coeffs[0].real:.6f} lam={sol.lam:.6f}"


def c02_m_greater_n():
    g = build_disk_grid(128, 256)
    om, sol = _solve(lambda z: np.conj(z) ** 2, g, BasisSpec("analytic", 4))
    norm = float(np.dot(g.weights, np.abs(om.values)))
    cmax = float(np.max(np.abs(sol.coeffs)))
    ok = cmax < 1e-2 and abs(sol.lam - norm) < 1e-2 and abs(norm - 0.5) < 1e-6
    return ok, f"max|c|={cmax:.2e} lam={sol.lam:.6f} |zbar^2|_1={norm:.6f}"


def c03_p2_crosscheck():
    g = build_disk_grid(64, 128)
    spec = BasisSpec("harmonic2d", 3)
    worst, ref_gap, conv = 0.0, 0.0, True
    sw = np.sqrt(g.weights)[:, None]
    phi = np.stack([g.points ** a * np.conj(g.points) ** b for a, b in spec.exponents], axis=1)
    for name, f in catalog.SMOOTH.items():
        om, sol = _solve(f, g, spec, p=2.0)
        conv &= sol.converged
        worst = max(worst, float(np.max(np.abs(sol.coeffs - project_l2(om, spec, g)))))
        # independent reference: weighted least squares through an SVD solver
        ref = np.linalg.lstsq(sw * phi, sw[:, 0] * om.values, rcond=None)[0]
        ref_gap = max(ref_gap, float(np.max(np.abs(sol.coeffs - ref))))
    proj = project_l2(Field.sample(lambda z: z * z * np.conj(z), g), BasisSpec("analytic", 3), g)[1]
    c = monomial_constant(2, 1, 2)
    ok = conv and worst < 1e-6 and ref_gap < 1e-6 and abs(c - 2 / 3) < 1e-8 and abs(c - proj) < 1e-8
    return ok, f"max gap to projection={worst:.1e}, to lstsq={ref_gap:.1e}; c(2,1,2)={c:.12f} projection={proj.real:.12f}"


def c04_radial_reduction():
    rg = build_radial_grid(512, 2)
    c = radial_best_constant(rg.nodes, rg).constant
    g = build_disk_grid(128, 256)
    _, sol = _solve(lambda z: np.abs(z) + 0j, g, BasisSpec("harmonic2d", 4))
    others = float(np.max(np.abs(sol.coeffs[1:])))
    ok = abs(c - RHO2) < 1e-4 and abs(sol.coeffs[0] - c) < 1e-2 and others < 1e-2
    return ok, f"radial={c.real:.8f} 2D c0={sol.coeffs[0].real:.6f} max other={others:.2e}"


def c05_flatness():
    g = build_disk_grid(64, 128, (RHO2,))
    chi = lambda z: (np.abs(z) < RHO2).astype(complex)
    om = Field.sample(chi, g)
    spec = BasisSpec("constants")
    dists = [objective_at(om, [c], spec, g, 1.0) for c in (0.0, 0.25, 0.5, 1.0)]
    sol = solve_best(om, spec, SolverOptions(p=1), g)
    split = np.where(np.abs(g.points) < RHO2, -1.0, 1.0)
    res = max(check_annihilation(s * split, "harmonic", 10, g).max() for s in (1, -1))
    ok = all(abs(d - 0.5) < 1e-3 for d in dists) and sol.flat and res < 1e-3
    return ok, f"distances={[round(d, 6) for d in dists]} flat={sol.flat} max residual={res:.1e}"


def c06_sigma_certificate():
    g = build_disk_grid(64, 128, (RHO2,))
    res2 = check_annihilation(np.where(np.abs(g.points) < RHO2, -1.0, 1.0), "harmonic", 10, g).max()
    spec = BallSpec(3)
    smp = build_ball_sampler(spec, 16, 4096, seed=0, splits=(spec.rho,))
    sig = spec.sigma(smp.points)
    funcs = [f for _, f in P.harmonic_test_functions(3, 3)]
    rng = np.random.default_rng(11)
    ok3, worst = True, 0.0
    for _ in range(5):
        coef = rng.standard_normal(len(funcs))
        h = sum(c * f(smp.points) for c, f in zip(coef, funcs))
        est, err = smp.integrate_with_error(sig * h)
        ok3 &= abs(est) <= 3 * err + 1e-12
        worst = max(worst, abs(est) / err if err > 0 else 0.0)
    return res2 < 1e-3 and ok3, f"2D max residual={res2:.1e}; 3D worst |est|/stderr={worst:.2f}"


def c07_newton_kernel():
    lines, ok = [], True
    for n in (2, 3):
        spec = BallSpec(n)
        smp = build_ball_sampler(spec, 8, 64, seed=0)
        for r in (0.0, 0.3, spec.rho ** 2):
            y = np.zeros(n)
            y[0] = r
            v = newton_sign_certificate(y, spec, smp, n_samples=100_000, band=1e-3)
            ok &= v.certified and v.witness["violations"] == 0
            lines.append(f"n={n} |y|={r:.3f}:{v.witness['violations']}")
        y = np.zeros(n)
        y[0] = 0.9
        v = newton_sign_certificate(y, spec, smp, n_samples=100_000, band=1e-3)
        ok &= v.status == "refuted" and v.witness["violations"] > 0
        lines.append(f"n={n} |y|=0.9:{v.witness['violations']}")
    return ok, "violations " + ", ".join(lines)


def c08_aghr():
    ok, parts = True, []
    om = lambda x: np.sum(np.atleast_2d(x) ** 2, axis=1)
    for n in (2, 3):
        spec = BallSpec(n)
        smp = build_ball_sampler(spec, 8, 64, seed=0)
        c = 2 ** (-2 / n)
        good = aghr_verify(om, lambda x: np.full(np.atleast_2d(x).shape[0], c), spec, smp)
        bad = aghr_verify(om, lambda x: np.full(np.atleast_2d(x).shape[0], c + 0.05), spec, smp)
        ok &= good.certified and bad.status == "refuted" and bad.witness.get("kind") == "sphere"
        parts.append(f"n={n}: {good.status}/{bad.status}({bad.witness.get('kind')})")
    return ok, "; ".join(parts)


def c09_prop53():
    g = build_disk_grid(128, 256)
    om = lambda z: ((z - 0.5) / (np.conj(z) - 0.5)) ** 2
    res = check_annihilation(om(g.points), "analytic", 10, g).max()
    ring = np.exp(2j * math.pi * np.arange(256) / 256)
    bnd = float(np.max(np.abs(prop53_witness(0.5, ring))))
    rng = np.random.default_rng(5)
    pts = 0.85 * np.sqrt(rng.random(400)) * np.exp(2j * math.pi * rng.random(400))
    pts = pts[np.abs(np.conj(pts) - 0.5) > 0.2][:20]
    fd = float(np.max(np.abs(dbar(lambda z: prop53_witness(0.5, z), pts) - om(pts))))
    ok = res < 1e-3 and bnd < 1e-12 and fd < 1e-6 and pts.size == 20
    return ok, f"max residual={res:.1e} boundary={bnd:.1e} dbar error={fd:.1e}"


def c10_ahlfors_beurling():
    D0 = P.Ball(RHO2)
    c1 = P.cauchy_transform(D0, 1 + 0j)
    d0 = P.ahlfors_beurling_check(D0, probes=D0.boundary_points(360)[:, 0] + 1j * D0.boundary_points(360)[:, 1])
    maxima = [P.ahlfors_beurling_check(r, n_dirs=2048).max_modulus for r in P.random_equal_area_regions(0)]
    ok = abs(c1 - 0.5) < 1e-3 and abs(d0.max_modulus - P.AB_BOUND) < 1e-3 \
        and all(m < P.AB_BOUND - 1e-2 for m in maxima)
    return ok, f"C(1)={c1.real:.6f} D0 max={d0.max_modulus:.6f} others={[round(m, 4) for m in maxima]}"


def c11_lemma61():
    spec = BallSpec(3)
    y = np.array([0.0, 0.0, spec.rho])
    rng = np.random.default_rng(2024)
    ratios = []
    for k in range(50):
        mix = 0.0 if k < 25 else float(rng.uniform(0.0, 0.9))
        g = P.random_annihilator(spec, rng, sigma_mix=mix)
        lg, ls = P.lemma61_terms(g, y, spec)
        ratios.append(lg / ls)
    sig = P.sigma_density(spec)
    neg = P.RadialDensity(lambda x: -spec.sigma(x), (spec.rho, 1.0), 3, "-sigma")
    eq = [abs(np.subtract(*P.lemma61_terms(d, y, spec))) for d in (sig, neg)]
    ok = max(ratios) < 1 and max(eq) < 1e-12
    return ok, f"worst |Lg|/|Lsigma|={max(ratios):.4f} over 50; +-sigma gap={max(eq):.1e}"


def c12_thinness():
    spec = BallSpec(2)
    cusp = P.thinness_check(P.Cusp(3.0), spec)
    changes = [abs(b - a) / b for a, b in zip(cusp.partial_sums, cusp.partial_sums[1:])]
    ann = P.thinness_check(P.annulus(0.9), spec)
    ok = cusp.verdict == P.NOT_WEAK_PEAK and cusp.converged and len(changes) >= 3 \
        and max(changes) < 0.05 and ann.verdict == P.INAPPLICABLE
    return ok, f"cusp I={cusp.integral:.5f} max change={max(changes):.1e}; annulus {ann.verdict}"


def c13_regularity():
    g = build_disk_grid(64, 128)
    norms = boundary_norm_sweep(Field.sample(lambda z: z * z * np.conj(z), g), 2.0, range(1, 9), g)
    dev = float(np.max(np.abs(np.array(norms) - 2 / 3)))
    _, sol = _solve(catalog.SMOOTH["expbar"], g, BasisSpec("analytic", 8), p=2.0)
    ts = np.geomspace(1e-2, 1e-1, 9)
    slope = loglog_slope(ts, [modulus_Dt(sol.coeffs, sol.spec, t, 2.0, g) for t in ts])
    return dev < 1e-6 and slope >= 0.9, f"boundary norm deviation={dev:.1e} slope={slope:.4f}"


def c14_reweighting():
    spec = BasisSpec("analytic", 3)
    weights = [catalog.parse_weight(w) for w in ("const:0.5", "bump", "tilt")]
    worst = 0.0
    for n, m in [(1, 1), (2, 1), (3, 1), (2, 2), (3, 2)]:
        best = monomial_best(MonomialProblem(n, m, 1.0))
        g = build_disk_grid(64, 128, (best.coeff ** (1 / (2 * m)),))
        om = Field.sample(MonomialProblem(n, m).omega, g)
        fs = best.evaluate(g.points)
        for rho in weights:
            sol = solve_best(residual_reweight(om, fs, rho(g.points)), spec, SolverOptions(p=1), g)
            worst = max(worst, float(np.max(np.abs(sol.coeffs - best.coeffs(spec)))))
    return worst < 1e-2, f"max coefficient deviation={worst:.2e} over 15 solves"


DETERMINISM_COMMANDS = [
    ["solve", "--omega", "monomial:2,1", "--basis", "analytic:3", "--grid", "32,64"],
    ["certify", "--omega", "newton:0.3,0,0@3", "--fstar", "oracle", "--samples", "20000", "--seed", "3"],
    ["potential", "L", "--density", "random:3", "--y", "0.2,0.1,0.6", "--dim", "3", "--n-dirs", "1024",
     "--seed", "7"],
    ["potential", "cor74", "--density", "random:1", "--y", "0.3,0", "--n-dirs", "1024", "--seed", "2"],
    ["peakset", "bounds", "--region", "annulus:0.7071067811865476", "--poles", "8", "--n-dirs", "1024"],
    ["sweep", "modulus", "--omega", "smooth:expbar", "--p", "2", "--grid", "32,64"],
    ["oracle", "radial", "two_valued", "--n-pts", "64"],
]


def _run_bytes(argv):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = cli_main(list(argv))
    return code, buf.getvalue().encode()


def c15_determinism():
    bad = []
    for argv in DETERMINISM_COMMANDS:
        a, b = _run_bytes(argv), _run_bytes(argv)
        if a[0] != b[0] or hashlib.sha256(a[1]).digest() != hashlib.sha256(b[1]).digest() or not a[1]:
            bad.append(argv[0])
    return not bad, f"{len(DETERMINISM_COMMANDS)} commands rerun; mismatches={bad}"


CRITERIA = [c01_monomial_oracle, c02_m_greater_n, c03_p2_crosscheck, c04_radial_reduction,
            c05_flatness, c06_sigma_certificate, c07_newton_kernel, c08_aghr, c09_prop53,
            c10_ahlfors_beurling, c11_lemma61, c12_thinness, c13_regularity, c14_reweighting,
            c15_determinism]


def _line(i, crit, ok, detail):
    return f"criterion {i:2d} {crit.__name__[4:]}: {'PASS' if ok else 'FAIL'} ({detail})"


@pytest.mark.parametrize("i,crit", list(enumerate(CRITERIA, 1)), ids=[c.__name__ for c in CRITERIA])
def test_criterion(i, crit, capsys):
    ok, detail = crit()
    with capsys.disabled():
        print("\n" + _line(i, crit, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for i, crit in enumerate(CRITERIA, 1):
        ok, detail = crit()
        failed += not ok
        print(_line(i, crit, ok, detail), flush=True)
    sys.exit(1 if failed else 0)
