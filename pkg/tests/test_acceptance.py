"""End-to-end acceptance criteria, one test (and one pass/fail line) each.

Run with ``pytest -v tests/test_acceptance.py``; each test prints a
single summary line with the measured quantities.
"""

import math
import time

import numpy as np
import pytest

from fbindex import (
    assembly,
    catenoid,
    certify,
    engine,
    geometry,
    mode1d,
)
from fbindex.geometry import DEFAULT_TOLERANCES as TOL
from fbindex.geometry import catenoid_parameters


def report(line):
    print(f"\n[acceptance] {line}")


@pytest.fixture(scope="module")
def cat_chart():
    return geometry.make_critical_catenoid()


@pytest.fixture(scope="module")
def disk_chart():
    return geometry.make_equatorial_disk()


def _dtn_by_label(chart, res, k=40):
    op = assembly.assemble(chart, assembly.CoefficientField(), (res, res), TOL)
    dtn = engine.build_dtn(op, TOL.null_tol_at(res))
    rep = engine.dtn_spectrum(dtn, k)
    grouped = {}
    for v, lab in zip(rep.eigenvalues, rep.labels):
        grouped.setdefault(lab, []).append(v)
    return rep, {lab: float(np.mean(vs)) for lab, vs in grouped.items()}


@pytest.fixture(scope="module")
def cat_dtn_128(cat_chart):
    return _dtn_by_label(cat_chart, 128)


@pytest.fixture(scope="module")
def cat_dtn_256(cat_chart):
    return _dtn_by_label(cat_chart, 256)


def test_criterion_01_catenoid_parameter():
    best = min(
        _timed(catenoid_parameters.__wrapped__) for _ in range(5)
    )
    T, _ = catenoid_parameters()
    assert abs(math.cosh(T) - T * math.sinh(T)) < 1e-12
    assert abs(T - 1.19968) < 0.5e-5           # 5 significant digits
    assert round(math.cosh(T), 2) == 1.81
    assert round(math.sinh(T), 2) == 1.51
    assert round(math.tanh(T), 2) == 0.83
    assert best < 1e-3
    report(f"criterion 1 PASS: T={T:.7f}, cosh={math.cosh(T):.2f}, "
           f"sinh={math.sinh(T):.2f}, tanh={math.tanh(T):.2f}, "
           f"solve time {best*1e3:.3f} ms")


def _timed(fn):
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0


def test_criterion_02_closed_form_spectrum():
    catenoid.closed_form_spectrum(12)          # warm caches
    dt = min(_timed(lambda: catenoid.closed_form_spectrum(12))
             for _ in range(5))
    T, _ = catenoid_parameters()
    by_key = {(p.n, p.parity): p for p in catenoid.closed_form_spectrum(12)}
    assert abs(by_key[(0, "odd")].delta - 1 / math.sinh(T) ** 2) < 1e-12
    assert by_key[(0, "odd")].delta < 1
    assert abs(by_key[(1, "even")].delta + 1) < 1e-12
    assert by_key[(1, "even")].multiplicity == 2
    assert abs(by_key[(1, "odd")].delta - 1) < 1e-10
    assert by_key[(1, "odd")].multiplicity == 2
    assert catenoid.growth_check_n_ge_2(50)    # delta > 1 for n = 2..50
    assert dt < 1e-2
    report(f"criterion 2 PASS: delta(0)={by_key[(0,'odd')].delta:.10f}, "
           f"delta(1)=-1,+1; all n=2..50 above 1; build time {dt*1e3:.2f} ms")


def test_criterion_03_index_theorem_three_ways(cat_chart):
    c1 = catenoid.closed_form_index()
    c2 = certify.certify_1d()
    t0 = time.perf_counter()
    c3 = certify.certify_2d(cat_chart, (128, 128), TOL)
    dt = time.perf_counter() - t0
    for c in (c1, c2, c3):
        assert c.counts == (0, 1, 3, 2)
        assert (c.index, c.nullity) == (4, 3)
    assert dt < 60
    report(f"criterion 3 PASS: closed-form/1D/2D certificates all "
           f"(0,1,3,2) => index 4, nullity 3; 2D time {dt:.1f} s")


def test_criterion_04_equatorial_disk(disk_chart):
    cert = certify.certify_2d(disk_chart, (128, 128), TOL)
    assert cert.index == 1
    rep = assembly.steklov_laplace_spectrum(disk_chart, (128, 128), k=7)
    exact = [0, 1, 1, 2, 2, 3, 3]
    err = float(np.max(np.abs(np.array(rep.eigenvalues) - exact)))
    assert err < 1e-2
    report(f"criterion 4 PASS: disk index={cert.index}, Steklov "
           f"0,1,1,2,2 max abs error {err:.2e}")


def test_criterion_05_normal_component_identity(cat_chart):
    op = assembly.assemble(cat_chart, assembly.CoefficientField(), (128, 128), TOL)
    worst = 0.0
    for a in np.eye(3):
        u = op.nodal_field(lambda f, a=a: f["nu"] @ a)
        s = assembly.bilinear_S(op, u, u)
        mass = float(u @ (op.M @ u))
        worst = max(worst, abs(s + 2 * mass) / abs(s))
    assert worst <= 1e-3
    report(f"criterion 5 PASS: S(nu_a,nu_a) = -2*int(nu_a^2) with max "
           f"relative defect {worst:.2e}")


def test_criterion_06_first_boundary_eigenvalue(cat_dtn_256, disk_chart):
    rep, _ = cat_dtn_256
    assert abs(rep.eigenvalues[0] + 1.0) < 1e-3
    assert rep.eigenvalues[0] <= 0
    disk_rep = assembly.steklov_laplace_spectrum(disk_chart, (128, 128), k=2)
    assert abs(disk_rep.eigenvalues[0]) < 1e-3
    report(f"criterion 6 PASS: catenoid delta_1={rep.eigenvalues[0]:+.6f} "
           f"(target -1), disk delta_1={disk_rep.eigenvalues[0]:+.2e} (target 0)")


def test_criterion_07_fixed_spectrum_gap():
    errs = []
    for m in (256, 512, 1024):
        r = mode1d.fixed_spectrum_1d(mode1d.mode_operator(0, m), 2)
        errs.append(abs(r.eigenvalues[0]))
    orders = [float(np.log2(errs[i] / errs[i + 1])) for i in range(2)]
    lam2 = mode1d.fixed_spectrum_1d(mode1d.mode_operator(0, 1024), 2).eigenvalues[1]
    assert min(orders) >= 1.8
    assert lam2 > 0.3
    report(f"criterion 7 PASS: lambda_1 -> 0 at orders {orders[0]:.2f}, "
           f"{orders[1]:.2f}; lambda_2 = {lam2:.4f} > 0.3")


def test_criterion_08_three_below_one(cat_dtn_128):
    rep, _ = cat_dtn_128
    ct = TOL.cluster_tol_2d_at(128)
    n_below = rep.count_below(1.0, margin=ct)
    assert n_below >= 3
    report(f"criterion 8 PASS: {n_below} boundary eigenvalues below 1")


def test_criterion_09_cross_method_equivalence(cat_dtn_128, cat_dtn_256):
    _, by128 = cat_dtn_128
    _, by256 = cat_dtn_256
    worst_2d = 0.0
    worst_1d = 0.0
    for n in range(9):
        exact = {p.parity: p.delta
                 for p in catenoid.closed_form_spectrum(max(n, 1)) if p.n == n}
        for br in mode1d.steklov_spectrum_1d_shooting(n):
            if br.deflated:
                continue
            worst_1d = max(worst_1d, abs(br.delta - exact[br.parity])
                           / abs(exact[br.parity]))
            key = (n, br.parity)
            assert key in by128 and key in by256, f"2D run missed mode {key}"
            rich = (4 * by256[key] - by128[key]) / 3.0   # second-order limit
            worst_2d = max(worst_2d, abs(rich - br.delta) / abs(br.delta))
    assert worst_1d <= 1e-8
    assert worst_2d <= 1e-3
    report(f"criterion 9 PASS: shooting vs closed forms {worst_1d:.2e} "
           f"(<=1e-8); extrapolated 2D vs shooting {worst_2d:.2e} (<=1e-3)")


def test_criterion_10_ladder_intertwining():
    # L_1 D- f = D- A_1 f with L_1 = d^2 + 2 sech^2 - 1, A_1 = d^2 - 1;
    # finite-difference residual must shrink at second order
    rng = np.random.default_rng(42)
    T, _ = catenoid_parameters()

    def residual(coeffs, m):
        t = np.linspace(-T, T, m)
        h = t[1] - t[0]
        f = sum(a * np.sin(b * t + ph) for a, b, ph in coeffs)

        def d2(v):
            out = np.empty_like(v)
            out[1:-1] = (v[2:] - 2 * v[1:-1] + v[:-2]) / h**2
            out[0] = out[1]
            out[-1] = out[-2]
            return out

        def d1(v):
            out = np.empty_like(v)
            out[1:-1] = (v[2:] - v[:-2]) / (2 * h)
            out[0] = out[1]
            out[-1] = out[-2]
            return out

        def dminus(v):
            return d1(v) - np.tanh(t) * v

        pot = 2.0 / np.cosh(t) ** 2 - 1.0
        lhs = d2(dminus(f)) + pot * dminus(f)
        rhs = dminus(d2(f) - f)
        return float(np.max(np.abs((lhs - rhs)[4:-4])))

    ratios = []
    for _ in range(20):
        coeffs = [(rng.uniform(0.5, 1.5), rng.uniform(0.5, 2.0),
                   rng.uniform(0, 2 * np.pi)) for _ in range(3)]
        r_coarse = residual(coeffs, 801)
        r_fine = residual(coeffs, 1601)
        ratios.append(r_coarse / r_fine)
    assert all(3.5 <= r <= 4.5 for r in ratios)
    report(f"criterion 10 PASS: 20 random trials, step-halving ratios in "
           f"[{min(ratios):.2f}, {max(ratios):.2f}] (target [3.5, 4.5])")


def test_criterion_11_sandwich_bounds(cat_chart):
    lower, upper = certify.certify_sandwich(
        cat_chart, (64, 64), TOL,
        curvature=lambda t_b, th: 1.0 + 0.1 * np.sin(th))
    assert lower.index <= 4 <= upper.index
    report(f"criterion 11 PASS: sandwich {lower.index} <= 4 <= {upper.index} "
           f"on the perturbed-curvature run")
