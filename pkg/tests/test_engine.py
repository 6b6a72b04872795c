import numpy as np
import pytest

from fbindex import assembly, catenoid, engine
from fbindex.assembly import CoefficientField, assemble
from fbindex.geometry import DEFAULT_TOLERANCES, ValidationError, catenoid_parameters

NT64 = DEFAULT_TOLERANCES.null_tol_at(64)


def test_disk_laplace_steklov(disk_chart):
    rep = assembly.steklov_laplace_spectrum(disk_chart, (64, 64), k=5)
    assert np.allclose(rep.eigenvalues, [0, 1, 1, 2, 2], atol=1e-2)


def test_catenoid_laplace_steklov_coordinates(catenoid_chart):
    # coordinate functions are Steklov eigenfunctions with eigenvalue 1
    rep = assembly.steklov_laplace_spectrum(catenoid_chart, (64, 64), k=5)
    assert abs(rep.eigenvalues[0]) < 1e-2                   # constants
    assert np.allclose(rep.eigenvalues[1:4], 1.0, atol=1e-2)


def test_fixed_spectrum_catenoid_null(cat_op_64):
    rep = engine.fixed_spectrum(cat_op_64, 4, null_tol=NT64)
    assert abs(rep.eigenvalues[0]) <= NT64
    assert rep.eigenvalues[1] > 0.3
    assert any("null cluster" in w for w in rep.warnings)


def test_fixed_spectrum_validation(cat_op_64):
    with pytest.raises(ValidationError):
        engine.fixed_spectrum(cat_op_64, 0)


def test_kernel_detection(cat_dtn_64, disk_dtn_64):
    assert cat_dtn_64.kernel_dim == 1
    assert disk_dtn_64.kernel_dim == 0
    assert abs(cat_dtn_64.kernel_eigenvalues[0]) <= NT64


def test_deflation_projector(cat_dtn_64):
    P = cat_dtn_64.deflation_projector
    assert np.max(np.abs(P @ P - P)) < 1e-10
    rng = np.random.default_rng(0)
    h = rng.standard_normal(P.shape[0])
    hd = cat_dtn_64.deflate(h)
    C = cat_dtn_64.kernel_boundary_traces
    assert np.max(np.abs(C.T @ (cat_dtn_64.B_bb @ hd))) < 1e-12
    assert np.allclose(P @ h, hd)


def test_deflate_is_identity_without_kernel(disk_dtn_64):
    rng = np.random.default_rng(1)
    h = rng.standard_normal(len(disk_dtn_64.op.boundary_idx))
    assert np.array_equal(disk_dtn_64.deflate(h), h)


def test_dtn_spectrum_catenoid_lowest(cat_dtn_64):
    rep = engine.dtn_spectrum(cat_dtn_64, 9)
    T, _ = catenoid_parameters()
    exact = [-1, -1, 1 / np.sinh(T) ** 2, 1, 1, 2, 2,
             2.174448646049981, 2.174448646049981]
    assert np.allclose(rep.eigenvalues, exact, atol=2e-2)


def test_dtn_labels(cat_dtn_64):
    rep = engine.dtn_spectrum(cat_dtn_64, 5)
    assert rep.labels[0] == (1, "even")
    assert rep.labels[2] == (0, "odd")
    assert rep.labels[3] == (1, "odd")


def test_dtn_spectrum_validation(cat_dtn_64):
    with pytest.raises(ValidationError):
        engine.dtn_spectrum(cat_dtn_64, 0)


def test_schur_galerkin_identity(disk_op_64, disk_dtn_64):
    # S(extension, extension) equals the boundary quadratic form
    rng = np.random.default_rng(5)
    h = rng.standard_normal(len(disk_op_64.boundary_idx))
    u = engine.harmonic_like_extension(disk_op_64, disk_dtn_64, h)
    s = assembly.bilinear_S(disk_op_64, u, u)
    schur = float(h @ disk_dtn_64.S_bb @ h
                  - disk_op_64.alpha * (h @ disk_dtn_64.B_bb @ h))
    assert abs(s - schur) / max(1.0, abs(schur)) < 1e-10


def test_extension_matches_boundary_data(cat_op_64, cat_dtn_64):
    rng = np.random.default_rng(9)
    h = rng.standard_normal(len(cat_op_64.boundary_idx))
    u = engine.harmonic_like_extension(cat_op_64, cat_dtn_64, h)
    assert np.allclose(u[cat_op_64.boundary_idx], h)
    with pytest.raises(ValidationError):
        engine.harmonic_like_extension(cat_op_64, cat_dtn_64, h[:-1])


def test_extension_conormal_data_deflated(cat_op_64, cat_dtn_64):
    # the weak conormal data of a deflated extension is B-orthogonal to
    # the kernel traces (the deflation compatibility behind the counts)
    rng = np.random.default_rng(11)
    h = cat_dtn_64.deflate(rng.standard_normal(len(cat_op_64.boundary_idx)))
    u = engine.harmonic_like_extension(cat_op_64, cat_dtn_64, h)
    A = (cat_op_64.K - cat_op_64.V).tocsr()
    resid = (A @ u)[cat_op_64.boundary_idx]
    C = cat_dtn_64.kernel_boundary_traces
    scale = np.linalg.norm(resid)
    assert np.max(np.abs(C.T @ resid)) < 1e-9 * max(1.0, scale)


def test_kernel_trace_scaling(cat_dtn_64):
    # kernel_vectors @ trace_coeff has weak conormal traces equal to the
    # B-orthonormal columns of kernel_boundary_traces
    C = cat_dtn_64.kernel_boundary_traces
    gram = C.T @ (cat_dtn_64.B_bb @ C)
    assert np.allclose(gram, np.eye(cat_dtn_64.kernel_dim), atol=1e-10)
    R = cat_dtn_64.kernel_raw_traces @ cat_dtn_64.trace_coeff
    assert np.allclose(np.linalg.solve(cat_dtn_64.B_bb, R), C, atol=1e-8)


def test_dtn_warns_near_threshold(catenoid_chart):
    # an artificially tight threshold pushes the kernel eigenvalue just
    # outside and must produce an instability warning
    op = assemble(catenoid_chart, CoefficientField(), (48, 48))
    lam = engine.build_dtn(op, DEFAULT_TOLERANCES.null_tol_at(48)).kernel_eigenvalues[0]
    tight = engine.build_dtn(op, abs(lam) * 0.5)
    assert tight.kernel_dim == 0
    assert any("within 10x" in w for w in tight.warnings)
