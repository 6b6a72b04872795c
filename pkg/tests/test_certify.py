import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fbindex import catenoid, certify, engine
from fbindex.certify import BorderlineError, IndexCertificate
from fbindex.geometry import DEFAULT_TOLERANCES, ValidationError
from fbindex.reports import SpectrumReport

TOL = DEFAULT_TOLERANCES


def _report(values, cluster_tol=TOL.cluster_tol_closed, method="test"):
    return SpectrumReport.from_values(values, cluster_tol, method)


def test_certificate_arithmetic_enforced():
    with pytest.raises(ValidationError):
        IndexCertificate(0, 1, 3, 2, 1.0, index=5, nullity=3, method="x")
    with pytest.raises(ValidationError):
        IndexCertificate(0, 1, 3, 2, 1.0, index=4, nullity=4, method="x")
    with pytest.raises(ValidationError):
        IndexCertificate(-1, 1, 3, 2, 1.0, index=3, nullity=3, method="x")


def test_certify_catenoid_closed_form_reports():
    cert = certify.certify_closed_form()
    assert cert.counts == (0, 1, 3, 2)
    assert (cert.index, cert.nullity) == (4, 3)
    assert cert.counts == catenoid.closed_form_index().counts


def test_certify_disk_numeric_reports():
    fixed = _report([5.78, 14.68])
    dtn = _report([0.0, 1.0, 1.0, 2.0, 2.0])
    cert = certify.certify(fixed, dtn, alpha=1.0)
    assert cert.counts == (0, 0, 1, 2)
    assert cert.index == 1
    assert cert.nullity == 2


def test_certify_empty_below_case():
    cert = certify.certify_closed_form(alpha=-2.0)
    assert cert.dtn_below_alpha == 0
    assert cert.index == cert.fixed_negative + cert.fixed_null == 1


def test_certify_shifted_alpha():
    cert = certify.certify_closed_form(alpha=0.2)
    assert cert.counts == (0, 1, 2, 0)
    assert cert.index == 3


def test_alpha_monotonicity():
    alphas = [-2.0, 0.2, 0.5, 1.0, 2.5]
    indices = [certify.certify_closed_form(alpha=a).index for a in alphas]
    assert indices == sorted(indices)


@settings(max_examples=30, deadline=None)
@given(a1=st.floats(-3, 5), a2=st.floats(-3, 5))
def test_alpha_monotonicity_property(a1, a2):
    lo, hi = sorted((a1, a2))
    assert (certify.certify_closed_form(alpha=lo).index
            <= certify.certify_closed_form(alpha=hi).index)


def test_mismatched_cluster_tol_rejected():
    fixed = _report([0.0], cluster_tol=1e-7)
    dtn = _report([1.0], cluster_tol=1e-4)
    with pytest.raises(ValidationError):
        certify.certify(fixed, dtn, 1.0)


def test_borderline_warning_and_strict_abort():
    ct = 1e-4
    fixed = _report([0.5], cluster_tol=ct)
    dtn = _report([1.0 + 2 * ct, 3.0], cluster_tol=ct)   # just outside the band
    cert = certify.certify(fixed, dtn, 1.0, null_tol=1e-3)
    assert any("within 10x" in w for w in cert.warnings)
    assert cert.dtn_at_alpha == 0                        # warnings do not count
    with pytest.raises(BorderlineError):
        certify.certify(fixed, dtn, 1.0, null_tol=1e-3, strict=True)
    # strict mode accepts values far from any cut
    far = _report([5.0], cluster_tol=ct)
    certify.certify(fixed, far, 1.0, null_tol=1e-3, strict=True)


def test_certificate_json_shape():
    doc = certify.certify_closed_form().to_json_dict()
    assert set(doc["counts"]) == {"fixed_negative", "fixed_null",
                                  "dtn_below", "dtn_at"}
    assert doc["index"] == 4 and doc["nullity"] == 3
    assert "warnings" in doc and "tolerances" in doc


def test_certify_1d_matches_closed_form():
    cert = certify.certify_1d()
    assert cert.counts == (0, 1, 3, 2)
    assert cert.method == "mode-1d"


def test_certify_2d_small_resolution(catenoid_chart):
    cert = certify.certify_2d(catenoid_chart, (48, 48))
    assert cert.counts == (0, 1, 3, 2)
    assert (cert.index, cert.nullity) == (4, 3)


def test_certify_2d_disk(disk_chart):
    cert = certify.certify_2d(disk_chart, (48, 48))
    assert cert.counts == (0, 0, 1, 2)
    assert cert.index == 1


def test_cor_2_7_lower_bound(catenoid_chart):
    # every non-equatorial built-in chart has >= 3 boundary eigenvalues
    # below 1 at alpha = 1
    cert = certify.certify_2d(catenoid_chart, (48, 48))
    assert cert.dtn_below_alpha >= 3


def test_decomposition_check_catenoid(cat_op_64, cat_dtn_64):
    fixed = engine.fixed_spectrum(cat_op_64, 4, TOL.null_tol_at(64))
    rep = certify.decomposition_check(cat_op_64, cat_dtn_64, fixed,
                                      trials=20, seed=0)
    assert rep["kernel_dim"] == 1
    assert rep["max_orthogonality_defect"] <= 1e-8
    assert rep["max_linearity_defect"] <= 1e-8
    assert abs(rep["forced_negative_value"] + 1.0) <= 1e-6


def test_decomposition_check_disk(disk_op_64, disk_dtn_64):
    fixed = engine.fixed_spectrum(disk_op_64, 4, TOL.null_tol_at(64))
    rep = certify.decomposition_check(disk_op_64, disk_dtn_64, fixed)
    assert rep["kernel_dim"] == 0
    assert rep["galerkin_defect"] <= 1e-10


def test_sandwich_constant_curvature_collapses(catenoid_chart):
    lower, upper = certify.certify_sandwich(catenoid_chart, (48, 48))
    plain = certify.certify_2d(catenoid_chart, (48, 48))
    assert lower.counts == upper.counts == plain.counts
    assert lower.method == "sandwich-lower"
    assert upper.method == "sandwich-upper"


def test_sandwich_perturbed_curvature_brackets(catenoid_chart):
    lower, upper = certify.certify_sandwich(
        catenoid_chart, (48, 48),
        curvature=lambda t_b, th: 1.0 + 0.1 * np.sin(th))
    assert lower.index <= 4 <= upper.index


def test_sandwich_requires_positive_curvature(catenoid_chart):
    with pytest.raises(ValidationError):
        certify.certify_sandwich(
            catenoid_chart, (48, 48),
            curvature=lambda t_b, th: np.full_like(th, -1.0))
