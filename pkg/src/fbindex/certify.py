"""Index and nullity certificates from fixed-boundary and boundary-map spectra.

The certificate arithmetic is
    index   = fixed_negative + fixed_null + dtn_below_alpha,
    nullity = fixed_null + dtn_at_alpha,
with the asymmetric cut convention: the zero band of the fixed-boundary
spectrum counts toward the index, while the band at alpha on the
boundary-map side counts toward the nullity only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .geometry import DEFAULT_TOLERANCES, SurfaceChart, ToleranceProfile, ValidationError
from .reports import SpectrumReport


class BorderlineError(RuntimeError):
    """Raised in strict mode when an eigenvalue sits too close to a cut."""


@dataclass(frozen=True)
class IndexCertificate:
    fixed_negative: int
    fixed_null: int
    dtn_below_alpha: int
    dtn_at_alpha: int
    alpha: float
    index: int
    nullity: int
    method: str
    tolerances: dict = field(default_factory=dict)
    warnings: tuple = ()

    def __post_init__(self):
        counts = (self.fixed_negative, self.fixed_null,
                  self.dtn_below_alpha, self.dtn_at_alpha)
        if any(c < 0 for c in counts):
            raise ValidationError("certificate counts must be non-negative")
        if self.index != self.fixed_negative + self.fixed_null + self.dtn_below_alpha:
            raise ValidationError("index does not match its defining count sum")
        if self.nullity != self.fixed_null + self.dtn_at_alpha:
            raise ValidationError("nullity does not match its defining count sum")

    @property
    def counts(self) -> tuple[int, int, int, int]:
        return (self.fixed_negative, self.fixed_null,
                self.dtn_below_alpha, self.dtn_at_alpha)

    def to_json_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "counts": {
                "fixed_negative": self.fixed_negative,
                "fixed_null": self.fixed_null,
                "dtn_below": self.dtn_below_alpha,
                "dtn_at": self.dtn_at_alpha,
            },
            "index": self.index,
            "nullity": self.nullity,
            "method": self.method,
            "tolerances": self.tolerances,
            "warnings": list(self.warnings),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)


def certify(
    fixed: SpectrumReport,
    dtn: SpectrumReport,
    alpha: float,
    tol: ToleranceProfile = DEFAULT_TOLERANCES,
    null_tol: float | None = None,
    strict: bool = False,
) -> IndexCertificate:
    """Count the four certificate dimensions from two spectrum reports.

    Eigenvalues within 10x of a cut tolerance are recorded as warnings;
    in strict mode anything within 3x aborts with ``BorderlineError``.
    """
    if fixed.cluster_tol != dtn.cluster_tol:
        raise ValidationError(
            "fixed and boundary-map reports use different cluster tolerances"
        )
    nt = tol.null_tol if null_tol is None else null_tol
    ct = dtn.cluster_tol
    warnings: list[str] = []

    fixed_negative = sum(1 for v in fixed.eigenvalues if v < -nt)
    fixed_null = sum(1 for v in fixed.eigenvalues if abs(v) <= nt)
    dtn_below = sum(1 for v in dtn.eigenvalues if v < alpha - ct)
    dtn_at = sum(1 for v in dtn.eigenvalues if abs(v - alpha) <= ct)

# values inside the band are classified confidently as "at the cut";
    # the risky ones sit just outside it
    def flag(values, cut, band, what):
        for v in values:
            d = abs(v - cut)
            if band < d <= 10 * band:
                warnings.append(f"{what} eigenvalue {v:.6g} within 10x tolerance of cut {cut:g}")
                if strict and d <= 3 * band:
                    raise BorderlineError(
                        f"{what} eigenvalue {v:.6g} within 3x tolerance of cut {cut:g}"
                    )

    flag(fixed.eigenvalues, 0.0, nt, "fixed-boundary")
    flag(dtn.eigenvalues, alpha, ct, "boundary-map")

    return IndexCertificate(
        fixed_negative=fixed_negative,
        fixed_null=fixed_null,
        dtn_below_alpha=dtn_below,
        dtn_at_alpha=dtn_at,
        alpha=float(alpha),
        index=fixed_negative + fixed_null + dtn_below,
        nullity=fixed_null + dtn_at,
        method=f"{fixed.method}+{dtn.method}",
        tolerances={**tol.to_dict(), "null_tol_used": nt, "cluster_tol_used": ct},
        warnings=tuple(fixed.warnings) + tuple(dtn.warnings) + tuple(warnings),
    )


def certify_2d(
    chart: SurfaceChart,
    resolution: tuple[int, int] = (128, 128),
    tol: ToleranceProfile = DEFAULT_TOLERANCES,
    alpha: float = 1.0,
    strict: bool = False,
    k_fixed: int = 8,
    k_dtn: int = 12,
) -> IndexCertificate:
    """Full 2D pipeline: assemble, fixed spectrum, boundary map, certify."""
    from . import assembly, engine

    op = assembly.assemble(chart, assembly.CoefficientField(alpha=alpha), resolution, tol)
    nt = tol.null_tol_at(max(resolution))
    ct = tol.cluster_tol_2d_at(max(resolution))
    fixed = engine.fixed_spectrum(op, k_fixed, nt, cluster_tol=ct)
    dtn = engine.build_dtn(op, nt, fixed=fixed)
    spec = engine.dtn_spectrum(dtn, k_dtn, cluster_tol=ct)
    cert = certify(fixed, spec, alpha, tol, null_tol=nt, strict=strict)
    return _with_method(cert, "full-2d")


def certify_closed_form(
    alpha: float = 1.0,
    tol: ToleranceProfile = DEFAULT_TOLERANCES,
    n_max: int = 12,
    strict: bool = False,
) -> IndexCertificate:
    """Catenoid certificate at any alpha from the exact eigenvalue list.

    The fixed-boundary side contributes the single zero eigenvalue (the
    support function); the boundary side is the closed-form spectrum with
    multiplicities expanded.
    """
    from . import catenoid as cf
    from .reports import SpectrumReport

    fixed = SpectrumReport.from_values([0.0], tol.cluster_tol_closed,
                                       "closed-form", [(0, "even")])
    values: list[float] = []
    labels: list[tuple] = []
    for p in cf.closed_form_spectrum(n_max):
        values.extend([p.delta] * p.multiplicity)
        labels.extend([(p.n, p.parity)] * p.multiplicity)
    dtn = SpectrumReport.from_values(values, tol.cluster_tol_closed,
                                     "closed-form", labels)
    cert = certify(fixed, dtn, alpha, tol, strict=strict)
    return _with_method(cert, "closed-form")


def certify_1d(
    tol: ToleranceProfile = DEFAULT_TOLERANCES,
    alpha: float = 1.0,
    n_max: int = 8,
    method: str = "shooting",
    strict: bool = False,
) -> IndexCertificate:
    """Catenoid certificate from the separated per-mode 1D solvers.

    The fixed-boundary side merges the banded per-mode eigenvalues (with
    multiplicity 2 for n >= 1); the boundary side uses shooting (or the
    banded Schur complement).
    """
    from . import mode1d
    from .reports import SpectrumReport

    values: list[float] = []
    labels: list[tuple] = []
    for n in range(n_max + 1):
        rep = mode1d.fixed_spectrum_1d(mode1d.mode_operator(n), k=2, tol=tol)
        mult = 1 if n == 0 else 2
        for v in rep.eigenvalues:
            values.extend([v] * mult)
            labels.extend([(n, None)] * mult)
    fixed = SpectrumReport.from_values(values, tol.cluster_tol_numeric,
                                       "mode-1d", labels)
    dtn = mode1d.assemble_full_spectrum(n_max, tol=tol, method=method)
    cert = certify(fixed, dtn, alpha, tol, strict=strict)
    return _with_method(cert, "mode-1d")


def _with_method(cert: IndexCertificate, method: str) -> IndexCertificate:
    return IndexCertificate(
        fixed_negative=cert.fixed_negative, fixed_null=cert.fixed_null,
        dtn_below_alpha=cert.dtn_below_alpha, dtn_at_alpha=cert.dtn_at_alpha,
        alpha=cert.alpha, index=cert.index, nullity=cert.nullity,
        method=method, tolerances=cert.tolerances, warnings=cert.warnings,
    )


def certify_sandwich(
    chart: SurfaceChart,
    resolution: tuple[int, int] = (128, 128),
    tol: ToleranceProfile = DEFAULT_TOLERANCES,
    curvature=None,
    k_fixed: int = 8,
    k_dtn: int = 16,
) -> tuple[IndexCertificate, IndexCertificate]:
    """Two-sided index bounds when the boundary curvature is not constant.

    ``curvature`` maps (t_boundary, theta array) to the positive boundary
    field; the weight is its discrete harmonic extension, the potential is
    scaled by the extremal boundary values, and each side is certified
    with its own alpha.  Returns (lower, upper) with
    ``lower.index <= true index <= upper.index``.
    """
    from . import assembly, engine

    if curvature is None:
        curvature = lambda t_b, theta: np.ones_like(theta)

    # boundary samples for the extremal constants
    theta = np.linspace(0.0, 2 * np.pi, 4 * resolution[1], endpoint=False)
    vals = np.concatenate([
        np.asarray(curvature(t_b, theta), float) for t_b in chart.boundary_components
    ])
    alpha_lo, alpha_hi = float(vals.min()), float(vals.max())
    if alpha_lo <= 0:
        raise ValidationError(
            "boundary curvature field must be strictly positive for the two-sided bounds"
        )

    lap = assembly.assemble(
        chart, assembly.CoefficientField(phi=lambda f: np.ones_like(f["g11"]),
                                         m=lambda f: np.zeros_like(f["g11"])),
        resolution, tol)
    phi_nodes = assembly.harmonic_extension(lap, curvature)

    nt = tol.null_tol_at(max(resolution))
    ct = tol.cluster_tol_2d_at(max(resolution))
    out = []
    for alpha_x, side in ((alpha_lo, "lower"), (alpha_hi, "upper")):
        op = assembly.assemble(
            chart,
            assembly.CoefficientField(m=lambda f, a=alpha_x: a * f["hsq"], alpha=alpha_x),
            resolution, tol, phi_nodes=phi_nodes)
        fixed = engine.fixed_spectrum(op, k_fixed, nt, cluster_tol=ct)
        dtn = engine.build_dtn(op, nt, fixed=fixed)
        spec = engine.dtn_spectrum(dtn, k_dtn, cluster_tol=ct)
        cert = certify(fixed, spec, alpha_x, tol, null_tol=nt)
        out.append(_with_method(cert, f"sandwich-{side}"))
    lower, upper = out
    if lower.index > upper.index:
        raise RuntimeError("sandwich bounds came out unordered; discretization too coarse")
    return lower, upper


def decomposition_check(op, dtn, fixed, trials: int = 20, seed: int = 0) -> dict:
    """Randomized check of the S-orthogonal splitting behind the index count.

    Draws boundary data in the deflated subspace, extends it, and verifies
    S-orthogonality against functions with boundary trace in the span of
    the kernel conormal traces; also verifies the linear-in-c mechanism
    S(u + c w, u + c w) = S(u, u) + 2 c * bdry(u, u) that converts a
    kernel direction into a negative one.

    The discrete index form is evaluated with the near-null fixed cluster
    snapped to an exact kernel (a rank correction of size null_tol, i.e.
    of the discretization error); without it the identities could only
    hold to the discretization accuracy rather than to 1e-8.
    """
    from . import engine

    rng = np.random.default_rng(seed)
    report = {"kernel_dim": dtn.kernel_dim, "trials": trials}
    A = op.K - op.V
    S_full = (0.5 * (A + A.T) - op.alpha * op.B).tocsr()

    def S(u, v):
        return float(u @ (S_full @ v))

    if dtn.kernel_dim == 0:
        # splitting degenerates to the Schur-complement Galerkin identity
        h = rng.standard_normal(len(op.boundary_idx))
        u = engine.harmonic_like_extension(op, dtn, h)
        schur = float(h @ dtn.S_bb @ h - op.alpha * (h @ dtn.B_bb @ h))
        report["galerkin_defect"] = abs(S(u, u) - schur) / max(1.0, abs(schur))
        report["max_orthogonality_defect"] = 0.0
        return report

    # exact-kernel correction: subtract the near-null rank of the interior
    # pencil so the kernel vectors are annihilated by the form
    kd = dtn.kernel_dim
    M_corr = np.zeros((S_full.shape[0], kd))
    M_II = op.M[np.ix_(op.interior_idx, op.interior_idx)]
    M_corr[op.interior_idx] = M_II @ dtn.kernel_vectors

    def S_eff(u, v):
        corr = sum(dtn.kernel_eigenvalues[j]
                   * (u @ M_corr[:, j]) * (v @ M_corr[:, j])
                   for j in range(kd))
        return S(u, v) - corr

    defects = []
    n_b = len(op.boundary_idx)
    for _ in range(trials):
        h = dtn.deflate(rng.standard_normal(n_b))
        uh = engine.harmonic_like_extension(op, dtn, h)
        # w: any function with boundary trace in the kernel-trace span
        coef = rng.standard_normal(kd)
        b = dtn.kernel_boundary_traces @ coef
        w = engine.harmonic_like_extension(op, dtn, b)
        scale = max(abs(S_eff(w, w)), abs(S_eff(uh, uh)), 1e-30)
        defects.append(abs(S_eff(w, uh)) / scale)
    report["max_orthogonality_defect"] = float(max(defects))

    # negativity mechanism: u extends the trace of a kernel element w0
    # (zero boundary values, conormal trace matching u along the boundary)
    b0 = dtn.kernel_boundary_traces[:, 0]
    u = engine.harmonic_like_extension(op, dtn, b0)
    w0 = np.zeros(op.K.shape[0])
    w0[op.interior_idx] = (dtn.kernel_vectors @ dtn.trace_coeff)[:, 0]
    s_uu = S_eff(u, u)
    bdry = float(u @ op.B @ u)  # phi-weighted boundary integral of u^2
    lin_defects = []
    for cval in rng.standard_normal(5):
        lhs = S_eff(u + cval * w0, u + cval * w0)
        rhs = s_uu + 2 * cval * bdry
        lin_defects.append(abs(lhs - rhs) / max(1.0, abs(rhs)))
    report["max_linearity_defect"] = float(max(lin_defects))

    c_neg = -(s_uu + 1.0) / (2 * bdry)
    report["forced_negative_value"] = S_eff(u + c_neg * w0, u + c_neg * w0)
    return report
