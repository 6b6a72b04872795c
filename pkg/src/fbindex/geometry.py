"""Parametrized surface charts in the unit ball and pointwise geometry.

Built-in charts are the critical catenoid and the equatorial disk; custom
charts can be supplied as tabulated positions on a rectangular grid.  All
first and second order geometric quantities (metric, unit normal, second
fundamental form, support function) are evaluated here, together with
residual checks for the free boundary conditions and for known Jacobi
fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np


class SingularChartError(ValueError):
    """Raised when the induced metric degenerates at a sample point."""


class ValidationError(ValueError):
    """Raised for invalid arguments (non-skew rotation generator, ...)."""


@dataclass(frozen=True)
class ToleranceProfile:
    """All numeric tolerances used across the pipeline, in one place.

    ``null_tol`` is quoted at the reference 2D resolution 128 and is
    rescaled by ``(128 / N)**2`` for other resolutions.
    """

    normal_unit: float = 1e-12
    normal_orthogonality: float = 1e-10
    minimal_trace: float = 1e-8
    metric_det: float = 1e-14
    free_boundary: float = 1e-10
    fd_step_scale: float = 1e-5
    null_tol: float = 1e-3
    cluster_tol_closed: float = 1e-7
    cluster_tol_numeric: float = 1e-4
    cluster_tol_2d: float = 2e-2
    deflation_ratio: float = 1e-12
    shooting_rtol: float = 1e-10
    shooting_atol: float = 1e-12

    def null_tol_at(self, resolution: int) -> float:
        return self.null_tol * (128.0 / resolution) ** 2

    def cluster_tol_2d_at(self, resolution: int) -> float:
        """Discretization-aware clustering band for 2D spectra (second
        order in the mesh width, floored by the generic numeric value)."""
        return max(self.cluster_tol_numeric,
                   self.cluster_tol_2d * (128.0 / resolution) ** 2)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


DEFAULT_TOLERANCES = ToleranceProfile()


@dataclass(frozen=True)
class SurfaceChart:
    """Immersion of a rectangle (periodic in the second coordinate) in R^3.

    ``eval`` maps arrays ``(t, theta)`` to positions of shape ``(..., 3)``.
    When the analytic derivative callables are absent, central finite
    differences with step ``fd_step_scale * (t_max - t_min)`` are used.
    """

    name: str
    t_min: float
    t_max: float
    periodic: bool
    eval: Callable[[np.ndarray, np.ndarray], np.ndarray]
    first_derivatives: Optional[Callable] = None   # (t, th) -> (X_t, X_th)
    second_derivatives: Optional[Callable] = None  # (t, th) -> (X_tt, X_tth, X_thth)
    boundary_components: tuple = ()
    conformal: bool = False
    center_singularity: bool = False
    orientation: int = -1  # sign applied to X_t x X_theta when forming nu
    params: dict = field(default_factory=dict)
    ambient_dim: int = 3

    @property
    def extent(self) -> float:
        return self.t_max - self.t_min

    def position(self, t, theta) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        theta = np.asarray(theta, dtype=float)
        return self.eval(t, theta)

    def d1(self, t, theta):
        """First derivatives (X_t, X_theta), analytic or finite differences."""
        if self.first_derivatives is not None:
            return self.first_derivatives(np.asarray(t, float), np.asarray(theta, float))
        h = DEFAULT_TOLERANCES.fd_step_scale * self.extent
        t = np.asarray(t, float)
        theta = np.asarray(theta, float)
        x_t = (self.eval(t + h, theta) - self.eval(t - h, theta)) / (2 * h)
        x_th = (self.eval(t, theta + h) - self.eval(t, theta - h)) / (2 * h)
        return x_t, x_th

    def d2(self, t, theta):
        """Second derivatives (X_tt, X_ttheta, X_thetatheta)."""
        if self.second_derivatives is not None:
            return self.second_derivatives(np.asarray(t, float), np.asarray(theta, float))
        h = 10 * DEFAULT_TOLERANCES.fd_step_scale * self.extent
        t = np.asarray(t, float)
        theta = np.asarray(theta, float)
        x0 = self.eval(t, theta)
        x_tt = (self.eval(t + h, theta) - 2 * x0 + self.eval(t - h, theta)) / h**2
        x_thth = (self.eval(t, theta + h) - 2 * x0 + self.eval(t, theta - h)) / h**2
        x_tth = (
            self.eval(t + h, theta + h) - self.eval(t + h, theta - h)
            - self.eval(t - h, theta + h) + self.eval(t - h, theta - h)
        ) / (4 * h**2)
        return x_tt, x_tth, x_thth


@dataclass(frozen=True)
class PointGeometry:
    """All first/second order quantities at one chart point."""

    X: np.ndarray
    nu: np.ndarray
    metric: np.ndarray        # 2x2
    second_form: np.ndarray   # 2x2
    h_norm_sq: float
    zeta: float
    conformal_factor: float


@lru_cache(maxsize=1)
def catenoid_parameters() -> tuple[float, float]:
    """Solve cosh T = T sinh T by bisection on [1.0, 1.5]; return (T, c).

    The bracket is guaranteed to contain the unique positive root.  The
    scale is c = 1 / (T cosh T), which places the boundary on the unit
    sphere.
    """
    def g(T: float) -> float:
        return math.cosh(T) - T * math.sinh(T)

    lo, hi = 1.0, 1.5
    if g(lo) <= 0 or g(hi) >= 0:
        raise RuntimeError("bisection bracket lost for the catenoid parameter")
    while hi - lo > 1e-14:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    T = 0.5 * (lo + hi)
    return T, 1.0 / (T * math.cosh(T))


def make_critical_catenoid() -> SurfaceChart:
    """Chart X(t, th) = c (cosh t cos th, cosh t sin th, t) on [-T, T] x S^1."""
    T, c = catenoid_parameters()

    def ev(t, th):
        t, th = np.broadcast_arrays(np.asarray(t, float), np.asarray(th, float))
        ch = np.cosh(t)
        return c * np.stack([ch * np.cos(th), ch * np.sin(th), t], axis=-1)

    def d1(t, th):
        t, th = np.broadcast_arrays(t, th)
        sh, ch = np.sinh(t), np.cosh(t)
        x_t = c * np.stack([sh * np.cos(th), sh * np.sin(th), np.ones_like(t)], axis=-1)
        x_th = c * np.stack([-ch * np.sin(th), ch * np.cos(th), np.zeros_like(t)], axis=-1)
        return x_t, x_th

    def d2(t, th):
        t, th = np.broadcast_arrays(t, th)
        sh, ch = np.sinh(t), np.cosh(t)
        zero = np.zeros_like(t)
        x_tt = c * np.stack([ch * np.cos(th), ch * np.sin(th), zero], axis=-1)
        x_tth = c * np.stack([-sh * np.sin(th), sh * np.cos(th), zero], axis=-1)
        x_thth = c * np.stack([-ch * np.cos(th), -ch * np.sin(th), zero], axis=-1)
        return x_tt, x_tth, x_thth

    return SurfaceChart(
        name="catenoid",
        t_min=-T,
        t_max=T,
        periodic=True,
        eval=ev,
        first_derivatives=d1,
        second_derivatives=d2,
        boundary_components=(-T, T),
        conformal=True,
        orientation=-1,
        params={"T": T, "c": c},
    )


def make_equatorial_disk() -> SurfaceChart:
    """Polar chart X(r, th) = (r cos th, r sin th, 0), r in [0, 1].

    The coordinate singularity at r = 0 is flagged; the 2D assembler
    excises a small disk around it.
    """

    def ev(r, th):
        r, th = np.broadcast_arrays(np.asarray(r, float), np.asarray(th, float))
        return np.stack([r * np.cos(th), r * np.sin(th), np.zeros_like(r)], axis=-1)

    def d1(r, th):
        r, th = np.broadcast_arrays(r, th)
        zero = np.zeros_like(r)
        x_r = np.stack([np.cos(th), np.sin(th), zero], axis=-1)
        x_th = np.stack([-r * np.sin(th), r * np.cos(th), zero], axis=-1)
        return x_r, x_th

    def d2(r, th):
        r, th = np.broadcast_arrays(r, th)
        zero = np.zeros_like(r)
        x_rr = np.stack([zero, zero, zero], axis=-1)
        x_rth = np.stack([-np.sin(th), np.cos(th), zero], axis=-1)
        x_thth = np.stack([-r * np.cos(th), -r * np.sin(th), zero], axis=-1)
        return x_rr, x_rth, x_thth

    return SurfaceChart(
        name="disk",
        t_min=0.0,
        t_max=1.0,
        periodic=True,
        eval=ev,
        first_derivatives=d1,
        second_derivatives=d2,
        boundary_components=(1.0,),
        conformal=False,
        center_singularity=True,
        orientation=+1,  # zeta vanishes identically; recorded convention
        params={},
    )


def chart_fields(chart: SurfaceChart, t, theta, tol: ToleranceProfile = DEFAULT_TOLERANCES) -> dict:
    """Vectorized geometric quantities at chart points.

    Returns a dict with keys ``X, nu, g11, g12, g22, det, sqrtg, h11, h12,
    h22, hsq, zeta``; each an array broadcast over the inputs.
    """
    t = np.asarray(t, float)
    theta = np.asarray(theta, float)
    X = chart.position(t, theta)
    x_t, x_th = chart.d1(t, theta)
    g11 = np.einsum("...i,...i->...", x_t, x_t)
    g12 = np.einsum("...i,...i->...", x_t, x_th)
    g22 = np.einsum("...i,...i->...", x_th, x_th)
    det = g11 * g22 - g12**2
    if np.any(det < tol.metric_det):
        raise SingularChartError(
            f"degenerate metric on chart '{chart.name}': min det(g) = {det.min():.3e}"
        )
    cross = np.cross(x_t, x_th)
    nu = chart.orientation * cross / np.sqrt(det)[..., None]
    x_tt, x_tth, x_thth = chart.d2(t, theta)
    h11 = np.einsum("...i,...i->...", x_tt, nu)
    h12 = np.einsum("...i,...i->...", x_tth, nu)
    h22 = np.einsum("...i,...i->...", x_thth, nu)
    # |h|^2 = tr((g^{-1} h)^2); shape operator entries written out
    i11 = g22 / det
    i12 = -g12 / det
    i22 = g11 / det
    s11 = i11 * h11 + i12 * h12
    s12 = i11 * h12 + i12 * h22
    s21 = i12 * h11 + i22 * h12
    s22 = i12 * h12 + i22 * h22
    hsq = s11 * s11 + 2 * s12 * s21 + s22 * s22
    zeta = np.einsum("...i,...i->...", X, nu)
    return {
        "X": X, "nu": nu,
        "g11": g11, "g12": g12, "g22": g22,
        "det": det, "sqrtg": np.sqrt(det),
        "h11": h11, "h12": h12, "h22": h22,
        "hsq": hsq, "zeta": zeta,
        "x_t": x_t, "x_th": x_th,
    }


def point_geometry(
    chart: SurfaceChart, t: float, theta: float,
    tol: ToleranceProfile = DEFAULT_TOLERANCES,
) -> PointGeometry:
    """All geometric fields at one point; raises on a degenerate metric."""
    f = chart_fields(chart, float(t), float(theta), tol)
    metric = np.array([[f["g11"], f["g12"]], [f["g12"], f["g22"]]], dtype=float)
    second = np.array([[f["h11"], f["h12"]], [f["h12"], f["h22"]]], dtype=float)
    return PointGeometry(
        X=f["X"], nu=f["nu"], metric=metric, second_form=second,
        h_norm_sq=float(f["hsq"]), zeta=float(f["zeta"]),
        conformal_factor=float(f["g11"]),
    )


def _outward_conormal(chart: SurfaceChart, t_b: float, theta: np.ndarray) -> np.ndarray:
    """Unit outward conormal along the boundary component {t = t_b}."""
    x_t, x_th = chart.d1(np.full_like(theta, t_b), theta)
    g12 = np.einsum("...i,...i->...", x_t, x_th)
    g22 = np.einsum("...i,...i->...", x_th, x_th)
    eta = x_t - (g12 / g22)[..., None] * x_th
    eta /= np.linalg.norm(eta, axis=-1, keepdims=True)
    sign = 1.0 if t_b >= 0.5 * (chart.t_min + chart.t_max) else -1.0
    return sign * eta


def free_boundary_residual(chart: SurfaceChart, samples: int = 64) -> float:
    """Max violation of the free boundary conditions over boundary samples.

    Checks that the boundary sits on the unit sphere, that the normal is
    tangent to the sphere, and that the outward conormal is radial.
    """
    if samples < 8:
        raise ValidationError("samples must be >= 8")
    theta = np.linspace(0.0, 2 * np.pi, samples, endpoint=False)
    worst = 0.0
    for t_b in chart.boundary_components:
        f = chart_fields(chart, np.full_like(theta, t_b), theta)
        X, nu = f["X"], f["nu"]
        r2 = np.einsum("...i,...i->...", X, X)
        nu_dot_x = np.einsum("...i,...i->...", nu, X)
        eta = _outward_conormal(chart, t_b, theta)
        xhat = X / np.sqrt(r2)[..., None]
        # sine of the angle between conormal and radial direction; linear in
        # the perturbation, unlike arccos of the inner product
        perp = eta - np.einsum("...i,...i->...", eta, xhat)[..., None] * xhat
        angle = np.linalg.norm(perp, axis=-1)
        worst = max(
            worst,
            float(np.max(np.abs(r2 - 1.0))),
            float(np.max(np.abs(nu_dot_x))),
            float(np.max(np.abs(angle))),
        )
    return worst


def _field_values(chart: SurfaceChart, kind: str, t, theta,
                  vector=None, matrix=None) -> np.ndarray:
    f = chart_fields(chart, t, theta)
    if kind == "nu_a":
        a = np.asarray(vector, float)
        return f["nu"] @ a
    if kind == "zeta":
        return f["zeta"]
    if kind == "rotation":
        M = np.asarray(matrix, float)
        if np.max(np.abs(M + M.T)) > 1e-12:
            raise ValidationError("rotation generator must be skew-symmetric")
        return np.einsum("...i,...i->...", f["X"] @ M.T, f["nu"])
    raise ValidationError(f"unknown Jacobi field kind: {kind!r}")


def jacobi_field_residual(
    chart: SurfaceChart, kind: str, grid: tuple[int, int] = (64, 64),
    vector=None, matrix=None,
) -> float:
    """Max-norm of the discrete Jacobi operator applied to a known field.

    ``kind`` is one of ``nu_a`` (with ``vector`` = the constant direction),
    ``zeta``, or ``rotation`` (with ``matrix`` = a skew generator).  For a
    minimal chart the continuous value is 0, so the returned residual must
    shrink at the order of the finite-difference scheme under refinement.
    """
    n_t, n_th = grid
    if n_t < 8 or n_th < 8:
        raise ValidationError("grid too coarse for the residual stencil")
    t0, t1 = chart.t_min, chart.t_max
    if chart.center_singularity:
        t0 = t0 + 1e-3 * chart.extent
    tg = np.linspace(t0, t1, n_t + 1)
    thg = np.linspace(0.0, 2 * np.pi, n_th, endpoint=False)
    ht = tg[1] - tg[0]
    tt, th = np.meshgrid(tg, thg, indexing="ij")
    u = _field_values(chart, kind, tt, th, vector=vector, matrix=matrix)
    fields = chart_fields(chart, tt, th)

    def dtt(v):
        out = np.full_like(v, np.nan)
        out[1:-1] = (v[2:] - 2 * v[1:-1] + v[:-2]) / ht**2
        return out

    freqs = np.fft.rfftfreq(n_th, d=1.0 / n_th)  # integer wavenumbers

    def dthth(v):
        return np.fft.irfft(-(freqs**2) * np.fft.rfft(v, axis=1), n=n_th, axis=1)

    if chart.conformal:
        # conformally weighted operator: rho^2 J u = u_tt + u_thth + rho^2 |h|^2 u
        res = dtt(u) + dthth(u) + fields["g11"] * fields["hsq"] * u
    else:
        det = fields["det"]
        A = fields["sqrtg"] * fields["g22"] / det   # sqrt(g) g^tt
        B = -fields["sqrtg"] * fields["g12"] / det  # sqrt(g) g^tth
        C = fields["sqrtg"] * fields["g11"] / det   # sqrt(g) g^thth

        def d_t(v):
            out = np.full_like(v, np.nan)
            out[1:-1] = (v[2:] - v[:-2]) / (2 * ht)
            return out

        def d_th(v):
            return np.fft.irfft(1j * freqs * np.fft.rfft(v, axis=1), n=n_th, axis=1)

        # conservative flux form in t with midpoint coefficients
        Amid = 0.5 * (A[1:] + A[:-1])
        flux = np.full_like(u, np.nan)
        flux[1:-1] = (Amid[1:] * (u[2:] - u[1:-1]) - Amid[:-1] * (u[1:-1] - u[:-2])) / ht**2
        cross = d_t(B * d_th(u)) + d_th(B * d_t(u) + C * d_th(u))
        lap = (flux + cross) / fields["sqrtg"]
        res = lap + fields["hsq"] * u
    interior = res[2:-2, :]
    return float(np.max(np.abs(interior)))


def chart_from_descriptor(desc: dict) -> SurfaceChart:
    """Build a chart from a small JSON-style descriptor.

    ``{"kind": "catenoid"}``, ``{"kind": "disk"}`` or
    ``{"kind": "custom", "t_min": ..., "t_max": ..., "periodic": ...,
    "shape": [nt, ntheta], "positions": [...row-major xyz...]}``.
    """
    kind = desc.get("kind")
    if kind == "catenoid":
        return make_critical_catenoid()
    if kind == "disk":
        return make_equatorial_disk()
    if kind != "custom":
        raise ValidationError(f"unknown chart kind: {kind!r}")

    from scipy.interpolate import RectBivariateSpline

    t_min = float(desc["t_min"])
    t_max = float(desc["t_max"])
    periodic = bool(desc.get("periodic", True))
    nt, nth = desc["shape"]
    pos = np.asarray(desc["positions"], float).reshape(nt, nth, 3)
    tg = np.linspace(t_min, t_max, nt)
    if periodic:
        thg = np.linspace(0.0, 2 * np.pi, nth, endpoint=False)
        # pad one period on each side so splines interpolate across the seam
        pad = nth // 4 + 2
        thg_ext = np.concatenate([thg[-pad:] - 2 * np.pi, thg, thg[:pad] + 2 * np.pi])
        pos_ext = np.concatenate([pos[:, -pad:], pos, pos[:, :pad]], axis=1)
    else:
        thg_ext = np.linspace(0.0, 2 * np.pi, nth)
        pos_ext = pos
    splines = [RectBivariateSpline(tg, thg_ext, pos_ext[:, :, i], kx=3, ky=3)
               for i in range(3)]

    def wrap(th):
        return np.mod(th, 2 * np.pi) if periodic else th

    def ev(t, th):
        t, th = np.broadcast_arrays(np.asarray(t, float), np.asarray(th, float))
        th = wrap(th)
        return np.stack([s.ev(t, th) for s in splines], axis=-1)

    def d1(t, th):
        t, th = np.broadcast_arrays(np.asarray(t, float), np.asarray(th, float))
        th = wrap(th)
        x_t = np.stack([s.ev(t, th, dx=1) for s in splines], axis=-1)
        x_th = np.stack([s.ev(t, th, dy=1) for s in splines], axis=-1)
        return x_t, x_th

    def d2(t, th):
        t, th = np.broadcast_arrays(np.asarray(t, float), np.asarray(th, float))
        th = wrap(th)
        x_tt = np.stack([s.ev(t, th, dx=2) for s in splines], axis=-1)
        x_tth = np.stack([s.ev(t, th, dx=1, dy=1) for s in splines], axis=-1)
        x_thth = np.stack([s.ev(t, th, dy=2) for s in splines], axis=-1)
        return x_tt, x_tth, x_thth

    chart = SurfaceChart(
        name=desc.get("name", "custom"),
        t_min=t_min, t_max=t_max, periodic=periodic,
        eval=ev, first_derivatives=d1, second_derivatives=d2,
        boundary_components=(t_min, t_max),
        orientation=-1,
        params={},
    )
    return _orient_custom(chart)


def _orient_custom(chart: SurfaceChart) -> SurfaceChart:
    """Fix the normal sign so that zeta > 0 somewhere; record ties.

    When zeta vanishes identically the cross-product orientation (+1) is
    kept and noted in ``params``.
    """
    tg = np.linspace(chart.t_min, chart.t_max, 17)
    thg = np.linspace(0.0, 2 * np.pi, 16, endpoint=False)
    tt, th = np.meshgrid(tg, thg, indexing="ij")
    zeta = chart_fields(chart, tt, th)["zeta"]
    params = dict(chart.params)
    if np.max(np.abs(zeta)) < 1e-12:
        orientation = +1
        params["orientation_note"] = "zeta identically zero; cross-product orientation kept"
    elif np.max(zeta) > 0:
        orientation = chart.orientation
    else:
        orientation = -chart.orientation
        params["orientation_note"] = "normal flipped so that zeta > 0 somewhere"
    return SurfaceChart(
        name=chart.name, t_min=chart.t_min, t_max=chart.t_max,
        periodic=chart.periodic, eval=chart.eval,
        first_derivatives=chart.first_derivatives,
        second_derivatives=chart.second_derivatives,
        boundary_components=chart.boundary_components,
        conformal=chart.conformal, center_singularity=chart.center_singularity,
        orientation=orientation, params=params,
    )
