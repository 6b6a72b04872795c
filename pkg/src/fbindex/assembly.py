"""Bilinear-element assembly of the quadratic forms on a 2D tensor grid.

Builds the weighted stiffness K, potential V, interior mass M and
boundary mass B over a chart, with 2x2 tensor Gauss quadrature per cell.
The second variation form in matrix terms is S(u, v) = u^T (K - V - alpha B) v.
The theta direction is periodic; the disk's polar singularity is excised
at a small inner radius with a natural condition on the inner ring.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .geometry import (
    DEFAULT_TOLERANCES,
    SingularChartError,
    SurfaceChart,
    ToleranceProfile,
    ValidationError,
    chart_fields,
)

_EXCISED_RADIUS = 1e-3

# 2-point Gauss rule on [-1, 1]
_GP = np.array([-1.0 / np.sqrt(3.0), 1.0 / np.sqrt(3.0)])
_GW = np.array([1.0, 1.0])


@dataclass(frozen=True)
class CoefficientField:
    """Coefficients (phi, m, alpha) of the generalized forms.

    ``phi`` and ``m`` map the dict returned by ``chart_fields`` to arrays;
    defaults are phi = 1 and m = |h|^2 (the ball case, where the ambient
    Ricci term vanishes).
    """

    phi: Callable[[dict], np.ndarray] = field(
        default=lambda f: np.ones_like(f["g11"]))
    m: Callable[[dict], np.ndarray] = field(
        default=lambda f: f["hsq"])
    alpha: float = 1.0


@dataclass(frozen=True)
class DiscreteOperator:
    """Assembled matrices with the interior/boundary dof partition."""

    K: sp.csr_matrix
    V: sp.csr_matrix
    M: sp.csr_matrix
    B: sp.csr_matrix
    interior_idx: np.ndarray
    boundary_idx: np.ndarray
    boundary_rings: tuple            # dof index arrays, theta-ordered
    conormal_scales: tuple           # 1/sqrt(g_tt) per ring, per theta node
    node_t: np.ndarray
    node_theta: np.ndarray
    chart: SurfaceChart
    alpha: float
    resolution: tuple
    phi_nodes: Optional[np.ndarray] = None
    quadrature: str = "gauss-2x2"

    @property
    def n_dofs(self) -> int:
        return self.K.shape[0]

    def node_grid(self):
        return np.meshgrid(self.node_t, self.node_theta, indexing="ij")

    def nodal_field(self, fn: Callable[[dict], np.ndarray]) -> np.ndarray:
        """Sample a function of the geometric fields at all grid nodes."""
        tt, th = self.node_grid()
        return np.asarray(fn(chart_fields(self.chart, tt, th)), float).ravel()


def _reference_basis(xi: float, eta: float):
    """Bilinear basis and reference gradients at one reference point.

    Local node order: (i, j), (i+1, j), (i, j+1), (i+1, j+1).
    """
    a, b = 0.5 * (1 - xi), 0.5 * (1 + xi)
    c, d = 0.5 * (1 - eta), 0.5 * (1 + eta)
    n = np.array([a * c, b * c, a * d, b * d])
    dxi = np.array([-0.5 * c, 0.5 * c, -0.5 * d, 0.5 * d])
    deta = np.array([-0.5 * a, -0.5 * b, 0.5 * a, 0.5 * b])
    return n, dxi, deta


def assemble(
    chart: SurfaceChart,
    coeffs: CoefficientField,
    resolution: tuple[int, int] = (128, 128),
    tol: ToleranceProfile = DEFAULT_TOLERANCES,
    phi_nodes: Optional[np.ndarray] = None,
) -> DiscreteOperator:
    """Assemble K, V, M, B on a tensor grid over the chart.

    ``phi_nodes`` (optional, one value per grid node) overrides
    ``coeffs.phi`` with bilinear interpolation; used for harmonic-extension
    weights.
    """
    n_t, n_th = resolution
    if n_t < 16 or n_th < 16:
        raise ValidationError("resolution must be at least 16x16")
    if not chart.periodic:
        raise ValidationError("the tensor-grid assembler requires a periodic chart")

    t0, t1 = chart.t_min, chart.t_max
    if chart.center_singularity:
        t0 = t0 + _EXCISED_RADIUS * chart.extent
    node_t = np.linspace(t0, t1, n_t + 1)
    node_theta = np.linspace(0.0, 2 * np.pi, n_th, endpoint=False)
    h_t = node_t[1] - node_t[0]
    h_th = node_theta[1] - node_theta[0]
    n_nodes = (n_t + 1) * n_th

    def dof(i, j):
        return i * n_th + np.mod(j, n_th)

    # cell corner indices, shape (n_t, n_th) each
    ci = np.arange(n_t)[:, None]
    cj = np.arange(n_th)[None, :]
    locs = [dof(ci, cj), dof(ci + 1, cj), dof(ci, cj + 1), dof(ci + 1, cj + 1)]
    loc_nodes = np.stack([l.ravel() for l in locs])  # (4, n_cells)
    n_cells = n_t * n_th

    if phi_nodes is not None:
        phi_nodes = np.asarray(phi_nodes, float)
        if phi_nodes.shape != (n_nodes,):
            raise ValidationError("phi_nodes must have one value per grid node")

    ke = np.zeros((4, 4, n_cells))
    ve = np.zeros((4, 4, n_cells))
    me = np.zeros((4, 4, n_cells))
    cell_t0 = node_t[:-1][:, None] + np.zeros((1, n_th))
    cell_th0 = np.zeros((n_t, 1)) + node_theta[None, :]

    for gi, (xg, wx) in enumerate(zip(_GP, _GW)):
        for gj, (yg, wy) in enumerate(zip(_GP, _GW)):
            n_ref, dxi, deta = _reference_basis(xg, yg)
            tq = (cell_t0 + 0.5 * (1 + xg) * h_t).ravel()
            thq = (cell_th0 + 0.5 * (1 + yg) * h_th).ravel()
            f = chart_fields(chart, tq, thq, tol)
            det = f["det"]
            bad = det <= tol.metric_det
            if np.any(bad):
                k = int(np.argmax(bad))
                raise SingularChartError(
                    f"degenerate metric in cell (t={tq[k]:.4g}, theta={thq[k]:.4g})"
                )
            if phi_nodes is not None:
                phi_q = n_ref @ phi_nodes[loc_nodes]
            else:
                phi_q = np.broadcast_to(np.asarray(coeffs.phi(f), float), tq.shape)
            if np.any(phi_q <= 0):
                raise ValidationError("weight phi must be strictly positive")
            m_q = np.broadcast_to(np.asarray(coeffs.m(f), float), tq.shape)
            sqrtg = f["sqrtg"]
            itt = f["g22"] / det
            ith = -f["g12"] / det
            ithth = f["g11"] / det
            jac = 0.25 * h_t * h_th
            w = wx * wy * jac
            # physical gradients of the basis functions
            gt = dxi * (2.0 / h_t)
            gth = deta * (2.0 / h_th)
            for a in range(4):
                for b in range(a, 4):
                    grad = (
                        itt * gt[a] * gt[b]
                        + ith * (gt[a] * gth[b] + gth[a] * gt[b])
                        + ithth * gth[a] * gth[b]
                    )
                    kab = w * phi_q * sqrtg * grad
                    vab = w * m_q * sqrtg * n_ref[a] * n_ref[b]
                    mab = w * sqrtg * n_ref[a] * n_ref[b]
                    ke[a, b] += kab
                    ve[a, b] += vab
                    me[a, b] += mab
                    if b != a:
                        ke[b, a] += kab
                        ve[b, a] += vab
                        me[b, a] += mab

    rows = np.repeat(loc_nodes[:, None, :], 4, axis=1).ravel()
    cols = np.repeat(loc_nodes[None, :, :], 4, axis=0).ravel()

    def to_csr(el):
        mat = sp.coo_matrix((el.ravel(), (rows, cols)), shape=(n_nodes, n_nodes))
        return mat.tocsr()

    K = to_csr(ke)
    V = to_csr(ve)
    M = to_csr(me)

    # boundary mass on each boundary component (1D line elements in theta)
    b_rows, b_cols, b_vals = [], [], []
    rings = []
    conormal_scales = []
    for t_b in chart.boundary_components:
        i_row = 0 if abs(t_b - chart.t_min) < abs(t_b - chart.t_max) else n_t
        ring = dof(i_row, np.arange(n_th))
        rings.append(ring)
        nxt = np.roll(ring, -1)
        for xg, wx in zip(_GP, _GW):
            s = 0.5 * (1 + xg)
            thq = node_theta + s * h_th
            f = chart_fields(chart, np.full(n_th, node_t[i_row]), thq, tol)
            if phi_nodes is not None:
                phi_q = (1 - s) * phi_nodes[ring] + s * phi_nodes[nxt]
            else:
                phi_q = np.broadcast_to(np.asarray(coeffs.phi(f), float), thq.shape)
            line = np.sqrt(f["g22"])  # |X_theta|
            w = wx * 0.5 * h_th * phi_q * line
            sh = [(1 - s) * (1 - s), (1 - s) * s, s * (1 - s), s * s]
            pairs = [(ring, ring), (ring, nxt), (nxt, ring), (nxt, nxt)]
            for shape_ab, (ra, rb) in zip(sh, pairs):
                b_rows.append(ra)
                b_cols.append(rb)
                b_vals.append(w * shape_ab)
        fb = chart_fields(chart, np.full(n_th, node_t[i_row]), node_theta, tol)
        conormal_scales.append(1.0 / np.sqrt(fb["g11"]))
    B = sp.coo_matrix(
        (np.concatenate(b_vals), (np.concatenate(b_rows), np.concatenate(b_cols))),
        shape=(n_nodes, n_nodes),
    ).tocsr()

    boundary_idx = np.unique(np.concatenate(rings)) if rings else np.array([], int)
    mask = np.ones(n_nodes, bool)
    mask[boundary_idx] = False
    interior_idx = np.nonzero(mask)[0]

    return DiscreteOperator(
        K=K, V=V, M=M, B=B,
        interior_idx=interior_idx, boundary_idx=boundary_idx,
        boundary_rings=tuple(rings), conormal_scales=tuple(conormal_scales),
        node_t=node_t, node_theta=node_theta,
        chart=chart, alpha=float(coeffs.alpha), resolution=(n_t, n_th),
        phi_nodes=phi_nodes,
    )


def bilinear_S(op: DiscreteOperator, u: np.ndarray, v: np.ndarray,
               alpha: Optional[float] = None) -> float:
    """The index form u^T (K - V - alpha B) v."""
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    if u.shape != (op.n_dofs,) or v.shape != (op.n_dofs,):
        raise ValidationError("vector length does not match the dof count")
    a = op.alpha if alpha is None else alpha
    return float(u @ (op.K @ v) - u @ (op.V @ v) - a * (u @ (op.B @ v)))


def bilinear_S_quadrature(op: DiscreteOperator, u: np.ndarray, v: np.ndarray,
                          coeffs: CoefficientField,
                          tol: ToleranceProfile = DEFAULT_TOLERANCES) -> float:
    """Independent code path: quadrature of the S integrand from nodal data.

    Interpolates u, v bilinearly and integrates with the same Gauss rule;
    must agree with ``bilinear_S`` to roundoff.
    """
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    n_t, n_th = op.resolution
    h_t = op.node_t[1] - op.node_t[0]
    h_th = op.node_theta[1] - op.node_theta[0]

    def dof(i, j):
        return i * n_th + np.mod(j, n_th)

    ci = np.arange(n_t)[:, None]
    cj = np.arange(n_th)[None, :]
    locs = [dof(ci, cj), dof(ci + 1, cj), dof(ci, cj + 1), dof(ci + 1, cj + 1)]
    loc_nodes = np.stack([l.ravel() for l in locs])
    ue = u[loc_nodes]
    ve = v[loc_nodes]
    cell_t0 = (op.node_t[:-1][:, None] + np.zeros((1, n_th))).ravel()
    cell_th0 = (np.zeros((n_t, 1)) + op.node_theta[None, :]).ravel()

    total = 0.0
    for xg, wx in zip(_GP, _GW):
        for yg, wy in zip(_GP, _GW):
            n_ref, dxi, deta = _reference_basis(xg, yg)
            tq = cell_t0 + 0.5 * (1 + xg) * h_t
            thq = cell_th0 + 0.5 * (1 + yg) * h_th
            f = chart_fields(op.chart, tq, thq, tol)
            det = f["det"]
            if op.phi_nodes is not None:
                phi_q = n_ref @ op.phi_nodes[loc_nodes]
            else:
                phi_q = np.broadcast_to(np.asarray(coeffs.phi(f), float), tq.shape)
            m_q = np.broadcast_to(np.asarray(coeffs.m(f), float), tq.shape)
            uq = n_ref @ ue
            vq = n_ref @ ve
            u_t = (dxi * (2 / h_t)) @ ue
            u_th = (deta * (2 / h_th)) @ ue
            v_t = (dxi * (2 / h_t)) @ ve
            v_th = (deta * (2 / h_th)) @ ve
            itt = f["g22"] / det
            ith = -f["g12"] / det
            ithth = f["g11"] / det
            grad = (itt * u_t * v_t + ith * (u_t * v_th + u_th * v_t)
                    + ithth * u_th * v_th)
            w = wx * wy * 0.25 * h_t * h_th
            total += float(np.sum(w * f["sqrtg"] * (phi_q * grad - m_q * uq * vq)))
    # boundary part
    for ring, t_b in zip(op.boundary_rings, op.chart.boundary_components):
        i_row = 0 if abs(t_b - op.chart.t_min) < abs(t_b - op.chart.t_max) else n_t
        nxt = np.roll(ring, -1)
        for xg, wx in zip(_GP, _GW):
            s = 0.5 * (1 + xg)
            thq = op.node_theta + s * h_th
            f = chart_fields(op.chart, np.full(n_th, op.node_t[i_row]), thq, tol)
            if op.phi_nodes is not None:
                phi_q = (1 - s) * op.phi_nodes[ring] + s * op.phi_nodes[nxt]
            else:
                phi_q = np.broadcast_to(np.asarray(coeffs.phi(f), float), thq.shape)
            uq = (1 - s) * u[ring] + s * u[nxt]
            vq = (1 - s) * v[ring] + s * v[nxt]
            total -= coeffs.alpha * float(
                np.sum(wx * 0.5 * h_th * phi_q * np.sqrt(f["g22"]) * uq * vq))
    return total


def harmonic_extension(lap_op: DiscreteOperator, boundary_data) -> np.ndarray:
    """Discrete harmonic extension of boundary data given as a callable.

    ``boundary_data(t_b, theta)`` supplies the values on each boundary
    component; ``lap_op`` must be an assembly with phi = 1, m = 0.
    """
    from scipy.sparse.linalg import spsolve

    g = np.zeros(lap_op.n_dofs)
    for ring, t_b in zip(lap_op.boundary_rings, lap_op.chart.boundary_components):
        g[ring] = np.asarray(boundary_data(t_b, lap_op.node_theta), float)
    K = lap_op.K
    ii = lap_op.interior_idx
    bb = lap_op.boundary_idx
    K_ii = K[np.ix_(ii, ii)].tocsc()
    rhs = -K[np.ix_(ii, bb)] @ g[bb]
    out = g.copy()
    out[ii] = spsolve(K_ii, rhs)
    return out


def steklov_laplace_spectrum(
    chart: SurfaceChart, resolution: tuple[int, int] = (128, 128), k: int = 8,
    tol: ToleranceProfile = DEFAULT_TOLERANCES,
):
    """First k Steklov eigenvalues of the plain Laplacian on the chart."""
    from . import engine

    from .reports import SpectrumReport

    coeffs = CoefficientField(m=lambda f: np.zeros_like(f["g11"]))
    op = assemble(chart, coeffs, resolution, tol)
    nt = tol.null_tol_at(max(resolution))
    dtn = engine.build_dtn(op, nt)
    rep = engine.dtn_spectrum(dtn, k)
    return SpectrumReport(rep.eigenvalues, rep.cluster_tol, "laplace-steklov",
                          rep.labels, rep.warnings)
