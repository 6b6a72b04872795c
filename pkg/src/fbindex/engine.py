"""Spectral solvers on assembled operators: fixed spectrum and boundary map.

The fixed-boundary pencil (K - V)_II u = lambda M_II u is solved by
shift-invert iteration around 0.  The boundary (Dirichlet-to-Neumann type)
map is the Schur complement of the interior block onto the boundary dofs;
when the fixed-boundary problem has a numerical kernel, the boundary data
is deflated against the kernel's conormal traces and the interior solves
are replaced by bordered systems.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import DiscreteOperator
from .geometry import DEFAULT_TOLERANCES, ValidationError
from .reports import SpectrumReport


def _interior_pencil(op: DiscreteOperator):
    A = op.K - op.V
    A = 0.5 * (A + A.T)
    ii = op.interior_idx
    bb = op.boundary_idx
    A_II = A[np.ix_(ii, ii)].tocsc()
    A_IB = A[np.ix_(ii, bb)].tocsr()
    A_BI = A[np.ix_(bb, ii)].tocsr()
    A_BB = A[np.ix_(bb, bb)].toarray()
    M_II = op.M[np.ix_(ii, ii)].tocsc()
    return A_II, A_IB, A_BI, A_BB, M_II


def fixed_spectrum(
    op: DiscreteOperator, k: int = 8, null_tol: Optional[float] = None,
    cluster_tol: float = DEFAULT_TOLERANCES.cluster_tol_numeric,
) -> SpectrumReport:
    """k smallest eigenvalues of the interior-restricted pencil.

    Eigenvalues with magnitude below ``null_tol`` are flagged in the report
    warnings as the null cluster.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    A_II, _, _, _, M_II = _interior_pencil(op)
    vals = spla.eigsh(
        A_II, k=k, M=M_II, sigma=0.0, which="LM",
        return_eigenvectors=False,
    )
    vals = np.sort(vals)
    warnings = []
    if null_tol is not None:
        null = int(np.sum(np.abs(vals) <= null_tol))
        if null:
            warnings.append(f"fixed-boundary null cluster of dimension {null}")
    labels = _fixed_labels(op, k)
    return SpectrumReport.from_values(vals, cluster_tol, "full-2d",
                                      labels, warnings)


def _fixed_labels(op: DiscreteOperator, k: int):
    """Fourier-mode tags for the fixed eigenvectors (dominant frequency)."""
    A_II, _, _, _, M_II = _interior_pencil(op)
    try:
        vals, vecs = spla.eigsh(A_II, k=k, M=M_II, sigma=0.0, which="LM")
    except Exception:  # pragma: no cover - labeling is best-effort
        return None
    order = np.argsort(vals)
    n_th = op.resolution[1]
    labels = []
    for j in order:
        v = np.zeros(op.K.shape[0])
        v[op.interior_idx] = vecs[:, j]
        rows = v.reshape(-1, n_th)
        row = rows[np.argmax(np.linalg.norm(rows, axis=1))]
        spec = np.abs(np.fft.rfft(row))
        labels.append((int(np.argmax(spec)), None))
    return labels


@dataclass(frozen=True)
class DtNMap:
    """Boundary Schur complement with optional kernel deflation data.

    ``S_bb`` maps boundary values to weak conormal data; eigenvalues of
    (S_bb, B_bb) on the deflated subspace are the boundary-map spectrum.
    Kernel data: ``kernel_vectors`` are interior-mass-orthonormal
    eigenvectors of the near-null fixed cluster, ``kernel_boundary_traces``
    their conormal trace functions, B-orthonormalized, and ``trace_coeff``
    the change of basis with ``kernel_vectors @ trace_coeff`` matching the
    traces.
    """

    S_bb: np.ndarray
    B_bb: np.ndarray
    kernel_dim: int
    kernel_eigenvalues: np.ndarray
    kernel_vectors: np.ndarray            # (n_interior, kd)
    kernel_raw_traces: np.ndarray         # (n_boundary, kd): A_BI @ kernel_vectors
    kernel_boundary_traces: np.ndarray    # (n_boundary, kd), B-orthonormal
    trace_coeff: np.ndarray               # (kd, kd)
    op: DiscreteOperator
    warnings: tuple = ()
    _solver: object = field(default=None, repr=False, compare=False)

    def deflate(self, h: np.ndarray) -> np.ndarray:
        """Project boundary data B-orthogonal to the kernel traces."""
        h = np.asarray(h, float)
        if self.kernel_dim == 0:
            return h
        C = self.kernel_boundary_traces
        return h - C @ (C.T @ (self.B_bb @ h))

    @property
    def deflation_projector(self) -> np.ndarray:
        n = self.B_bb.shape[0]
        if self.kernel_dim == 0:
            return np.eye(n)
        C = self.kernel_boundary_traces
        return np.eye(n) - C @ (C.T @ self.B_bb)


def build_dtn(
    op: DiscreteOperator, null_tol: float,
    fixed: Optional[SpectrumReport] = None,
) -> DtNMap:
    """Schur complement of the interior block onto the boundary dofs.

    Interior eigenvalues with |lambda| <= null_tol form the kernel; the
    Schur solves are then bordered with the mass-weighted kernel vectors so
    the complement stays well conditioned, and the kernel's conormal traces
    are recorded for deflation.  Eigenvalues within 10x of the threshold
    (on either side) produce instability warnings.
    """
    A_II, A_IB, A_BI, A_BB, M_II = _interior_pencil(op)
    n_b = len(op.boundary_idx)
    B_bb = op.B[np.ix_(op.boundary_idx, op.boundary_idx)].toarray()
    B_bb = 0.5 * (B_bb + B_bb.T)

    probe = min(6, A_II.shape[0] - 2)
    vals, vecs = spla.eigsh(A_II, k=probe, M=M_II, sigma=0.0, which="LM")
    order = np.argsort(np.abs(vals))
    vals, vecs = vals[order], vecs[:, order]
    in_kernel = np.abs(vals) <= null_tol
    kd = int(np.sum(in_kernel))
    warnings = []
    unstable = (np.abs(vals) > null_tol) & (np.abs(vals) <= 10 * null_tol)
    for v in vals[unstable]:
        warnings.append(
            f"fixed eigenvalue {v:.3e} within 10x of kernel threshold {null_tol:.1e}"
        )
    for v in vals[in_kernel & (np.abs(vals) > 0.5 * null_tol)]:
        warnings.append(
            f"kernel eigenvalue {v:.3e} within 2x of kernel threshold {null_tol:.1e}"
        )

    if kd == 0:
        solver = spla.splu(A_II)
        X = solver.solve(-A_IB.toarray())
        S = A_BB + A_BI @ X
        return DtNMap(
            S_bb=0.5 * (S + S.T), B_bb=B_bb, kernel_dim=0,
            kernel_eigenvalues=np.zeros(0),
            kernel_vectors=np.zeros((A_II.shape[0], 0)),
            kernel_raw_traces=np.zeros((n_b, 0)),
            kernel_boundary_traces=np.zeros((n_b, 0)),
            trace_coeff=np.zeros((0, 0)),
            op=op, warnings=tuple(warnings), _solver=solver,
        )

    lam = vals[in_kernel]
    W = vecs[:, in_kernel]
    # M-orthonormalize (eigsh already returns M-orthonormal vectors; enforce)
    G = W.T @ (M_II @ W)
    W = W @ np.linalg.inv(np.linalg.cholesky(G)).T
    R = A_BI @ W                       # weak conormal functionals of the kernel
    trace_scale = float(np.max(np.abs(A_BB))) or 1.0
    if np.max(np.abs(R)) < 1e-10 * trace_scale:
        warnings.append(
            "kernel conormal traces numerically zero; proceeding without deflation"
        )
        solver = spla.splu(A_II)
        X = solver.solve(-A_IB.toarray())
        S = A_BB + A_BI @ X
        return DtNMap(
            S_bb=0.5 * (S + S.T), B_bb=B_bb, kernel_dim=0,
            kernel_eigenvalues=lam, kernel_vectors=W,
            kernel_raw_traces=R, kernel_boundary_traces=np.zeros((n_b, 0)),
            trace_coeff=np.zeros((0, 0)),
            op=op, warnings=tuple(warnings), _solver=solver,
        )

    # B-orthonormalize the trace functions B^{-1} R
    C_raw = np.linalg.solve(B_bb, R)
    gram = C_raw.T @ (B_bb @ C_raw)
    coeff = np.linalg.inv(np.linalg.cholesky(gram)).T
    C = C_raw @ coeff

    Gm = M_II @ W
    bordered = sp.bmat(
        [[A_II, sp.csc_matrix(Gm)], [sp.csc_matrix(Gm.T), None]], format="csc"
    )
    solver = spla.splu(bordered)
    rhs = np.vstack([-A_IB.toarray(), np.zeros((kd, n_b))])
    X = solver.solve(rhs)[:-kd]
    S = A_BB + A_BI @ X

    return DtNMap(
        S_bb=0.5 * (S + S.T), B_bb=B_bb, kernel_dim=kd,
        kernel_eigenvalues=lam, kernel_vectors=W,
        kernel_raw_traces=R, kernel_boundary_traces=C, trace_coeff=coeff,
        op=op, warnings=tuple(warnings), _solver=solver,
    )


def dtn_spectrum(
    dtn: DtNMap, k: int = 12,
    cluster_tol: float = DEFAULT_TOLERANCES.cluster_tol_numeric,
) -> SpectrumReport:
    """k smallest boundary-map eigenvalues on the deflated subspace.

    Dense symmetric generalized solve after Cholesky of the boundary mass;
    when a kernel is present the spectrum is computed on the B-orthogonal
    complement of the kernel traces.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    L = np.linalg.cholesky(dtn.B_bb)
    S_hat = np.linalg.solve(L, np.linalg.solve(L, dtn.S_bb).T).T
    S_hat = 0.5 * (S_hat + S_hat.T)
    n = S_hat.shape[0]
    if dtn.kernel_dim:
        c_hat = L.T @ dtn.kernel_boundary_traces      # orthonormal columns
        u_full = np.linalg.svd(c_hat, full_matrices=True)[0]
        Q = u_full[:, dtn.kernel_dim:]                # orthonormal complement
        vals, y = np.linalg.eigh(Q.T @ S_hat @ Q)
        vecs_hat = Q @ y
    else:
        vals, vecs_hat = np.linalg.eigh(S_hat)
    k = min(k, len(vals))
    vecs = np.linalg.solve(L.T, vecs_hat[:, :k])
    labels = _dtn_labels(dtn, vecs)
    return SpectrumReport.from_values(vals[:k], cluster_tol, "full-2d",
                                      labels, dtn.warnings)


def _dtn_labels(dtn: DtNMap, vecs: np.ndarray):
    """Fourier mode from the boundary rings; parity from ring correlation."""
    op = dtn.op
    ring_pos = [np.searchsorted(op.boundary_idx, ring)
                for ring in op.boundary_rings]
    labels = []
    for j in range(vecs.shape[1]):
        v = vecs[:, j]
        ring_vals = [v[pos] for pos in ring_pos]
        spec = sum(np.abs(np.fft.rfft(rv)) for rv in ring_vals)
        n = int(np.argmax(spec))
        parity = None
        if len(ring_vals) == 2:
            corr = float(np.dot(ring_vals[0], ring_vals[1]))
            scale = np.linalg.norm(ring_vals[0]) * np.linalg.norm(ring_vals[1])
            if scale > 0 and abs(corr) > 0.5 * scale:
                parity = "even" if corr > 0 else "odd"
        labels.append((n, parity))
    return labels


def harmonic_like_extension(op: DiscreteOperator, dtn: DtNMap,
                            h: np.ndarray) -> np.ndarray:
    """Extension of boundary data annihilated by the interior operator rows.

    With a kernel present the solve is bordered (mass-orthogonality to the
    kernel vectors) and the result is corrected by kernel components so
    that its weak conormal data is B-orthogonal to the kernel traces.
    """
    h = np.asarray(h, float)
    if h.shape != (len(op.boundary_idx),):
        raise ValidationError("boundary data length does not match boundary dofs")
    A_II, A_IB, A_BI, A_BB, _ = _interior_pencil(op)
    u = np.zeros(op.K.shape[0])
    u[op.boundary_idx] = h
    if dtn.kernel_dim == 0:
        u[op.interior_idx] = dtn._solver.solve(-(A_IB @ h))
        return u
    kd = dtn.kernel_dim
    rhs = np.concatenate([-(A_IB @ h), np.zeros(kd)])
    u_i = dtn._solver.solve(rhs)[:-kd]
    # conormal correction: add kernel components so the weak conormal data
    # of the extension is B-orthogonal to the kernel traces
    d = A_BI @ u_i + A_BB @ h
    C, R, W = dtn.kernel_boundary_traces, dtn.kernel_raw_traces, dtn.kernel_vectors
    beta = np.linalg.solve(C.T @ R, -(C.T @ d))
    u[op.interior_idx] = u_i + W @ beta
    return u
