"""Per-Fourier-mode 1D solvers on [-T, T] for the separated annulus problem.

Each mode n carries the operator f'' + (2/cosh^2 t - n^2) f with the
conformal weight c^2 cosh^2 t for fixed-boundary eigenvalues and the
boundary condition T f'(+-T) = +-delta f(+-T) for the Steklov-type
eigenvalues.  Two independent routes are provided: adaptive shooting from
t = 0 and a banded matrix discretization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.integrate import solve_ivp

from .geometry import (
    DEFAULT_TOLERANCES,
    ToleranceProfile,
    ValidationError,
    catenoid_parameters,
)
from .reports import SpectrumReport


@dataclass(frozen=True)
class ModeOperator:
    """Sampled coefficients of one Fourier mode on a uniform grid."""

    n: int
    grid: np.ndarray
    potential: np.ndarray       # 2/cosh^2 t - n^2
    weight: np.ndarray          # c^2 cosh^2 t
    boundary_scale: float       # T: the conormal derivative is T d/dt


@dataclass(frozen=True)
class SteklovBranch:
    n: int
    parity: str
    delta: float | None
    deflated: bool


def mode_operator(n: int, num_points: int = 1024) -> ModeOperator:
    """Catenoid mode operator with the standard potential and weight."""
    if n < 0:
        raise ValidationError("Fourier mode must be non-negative")
    T, c = catenoid_parameters()
    grid = np.linspace(-T, T, num_points + 1)
    return ModeOperator(
        n=n,
        grid=grid,
        potential=2.0 / np.cosh(grid) ** 2 - n * n,
        weight=c**2 * np.cosh(grid) ** 2,
        boundary_scale=T,
    )


def fixed_spectrum_1d(op: ModeOperator, k: int,
                      tol: ToleranceProfile = DEFAULT_TOLERANCES) -> SpectrumReport:
    """k smallest fixed-boundary eigenvalues of -(1/weight) L_n.

    Second-order central differences on the interior nodes; the weighted
    pencil is symmetrized by a diagonal similarity so a banded symmetric
    eigensolver applies.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    if op.grid.size < 65:
        raise ValidationError("grid size must be >= 64")
    h = op.grid[1] - op.grid[0]
    pot = op.potential[1:-1]
    w = op.weight[1:-1]
    diag = (2.0 / h**2 - pot) / w
    off = -1.0 / h**2 / np.sqrt(w[:-1] * w[1:])
    try:
        vals = sla.eigh_tridiagonal(diag, off, select="i", select_range=(0, k - 1))[0]
    except sla.LinAlgError as exc:  # pragma: no cover
        raise RuntimeError(
            f"banded eigensolver failed for mode n={op.n}; "
            f"diag range [{diag.min():.3e}, {diag.max():.3e}]"
        ) from exc
    labels = [(op.n, None)] * len(vals)
    return SpectrumReport.from_values(vals, tol.cluster_tol_numeric, "banded-1d", labels)


def steklov_spectrum_1d_shooting(
    n: int, T: float | None = None,
    tol: ToleranceProfile = DEFAULT_TOLERANCES,
) -> list[SteklovBranch]:
    """Both parity branches of the mode-n boundary eigenvalue by shooting.

    Integrates L_n f = 0 from t = 0 with even (f=1, f'=0) and odd
    (f=0, f'=1) data; delta = T f'(T) / f(T).  A branch whose profile
    vanishes at the boundary belongs to the fixed-boundary kernel and is
    marked deflated instead of producing an eigenvalue.
    """
    if n < 0:
        raise ValidationError("Fourier mode must be non-negative")
    if T is None:
        T, _ = catenoid_parameters()

    def rhs(t, y):
        return [y[1], (n * n - 2.0 / np.cosh(t) ** 2) * y[0]]

    out = []
    for parity, y0 in (("even", [1.0, 0.0]), ("odd", [0.0, 1.0])):
        sol = solve_ivp(
            rhs, (0.0, T), y0, method="RK45",
            rtol=tol.shooting_rtol, atol=tol.shooting_atol,
            t_eval=np.linspace(0.0, T, 201),
        )
        if not sol.success:  # pragma: no cover
            raise RuntimeError(f"shooting integration failed for n={n}, {parity}")
        f, fp = sol.y
        sup = float(np.max(np.abs(f)))
        if abs(f[-1]) < tol.deflation_ratio * sup:
            out.append(SteklovBranch(n, parity, None, True))
        else:
            out.append(SteklovBranch(n, parity, float(T * fp[-1] / f[-1]), False))
    return out


def steklov_deltas_two_point(potential, T: float,
                             tol: ToleranceProfile = DEFAULT_TOLERANCES) -> list[float]:
    """Boundary eigenvalues for a possibly t-asymmetric potential.

    Shoots two independent solutions across [-T, T]; the two boundary
    conditions T f'(T) = delta f(T) and -T f'(-T) = delta f(-T) give a
    2x2 homogeneous system whose determinant is a quadratic in delta,
    solved exactly.
    """
    def rhs(t, y):
        return [y[1], -potential(t) * y[0]]

    cols = []
    for y0 in ([1.0, 0.0], [0.0, 1.0]):
        sol = solve_ivp(rhs, (-T, T), y0, method="RK45",
                        rtol=tol.shooting_rtol, atol=tol.shooting_atol,
                        t_eval=[-T, T])
        cols.append((sol.y[0, 0], sol.y[1, 0], sol.y[0, -1], sol.y[1, -1]))
    # rows: [T f'(T) - d f(T)], [-T f'(-T) - d f(-T)] for each solution;
    # det is  (a1 - d b1)(a2 - d b2) - (a3 - d b3)(a4 - d b4)
    a1 = [T * c[3] for c in cols]      # T f'(T)
    b1 = [c[2] for c in cols]          # f(T)
    a2 = [-T * c[1] for c in cols]     # -T f'(-T)
    b2 = [c[0] for c in cols]          # f(-T)
    # quadratic coefficients of det([[a1_i - d b1_i],[a2_i - d b2_i]])
    ca = b1[0] * b2[1] - b1[1] * b2[0]
    cb = -(a1[0] * b2[1] + a2[1] * b1[0] - a1[1] * b2[0] - a2[0] * b1[1])
    cc = a1[0] * a2[1] - a1[1] * a2[0]
    roots = np.roots([ca, cb, cc])
    return sorted(float(np.real(r)) for r in roots)


def _p2_operator_matrix(n: int, T: float, elements: int) -> np.ndarray:
    """Quadratic-element discretization of -f'' - (2/cosh^2 - n^2) f.

    Pentadiagonal; fourth-order eigenvalue accuracy, which the
    shooting/banded cross-check needs.
    """
    m = 2 * elements + 1
    nodes = np.linspace(-T, T, m)
    h = 2 * T / elements
    A = np.zeros((m, m))
    Ke = (1.0 / (3 * h)) * np.array([[7, -8, 1], [-8, 16, -8], [1, -8, 7]], float)
    gx = np.array([0.5 - np.sqrt(15) / 10, 0.5, 0.5 + np.sqrt(15) / 10])
    gw = np.array([5.0, 8.0, 5.0]) / 18.0
    phi = np.stack([2 * (gx - 0.5) * (gx - 1), 4 * gx * (1 - gx), 2 * gx * (gx - 0.5)])
    for e in range(elements):
        i0 = 2 * e
        sl = slice(i0, i0 + 3)
        A[sl, sl] += Ke
        xg = nodes[i0] + gx * h
        qg = 2.0 / np.cosh(xg) ** 2 - n * n
        A[sl, sl] -= np.einsum("g,ig,jg->ij", gw * qg * h, phi, phi)
    return A


def steklov_spectrum_1d_banded(
    n: int, T: float | None = None, elements: int = 512,
    tol: ToleranceProfile = DEFAULT_TOLERANCES,
) -> list[SteklovBranch]:
    """Boundary eigenvalues via Schur complement of the banded matrix.

    The interior block is eliminated onto the two boundary nodes; a
    near-kernel of the Dirichlet block (the n=0 case) is deflated with a
    bordered solve and removes one of the two branches.
    """
    if T is None:
        T, _ = catenoid_parameters()
    A = _p2_operator_matrix(n, T, elements)
    m = A.shape[0]
    bi = [0, m - 1]
    Aii = A[1:-1, 1:-1]
    Aib = A[1:-1, bi]
    Abi = A[bi, 1:-1]
    Abb = A[np.ix_(bi, bi)]
    Bb = np.eye(2) / T  # boundary weight: measure c cosh T = 1/T per endpoint

    evals, evecs = sla.eigh(Aii, subset_by_index=(0, 2))
    j = int(np.argmin(np.abs(evals)))
    lam0 = evals[j]
    scale = float(np.max(np.abs(np.diag(Aii))))
    if abs(lam0) < 1e-8 * scale:
        w0 = evecs[:, j]
        bordered = np.block([[Aii, w0[:, None]], [w0[None, :], np.zeros((1, 1))]])
        X = np.linalg.solve(bordered, np.vstack([-Aib, np.zeros((1, 2))]))[:-1]
        S = Abb + Abi @ X
        trace = Abi @ w0  # B-weighted conormal trace of the kernel element
        comp = np.linalg.svd(trace[None, :])[2][1]
        delta = float((comp @ S @ comp) / (comp @ Bb @ comp))
        # which parity survived: the kernel element is even, so the
        # surviving branch is the odd one (and vice versa)
        kernel_parity = "even" if np.dot(w0, w0[::-1]) > 0 else "odd"
        survivor = "odd" if kernel_parity == "even" else "even"
        return [
            SteklovBranch(n, kernel_parity, None, True),
            SteklovBranch(n, survivor, delta, False),
        ]

    X = -np.linalg.solve(Aii, Aib)
    S = Abb + Abi @ X
    vals, vecs = sla.eigh(0.5 * (S + S.T), Bb)
    out = []
    for i in range(2):
        v = vecs[:, i]
        parity = "even" if v[0] * v[1] > 0 else "odd"
        out.append(SteklovBranch(n, parity, float(vals[i]), False))
    return out


def assemble_full_spectrum(
    n_max: int, T: float | None = None,
    tol: ToleranceProfile = DEFAULT_TOLERANCES,
    method: str = "shooting", elements: int = 512,
) -> SpectrumReport:
    """Merge per-mode boundary eigenvalues with their multiplicities."""
    if n_max < 1:
        raise ValidationError("n_max must be >= 1")
    values: list[float] = []
    labels: list[tuple] = []
    for n in range(n_max + 1):
        if method == "shooting":
            branches = steklov_spectrum_1d_shooting(n, T, tol)
        elif method == "banded":
            branches = steklov_spectrum_1d_banded(n, T, elements, tol)
        else:
            raise ValidationError(f"unknown 1D method: {method!r}")
        mult = 1 if n == 0 else 2
        for br in branches:
            if br.deflated:
                continue
            values.extend([br.delta] * mult)
            labels.extend([(n, br.parity)] * mult)
    return SpectrumReport.from_values(values, tol.cluster_tol_numeric, method, labels)
