"""Closed-form spectrum of the weighted Steklov problem on the critical catenoid.

Per Fourier mode n the radial profile solves f'' + (2/cosh^2 t - n^2) f = 0
on [-T, T] with T f'(T) = delta f(T); the eigenvalues delta are available in
closed form and serve as the exact oracle for every numerical solver in the
package.  The ladder operators D+/- = d/dt +- tanh t factor the mode
operator and generate the profiles.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .certify import IndexCertificate
from .geometry import ValidationError, catenoid_parameters


@dataclass(frozen=True)
class ModeEigenpair:
    """One radial eigenbranch: Fourier mode, parity in t, eigenvalue.

    ``multiplicity`` counts the (cos n theta, sin n theta) pair as 2 for
    n >= 1; the profile callable returns the radial factor f(t) and
    ``dprofile`` its derivative.
    """

    n: int
    parity: str  # "even" | "odd"
    delta: float
    multiplicity: int
    profile: Callable[[np.ndarray], np.ndarray]
    dprofile: Callable[[np.ndarray], np.ndarray]

    def as_record(self) -> dict:
        return {"n": self.n, "parity": self.parity,
                "delta": self.delta, "multiplicity": self.multiplicity}


def _boundary_quotient(pair_T: float, f, df) -> float:
    """delta = T f'(T) / f(T), the defining boundary condition."""
    return float(pair_T * df(pair_T) / f(pair_T))


def _displayed_delta(n: int, T: float, parity: str) -> float:
    """The quotient formulas for n >= 2, evaluated literally."""
    th = np.tanh(T)
    sech2 = 1.0 / np.cosh(T) ** 2
    ep, em = np.exp(n * T), np.exp(-n * T)
    top_p = (n * (n - th) - sech2) * ep
    top_m = (n * (n + th) - sech2) * em
    if parity == "even":
        return T * (top_p - top_m) / ((n - th) * ep + (n + th) * em)
    return T * (top_p + top_m) / ((n - th) * ep - (n + th) * em)


def _mode_pairs(n: int, T: float) -> list[ModeEigenpair]:
    if n == 0:
        f = np.tanh
        df = lambda t: 1.0 / np.cosh(t) ** 2
        return [ModeEigenpair(0, "odd", _boundary_quotient(T, f, df), 1, f, df)]
    if n == 1:
        f_e = lambda t: 1.0 / np.cosh(t)
        df_e = lambda t: -np.tanh(t) / np.cosh(t)
        f_o = lambda t: np.sinh(t) + t / np.cosh(t)
        df_o = lambda t: np.cosh(t) + (1.0 - t * np.tanh(t)) / np.cosh(t)
        return [
            ModeEigenpair(1, "even", _boundary_quotient(T, f_e, df_e), 2, f_e, df_e),
            ModeEigenpair(1, "odd", _boundary_quotient(T, f_o, df_o), 2, f_o, df_o),
        ]

    def branch(sign: float, parity: str) -> ModeEigenpair:
        def f(t):
            t = np.asarray(t, float)
            return (n - np.tanh(t)) * np.exp(n * t) + sign * (n + np.tanh(t)) * np.exp(-n * t)

        def df(t):
            t = np.asarray(t, float)
            sech2 = 1.0 / np.cosh(t) ** 2
            return ((n * (n - np.tanh(t)) - sech2) * np.exp(n * t)
                    - sign * (n * (n + np.tanh(t)) - sech2) * np.exp(-n * t))

        delta = _boundary_quotient(T, f, df)
        displayed = _displayed_delta(n, T, parity)
        if abs(delta - displayed) > 1e-12 * max(1.0, abs(delta)):
            raise AssertionError(
                f"boundary quotient and displayed formula disagree at n={n}: "
                f"{delta!r} vs {displayed!r}"
            )
        return ModeEigenpair(n, parity, delta, 2, f, df)

    return [branch(+1.0, "even"), branch(-1.0, "odd")]


def companion_profile_n0() -> Callable[[np.ndarray], np.ndarray]:
    """The even n=0 solution 1 - t tanh t; a multiple of the support
    function, it vanishes at t = +-T and is excluded from the spectrum."""
    return lambda t: 1.0 - np.asarray(t, float) * np.tanh(t)


def closed_form_spectrum(n_max: int = 12) -> list[ModeEigenpair]:
    """All eigenbranches with Fourier mode n <= n_max, sorted by eigenvalue."""
    if n_max < 0:
        raise ValidationError("n_max must be >= 0")
    T, _ = catenoid_parameters()
    pairs = [p for n in range(n_max + 1) for p in _mode_pairs(n, T)]
    pairs.sort(key=lambda p: (p.delta, p.n, p.parity))
    return pairs


def closed_form_index() -> IndexCertificate:
    """Index certificate of the critical catenoid from the exact spectrum."""
    T, _ = catenoid_parameters()
    return IndexCertificate(
        fixed_negative=0,
        fixed_null=1,
        dtn_below_alpha=3,  # 1/sinh^2 T once, -1 twice
        dtn_at_alpha=2,
        alpha=1.0,
        index=4,
        nullity=3,
        method="closed-form",
        tolerances={},
        warnings=(),
    )


def ladder_apply(direction: str, f: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Apply D+ or D- to samples of f on a uniform grid over [-T, T].

    The derivative uses second-order central differences with one-sided
    second-order closures at the ends.
    """
    f = np.asarray(f, float)
    grid = np.asarray(grid, float)
    if grid.size < 16:
        raise ValidationError("grid too coarse for the ladder operators")
    df = np.gradient(f, grid, edge_order=2)
    tanh = np.tanh(grid)
    if direction == "plus":
        return df + tanh * f
    if direction == "minus":
        return df - tanh * f
    raise ValidationError(f"unknown ladder direction: {direction!r}")


def growth_coefficients() -> tuple[float, float, float]:
    """Quadratic coefficients (a, b, c) of the n >= 2 growth ratio."""
    T, _ = catenoid_parameters()
    a = T
    b = 1.0 + T * np.tanh(T)
    c = np.tanh(T) - T / np.cosh(T) ** 2
    return a, b, c


def growth_check_n_ge_2(n_hi: int = 50) -> bool:
    """True iff delta > 1 on both parity branches for n = 2..n_hi.

    Also cross-checks the growth ratio phi(n) > 1 built from the quadratic
    coefficients, and that exp(2nT) exceeds 54 already at n = 2.
    """
    T, _ = catenoid_parameters()
    a, b, c = growth_coefficients()
    if np.exp(2 * 2 * T) < 54.0:
        return False
    for n in range(2, n_hi + 1):
        for pair in _mode_pairs(n, T):
            if pair.delta <= 1.0:
                return False
        phi = ((a * n**2 - b * n + c) / (a * n**2 + b * n + c)) * np.exp(2 * n * T)
        if phi <= 1.0:
            return False
    return True


def spectrum_to_json(pairs: list[ModeEigenpair]) -> str:
    return json.dumps([p.as_record() for p in pairs], indent=2)


def spectrum_to_csv(pairs: list[ModeEigenpair]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["n", "parity", "delta", "multiplicity"])
    for p in pairs:
        w.writerow([p.n, p.parity, repr(p.delta), p.multiplicity])
    return buf.getvalue()
