"""The scalar nonlinearity N and the derived low-frequency profiles.

Three quantities ride on a state: the cumulative H^1 mass below a
frequency r, the frequency-filtered coefficient A(r) = N'(mass below r),
and the resummed correction F(r) = (1 + N(mass below r))^(-3/2).
Prefix sums are inclusive (lambda_k <= r) everywhere; every energy
functional must use the same convention or the cancellation identities
break by one mode mass.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .spectral import SpectralState, sobolev_norm_sq

__all__ = [
    "NonlinearitySpec",
    "FilteredProfile",
    "DegenerateNonlinearityError",
    "model_nonlinearity",
    "quadratic_nonlinearity",
    "polynomial_nonlinearity",
    "nonlinearity_from_config",
    "cumulative_mass",
    "filtered_A",
    "correction_F",
    "build_profile",
    "delta_gate",
]


class DegenerateNonlinearityError(ValueError):
    """Raised when 1 + N(mass) drops to or below zero (wave type lost)."""


@dataclass(frozen=True)
class NonlinearitySpec:
    """N with its first two derivatives and antiderivative (vectorized callables)."""

    eval: Callable
    d1: Callable
    d2: Callable
    antiderivative: Callable
    name: str = "custom"

    def check_consistency(self, rmax: float = 0.1, rel_tol: float = 1e-6) -> None:
        """Finite-difference sanity of d1, d2 and the antiderivative on [0, rmax]."""
        if self.eval(0.0) != 0.0:
            raise ValueError("nonlinearity must vanish at zero")
        rs = np.linspace(rmax * 0.05, rmax, 12)
        h = rmax * 1e-5
        scale = max(1.0, float(np.max(np.abs(self.d1(rs)))))
        fd1 = (self.eval(rs + h) - self.eval(rs - h)) / (2 * h)
        if np.max(np.abs(fd1 - self.d1(rs))) > rel_tol * scale:
            raise ValueError("d1 inconsistent with eval")
        fd2 = (self.eval(rs + h) - 2 * self.eval(rs) + self.eval(rs - h)) / h**2
        scale2 = max(1.0, float(np.max(np.abs(self.d2(rs)))))
        if np.max(np.abs(fd2 - self.d2(rs))) > 1e-4 * scale2:
            raise ValueError("d2 inconsistent with eval")
        fda = (self.antiderivative(rs + h) - self.antiderivative(rs - h)) / (2 * h)
        if np.max(np.abs(fda - self.eval(rs))) > rel_tol * scale:
            raise ValueError("antiderivative inconsistent with eval")


def model_nonlinearity(A: float) -> NonlinearitySpec:
    """N(r) = A r (constant wave-speed derivative; either sign allowed)."""
    A = float(A)
    return NonlinearitySpec(
        eval=lambda r: A * np.asarray(r, dtype=float),
        d1=lambda r: np.full_like(np.asarray(r, dtype=float), A),
        d2=lambda r: np.zeros_like(np.asarray(r, dtype=float)),
        antiderivative=lambda r: A * np.asarray(r, dtype=float) ** 2 / 2,
        name="model",
    )


def quadratic_nonlinearity(A: float, B: float) -> NonlinearitySpec:
    """N(r) = A r + B r^2."""
    A, B = float(A), float(B)
    return NonlinearitySpec(
        eval=lambda r: (A + B * np.asarray(r, dtype=float)) * np.asarray(r, dtype=float),
        d1=lambda r: A + 2 * B * np.asarray(r, dtype=float),
        d2=lambda r: np.full_like(np.asarray(r, dtype=float), 2 * B),
        antiderivative=lambda r: A * np.asarray(r, dtype=float) ** 2 / 2
        + B * np.asarray(r, dtype=float) ** 3 / 3,
        name="quadratic",
    )


def polynomial_nonlinearity(coefficients) -> NonlinearitySpec:
    """N(r) = sum_i c_i r^i for i >= 1; the constant term is forced to zero."""
    cs = [float(c) for c in coefficients]
    if not cs:
        raise ValueError("need at least one coefficient")
    # poly coefficients for numpy.polynomial, constant term 0
    p = np.polynomial.Polynomial([0.0] + cs)
    dp = p.deriv()
    ddp = dp.deriv()
    ip = p.integ()
    return NonlinearitySpec(
        eval=lambda r: p(np.asarray(r, dtype=float)),
        d1=lambda r: dp(np.asarray(r, dtype=float)),
        d2=lambda r: ddp(np.asarray(r, dtype=float)),
        antiderivative=lambda r: ip(np.asarray(r, dtype=float)),
        name="custom-polynomial",
    )


def nonlinearity_from_config(spec: dict) -> NonlinearitySpec:
    """Build a nonlinearity from its config dictionary (see config schema)."""
    name = spec.get("name")
    if name == "model":
        return model_nonlinearity(spec["A"])
    if name == "quadratic":
        return quadratic_nonlinearity(spec["A"], spec.get("B", 0.0))
    if name == "custom-polynomial":
        return polynomial_nonlinearity(spec["coefficients"])
    raise ValueError(f"unknown nonlinearity {name!r}")


@dataclass(frozen=True)
class FilteredProfile:
    """C, A, F cached at every grid point (inclusive prefixes, one pass)."""

    state: SpectralState
    c_prefix: np.ndarray
    a_values: np.ndarray
    f_values: np.ndarray
    below_min: tuple  # (C, A, F) for r < lambda_1


def cumulative_mass(state: SpectralState, r: float) -> float:
    """H^1 mass carried by modes with lambda_k <= r (inclusive)."""
    if r < 0:
        raise ValueError("r must be non-negative")
    lam = state.grid.lambdas
    n = int(np.searchsorted(lam, r, side="right"))
    if n == 0:
        return 0.0
    terms = state.grid.weights[:n] * lam[:n] ** 2 * np.abs(state.u_hat[:n]) ** 2
    return float(np.add.reduce(terms))


def filtered_A(state: SpectralState, N: NonlinearitySpec, r: float) -> float:
    """N' evaluated at the cumulative mass below r."""
    return float(N.d1(cumulative_mass(state, r)))


def _check_wave_type(one_plus_n, index=None):
    bad = np.asarray(one_plus_n) <= 0.0
    if np.any(bad):
        where = int(np.argmax(bad)) if index is None else index
        raise DegenerateNonlinearityError(
            f"nonlinearity degenerate at this data size (mode index {where})"
        )
    if np.any(np.asarray(one_plus_n) <= 0.5):
        warnings.warn("1 + N(C) fell below 1/2; wave-type margin is thin", stacklevel=3)


def correction_F(state: SpectralState, N: NonlinearitySpec, r: float) -> float:
    """(1 + N(cumulative mass below r))^(-3/2)."""
    base = 1.0 + float(N.eval(cumulative_mass(state, r)))
    _check_wave_type(base)
    return float(base ** -1.5)


def build_profile(state: SpectralState, N: NonlinearitySpec) -> FilteredProfile:
    lam = state.grid.lambdas
    masses = state.grid.weights * lam**2 * np.abs(state.u_hat) ** 2
    c_prefix = np.cumsum(masses)
    a_values = np.asarray(N.d1(c_prefix), dtype=float)
    base = 1.0 + np.asarray(N.eval(c_prefix), dtype=float)
    _check_wave_type(base)
    f_values = base**-1.5
    below = (0.0, float(N.d1(0.0)), 1.0)
    return FilteredProfile(state, c_prefix, a_values, f_values, below)


def delta_gate(N: NonlinearitySpec, s0: float) -> float:
    """Largest H^1 x L^2 size at which the smallness assumptions hold.

    Model case: the closed form 1/sqrt(8 (1+s0) |A|).  General case:
    bisection on wave-type margin (1 + N >= 1/2) together with
    correction dominance (4 max|N'| (1+s0) delta^2 <= 1/2), which is the
    pair of conditions the model-case closed form encodes.
    """
    if N.name == "model":
        A = float(N.d1(0.0))
        if A == 0.0:
            return float("inf")
        return 1.0 / np.sqrt(8.0 * (1.0 + s0) * abs(A))

    def ok(delta: float) -> bool:
        m = delta * delta
        rs = np.linspace(0.0, m, 64)
        if np.any(1.0 + np.asarray(N.eval(rs)) < 0.5):
            return False
        amax = float(np.max(np.abs(N.d1(rs))))
        if amax == 0.0:
            return True
        return 4.0 * amax * (1.0 + s0) * m <= 0.5

    hi = 1e3
    if ok(hi):
        return float("inf")
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo
