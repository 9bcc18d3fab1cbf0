"""Discrete spectral measures and the solution pair (u, u') in frequency space.

A solution is carried as complex amplitudes per radial frequency shell
lambda_k, with quadrature weights w_k.  Everything downstream (norms,
energies, dynamics) is a weighted sum over this grid, so the usual
continuum integrals become exact finite sums.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "FrequencyGrid",
    "SpectralState",
    "NormPair",
    "sobolev_norm_sq",
    "pair_norm",
    "rescale_to",
    "build_two_mode",
    "build_random_decay",
    "truncate",
    "state_to_json",
    "state_from_json",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class FrequencyGrid:
    """Strictly increasing positive frequency magnitudes with positive weights."""

    lambdas: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        lam = _readonly(np.asarray(self.lambdas, dtype=float))
        w = _readonly(np.asarray(self.weights, dtype=float))
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "weights", w)
        if lam.ndim != 1 or w.ndim != 1 or lam.shape != w.shape:
            raise ValueError("lambdas and weights must be 1-d arrays of equal length")
        if lam.size < 1:
            raise ValueError("grid must contain at least one mode")
        if not np.all(lam > 0):
            raise ValueError("all frequencies must be positive")
        if not np.all(np.diff(lam) > 0):
            raise ValueError("frequencies must be strictly increasing")
        if not np.all(w > 0):
            raise ValueError("all weights must be positive")

    @classmethod
    def from_unsorted(cls, lambdas, weights) -> "FrequencyGrid":
        """Sort ascending and merge duplicate frequencies by summing weights."""
        lam = np.asarray(lambdas, dtype=float)
        w = np.asarray(weights, dtype=float)
        order = np.argsort(lam, kind="stable")
        lam, w = lam[order], w[order]
        uniq, inv = np.unique(lam, return_inverse=True)
        merged = np.zeros_like(uniq)
        np.add.at(merged, inv, w)
        return cls(uniq, merged)

    def __len__(self) -> int:
        return int(self.lambdas.size)


@dataclass(frozen=True)
class SpectralState:
    """The pair (u, u') at one time: complex amplitudes per grid mode."""

    grid: FrequencyGrid
    u_hat: np.ndarray
    v_hat: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        u = _readonly(np.asarray(self.u_hat, dtype=complex))
        v = _readonly(np.asarray(self.v_hat, dtype=complex))
        object.__setattr__(self, "u_hat", u)
        object.__setattr__(self, "v_hat", v)
        n = len(self.grid)
        if u.shape != (n,) or v.shape != (n,):
            raise ValueError("amplitude arrays must match the grid length")
        if not (np.all(np.isfinite(u.view(float))) and np.all(np.isfinite(v.view(float)))):
            raise ValueError("amplitudes must be finite")

    def replace_amplitudes(self, u_hat, v_hat, time=None) -> "SpectralState":
        t = self.time if time is None else float(time)
        return SpectralState(self.grid, u_hat, v_hat, t)


@dataclass(frozen=True)
class NormPair:
    pos: float
    vel: float

    def __post_init__(self):
        if not (np.isfinite(self.pos) and np.isfinite(self.vel)):
            raise ValueError("norms must be finite")
        if self.pos < 0 or self.vel < 0:
            raise ValueError("norms must be non-negative")

    @property
    def combined(self) -> float:
        return float(np.hypot(self.pos, self.vel))


def sobolev_norm_sq(state: SpectralState, sigma: float) -> float:
    """sum_k w_k lambda_k^(2*sigma) |u_hat_k|^2, summed in ascending order."""
    lam = state.grid.lambdas
    terms = state.grid.weights * lam ** (2.0 * sigma) * np.abs(state.u_hat) ** 2
    out = float(np.add.reduce(terms))
    if not np.isfinite(out):
        raise ValueError(f"Sobolev norm overflowed at sigma={sigma}")
    return out


def _norm_sq(grid: FrequencyGrid, amps: np.ndarray, sigma: float) -> float:
    terms = grid.weights * grid.lambdas ** (2.0 * sigma) * np.abs(amps) ** 2
    out = float(np.add.reduce(terms))
    if not np.isfinite(out):
        raise ValueError(f"Sobolev norm overflowed at sigma={sigma}")
    return out


def pair_norm(state: SpectralState, s: float) -> NormPair:
    """(|u|_{H^{1+s}}, |u'|_{H^s}) as a pair."""
    pos = np.sqrt(_norm_sq(state.grid, state.u_hat, 1.0 + s))
    vel = np.sqrt(_norm_sq(state.grid, state.v_hat, s))
    return NormPair(float(pos), float(vel))


def rescale_to(state: SpectralState, target: float, space_exponent: float) -> SpectralState:
    """Scale amplitudes by one real factor so the pair norm at the given
    regularity equals target."""
    if target <= 0:
        raise ValueError("target must be positive")
    current = pair_norm(state, space_exponent).combined
    if current == 0.0:
        raise ValueError("cannot rescale zero state")
    c = target / current
    return state.replace_amplitudes(c * state.u_hat, c * state.v_hat)


def build_two_mode(lambda1: float, lambda2: float, c_plus, c_minus) -> SpectralState:
    """Two-mode state from oscillator coefficients c+/c- per mode.

    u_hat = c+ + c-,  v_hat = i*lambda*(c+ - c-), so that the free flow
    (N = 0) is exactly c+ e^{i lam t} + c- e^{-i lam t}.
    """
    if lambda1 <= 0 or lambda2 <= 0:
        raise ValueError("frequencies must be positive")
    if lambda1 == lambda2:
        raise ValueError("frequencies must be distinct")
    cp = np.asarray(c_plus, dtype=complex)
    cm = np.asarray(c_minus, dtype=complex)
    if cp.shape != (2,) or cm.shape != (2,):
        raise ValueError("c_plus and c_minus must each give one coefficient per mode")
    lam = np.array([lambda1, lambda2], dtype=float)
    if lambda1 > lambda2:
        lam = lam[::-1]
        cp, cm = cp[::-1], cm[::-1]
    grid = FrequencyGrid(lam, np.ones(2))
    u = cp + cm
    v = 1j * lam * (cp - cm)
    return SpectralState(grid, u, v, 0.0)


def build_random_decay(
    M: int,
    lambda_min: float,
    lambda_max: float,
    regularity: float,
    margin: float,
    seed: int,
) -> SpectralState:
    """Seeded power-law data on a log-uniform grid.

    Weights are the log-measure spacing, so sum_k w_k f(lambda_k)
    approximates the integral of f against dlambda/lambda; amplitude decay
    lambda^{-(1+regularity)-margin} then puts the state in
    H^{1+regularity} x H^{regularity} with margin to spare (margin = 0 is
    the borderline log-divergent case).
    """
    if M < 2:
        raise ValueError("need at least two modes")
    if not (0 < lambda_min < lambda_max):
        raise ValueError("require 0 < lambda_min < lambda_max")
    if margin < 0:
        raise ValueError("margin must be non-negative")
    span = np.log(lambda_max / lambda_min)
    # midpoints of M equal cells in log space
    cells = (np.arange(M) + 0.5) / M
    lam = lambda_min * np.exp(span * cells)
    w = np.full(M, span / M)
    rng = np.random.default_rng(seed)
    phase_u = np.exp(2j * np.pi * rng.random(M))
    phase_v = np.exp(2j * np.pi * rng.random(M))
    u = lam ** (-(1.0 + regularity) - margin) * phase_u
    v = lam ** (-regularity - margin) * phase_v
    return SpectralState(FrequencyGrid(lam, w), u, v, 0.0)


def truncate(state: SpectralState, cutoff: float) -> SpectralState:
    """Keep modes with lambda_k <= cutoff (possibly none)."""
    if cutoff <= 0:
        raise ValueError("cutoff must be positive")
    keep = state.grid.lambdas <= cutoff
    if np.all(keep):
        return state
    if not np.any(keep):
        # empty spectral measure: represent as a single zero-amplitude mode
        # at the smallest grid frequency so the grid invariant (M >= 1) holds
        grid = FrequencyGrid(state.grid.lambdas[:1], state.grid.weights[:1])
        z = np.zeros(1, dtype=complex)
        return SpectralState(grid, z, z, state.time)
    grid = FrequencyGrid(state.grid.lambdas[keep], state.grid.weights[keep])
    return SpectralState(grid, state.u_hat[keep], state.v_hat[keep], state.time)


def state_to_json(state: SpectralState) -> str:
    modes = []
    for k in range(len(state.grid)):
        modes.append(
            {
                "lambda": float(state.grid.lambdas[k]),
                "weight": float(state.grid.weights[k]),
                "u_re": float(state.u_hat[k].real),
                "u_im": float(state.u_hat[k].imag),
                "v_re": float(state.v_hat[k].real),
                "v_im": float(state.v_hat[k].imag),
            }
        )
    return json.dumps({"time": state.time, "modes": modes})


def state_from_json(text: str) -> SpectralState:
    doc = json.loads(text)
    modes = doc["modes"]
    lam = np.array([m["lambda"] for m in modes], dtype=float)
    w = np.array([m["weight"] for m in modes], dtype=float)
    u = np.array([complex(m["u_re"], m["u_im"]) for m in modes])
    v = np.array([complex(m["v_re"], m["v_im"]) for m in modes])
    return SpectralState(FrequencyGrid(lam, w), u, v, float(doc["time"]))
