"""Energy functionals: the unmodified energy, the second-order pair
correction, the cubic normal-form terms, and the asymmetry term.

All double/triple sums here have min-kernels: the coefficient depends on
the participating frequencies only through their minimum (plus separable
per-mode factors).  After sorting, those collapse to prefix/suffix sums,
giving O(M) fast paths.  The one genuinely non-separable kernel is the
divided difference (l1^2s - l2^2s)/(l1^2 - l2^2) in the b/c parts, which
stays an explicit O(M^2) blocked sum.

Reference implementations (vectorized O(M^2) matrix sums) are kept
alongside the fast paths; the test suite holds them equal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nonlinearity import FilteredProfile, NonlinearitySpec, build_profile
from .spectral import SpectralState, sobolev_norm_sq

__all__ = [
    "PairCoefficients",
    "EnergyBreakdown",
    "pair_coefficients",
    "unmodified_energy",
    "second_order_term",
    "normal_form_term",
    "asym_term",
    "modified_energy",
    "unmodified_derivative_analytic",
    "second_order_model",
    "second_order_rate_model",
    "second_order_term_reference",
    "normal_form_term_reference",
    "asym_term_reference",
]

DIAGONAL_TOL = 1e-8


@dataclass(frozen=True)
class PairCoefficients:
    """Coefficients of the quadratic pair density at fixed (l1, l2, s)."""

    a: float
    b: float
    c: float


def divided_difference(lambda1, lambda2, s: float, tol: float = DIAGONAL_TOL):
    """(l1^2s - l2^2s)/(l1^2 - l2^2), with the analytic limit s*l^(2s-2)
    at l = (l1+l2)/2 substituted when |l1^2 - l2^2| < tol*max(l1,l2)^2.

    Vectorized over broadcastable lambda arrays.
    """
    l1 = np.asarray(lambda1, dtype=float)
    l2 = np.asarray(lambda2, dtype=float)
    num = l1 ** (2.0 * s) - l2 ** (2.0 * s)
    den = l1**2 - l2**2
    near = np.abs(den) < tol * np.maximum(l1, l2) ** 2
    mid = 0.5 * (l1 + l2)
    limit = s * mid ** (2.0 * s - 2.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = num / den
    return np.where(near, limit, ratio)


def pair_coefficients(
    lambda1: float, lambda2: float, s: float, tol: float = DIAGONAL_TOL
) -> PairCoefficients:
    """a = -1/8 l1^2 l2^2 (l1^2s + l2^2s); b = -1/4 l1^2 l2^2 * divided
    difference; c = -b."""
    if lambda1 <= 0 or lambda2 <= 0:
        raise ValueError("frequencies must be positive")
    l1, l2 = float(lambda1), float(lambda2)
    common = l1**2 * l2**2
    a = -0.125 * common * (l1 ** (2 * s) + l2 ** (2 * s))
    b = -0.25 * common * float(divided_difference(l1, l2, s, tol))
    return PairCoefficients(a, b, -b)


@dataclass(frozen=True)
class EnergyBreakdown:
    s: float
    e_unmodified: float
    e_second_order: float
    e_normal_form: float
    e_asym: float
    e_total: float

    def as_dict(self) -> dict:
        return {
            "s": self.s,
            "e_unmodified": self.e_unmodified,
            "e_second_order": self.e_second_order,
            "e_normal_form": self.e_normal_form,
            "e_asym": self.e_asym,
            "e_total": self.e_total,
        }


def unmodified_energy(state: SpectralState, N: NonlinearitySpec, s: float) -> float:
    """(1/2)(1 + N(|u|_{H1}^2)) |u|_{H^{1+s}}^2 + (1/2)|u'|_{H^s}^2."""
    h1 = sobolev_norm_sq(state, 1.0)
    lam, w = state.grid.lambdas, state.grid.weights
    pos = float(np.add.reduce(w * lam ** (2.0 + 2.0 * s) * np.abs(state.u_hat) ** 2))
    vel = float(np.add.reduce(w * lam ** (2.0 * s) * np.abs(state.v_hat) ** 2))
    return 0.5 * (1.0 + float(N.eval(h1))) * pos + 0.5 * vel


# -- per-mode building blocks shared by the sums below ------------------------
#   p_j = w_j l_j^2      |u_j|^2      (H^1 mass of mode j)
#   q_j = w_j l_j^{2+2s} |u_j|^2     (H^{1+s} mass)
#   V_j = w_j l_j^2      |v_j|^2
#   r_j = w_j l_j^2      Re(u_j conj(v_j))
def _mode_arrays(state: SpectralState, s: float):
    lam, w = state.grid.lambdas, state.grid.weights
    u2 = np.abs(state.u_hat) ** 2
    p = w * lam**2 * u2
    q = w * lam ** (2.0 + 2.0 * s) * u2
    V = w * lam**2 * np.abs(state.v_hat) ** 2
    r = w * lam**2 * np.real(state.u_hat * np.conj(state.v_hat))
    return p, q, V, r


def _suffix(a: np.ndarray) -> np.ndarray:
    """Inclusive suffix sums: out[i] = a[i] + a[i+1] + ... (ascending adds)."""
    return np.cumsum(a[::-1])[::-1].copy()


def _min_kernel_pair_sum(K: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
    """sum_{j,k} K[min(j,k)] * x_j * y_k in O(M) (K symmetric in j,k)."""
    tail_x = np.append(_suffix(x)[1:], 0.0)
    tail_y = np.append(_suffix(y)[1:], 0.0)
    terms = K * (x * y + x * tail_y + y * tail_x)
    return float(np.add.reduce(terms))


_BLOCK = 1024


def second_order_term(
    state: SpectralState,
    N: NonlinearitySpec,
    s: float,
    profile: FilteredProfile | None = None,
) -> float:
    """sum_{j,k} w_j w_k A(m) F(m) [a |u_j|^2|u_k|^2 + b |u_j|^2|v_k|^2
    + c Re(u_j v_j) Re(u_k v_k)], m = min(l_j, l_k).

    The a-part is a min-kernel sum (O(M)); the b/c parts carry the
    divided-difference kernel and are summed as blocked O(M^2) matrices.
    """
    if profile is None:
        profile = build_profile(state, N)
    lam = state.grid.lambdas
    p, q, V, r = _mode_arrays(state, s)
    K = profile.a_values * profile.f_values

    # a-part: w_j w_k a_{jk} |u_j|^2 |u_k|^2 = -1/8 (p_j q_k + q_j p_k),
    # which symmetrizes to -1/4 sum K[min] p_j q_k
    a_part = -0.25 * _min_kernel_pair_sum(K, p, q)

    # b/c parts: b = -1/4 l_j^2 l_k^2 D_{jk}, c = -b
    M = len(lam)
    idx = np.arange(M)
    b_total = 0.0
    c_total = 0.0
    for lo in range(0, M, _BLOCK):
        hi = min(lo + _BLOCK, M)
        D = divided_difference(lam[lo:hi, None], lam[None, :], s)
        Kmin = K[np.minimum(idx[lo:hi, None], idx[None, :])]
        KD = Kmin * D
        b_total += float(p[lo:hi] @ KD @ V)
        c_total += float(r[lo:hi] @ KD @ r)
    return a_part - 0.25 * b_total + 0.25 * c_total


def second_order_term_reference(
    state: SpectralState,
    N: NonlinearitySpec,
    s: float,
    profile: FilteredProfile | None = None,
) -> float:
    """Full O(M^2) matrix evaluation of second_order_term (oracle/benchmark)."""
    if profile is None:
        profile = build_profile(state, N)
    lam = state.grid.lambdas
    p, q, V, r = _mode_arrays(state, s)
    K = (profile.a_values * profile.f_values)[
        np.minimum.outer(np.arange(len(lam)), np.arange(len(lam)))
    ]
    a_part = -0.125 * float(np.sum(K * (np.outer(p, q) + np.outer(q, p))))
    D = divided_difference(lam[:, None], lam[None, :], s)
    b_part = -0.25 * float(np.sum(K * D * np.outer(p, V)))
    c_part = 0.25 * float(np.sum(K * D * np.outer(r, r)))
    return a_part + b_part + c_part


def normal_form_term(
    state: SpectralState,
    N: NonlinearitySpec,
    s: float,
    profile: FilteredProfile | None = None,
) -> float:
    """The three cubic region sums (integration-by-parts terms).

    With g_l = w_l A(l_l) l_l^2 |u_l|^2 and the arrays of _mode_arrays:
      T1 = -1/4 sum_{l3 <= min(l1,l2)} A(m)F(m) g_3 p_1 q_2   (m = l1^l2 min)
      T2 = -1/4 sum_{l1 <= min(l2,l3)} A(l1)F(l1) p_1 q_2 g_3
      T3 = +1/4 sum_{l1 <= l3 <= l2}   A(l1)F(l1) q_1 p_2 g_3
    each collapsed to prefix/suffix sums after sorting.
    """
    if profile is None:
        profile = build_profile(state, N)
    p, q, V, r = _mode_arrays(state, s)
    g = profile.a_values * p
    AF = profile.a_values * profile.f_values
    G = np.cumsum(g)  # inclusive prefix of g
    Sp, Sq, Sg = _suffix(p), _suffix(q), _suffix(g)
    tail_p = np.append(Sp[1:], 0.0)
    tail_q = np.append(Sq[1:], 0.0)

    t1 = -0.25 * float(np.add.reduce(AF * G * (p * q + p * tail_q + q * tail_p)))
    t2 = -0.25 * float(np.add.reduce(AF * p * Sq * Sg))
    t3 = 0.25 * float(np.add.reduce(g * np.cumsum(AF * q) * Sp))
    return t1 + t2 + t3


def normal_form_term_reference(
    state: SpectralState,
    N: NonlinearitySpec,
    s: float,
    profile: FilteredProfile | None = None,
) -> float:
    """O(M^2) matrix evaluation of normal_form_term with the inner index
    pre-summed (oracle/benchmark)."""
    if profile is None:
        profile = build_profile(state, N)
    p, q, V, r = _mode_arrays(state, s)
    g = profile.a_values * p
    AF = profile.a_values * profile.f_values
    M = len(p)
    idx = np.arange(M)
    mn = np.minimum.outer(idx, idx)
    G = np.cumsum(g)
    Sp, Sq, Sg = _suffix(p), _suffix(q), _suffix(g)
    t1 = -0.25 * float(np.sum((AF * G)[mn] * np.outer(p, q)))
    # T2: the summed index l1 runs below min(l2, l3), so the pair (l2, l3)
    # carries the prefix sum of A F p at the smaller of the two
    t2 = -0.25 * float(np.sum(np.outer(q, g) * np.cumsum(AF * p)[mn]))
    # T3: l1 <= l3 <= l2; matrix over (l1, l2) of AF_1 q_1 p_2, inner sum
    # of g over [l1, l2]
    Gmat = G[None, :] - G[:, None] + g[:, None]
    upper = idx[:, None] <= idx[None, :]
    t3 = 0.25 * float(np.sum(np.where(upper, np.outer(AF * q, p) * Gmat, 0.0)))
    return t1 + t2 + t3


def asym_term(
    state: SpectralState,
    N: NonlinearitySpec,
    s: float,
    profile: FilteredProfile | None = None,
) -> float:
    """-1/2 sum_{l_j <= l_k} w_j w_k l_j^{2s+2} l_k^2 (A(l_k) - A(l_j))
    |u_j|^2 |u_k|^2, via suffix sums.  Exactly zero when N' is constant.

    The difference A(l_k) - A(l_j) is telescoped through consecutive-mode
    increments, so a constant filter yields a structural (not rounded)
    zero."""
    if profile is None:
        profile = build_profile(state, N)
    p, q, V, r = _mode_arrays(state, s)
    A = profile.a_values
    Sp = _suffix(p)
    inc = np.diff(A, prepend=A[:1])  # inc[i] = A_i - A_{i-1}, inc[0] = 0
    # T_j = sum_{k >= j} (A_k - A_j) p_k = sum_{i > j} inc_i * Sp_i
    T = np.append(_suffix(inc * Sp)[1:], 0.0)
    return -0.5 * float(np.add.reduce(q * T))


def asym_term_reference(
    state: SpectralState,
    N: NonlinearitySpec,
    s: float,
    profile: FilteredProfile | None = None,
) -> float:
    if profile is None:
        profile = build_profile(state, N)
    p, q, V, r = _mode_arrays(state, s)
    A = profile.a_values
    M = len(p)
    idx = np.arange(M)
    upper = idx[:, None] <= idx[None, :]
    diff = A[None, :] - A[:, None]
    return -0.5 * float(np.sum(np.where(upper, np.outer(q, p) * diff, 0.0)))


def modified_energy(state: SpectralState, N: NonlinearitySpec, s: float) -> EnergyBreakdown:
    """Assemble the modified energy at regularity s from its four parts."""
    profile = build_profile(state, N)
    e0 = unmodified_energy(state, N, s)
    e2 = second_order_term(state, N, s, profile)
    en = normal_form_term(state, N, s, profile)
    ea = asym_term(state, N, s, profile)
    return EnergyBreakdown(s, e0, e2, en, ea, e0 + e2 + en + ea)


def unmodified_derivative_analytic(
    state: SpectralState, N: NonlinearitySpec, s: float
) -> float:
    """Leading analytic form of d/dt of the unmodified energy.

    First (separable) piece: (sum_j q_j) * (sum_k w_k A(l_k) l_k^2 Re(u_k v_k)).
    Second (N'' remainder) piece over l_l <= l_k:
      (sum_j q_j) * sum_l w_l l_l^2 Re(u_l v_l) N''(C(l_l)) * suffix_p(l).
    """
    profile = build_profile(state, N)
    p, q, V, r = _mode_arrays(state, s)
    Q = float(np.add.reduce(q))
    first = Q * float(np.add.reduce(profile.a_values * r))
    d2 = np.asarray(N.d2(profile.c_prefix), dtype=float)
    Sp = _suffix(p)
    second = Q * float(np.add.reduce(d2 * r * Sp))
    return first + second


def second_order_model(state: SpectralState, A: float, s: float) -> float:
    """The model-case second-order correction A * sum_{j,k} w_j w_k E^s_{jk}
    (constant filter A, no resummation factor)."""
    p, q, V, r = _mode_arrays(state, s)
    lam = state.grid.lambdas
    M = len(lam)
    ones = np.full(M, float(A))
    a_part = -0.25 * _min_kernel_pair_sum(ones, p, q)
    b_total = 0.0
    c_total = 0.0
    for lo in range(0, M, _BLOCK):
        hi = min(lo + _BLOCK, M)
        D = divided_difference(lam[lo:hi, None], lam[None, :], s)
        b_total += float(p[lo:hi] @ D @ V)
        c_total += float(r[lo:hi] @ D @ r)
    return a_part + float(A) * 0.25 * (c_total - b_total)


def second_order_rate_model(state: SpectralState, A: float, s: float) -> float:
    """Exact time derivative of second_order_model along the model flow.

    Both pieces are separable products of single sums:
      R1 = -A (sum_j q_j)(sum_k w_k l_k^2 Re(u_k v_k))
      R2 = -A^2/2 [ (sum q)(sum w l^2 Re(u v)) - (sum p)(sum w l^{2s+2} Re(u v)) ]
           * (sum p)
    """
    A = float(A)
    p, q, V, r = _mode_arrays(state, s)
    lam, w = state.grid.lambdas, state.grid.weights
    rs = w * lam ** (2.0 + 2.0 * s) * np.real(state.u_hat * np.conj(state.v_hat))
    P = float(np.add.reduce(p))
    Q = float(np.add.reduce(q))
    R = float(np.add.reduce(r))
    Rs = float(np.add.reduce(rs))
    return -A * Q * R - 0.5 * A * A * (Q * R - P * Rs) * P
