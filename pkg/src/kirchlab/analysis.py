"""Verification harnesses: derivative estimation, scaling fits,
comparability sweeps, kernel/correction property suites, the linearized
coefficient-matching certificate, the resonance experiment, and
truncation convergence.

Everything here returns plain data (dataclasses / dicts of floats) so
the CLI can serialize verdicts without further computation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import LinearizedState, Trajectory, evolve, evolve_pair
from .energy import (
    divided_difference,
    modified_energy,
    second_order_rate_model,
    second_order_model,
    unmodified_derivative_analytic,
    unmodified_energy,
)
from .nonlinearity import NonlinearitySpec, build_profile, delta_gate
from .spectral import SpectralState, pair_norm, rescale_to, sobolev_norm_sq, truncate

__all__ = [
    "ScalingFit",
    "ObstructionCertificate",
    "derivative_fd",
    "quintic_ratio_series",
    "scaling_point",
    "scaling_slope_experiment",
    "comparability_sweep",
    "second_order_identity_check",
    "kernel_bounds_suite",
    "f_bounds_suite",
    "obstruction_certificate",
    "linearized_energy",
    "resonance_report",
    "truncation_convergence",
]


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares power-law fit of values against epsilons (log-log)."""

    epsilons: tuple
    values: tuple
    slope: float
    intercept: float
    max_residual: float
    degenerate: bool = False

    def __post_init__(self):
        if len(self.epsilons) != len(self.values) or len(self.epsilons) < 3:
            raise ValueError("need at least three (epsilon, value) pairs")
        if not np.isfinite(self.slope):
            raise ValueError("slope must be finite")


def _fit_loglog(epsilons, values) -> ScalingFit:
    eps = tuple(float(e) for e in epsilons)
    vals = tuple(float(v) for v in values)
    scale = max(abs(v) for v in vals)
    if scale == 0.0 or min(vals) <= 0.0 or scale < 1e-250:
        return ScalingFit(eps, vals, 0.0, 0.0, 0.0, degenerate=True)
    x = np.log(np.asarray(eps))
    y = np.log(np.asarray(vals))
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.max(np.abs(y - (slope * x + intercept))))
    return ScalingFit(eps, vals, float(slope), float(intercept), resid)


def derivative_fd(series, index: int) -> float:
    """Fourth-order centered difference on a uniform time grid
    (one Richardson level of the 2nd-order stencil)."""
    times = np.asarray([t for t, _ in series], dtype=float)
    values = np.asarray([v for _, v in series], dtype=float)
    n = len(times)
    if not (2 <= index <= n - 3):
        raise ValueError(f"index {index} too close to the series boundary")
    h = times[1] - times[0]
    if not np.allclose(np.diff(times), h, rtol=1e-9, atol=1e-12):
        raise ValueError("series must be sampled on a uniform time grid")
    i = index
    return float(
        (-values[i + 2] + 8 * values[i + 1] - 8 * values[i - 1] + values[i - 2]) / (12 * h)
    )


def quintic_ratio_series(traj: Trajectory, N: NonlinearitySpec, s: float, s0: float = 0.25):
    """R(t) = |d/dt E_total^s| / (E_total^s * (E_total^{1/4})^2) at
    interior samples, with a per-sample smallness-gate flag."""
    if len(traj) < 7:
        raise ValueError("need at least 7 uniform samples")
    gate = delta_gate(N, s0)
    e_s = [(t, modified_energy(st, N, s).e_total) for t, st in zip(traj.times, traj.states)]
    e_q = [modified_energy(st, N, 0.25).e_total for st in traj.states]
    out = []
    for i in range(2, len(traj) - 2):
        d = derivative_fd(e_s, i)
        denom = e_s[i][1] * e_q[i] ** 2
        flag = pair_norm(traj.states[i], 0.0).combined > gate
        out.append((traj.times[i], abs(d) / denom if denom != 0 else 0.0, flag))
    return out


def _energy_derivative_t0(state, N, s, dt, stride):
    """FD derivative of the total modified energy at t ~ 0+, using a
    coarse sampling stride over fine integration steps."""
    h = dt * stride
    traj = evolve(state, N, 4 * h, dt, stride=stride, method="rotation")
    series = [(t, modified_energy(st, N, s).e_total) for t, st in zip(traj.times, traj.states)]
    return derivative_fd(series, 2), series[2][1]


def scaling_point(
    base_state: SpectralState,
    N: NonlinearitySpec,
    s: float,
    epsilon: float,
    dt: float = 1e-3,
    stride: int = 10,
    method: str = "rotation",
):
    """Normalized derivative magnitudes (unmodified analytic, modified by
    finite differences) for the base data rescaled to one epsilon."""
    st = rescale_to(base_state, float(epsilon), 0.25)
    gate = delta_gate(N, 0.25)
    if pair_norm(st, 0.0).combined > gate:
        raise ValueError(f"epsilon {epsilon} puts the data above the smallness gate")
    e0 = unmodified_energy(st, N, s)
    y_unmod = abs(unmodified_derivative_analytic(st, N, s)) / e0
    h = dt * stride
    traj = evolve(st, N, 4 * h, dt, stride=stride, method=method)
    series = [(t, modified_energy(x, N, s).e_total) for t, x in zip(traj.times, traj.states)]
    d, e_mid = derivative_fd(series, 2), series[2][1]
    return y_unmod, abs(d) / e_mid


def scaling_slope_experiment(
    base_state: SpectralState,
    N: NonlinearitySpec,
    s: float,
    epsilons,
    dt: float = 1e-3,
    stride: int = 10,
    method: str = "rotation",
):
    """Rescale the base data to each epsilon (measured in the
    H^{5/4} x H^{1/4} pair norm), record the normalized derivative of the
    unmodified and the modified energy at t=0, and fit both against
    epsilon on log-log axes."""
    eps = sorted(float(e) for e in epsilons)
    if len(eps) < 3 or eps[-1] / eps[0] < 100.0:
        raise ValueError("need at least 3 epsilons spanning at least 2 decades")
    points = [scaling_point(base_state, N, s, e, dt, stride, method) for e in eps]
    y_unmod = [p[0] for p in points]
    y_mod = [p[1] for p in points]
    return _fit_loglog(eps, y_unmod), _fit_loglog(eps, y_mod)


def comparability_sweep(states, N: NonlinearitySpec, s_list, s0: float = 0.25) -> dict:
    """min/max of E_total / (pair norm squared) per regularity s over the
    given states; gate violations are excluded and counted."""
    gate = delta_gate(N, s0)
    report = {"gate": gate, "excluded": 0, "per_s": {}}
    for s in s_list:
        ratios = []
        for st in states:
            if pair_norm(st, 0.0).combined > gate:
                report["excluded"] += 1
                continue
            nrm = pair_norm(st, s)
            denom = nrm.pos**2 + nrm.vel**2
            ratios.append(modified_energy(st, N, s).e_total / denom)
        report["per_s"][float(s)] = {
            "min": float(min(ratios)),
            "max": float(max(ratios)),
            "count": len(ratios),
        }
    return report


def second_order_identity_check(traj: Trajectory, A: float, s: float) -> float:
    """Max residual between the centered-difference time derivative of
    the second-order correction (constant filter A) and its separable
    closed-form derivative, over interior samples.  O(dt^2) under
    sampling refinement."""
    if len(traj) < 3:
        raise ValueError("need at least three samples")
    times = np.asarray(traj.times)
    h = times[1] - times[0]
    if not np.allclose(np.diff(times), h, rtol=1e-9, atol=1e-12):
        raise ValueError("uniform sampling required")
    e2 = [second_order_model(st, A, s) for st in traj.states]
    worst = 0.0
    for i in range(1, len(traj) - 1):
        fd = (e2[i + 1] - e2[i - 1]) / (2 * h)
        worst = max(worst, abs(fd - second_order_rate_model(traj.states[i], A, s)))
    return worst


def kernel_bounds_suite(n_samples: int, seed: int) -> dict:
    """Random-sample check of the divided-difference kernel bounds.

    For l1 <= l2: |D| <= (1+s) l2^{2s} / l2^2 when s >= 0, and
    |D| <= (1+|s|) l1^{2s} / l2^2 when s <= 0.  Also probes the
    near-diagonal extremal ratio, which tends to s/(1+s).
    """
    if n_samples < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    lo, hi = np.log(1e-6), np.log(1e6)
    l = np.exp(rng.uniform(lo, hi, size=(n_samples, 2)))
    l1 = np.minimum(l[:, 0], l[:, 1])
    l2 = np.maximum(l[:, 0], l[:, 1])
    violations = 0
    worst_ratio = 0.0
    for s_lo, s_hi, positive in ((0.0, 4.0, True), (-2.0, 0.0, False)):
        s = rng.uniform(s_lo, s_hi, size=n_samples)
        D = np.array([divided_difference(a, b, si) for a, b, si in zip(l1, l2, s)])
        if positive:
            bound = (1.0 + s) * l2 ** (2 * s) / l2**2
        else:
            bound = (1.0 + np.abs(s)) * l1 ** (2 * s) / l2**2
        ratio = np.abs(D) / bound
        violations += int(np.sum(ratio > 1.0 + 1e-12))
        worst_ratio = max(worst_ratio, float(np.max(ratio)))
    # near-diagonal extremal probes: at l1 = l2 the s >= 0 ratio is s/(1+s)
    probes = {}
    for s in (0.5, 1.0, 2.0, 3.5):
        lam = 3.0
        D = float(divided_difference(lam, lam * (1 + 1e-6), s))
        probes[s] = abs(D) / ((1.0 + s) * lam ** (2 * s) / lam**2)
    return {
        "samples": 2 * n_samples,
        "violations": violations,
        "worst_ratio": worst_ratio,
        "diagonal_probes": probes,
        "pass": violations == 0,
    }


def f_bounds_suite(traj: Trajectory, N: NonlinearitySpec, fd_slack: float | None = None) -> dict:
    """Pointwise range and finite-difference time-derivative bounds of
    the correction function F along a uniformly sampled trajectory."""
    times = np.asarray(traj.times)
    h = float(times[1] - times[0]) if len(times) > 1 else 0.0
    if fd_slack is None:
        fd_slack = 100.0 * h * h
    profiles = [build_profile(st, N) for st in traj.states]
    range_ok = True
    worst_range = 0.0
    nprime_max = 0.0
    for st, prof in zip(traj.states, profiles):
        base = 1.0 + np.asarray(N.eval(prof.c_prefix))
        if np.any(base < 0.5 - 1e-12):
            return {"pass": False, "reason": "gate violated (1+N < 1/2)", "skipped": True}
        fmax_allowed = 2.0**1.5 + 1e-12
        fmin_allowed = float(np.max(base)) ** -1.5 - 1e-12
        lo = float(np.min(prof.f_values))
        hi = float(np.max(prof.f_values))
        if hi > fmax_allowed or lo < fmin_allowed * (1 - 1e-12):
            range_ok = False
        worst_range = max(worst_range, hi)
        nprime_max = max(nprime_max, float(np.max(np.abs(N.d1(prof.c_prefix)))))
    fd_ok = True
    worst_excess = 0.0
    for i in range(1, len(traj) - 1):
        dF = (profiles[i + 1].f_values - profiles[i - 1].f_values) / (2 * h)
        st = traj.states[i]
        lam, w = st.grid.lambdas, st.grid.weights
        flux = np.abs(
            np.cumsum(w * lam**2 * np.real(st.u_hat * np.conj(st.v_hat)))
        )
        bound = 3.0 * nprime_max * 2.0**2.5 * flux + fd_slack
        excess = float(np.max(np.abs(dF) - bound))
        worst_excess = max(worst_excess, excess)
        if excess > 0:
            fd_ok = False
    return {
        "pass": range_ok and fd_ok,
        "range_ok": range_ok,
        "fd_ok": fd_ok,
        "worst_F": worst_range,
        "worst_fd_excess": worst_excess,
        "skipped": False,
    }


@dataclass(frozen=True)
class ObstructionCertificate:
    """Feasibility verdict for the linearized coefficient-matching system
    at squared frequencies (x, y) and regularity sigma."""

    x: float
    y: float
    sigma: float
    feasible: bool
    residual: float
    lstsq_residual: float
    derived_identity: str


def _obstruction_system(x: float, y: float, sigma: float):
    """The 8x8 system in [a, b, c12, c21, d12, d21, e, f]."""
    A = np.zeros((8, 8))
    rhs = np.zeros(8)
    # rows for the pair (xi1, xi2) with x = xi1^2, y = xi2^2
    A[0] = [2, -2 * y, -y, 0, -x, 0, 0, 0]
    rhs[0] = x ** (1 + sigma) * y
    A[1] = [2, 0, 0, -y, -x, 0, -2 * y, 0]
    A[2] = [0, 0, 1, 0, 1, 0, 2, -2 * y]
    A[3] = [0, 2, 0, 1, 1, 0, 0, -2 * y]
    # rows for the swapped pair: x <-> y, c12 <-> c21, d12 <-> d21
    A[4] = [2, -2 * x, 0, -x, 0, -y, 0, 0]
    rhs[4] = y ** (1 + sigma) * x
    A[5] = [2, 0, -x, 0, 0, -y, -2 * x, 0]
    A[6] = [0, 0, 0, 1, 0, 1, 2, -2 * x]
    A[7] = [0, 2, 1, 0, 0, 1, 0, -2 * x]
    return A, rhs


def obstruction_certificate(x: float, y: float, sigma: float) -> ObstructionCertificate:
    """Exact elimination of the coefficient-matching system.

    Row combination r1 - r2 - y r7 + y r8 annihilates every unknown and
    leaves 0 = x^{1+sigma} y: the system is solvable only when one of the
    frequencies vanishes.  A numerical least-squares solve cross-checks
    the classification.
    """
    if x < 0 or y < 0:
        raise ValueError("squared frequencies must be non-negative")
    x, y, sigma = float(x), float(y), float(sigma)
    residual = x ** (1 + sigma) * y
    A, rhs = _obstruction_system(x, y, sigma)
    sol, _, _, _ = np.linalg.lstsq(A, rhs, rcond=None)
    ls_res = float(np.linalg.norm(A @ sol - rhs))
    return ObstructionCertificate(
        x=x,
        y=y,
        sigma=sigma,
        feasible=(residual == 0.0),
        residual=residual,
        lstsq_residual=ls_res,
        derived_identity="0 = xi1^(2+2*sigma) * xi2^2",
    )


def linearized_energy(base: SpectralState, lin: LinearizedState, sigma: float) -> float:
    """(1/2)|w'|_{H^sigma}^2 + (1/2)(1 + mass(u)) |w|_{H^{1+sigma}}^2."""
    lam, w = base.grid.lambdas, base.grid.weights
    m = sobolev_norm_sq(base, 1.0)
    kin = float(np.add.reduce(w * lam ** (2 * sigma) * np.abs(lin.w_vel) ** 2))
    pot = float(np.add.reduce(w * lam ** (2 + 2 * sigma) * np.abs(lin.w_hat) ** 2))
    return 0.5 * kin + 0.5 * (1.0 + m) * pot


def _sep_mixed(base: SpectralState, lin: LinearizedState, sigma: float):
    lam, w = base.grid.lambdas, base.grid.weights
    sep = float(
        np.add.reduce(w * lam**2 * np.real(base.v_hat * np.conj(base.u_hat)))
    ) * float(np.add.reduce(w * lam ** (2 + 2 * sigma) * np.abs(lin.w_hat) ** 2))
    mixed = -2.0 * float(
        np.add.reduce(w * lam**2 * np.real(base.u_hat * np.conj(lin.w_hat)))
    ) * float(
        np.add.reduce(w * lam ** (2 + 2 * sigma) * np.real(base.u_hat * np.conj(lin.w_vel)))
    )
    return sep, mixed


def resonance_report(
    u0: SpectralState,
    w0: LinearizedState,
    N: NonlinearitySpec,
    sigma: float,
    T: float,
    dt: float,
    stride: int = 1,
) -> dict:
    """Time series of the two pieces of the linearized energy derivative:
    the separable (time-derivative-factoring) piece and the mixed piece,
    with running time averages.  Non-asserting experiment artifact."""
    traj = evolve_pair(u0, w0, N, T, dt, stride=stride)
    times = np.asarray(traj.times)
    sep = np.empty(len(traj))
    mixed = np.empty(len(traj))
    energy = np.empty(len(traj))
    for i, (st, ln) in enumerate(zip(traj.states, traj.companions)):
        sep[i], mixed[i] = _sep_mixed(st, ln, sigma)
        energy[i] = linearized_energy(st, ln, sigma)
    k = np.arange(1, len(traj) + 1)
    return {
        "times": times,
        "sep": sep,
        "mixed": mixed,
        "energy": energy,
        "sep_running_mean": np.cumsum(sep) / k,
        "mixed_running_mean": np.cumsum(mixed) / k,
    }


def truncation_convergence(
    rough_state: SpectralState,
    cutoffs,
    N: NonlinearitySpec,
    T: float,
    s_low: float = 0.25,
    dt: float = 1e-3,
    stride: int = 10,
) -> dict:
    """Evolve each frequency truncation of the data and report the sup-
    in-time H^1 x L^2 distance between consecutive truncations, plus the
    sup of the modified energy at s_low per truncation."""
    cutoffs = [float(c) for c in cutoffs]
    if any(b <= a for a, b in zip(cutoffs, cutoffs[1:])):
        raise ValueError("cutoffs must be strictly increasing")
    full_lam = rough_state.grid.lambdas
    runs = []
    for c in cutoffs:
        st = truncate(rough_state, c)
        traj = evolve(st, N, T, dt, stride=stride, method="rotation")
        runs.append(traj)
    # embed each truncation's samples into the full grid for comparison
    def embedded(traj):
        out = []
        for st in traj.states:
            u = np.zeros(len(full_lam), dtype=complex)
            v = np.zeros(len(full_lam), dtype=complex)
            idx = np.searchsorted(full_lam, st.grid.lambdas)
            u[idx] = st.u_hat
            v[idx] = st.v_hat
            out.append((u, v))
        return out

    w, lam = rough_state.grid.weights, full_lam
    emb = [embedded(tr) for tr in runs]
    diffs = []
    for a, b in zip(emb, emb[1:]):
        worst = 0.0
        for (ua, va), (ub, vb) in zip(a, b):
            d = np.add.reduce(w * lam**2 * np.abs(ua - ub) ** 2) + np.add.reduce(
                w * np.abs(va - vb) ** 2
            )
            worst = max(worst, float(np.sqrt(d)))
        diffs.append(worst)
    e_sup = []
    for tr in runs:
        e_sup.append(max(modified_energy(st, N, s_low).e_total for st in tr.states))
    return {"cutoffs": cutoffs, "consecutive_diffs": diffs, "energy_sup": e_sup}
