"""Time evolution in frequency space.

The equation is diagonal per mode except for the scalar coupling through
the H^1 mass, so two independent integrators are cheap to provide: an
exact-rotation splitting (freeze the wave speed at its midpoint value,
rotate every mode analytically) and a classical RK4 step.  Every
dynamical claim in the test suite is cross-validated between them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nonlinearity import DegenerateNonlinearityError, NonlinearitySpec
from .spectral import FrequencyGrid, SpectralState, sobolev_norm_sq

__all__ = [
    "Trajectory",
    "LinearizedState",
    "rhs",
    "step_rotation",
    "step_rk4",
    "rk4_dt_guard",
    "hamiltonian",
    "evolve",
    "linearized_rhs",
    "evolve_pair",
]


@dataclass(frozen=True)
class LinearizedState:
    """A solution (w, w') of the linearized equation riding on a base state."""

    w_hat: np.ndarray
    w_vel: np.ndarray

    def __post_init__(self):
        w = np.ascontiguousarray(np.asarray(self.w_hat, dtype=complex))
        v = np.ascontiguousarray(np.asarray(self.w_vel, dtype=complex))
        w.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "w_hat", w)
        object.__setattr__(self, "w_vel", v)
        if w.shape != v.shape or w.ndim != 1:
            raise ValueError("w_hat and w_vel must be 1-d arrays of equal length")


@dataclass(frozen=True)
class Trajectory:
    """Time-ordered samples of a run, optionally with linearized companions."""

    times: tuple
    states: tuple
    companions: tuple | None
    method: str
    dt: float
    steps: int

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ValueError("times and states must have equal length")
        if len(self.times) == 0:
            raise ValueError("trajectory must contain at least one sample")
        if np.any(np.diff(np.asarray(self.times)) <= 0):
            raise ValueError("sample times must be strictly increasing")
        g0 = self.states[0].grid
        if any(st.grid is not g0 and not np.array_equal(st.grid.lambdas, g0.lambdas) for st in self.states):
            raise ValueError("all states must share one grid")
        if self.companions is not None and len(self.companions) != len(self.states):
            raise ValueError("companions must align with samples")

    def __len__(self) -> int:
        return len(self.times)


def rhs(state: SpectralState, N: NonlinearitySpec):
    """du = v;  dv_k = -(1 + N(|u|_{H^1}^2)) l_k^2 u_k."""
    mass = sobolev_norm_sq(state, 1.0)
    speed = 1.0 + float(N.eval(mass))
    du = state.v_hat.copy()
    dv = -speed * state.grid.lambdas**2 * state.u_hat
    return du, dv


def _h1_mass(grid: FrequencyGrid, u_hat: np.ndarray) -> float:
    return float(np.add.reduce(grid.weights * grid.lambdas**2 * np.abs(u_hat) ** 2))


def _rotate(grid, u, v, speed, dt):
    omega = grid.lambdas * np.sqrt(speed)
    c, s = np.cos(omega * dt), np.sin(omega * dt)
    return c * u + (s / omega) * v, -omega * s * u + c * v


def _rotation_once(state, N, dt, allow_halve):
    m0 = _h1_mass(state.grid, state.u_hat)
    nbar = float(N.eval(m0))
    converged = False
    for _ in range(5):
        if 1.0 + nbar <= 0.0:
            raise DegenerateNonlinearityError("wave speed lost during midpoint iteration")
        u1, v1 = _rotate(state.grid, state.u_hat, state.v_hat, 1.0 + nbar, dt)
        nxt = float(N.eval(0.5 * (m0 + _h1_mass(state.grid, u1))))
        if abs(nxt - nbar) <= 1e-14 * max(1.0, abs(nbar)):
            nbar = nxt
            converged = True
            break
        nbar = nxt
    if not converged:
        if not allow_halve:
            raise RuntimeError(f"midpoint iteration failed to converge at dt={dt}")
        half = _rotation_once(state, N, dt / 2, allow_halve=False)
        return _rotation_once(half, N, dt / 2, allow_halve=False)
    if 1.0 + nbar <= 0.0:
        raise DegenerateNonlinearityError("wave speed lost during midpoint iteration")
    u1, v1 = _rotate(state.grid, state.u_hat, state.v_hat, 1.0 + nbar, dt)
    return state.replace_amplitudes(u1, v1, state.time + dt)


def step_rotation(state: SpectralState, N: NonlinearitySpec, dt: float) -> SpectralState:
    """One exact-rotation step with the wave speed frozen at its midpoint
    value (fixed-point iterated); unconditionally stable in lambda_max."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    return _rotation_once(state, N, dt, allow_halve=True)


def rk4_dt_guard(state: SpectralState, N: NonlinearitySpec) -> float:
    """Largest dt the RK4 stability guard allows for this state."""
    mass = sobolev_norm_sq(state, 1.0)
    speed = 1.0 + max(float(N.eval(mass)), 0.0)
    return 2.8 / (float(state.grid.lambdas[-1]) * np.sqrt(speed))


def step_rk4(state: SpectralState, N: NonlinearitySpec, dt: float) -> SpectralState:
    if dt <= 0:
        raise ValueError("dt must be positive")
    guard = rk4_dt_guard(state, N)
    if dt > guard:
        raise ValueError(f"RK4 stability guard requires dt <= {guard:.6g}, got {dt}")
    lam2 = state.grid.lambdas**2
    w = state.grid.weights

    def f(u, v):
        speed = 1.0 + float(N.eval(float(np.add.reduce(w * lam2 * np.abs(u) ** 2))))
        return v, -speed * lam2 * u

    u, v = state.u_hat, state.v_hat
    k1u, k1v = f(u, v)
    k2u, k2v = f(u + 0.5 * dt * k1u, v + 0.5 * dt * k1v)
    k3u, k3v = f(u + 0.5 * dt * k2u, v + 0.5 * dt * k2v)
    k4u, k4v = f(u + dt * k3u, v + dt * k3v)
    u1 = u + dt / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u)
    v1 = v + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
    return state.replace_amplitudes(u1, v1, state.time + dt)


def hamiltonian(state: SpectralState, N: NonlinearitySpec) -> float:
    """(1/2)|u'|^2 + (1/2)|u|_{H^1}^2 + (1/2) antiderivative(|u|_{H^1}^2);
    conserved exactly by the flow (chain rule against the equation)."""
    kinetic = 0.5 * sobolev_norm_sq(
        SpectralState(state.grid, state.v_hat, state.v_hat, state.time), 0.0
    )
    mass = sobolev_norm_sq(state, 1.0)
    return kinetic + 0.5 * mass + 0.5 * float(N.antiderivative(mass))


def _stepper(method: str):
    if method == "rotation":
        return step_rotation
    if method == "rk4":
        return step_rk4
    raise ValueError(f"unknown integrator {method!r}")


def evolve(
    state: SpectralState,
    N: NonlinearitySpec,
    T: float,
    dt: float,
    stride: int = 1,
    method: str = "rotation",
) -> Trajectory:
    """March to time T in uniform steps, sampling every `stride` steps
    (first and last samples always included)."""
    if T < 0:
        raise ValueError("T must be non-negative")
    if stride < 1:
        raise ValueError("stride must be at least 1")
    step = _stepper(method)
    if T == 0:
        return Trajectory((state.time,), (state,), None, method, dt, 0)
    nsteps = max(1, int(round(T / dt)))
    dt = T / nsteps
    t0 = state.time
    times = [t0]
    states = [state]
    cur = state
    for n in range(1, nsteps + 1):
        try:
            cur = step(cur, N, dt)
        except Exception as exc:
            raise RuntimeError(f"step failed at t={t0 + (n - 1) * dt}: {exc}") from exc
        cur = cur.replace_amplitudes(cur.u_hat, cur.v_hat, t0 + n * dt)
        if n % stride == 0 or n == nsteps:
            times.append(t0 + n * dt)
            states.append(cur)
    return Trajectory(tuple(times), tuple(states), None, method, dt, nsteps)


def linearized_rhs(base: SpectralState, lin: LinearizedState, A: float = 1.0):
    """Right side of the linearized equation around a base solution
    (wave speed 1 + A * mass):

      dw = w';  dw'_k = -l_k^2 (1 + A m) w_k
                        - 2 A l_k^2 u_k sum_j w_j l_j^2 Re(u_j conj(w_j)).
    """
    if lin.w_hat.shape != base.u_hat.shape:
        raise ValueError("linearized state does not match the base grid")
    lam2 = base.grid.lambdas**2
    w = base.grid.weights
    m = _h1_mass(base.grid, base.u_hat)
    inner = float(np.add.reduce(w * lam2 * np.real(base.u_hat * np.conj(lin.w_hat))))
    dw = lin.w_vel.copy()
    dwv = -(1.0 + A * m) * lam2 * lin.w_hat - 2.0 * A * lam2 * base.u_hat * inner
    return dw, dwv


def _hermite(u0, v0, u1, v1, dt, tau):
    """Cubic Hermite value of u at fraction tau of a step (u' = v)."""
    h00 = (1 + 2 * tau) * (1 - tau) ** 2
    h10 = tau * (1 - tau) ** 2
    h01 = tau**2 * (3 - 2 * tau)
    h11 = tau**2 * (tau - 1)
    return h00 * u0 + h10 * dt * v0 + h01 * u1 + h11 * dt * v1


def evolve_pair(
    base: SpectralState,
    lin: LinearizedState,
    N: NonlinearitySpec,
    T: float,
    dt: float,
    stride: int = 1,
) -> Trajectory:
    """Co-evolve a base solution (rotation steps) and a linearized
    companion (RK4 on the frozen-coefficient linear system, with the base
    interpolated at stage times by cubic Hermite)."""
    if N.name != "model":
        raise ValueError("linearized flow implemented for model case only")
    A = float(N.d1(0.0))
    if T < 0:
        raise ValueError("T must be non-negative")
    if stride < 1:
        raise ValueError("stride must be at least 1")
    if T == 0:
        return Trajectory((base.time,), (base,), (lin,), "rotation+rk4", dt, 0)
    nsteps = max(1, int(round(T / dt)))
    dt = T / nsteps
    lam2 = base.grid.lambdas**2
    gw = base.grid.weights
    t0 = base.time
    times, states, comps = [t0], [base], [lin]
    cur, curw = base, lin
    for n in range(1, nsteps + 1):
        nxt = step_rotation(cur, N, dt)

        def f(tau, wh, wv):
            u = _hermite(cur.u_hat, cur.v_hat, nxt.u_hat, nxt.v_hat, dt, tau)
            m = float(np.add.reduce(gw * lam2 * np.abs(u) ** 2))
            inner = float(np.add.reduce(gw * lam2 * np.real(u * np.conj(wh))))
            return wv, -(1.0 + A * m) * lam2 * wh - 2.0 * A * lam2 * u * inner

        wh, wv = curw.w_hat, curw.w_vel
        k1h, k1v = f(0.0, wh, wv)
        k2h, k2v = f(0.5, wh + 0.5 * dt * k1h, wv + 0.5 * dt * k1v)
        k3h, k3v = f(0.5, wh + 0.5 * dt * k2h, wv + 0.5 * dt * k2v)
        k4h, k4v = f(1.0, wh + dt * k3h, wv + dt * k3v)
        curw = LinearizedState(
            wh + dt / 6.0 * (k1h + 2 * k2h + 2 * k3h + k4h),
            wv + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v),
        )
        cur = nxt.replace_amplitudes(nxt.u_hat, nxt.v_hat, t0 + n * dt)
        if n % stride == 0 or n == nsteps:
            times.append(t0 + n * dt)
            states.append(cur)
            comps.append(curw)
    return Trajectory(tuple(times), tuple(states), tuple(comps), "rotation+rk4", dt, nsteps)
