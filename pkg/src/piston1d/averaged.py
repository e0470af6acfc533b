"""Averaged slow-variable vector fields and their ODE solutions.

The hard-core field drives (X, W, speeds); the soft-core field drives
(X, W, energies) through the frozen-piston periods; both are solved with an
adaptive high-order Runge-Kutta method with dense output.  Also here: the
effective Hamiltonian of the averaged piston oscillation, the adiabatic
phase-plane areas, and the N-piston generalization.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .config import ConfigError
from .state import SlowState
from . import softcore
from .softcore import G_integral, get_profile, period_T


@dataclass
class AveragedTrajectory:
    grid: np.ndarray
    states: np.ndarray          # rows (X, W, values...)
    dense: object               # scipy OdeSolution over [0, T]
    mode: str
    n1: int
    n2: int
    first_exit: float = None    # None = never left the compact set

    def state_at(self, tau):
        return np.atleast_2d(self.dense(tau).T)

    def slow_state(self, tau):
        return SlowState.from_array(self.dense(tau), self.n1, self.n2, self.mode)


def avg_field_hard(h, masses_left, masses_right):
    """Averaged field for the hard-core system, acting on (X, W, speeds)."""
    X, W = h[0], h[1]
    if not (0.0 < X < 1.0):
        raise ConfigError("averaged field undefined at X in {0, 1}")
    ml = np.asarray(masses_left, float)
    mr = np.asarray(masses_right, float)
    n1 = ml.size
    s1 = h[2:2 + n1]
    s2 = h[2 + n1:]
    dW = np.sum(ml * s1 ** 2) / X - np.sum(mr * s2 ** 2) / (1 - X)
    ds1 = -s1 * W / X
    ds2 = s2 * W / (1 - X)
    return np.concatenate([[W, dW], ds1, ds2])


def avg_field_soft(h, delta, masses_left, masses_right, profile="cubic",
                   use_interp=True):
    """Averaged field for the soft-core system, acting on (X, W, energies).

    The per-particle force magnitude sqrt(8 m E) / T reduces to the
    hard-core 2 E / width when delta = 0.
    """
    prof = get_profile(profile)
    X, W = h[0], h[1]
    if not (0.0 < X < 1.0):
        raise ConfigError("averaged field undefined at X in {0, 1}")
    ml = np.asarray(masses_left, float)
    mr = np.asarray(masses_right, float)
    n1 = ml.size
    E1 = h[2:2 + n1]
    E2 = h[2 + n1:]

    def rate(side, E, m):
        L = X if side == "left" else 1.0 - X
        if delta == 0.0:
            return 2.0 * E / L
        if use_interp:
            F = softcore.F_interp(E, prof)
            T = np.sqrt(m / 2.0) * ((2 * L - 4 * delta) / np.sqrt(E)
                                    + 4 * delta * F)
        else:
            T = period_T(side, X, E, delta, prof, m)
        return np.sqrt(8.0 * m * E) / T

    r1 = np.array([rate("left", E1[j], ml[j]) for j in range(n1)])
    r2 = np.array([rate("right", E2[j], mr[j]) for j in range(mr.size)])
    dW = np.sum(r1) - np.sum(r2)
    return np.concatenate([[W, dW], -W * r1, W * r2])


def solve_averaged(h0, T, masses_left, masses_right, delta=0.0,
                   profile="cubic", tol=1e-10, compact_set=None, t_eval=None):
    """Integrate the averaged equation from a SlowState over [0, T].

    Uses an adaptive 8th-order Runge-Kutta scheme with dense output and
    records the first exit time from `compact_set`, if any.
    """
    mode = h0.mode
    y0 = h0.as_array()
    n1, n2 = len(h0.left), len(h0.right)
    if mode == "hard-speeds":
        if delta != 0.0:
            raise ConfigError("hard mode requires delta = 0")
        f = lambda tau, y: avg_field_hard(y, masses_left, masses_right)
    else:
        f = lambda tau, y: avg_field_soft(y, delta, masses_left, masses_right,
                                          profile)
    sol = solve_ivp(f, (0.0, T), y0, method="DOP853", rtol=tol,
                    atol=tol * 1e-2, dense_output=True, t_eval=t_eval)
    if not sol.success:
        raise RuntimeError(f"averaged ODE solve failed: {sol.message}")
    traj = AveragedTrajectory(sol.t, sol.y.T, sol.sol, mode, n1, n2)
    if compact_set is not None:
        taus = np.linspace(0.0, T, max(1024, 8 * len(sol.t)))
        for tau in taus:
            if not compact_set.contains(traj.slow_state(tau)):
                traj.first_exit = float(tau)
                break
    return traj


def effective_hamiltonian(h, h0, masses_left=None, masses_right=None):
    """Conserved quantity of the averaged piston oscillation.

    W^2/2 plus the effective potential terms E_i(0) (width_i(0)/width_i)^2,
    with E_i the total gas energy per side at tau = 0.
    """
    from .state import side_energies

    if h0.mode == "hard-speeds" and masses_left is None:
        masses_left = np.ones_like(h0.left)
        masses_right = np.ones_like(h0.right)
    E10, E20 = side_energies(h0, masses_left, masses_right)
    return (h.W ** 2 / 2
            + E10 * h0.X ** 2 / h.X ** 2
            + E20 * (1 - h0.X) ** 2 / (1 - h.X) ** 2)


def adiabatic_invariant(side, X, E, delta=0.0, profile="cubic", m=1.0):
    """Phase-plane area enclosed by the particle's energy level set."""
    prof = get_profile(profile)
    if E <= 0 or (delta > 0 and E >= prof.barrier):
        raise ConfigError("energy outside the admissible band")
    L = X if side == "left" else 1.0 - X
    if delta == 0.0:
        return 2.0 * L * np.sqrt(2.0 * E / m)
    return (2.0 * (L - 2 * delta) * np.sqrt(2.0 * E / m)
            + 4.0 * delta * np.sqrt(2.0 / m) * G_integral(E, prof))


def find_period(traj, t_max=None):
    """Period of the averaged oscillation from W sign changes.

    Locates two consecutive zeros of W by bisection on the dense output and
    assembles the full period from the two half-periods.
    """
    t_hi = traj.grid[-1] if t_max is None else t_max
    W = lambda tau: traj.dense(tau)[1]
    taus = np.linspace(0.0, t_hi, 4096)
    vals = np.array([W(t) for t in taus])
    zeros = []
    for i in range(len(taus) - 1):
        a, b = vals[i], vals[i + 1]
        if a == 0.0 and taus[i] > 1e-12:
            zeros.append(taus[i])
        elif a * b < 0:
            zeros.append(brentq(W, taus[i], taus[i + 1], xtol=1e-14))
        if len(zeros) == 2:
            return 2.0 * (zeros[1] - zeros[0])
    raise RuntimeError("period not detected: fewer than two W zeros on the grid")


# ---------------------------------------------------------------------------
# N-piston generalization (hard mode only)

@dataclass(frozen=True)
class NPistonState:
    """N-1 pistons with scaled masses Mhat splitting the interval into N
    chambers of non-interacting gas particles."""

    X: np.ndarray        # piston positions, increasing
    W: np.ndarray
    Mhat: np.ndarray
    speeds: tuple        # per-chamber arrays s[i][j], i = 0..N-1
    masses: tuple        # matching per-chamber mass arrays

    def __post_init__(self):
        object.__setattr__(self, "X", np.array(self.X, float))
        object.__setattr__(self, "W", np.array(self.W, float))
        object.__setattr__(self, "Mhat", np.array(self.Mhat, float))
        object.__setattr__(self, "speeds",
                           tuple(np.array(s, float) for s in self.speeds))
        object.__setattr__(self, "masses",
                           tuple(np.array(m, float) for m in self.masses))
        walls = np.concatenate([[0.0], self.X, [1.0]])
        if np.any(np.diff(walls) <= 0):
            raise ConfigError("piston positions must be strictly increasing in (0,1)")
        if np.any(self.Mhat <= 0):
            raise ConfigError("scaled piston masses must be positive")

    @property
    def n_chambers(self):
        return len(self.X) + 1

    def widths(self):
        walls = np.concatenate([[0.0], self.X, [1.0]])
        return np.diff(walls)

    def flatten(self):
        return np.concatenate([self.X, self.W] + list(self.speeds))

    def with_flat(self, y):
        k = len(self.X)
        X, W = y[:k], y[k:2 * k]
        speeds, off = [], 2 * k
        for s in self.speeds:
            speeds.append(y[off:off + len(s)])
            off += len(s)
        return NPistonState(X, W, self.Mhat, tuple(speeds), self.masses)


def avg_field_npiston(state):
    """Averaged field for the N-piston chain: chamber pressures push each
    piston, and each gas speed is rescaled by its chamber's expansion."""
    widths = state.widths()
    if np.any(widths <= 0):
        raise ConfigError("chamber width must be positive")
    N = state.n_chambers
    # per-chamber kinetic pressure numerators sum m s^2
    P = np.array([np.sum(state.masses[i] * state.speeds[i] ** 2)
                  for i in range(N)])
    dX = state.W.copy()
    dW = (P[:-1] / widths[:-1] - P[1:] / widths[1:]) / state.Mhat
    Wpad = np.concatenate([[0.0], state.W, [0.0]])
    dspeeds = [-state.speeds[i] * (Wpad[i + 1] - Wpad[i]) / widths[i]
               for i in range(N)]
    return np.concatenate([dX, dW] + dspeeds)


def npiston_hamiltonian(state, state0):
    """Effective Hamiltonian of the N-piston chain relative to its start."""
    widths = state.widths()
    widths0 = state0.widths()
    E0 = np.array([np.sum(state0.masses[i] * state0.speeds[i] ** 2) / 2
                   for i in range(state0.n_chambers)])
    return (0.5 * np.sum(state.Mhat * state.W ** 2)
            + np.sum(E0 * widths0 ** 2 / widths ** 2))


def solve_npiston(state0, T, tol=1e-10, t_eval=None):
    """Integrate the N-piston averaged field; returns (taus, states)."""
    f = lambda tau, y: avg_field_npiston(state0.with_flat(y))
    sol = solve_ivp(f, (0.0, T), state0.flatten(), method="DOP853",
                    rtol=tol, atol=tol * 1e-2, dense_output=True,
                    t_eval=t_eval)
    if not sol.success:
        raise RuntimeError(f"N-piston ODE solve failed: {sol.message}")
    return sol.t, [state0.with_flat(y) for y in sol.y.T]
