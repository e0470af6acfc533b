"""Event-driven simulation of the hard-core (delta = 0) piston system.

Between collisions every particle moves ballistically, so collision times
are roots of linear gap functions and the collision updates are the exact
2x2 elastic-collision matrices.  Ties within a small time tolerance are
resolved deterministically: left piston collisions first, then right, then
wall reflections, ascending particle index within each group.
"""

from dataclasses import dataclass, field

import numpy as np

from .config import ConfigError
from .state import FullState, SlowState

EVENT_TIME_TOL = 1e-12
GAP_CHECK_TOL = 1e-10


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Event:
    """One collision event: `entries` lists (kind, side, index) tuples in
    application order; a single entry is an ordinary collision, several
    entries are a simultaneous event."""

    time: float
    entries: tuple

    @property
    def kind(self):
        return "simultaneous" if len(self.entries) > 1 else self.entries[0][0]


@dataclass
class EventRecord:
    time: float
    kind: str
    side: str
    index: int
    pre: SlowState
    post: SlowState


@dataclass(frozen=True)
class AngleState:
    phi_left: np.ndarray
    phi_right: np.ndarray


def collision_matrix_v(m, M):
    """Elastic-collision update for (v, V) with masses (m, M)."""
    return np.array([[m - M, 2 * M], [2 * m, M - m]]) / (m + M)


def collision_matrix_s(side, m, epsilon):
    """Collision update in rescaled coordinates (s, W), s = |v|, W = V/eps."""
    e2m = epsilon ** 2 * m
    if side == "left":
        A = np.array([[1 - e2m, -2 * epsilon], [2 * epsilon * m, 1 - e2m]])
    else:
        A = np.array([[1 - e2m, 2 * epsilon], [-2 * epsilon * m, 1 - e2m]])
    return A / (1 + e2m)


def _candidate_times(X, V, xl, vl, xr, vr):
    """(time, kind, side, index) for every approaching collision pair."""
    out = []
    for j, (x, v) in enumerate(zip(xl, vl)):
        rel = v - V
        if rel > 0:
            out.append(((X - x) / rel, "piston", "left", j))
        if v < 0:
            out.append((-x / v, "wall", "left", j))
    for j, (x, v) in enumerate(zip(xr, vr)):
        rel = V - v
        if rel > 0:
            out.append(((x - X) / rel, "piston", "right", j))
        if v > 0:
            out.append(((1 - x) / v, "wall", "right", j))
    return out


_KIND_ORDER = {("piston", "left"): 0, ("piston", "right"): 1,
               ("wall", "left"): 2, ("wall", "right"): 3}


def _group_earliest(cands, tol=EVENT_TIME_TOL):
    tmin = min(t for t, *_ in cands)
    hits = [(kind, side, j) for t, kind, side, j in cands if t <= tmin + tol]
    hits.sort(key=lambda e: (_KIND_ORDER[(e[0], e[1])], e[2]))
    return tmin, tuple(hits)


def next_event(state, cfg, tol=EVENT_TIME_TOL):
    """Earliest future collision from a collision-free state."""
    for arr in (state.x_left, state.v_left, state.x_right, state.v_right):
        if not np.all(np.isfinite(arr)):
            raise SimulationError("NaN/inf in state")
    cands = _candidate_times(state.X, state.V, state.x_left, state.v_left,
                             state.x_right, state.v_right)
    cands = [c for c in cands if c[0] > tol or c[0] >= 0]
    if not cands:
        raise SimulationError("stalled: no future event")
    tmin, hits = _group_earliest(cands, tol)
    return Event(state.t + tmin, hits)


def _apply_piston(V, m, M, v):
    """Exact elastic collision; returns (v_new, V_new)."""
    if np.isinf(M):
        return 2 * V - v, V
    s = m + M
    return ((m - M) * v + 2 * M * V) / s, (2 * m * v + (M - m) * V) / s


def apply_piston_collision(state, side, j, cfg):
    """Elastic piston-particle collision for particle j on the given side."""
    xl, vl = state.x_left.copy(), state.v_left.copy()
    xr, vr = state.x_right.copy(), state.v_right.copy()
    M = cfg.piston_mass
    if side == "left":
        if vl[j] - state.V <= 0:
            raise SimulationError("piston collision with separating velocities")
        v_new, V_new = _apply_piston(state.V, cfg.masses_left[j], M, vl[j])
        vl[j] = v_new
        xl[j] = state.X
    else:
        if state.V - vr[j] <= 0:
            raise SimulationError("piston collision with separating velocities")
        v_new, V_new = _apply_piston(state.V, cfg.masses_right[j], M, vr[j])
        vr[j] = v_new
        xr[j] = state.X
    return state.copy(V=V_new, x_left=xl, v_left=vl, x_right=xr, v_right=vr)


def apply_wall_collision(state, side, j, tol=GAP_CHECK_TOL):
    """Reflect particle j off its wall (0 for the left gas, 1 for the right)."""
    if side == "left":
        if abs(state.x_left[j]) > tol:
            raise SimulationError("particle not at wall")
        vl = state.v_left.copy()
        vl[j] = -vl[j]
        xl = state.x_left.copy()
        xl[j] = 0.0
        return state.copy(x_left=xl, v_left=vl)
    if abs(state.x_right[j] - 1.0) > tol:
        raise SimulationError("particle not at wall")
    vr = state.v_right.copy()
    vr[j] = -vr[j]
    xr = state.x_right.copy()
    xr[j] = 1.0
    return state.copy(x_right=xr, v_right=vr)


def apply_simultaneous(state, entries, cfg):
    """Apply grouped collisions as sequential exact collisions in the fixed
    order: left piston hits, right piston hits, then wall reflections."""
    for kind, side, j in entries:
        if kind == "piston":
            state = apply_piston_collision(state, side, j, cfg)
        else:
            state = apply_wall_collision(state, side, j)
    return state


def total_energy(state, cfg):
    E = np.sum(np.asarray(cfg.masses_left) * state.v_left ** 2) / 2
    E += np.sum(np.asarray(cfg.masses_right) * state.v_right ** 2) / 2
    if cfg.epsilon > 0:
        E += cfg.piston_mass * state.V ** 2 / 2
    return float(E)


def _slow_row(X, V, vl, vr, epsilon):
    W = V / epsilon if epsilon > 0 else 0.0
    return np.concatenate([[X, W], np.abs(vl), np.abs(vr)])


def evolve(state, until_t, cfg, sample_times=None, collect_events=True,
           max_events=20_000_000):
    """Run the event loop up to micro time `until_t`.

    Samples the slow state at each requested time and immediately before
    every collision (the flow is taken left-continuous at events).  Returns
    (final_state, (times, slow_rows), events, collision_counts) where
    collision_counts maps side -> per-particle piston-collision counts.
    """
    if until_t < state.t:
        raise ConfigError("until_t before current state time")
    t = state.t
    X, V = state.X, state.V
    xl, vl = state.x_left.copy(), state.v_left.copy()
    xr, vr = state.x_right.copy(), state.v_right.copy()
    M = cfg.piston_mass
    eps = cfg.epsilon
    ml, mr = cfg.masses_left, cfg.masses_right

    sample_times = np.array([] if sample_times is None else sample_times, float)
    si = 0
    out_t, out_h = [], []
    events = [] if collect_events else None
    counts = {"left": np.zeros(cfg.n1, int), "right": np.zeros(cfg.n2, int)}
    n_events = 0

    def drift(dt):
        nonlocal t, X, xl, xr
        t += dt
        X += V * dt
        xl += vl * dt
        xr += vr * dt

    def sample_up_to(t_stop):
        # emit all grid samples with time <= t_stop
        nonlocal si
        while si < len(sample_times) and sample_times[si] <= t_stop + 1e-15:
            dt = sample_times[si] - t
            out_t.append(sample_times[si])
            out_h.append(np.concatenate([
                [X + V * dt], [V / eps if eps > 0 else 0.0],
                np.abs(vl), np.abs(vr)]))
            si += 1

    while True:
        cands = _candidate_times(X, V, xl, vl, xr, vr)
        if not cands:
            raise SimulationError("stalled: no future event")
        dt_ev, hits = _group_earliest(cands)
        if t + dt_ev > until_t:
            sample_up_to(until_t)
            drift(until_t - t)
            break
        sample_up_to(t + dt_ev)
        drift(dt_ev)
        pre = None
        if collect_events:
            pre = _slow_row(X, V, vl, vr, eps)
        if len(sample_times):
            # record the pre-collision slow state at the event time
            out_t.append(t)
            out_h.append(_slow_row(X, V, vl, vr, eps))
        for kind, side, j in hits:
            if kind == "piston":
                m = ml[j] if side == "left" else mr[j]
                v = vl[j] if side == "left" else vr[j]
                if side == "left" and v - V <= 0:
                    continue  # earlier hit in this group reversed the approach
                if side == "right" and V - v <= 0:
                    continue
                v_new, V = _apply_piston(V, m, M, v)
                if side == "left":
                    vl[j] = v_new
                    xl[j] = X
                else:
                    vr[j] = v_new
                    xr[j] = X
                counts[side][j] += 1
            else:
                if side == "left":
                    vl[j] = -vl[j]
                    xl[j] = 0.0
                else:
                    vr[j] = -vr[j]
                    xr[j] = 1.0
        if collect_events:
            k, s0, j0 = hits[0]
            events.append(EventRecord(
                t, "simultaneous" if len(hits) > 1 else k, s0, j0,
                pre, _slow_row(X, V, vl, vr, eps)))
        n_events += len(hits)
        if n_events > max_events:
            raise SimulationError(
                f"event cap exceeded: {n_events} events by t={t:.6g} "
                f"(until_t={until_t:.6g}, eps={eps})")
        # ordering sanity: gas must remain inside its chamber
        if (len(xl) and xl.max() > X + GAP_CHECK_TOL) or \
           (len(xr) and xr.min() < X - GAP_CHECK_TOL):
            raise SimulationError("ordering violated after event")

    final = FullState(t, X, V, xl, vl, xr, vr)
    samples = (np.array(out_t), np.array(out_h))
    return final, samples, events, counts


def angle_variables(state, cfg):
    """Angle coordinates on the frozen-piston invariant tori.

    phi = 1/2 at a piston collision and 0 at a wall collision; undefined at
    turning configurations (v = 0).
    """
    if not (0.0 < state.X < 1.0):
        raise ConfigError("X must lie in (0,1)")
    if np.any(state.v_left == 0) or np.any(state.v_right == 0):
        raise ConfigError("angle undefined for v = 0")
    frac1 = state.x_left / (2 * state.X)
    phi1 = np.where(state.v_left > 0, frac1, 1.0 - frac1)
    frac2 = (1 - state.x_right) / (2 * (1 - state.X))
    phi2 = np.where(state.v_right < 0, frac2, 1.0 - frac2)
    return AngleState(phi1 % 1.0, phi2 % 1.0)


def liouville_density(X, n1, n2):
    """Unnormalized invariant-measure density X^n1 (1-X)^n2."""
    if not (0.0 < X < 1.0):
        return 0.0
    return X ** n1 * (1 - X) ** n2


def events_to_csv(events, path):
    """Write an event log as CSV: t, kind, side, index, X, W, values..."""
    import csv

    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        n_vals = len(events[0].post) - 2 if events else 0
        w.writerow(["t", "kind", "side", "index", "X", "W"]
                   + [f"value_{k}" for k in range(n_vals)])
        for ev in events:
            w.writerow([repr(ev.time), ev.kind, ev.side, ev.index]
                       + [repr(v) for v in ev.post])
