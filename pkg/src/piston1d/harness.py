"""Convergence studies: ensembles over fast phases, sup-deviation between
actual and averaged slow dynamics, and log-log slope fits."""

import csv
import json
import time
from dataclasses import dataclass, field

import numpy as np

from .config import ConfigError, default_compact_set
from .state import FullState, SlowState
from . import hardcore, softcore
from .averaged import solve_averaged

SAMPLES_PER_SLOW_UNIT = 512
PLATEAU_PAD = 0.02  # keep sampled soft positions off the skin edges


@dataclass(frozen=True)
class EnsembleSpec:
    """A convergence-study grid: one slow initial condition, several random
    fast phases, and decreasing epsilon (and optional delta) values."""

    h0: SlowState
    n_phases: int = 16
    seed: int = 0
    epsilon_list: tuple = (0.1, 0.05, 0.02, 0.01, 0.005)
    delta_list: tuple = (0.0,)
    T: float = 1.0

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilon_list)
        if len(set(eps)) != len(eps) or any(e <= 0 for e in eps):
            raise ConfigError("epsilon values must be distinct and positive")
        object.__setattr__(self, "epsilon_list", eps)
        object.__setattr__(self, "delta_list",
                           tuple(float(d) for d in self.delta_list))


def default_scenario():
    """Asymmetric-pressure hard-core start: genuine piston oscillation."""
    return SlowState(0.5, 0.0, [2.0], [np.sqrt(2.0)], "hard-speeds")


def default_soft_scenario():
    """Soft-core start with energies inside the barrier band."""
    return SlowState(0.5, 0.0, [0.4], [0.2], "soft-energies")


def sample_phases(h0, n1, n2, rng):
    """Uniform fast phases: per particle a position fraction and a direction."""
    return {
        "u_left": rng.random(n1), "sign_left": rng.random(n1) < 0.5,
        "u_right": rng.random(n2), "sign_right": rng.random(n2) < 0.5,
    }


def build_hard_state(h0, cfg, phases, plateau_only=False, delta=0.0):
    """Full hard-core state realizing the slow state h0 at the given phases.

    With `plateau_only`, positions are restricted to the region where the
    matching soft-core potential vanishes, so a paired soft run can share
    the exact same positions and velocities.
    """
    h = h0.to_mode("hard-speeds", cfg.masses_left, cfg.masses_right)
    X = h.X
    pad = delta * (1 + PLATEAU_PAD)
    lo1, hi1 = (pad, X - pad) if plateau_only else (0.0, X)
    lo2, hi2 = (X + pad, 1 - pad) if plateau_only else (X, 1.0)
    xl = lo1 + phases["u_left"] * (hi1 - lo1)
    vl = np.where(phases["sign_left"], h.left, -h.left)
    xr = lo2 + phases["u_right"] * (hi2 - lo2)
    vr = np.where(phases["sign_right"], h.right, -h.right)
    return FullState(0.0, X, cfg.epsilon * h.W, xl, vl, xr, vr)


def build_soft_state(h0, cfg, phases):
    """Full soft-core state with all particles on the potential plateau, so
    every particle energy equals its target exactly."""
    return build_hard_state(h0, cfg, phases, plateau_only=True, delta=cfg.delta)


def slow_samples_hard(full0, cfg, T, extra_times=()):
    """Run the event loop to T/epsilon; slow rows (X, W, s...) vs micro t."""
    eps = cfg.epsilon
    until = T / eps
    n = int(np.ceil(SAMPLES_PER_SLOW_UNIT * T)) + 1
    times = np.unique(np.concatenate([np.linspace(0.0, until, n), extra_times]))
    final, (ts, rows), _, counts = hardcore.evolve(
        full0, until, cfg, sample_times=times, collect_events=False)
    return ts, rows, final, counts


def slow_samples_soft(full0, cfg, T, dt=None, drift_tol=1e-6):
    """Integrate the smooth dynamics to T/epsilon; slow rows (X, W, E...)."""
    eps = cfg.epsilon
    until = T / eps
    n = int(np.ceil(SAMPLES_PER_SLOW_UNIT * T)) + 1
    times = np.linspace(0.0, until, n)
    final, (ts, out), drift = softcore.integrate(
        full0, until, cfg, sample_times=times, dt=dt, drift_tol=drift_tol)
    rows = out[:, :-1].copy()  # drop the Hamiltonian diagnostic column
    rows[:, 1] /= eps          # V -> W
    return ts, rows, final, drift


def _membership_rows(rows, cs):
    """Vectorized compact-set membership for slow-state rows."""
    xlo, xhi = cs.X_bounds
    vlo, vhi = cs.value_bounds
    ok = (rows[:, 0] >= xlo) & (rows[:, 0] <= xhi)
    ok &= np.abs(rows[:, 1]) <= cs.W_bound
    vals = rows[:, 2:]
    ok &= np.all((vals >= vlo) & (vals <= vhi), axis=1)
    return ok


def sup_deviation(times, rows, eps, traj, compact_set, T):
    """Worst deviation between actual and averaged slow paths.

    Compares on the sample grid at slow times tau = eps * t, restricted to
    [0, T ^ T_eps] where T_eps is the first exit of either path from the
    compact set (numpy.inf if neither leaves).
    """
    taus = eps * np.asarray(times)
    if len(taus) == 0:
        raise ConfigError("empty sample overlap")
    T_eps = np.inf
    inside = _membership_rows(rows, compact_set)
    if not inside.all():
        T_eps = float(taus[np.argmin(inside)])
    if traj.first_exit is not None:
        T_eps = min(T_eps, traj.first_exit)
    mask = taus <= min(T, T_eps) + 1e-12
    avg_rows = traj.dense(np.clip(taus[mask], 0.0, traj.grid[-1])).T
    devs = np.max(np.abs(rows[mask] - avg_rows), axis=1)
    return float(devs.max()), T_eps


def fit_loglog(xs, errs, n_points=None):
    """Least-squares slope of log(err) against log(x)."""
    xs = np.asarray(xs, float)
    errs = np.asarray(errs, float)
    order = np.argsort(xs)
    xs, errs = xs[order], errs[order]
    if n_points is None:
        decades = np.log10(xs[-1] / xs[0])
        n_points = 3 if decades > 1.5 else len(xs)
    xs, errs = xs[:n_points], errs[:n_points]
    slope, intercept = np.polyfit(np.log(xs), np.log(errs), 1)
    return float(slope), float(intercept)


def _run_cell(spec, cfg_base, compact_hard, compact_soft, eps, delta, phases,
              dt_soft=None):
    cfg = cfg_base.replace(epsilon=eps, delta=delta)
    t0 = time.perf_counter()
    if delta == 0.0:
        h0 = spec.h0.to_mode("hard-speeds", cfg.masses_left, cfg.masses_right)
        full0 = build_hard_state(h0, cfg, phases)
        ts, rows, _, _ = slow_samples_hard(full0, cfg, spec.T)
        cs = compact_hard
    else:
        h0 = spec.h0.to_mode("soft-energies", cfg.masses_left, cfg.masses_right)
        full0 = build_soft_state(h0, cfg, phases)
        ts, rows, _, _ = slow_samples_soft(full0, cfg, spec.T, dt=dt_soft)
        cs = compact_soft
    traj = solve_averaged(h0, spec.T, cfg.masses_left, cfg.masses_right,
                          delta=delta, profile=cfg.potential, compact_set=cs)
    sup, T_eps = sup_deviation(ts, rows, eps, traj, cs, spec.T)
    return sup, T_eps, time.perf_counter() - t0


def convergence_study(spec, cfg_base, compact_set=None, jobs=1, dt_soft=None):
    """The main study: worst-over-phases sup deviation per (epsilon, delta)
    and the fitted log-log convergence slope per delta.

    Returns (table_rows, fits): table rows are dicts matching the errors.csv
    schema; fits maps each delta to {slope, intercept, window, worst}.
    """
    barrier = softcore.get_profile(cfg_base.potential).barrier
    compact_hard = compact_set if (compact_set is not None
                                   and compact_set.mode == "hard-speeds") \
        else default_compact_set("hard-speeds")
    compact_soft = compact_set if (compact_set is not None
                                   and compact_set.mode == "soft-energies") \
        else default_compact_set("soft-energies", barrier)
    rng = np.random.default_rng(spec.seed)
    phase_list = [sample_phases(spec.h0, cfg_base.n1, cfg_base.n2, rng)
                  for _ in range(spec.n_phases)]
    cells = [(eps, delta, k)
             for delta in spec.delta_list
             for eps in spec.epsilon_list
             for k in range(spec.n_phases)]
    rows = []

    def run(eps, delta, k):
        sup, T_eps, wall = _run_cell(spec, cfg_base, compact_hard,
                                     compact_soft, eps, delta,
                                     phase_list[k], dt_soft)
        return {"epsilon": eps, "delta": delta, "phase": k,
                "sup_error": sup,
                "first_exit_tau": None if np.isinf(T_eps) else T_eps,
                "wall_time": wall}

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(lambda c: run(*c), cells))
    else:
        rows = [run(*c) for c in cells]

    fits = {}
    for delta in spec.delta_list:
        worst = {eps: max(r["sup_error"] for r in rows
                          if r["delta"] == delta and r["epsilon"] == eps)
                 for eps in spec.epsilon_list}
        eps_sorted = sorted(worst)
        slope, intercept = fit_loglog(eps_sorted,
                                      [worst[e] for e in eps_sorted])
        fits[delta] = {"slope": slope, "intercept": intercept,
                       "worst_per_epsilon": worst,
                       "slope_window": "3 smallest eps if span > 1.5 decades"}
    return rows, fits


def hard_soft_comparison(spec, cfg_base, jobs=1, dt_soft=None):
    """Paired hard/soft runs with identical slow data and matched phases.

    For each (epsilon, delta) cell the two systems start from the exact
    same positions and velocities (all particles on the soft plateau) and
    the sup max-norm difference of their slow paths over t <= T/epsilon is
    recorded, in energy coordinates.  Returns (rows, fit) with a
    two-variable linear fit error ~ C_eps * eps + C_delta * delta.
    """
    rng = np.random.default_rng(spec.seed)
    phase_list = [sample_phases(spec.h0, cfg_base.n1, cfg_base.n2, rng)
                  for _ in range(spec.n_phases)]
    ml = np.asarray(cfg_base.masses_left, float)
    mr = np.asarray(cfg_base.masses_right, float)
    deltas = [d for d in spec.delta_list if d > 0]
    rows = []
    for delta in deltas:
        for eps in spec.epsilon_list:
            for k, phases in enumerate(phase_list):
                cfg_s = cfg_base.replace(epsilon=eps, delta=delta)
                cfg_h = cfg_base.replace(epsilon=eps, delta=0.0)
                h0 = spec.h0.to_mode("soft-energies", ml, mr)
                t0 = time.perf_counter()
                full0 = build_soft_state(h0, cfg_s, phases)
                ts_s, rows_s, _, _ = slow_samples_soft(full0, cfg_s, spec.T,
                                                       dt=dt_soft)
                ts_h, rows_h, _, _ = slow_samples_hard(full0, cfg_h, spec.T)
                # compare on the uniform grid common to both runs
                common, is_, ih_ = np.intersect1d(ts_s, ts_h,
                                                  return_indices=True)
                rs = rows_s[is_]
                rh = rows_h[ih_]
                # hard rows carry speeds; convert to energies
                rh = rh.copy()
                rh[:, 2:2 + cfg_base.n1] = \
                    ml * rh[:, 2:2 + cfg_base.n1] ** 2 / 2
                rh[:, 2 + cfg_base.n1:] = \
                    mr * rh[:, 2 + cfg_base.n1:] ** 2 / 2
                sup = float(np.max(np.abs(rs - rh)))
                rows.append({"epsilon": eps, "delta": delta, "phase": k,
                             "sup_error": sup, "first_exit_tau": None,
                             "wall_time": time.perf_counter() - t0})
    # worst and mean over phases per cell; the linear fit in (eps, delta)
    # uses the mean, which is much less noisy than the worst case
    cells = sorted({(r["epsilon"], r["delta"]) for r in rows})
    worst = {c: max(r["sup_error"] for r in rows
                    if (r["epsilon"], r["delta"]) == c) for c in cells}
    mean = {c: float(np.mean([r["sup_error"] for r in rows
                              if (r["epsilon"], r["delta"]) == c]))
            for c in cells}
    A = np.array([[e, d] for e, d in cells])
    b = np.array([mean[c] for c in cells])
    coef, *_ = np.linalg.lstsq(A, b, rcond=None)
    fit = {"C_epsilon": float(coef[0]), "C_delta": float(coef[1]),
           "worst_per_cell": {f"{e}:{d}": worst[(e, d)] for e, d in cells},
           "mean_per_cell": {f"{e}:{d}": mean[(e, d)] for e, d in cells}}
    return rows, fit


def floor_slope(xs, errs, floor):
    """Log-log slope of (err - floor) against x, on points clear of the
    floor; used for the two-floor structure of the comparison study."""
    xs = np.asarray(xs, float)
    errs = np.asarray(errs, float)
    mask = errs > 1.5 * floor
    if mask.sum() < 2:
        raise ConfigError("not enough points above the floor to fit")
    return fit_loglog(xs[mask], errs[mask] - floor, n_points=mask.sum())[0]


def collision_rate_audit(cfg, h0, duration, seed=None):
    """Empirical piston-collision rates vs the s/(2 width) prediction.

    Returns per-particle dicts with the measured rate, the predicted rate
    from time-averaged slow values, and their relative mismatch.
    """
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    phases = sample_phases(h0, cfg.n1, cfg.n2, rng)
    h = h0.to_mode("hard-speeds", cfg.masses_left, cfg.masses_right)
    full0 = build_hard_state(h, cfg, phases)
    n = int(np.ceil(duration)) * 8 + 1
    times = np.linspace(0.0, duration, n)
    _, (ts, rows), _, counts = hardcore.evolve(
        full0, duration, cfg, sample_times=times, collect_events=False)
    X_mean = float(np.mean(rows[:, 0]))
    out = []
    for side, nn, off, width in (("left", cfg.n1, 2, X_mean),
                                 ("right", cfg.n2, 2 + cfg.n1, 1 - X_mean)):
        for j in range(nn):
            s_mean = float(np.mean(rows[:, off + j]))
            pred = s_mean / (2 * width)
            meas = counts[side][j] / duration
            out.append({"side": side, "index": j, "measured": meas,
                        "predicted": pred,
                        "rel_error": abs(meas - pred) / pred})
    return out


def write_errors_csv(rows, path):
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(
            f, fieldnames=["epsilon", "delta", "phase", "sup_error",
                           "first_exit_tau", "wall_time"],
            lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(r)


def write_fit_json(fits, path, note=None):
    doc = {"fits": {str(k): v for k, v in fits.items()}}
    doc["slope_window_note"] = (
        note or "acceptance slope window [0.7, 1.3] is an engineering choice")
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, default=str)
