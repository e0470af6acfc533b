"""Acceptance suite: one test per headline claim, at its stated tolerance.

Each test prints a single PASS/FAIL line (visible with `pytest -s` or in
the captured output of a failing run) before asserting, so a full run
leaves a readable scorecard.
"""

import numpy as np
import pytest
from scipy.integrate import simpson, solve_ivp

from piston1d import FullState, SlowState, SystemConfig
from piston1d.averaged import (NPistonState, adiabatic_invariant,
                               effective_hamiltonian, find_period,
                               npiston_hamiltonian, solve_averaged,
                               solve_npiston)
from piston1d.config import default_compact_set
from piston1d.harness import (EnsembleSpec, build_hard_state,
                              convergence_study, default_scenario,
                              default_soft_scenario, floor_slope,
                              hard_soft_comparison, sample_phases,
                              slow_samples_hard)
from piston1d import hardcore, softcore

SLOPE_WINDOW = (0.7, 1.3)
EPS_GRID = (0.1, 0.05, 0.02, 0.01, 0.005)


def report(criterion, ok, detail):
    print(f"[acceptance] {criterion}: {'PASS' if ok else 'FAIL'} ({detail})",
          flush=True)
    return ok


# ---------------------------------------------------------------- fixtures

@pytest.fixture(scope="module")
def hard_study():
    spec = EnsembleSpec(h0=default_scenario(), n_phases=16, seed=0,
                        epsilon_list=EPS_GRID, delta_list=(0.0,), T=1.0)
    return convergence_study(spec, SystemConfig())


@pytest.fixture(scope="module")
def soft_study():
    spec = EnsembleSpec(h0=default_soft_scenario(), n_phases=16, seed=0,
                        epsilon_list=EPS_GRID,
                        delta_list=(0.1, 0.05, 0.025), T=1.0)
    return convergence_study(spec, SystemConfig())


@pytest.fixture(scope="module")
def comparison():
    # the two smallest deltas only estimate the epsilon floor
    spec = EnsembleSpec(h0=default_soft_scenario(), n_phases=8, seed=7,
                        epsilon_list=EPS_GRID,
                        delta_list=(0.1, 0.05, 0.025, 0.0125, 0.00625),
                        T=1.0)
    return hard_soft_comparison(spec, SystemConfig())


# ---------------------------------------------------------------- criteria

def test_criterion_1_hard_convergence(hard_study):
    """Worst sup-deviation from the averaged path is O(epsilon)."""
    rows, fits = hard_study
    fit = fits[0.0]
    slope = fit["slope"]
    worst = fit["worst_per_epsilon"]
    errs = [worst[e] for e in sorted(worst, reverse=True)]  # eps decreasing
    monotone = all(a >= b for a, b in zip(errs, errs[1:]))
    ok = SLOPE_WINDOW[0] <= slope <= SLOPE_WINDOW[1] and monotone
    report("1 hard-core O(eps) convergence", ok,
           f"slope={slope:.3f}, errors={['%.3g' % e for e in errs]}")
    assert SLOPE_WINDOW[0] <= slope <= SLOPE_WINDOW[1]
    assert monotone


def test_criterion_2_soft_uniform_convergence(soft_study):
    """Each delta converges at slope ~1 and the error is uniform in delta."""
    rows, fits = soft_study
    deltas = (0.1, 0.05, 0.025)
    slopes = {d: fits[d]["slope"] for d in deltas}
    slopes_ok = all(SLOPE_WINDOW[0] <= s <= SLOPE_WINDOW[1]
                    for s in slopes.values())
    uniform_ok = True
    for eps in EPS_GRID:
        worst_over_delta = max(fits[d]["worst_per_epsilon"][eps]
                               for d in deltas)
        ref = fits[0.025]["worst_per_epsilon"][eps]
        uniform_ok &= worst_over_delta <= 3.0 * ref
    ok = slopes_ok and uniform_ok
    report("2 soft-core uniform convergence", ok,
           "slopes=" + ", ".join(f"{d}:{s:.3f}" for d, s in slopes.items())
           + f", uniform={uniform_ok}")
    assert slopes_ok
    assert uniform_ok


def test_criterion_3_hard_soft_comparison(comparison):
    """Hard vs soft trajectory distance has the two-floor structure
    err ~ C_eps * eps + C_delta * delta."""
    rows, fit = comparison
    mean = {tuple(map(float, k.split(":"))): v
            for k, v in fit["mean_per_cell"].items()}
    # delta sweep at the smallest epsilon, above the epsilon floor;
    # the floor is estimated from the two reference deltas
    eps0 = 0.005
    floor_eps = 0.5 * (mean[(eps0, 0.0125)] + mean[(eps0, 0.00625)])
    errs_d = np.array([mean[(eps0, d)] for d in (0.1, 0.05, 0.025)])
    slope_d = floor_slope(np.array([0.1, 0.05, 0.025]), errs_d, floor_eps)
    # epsilon sweep at the smallest production delta, above the delta floor
    d0 = 0.025
    floor_delta = fit["C_delta"] * d0
    errs_e = np.array([mean[(e, d0)] for e in EPS_GRID])
    slope_e = floor_slope(np.array(EPS_GRID), errs_e, floor_delta)
    ok = (SLOPE_WINDOW[0] <= slope_d <= SLOPE_WINDOW[1]
          and SLOPE_WINDOW[0] <= slope_e <= SLOPE_WINDOW[1])
    report("3 hard/soft comparison two-floor fit", ok,
           f"slope_delta={slope_d:.3f}, slope_eps={slope_e:.3f}, "
           f"C_eps={fit['C_epsilon']:.3g}, C_delta={fit['C_delta']:.3g}")
    assert SLOPE_WINDOW[0] <= slope_d <= SLOPE_WINDOW[1]
    assert SLOPE_WINDOW[0] <= slope_e <= SLOPE_WINDOW[1]


def test_criterion_4_first_integrals():
    """Effective Hamiltonian, s X products, and the phase-plane areas are
    constant along averaged solutions to 1e-7 relative over 5 periods."""
    h0 = default_scenario()
    probe = solve_averaged(h0, 6.0, [1.0], [1.0], tol=1e-11)
    P = find_period(probe)
    traj = solve_averaged(h0, 5 * P, [1.0], [1.0], tol=1e-11)
    taus = np.linspace(0.0, 5 * P, 257)
    H = np.array([effective_hamiltonian(traj.slow_state(t), h0)
                  for t in taus])
    sX = np.array([traj.slow_state(t).left[0] * traj.slow_state(t).X
                   for t in taus])
    I1 = np.array([adiabatic_invariant("left", traj.slow_state(t).X,
                                       traj.slow_state(t).left[0] ** 2 / 2)
                   for t in taus])
    rel = lambda v: (np.max(v) - np.min(v)) / abs(np.mean(v))
    # soft case: the delta > 0 invariant along the soft averaged flow
    hs = default_soft_scenario()
    probe_s = solve_averaged(hs, 6.0, [1.0], [1.0], delta=0.05, tol=1e-11)
    Ps = find_period(probe_s)
    traj_s = solve_averaged(hs, 5 * Ps, [1.0], [1.0], delta=0.05, tol=1e-11)
    taus_s = np.linspace(0.0, 5 * Ps, 129)
    Is = np.array([adiabatic_invariant("left", traj_s.slow_state(t).X,
                                       traj_s.slow_state(t).left[0], 0.05)
                   for t in taus_s])
    vars_ = {"H": rel(H), "sX": rel(sX), "I_hard": rel(I1),
             "I_soft": rel(Is)}
    ok = all(v < 1e-7 for v in vars_.values())
    report("4 averaged first integrals", ok,
           ", ".join(f"{k}={v:.2e}" for k, v in vars_.items()))
    for k, v in vars_.items():
        assert v < 1e-7, k


def test_criterion_5_periodicity():
    """Averaged orbits are periodic: 10 random starts return to their
    initial slow state within 1e-6 after the detected period."""
    rng = np.random.default_rng(12)
    worst = 0.0
    for _ in range(10):
        h0 = SlowState(rng.uniform(0.3, 0.7), rng.uniform(-1.0, 1.0),
                       [rng.uniform(0.6, 2.0)], [rng.uniform(0.6, 2.0)])
        traj = solve_averaged(h0, 25.0, [1.0], [1.0], tol=1e-12)
        P = find_period(traj)
        hP = traj.slow_state(P)
        dev = max(abs(hP.X - h0.X), abs(hP.W - h0.W),
                  abs(hP.left[0] - h0.left[0]),
                  abs(hP.right[0] - h0.right[0]))
        worst = max(worst, dev)
    ok = worst < 1e-6
    report("5 periodicity of averaged orbits", ok, f"worst return "
           f"deviation {worst:.2e}")
    assert worst < 1e-6


def test_criterion_6_soft_period_formula():
    """T(delta) is exactly affine in delta and T(0) is the bounce period."""
    T0 = softcore.period_T("left", 0.5, 1.0, 0.0, m=2.0)
    exact0 = T0 == 1.0
    E, m, X = 0.5, 2.0, 0.5
    Tb = softcore.period_T("left", X, E, 0.0, m=m)
    ratios = [(softcore.period_T("left", X, E, d, m=m) - Tb) / d
              for d in (0.1, 0.05, 0.025)]
    stable = (max(ratios) - min(ratios)) / abs(np.mean(ratios)) < 0.2
    ok = exact0 and stable
    report("6 soft period formula", ok,
           f"T(0)={T0!r}, (T(d)-T(0))/d={['%.6f' % r for r in ratios]}")
    assert exact0
    assert stable


def test_criterion_7_averaged_force_identity():
    """Time average of the piston-skin force magnitude over one frozen
    orbit equals sqrt(8 m E) / T to 1e-6 relative."""
    X, m = 0.5, 1.0
    worst = 0.0
    for E, d in ((0.2, 0.1), (0.4, 0.05), (0.5, 0.08), (0.7, 0.05),
                 (0.3, 0.025)):
        kdp = lambda y: float(softcore.kappa_delta_prime(y, d, softcore.CUBIC))
        f = lambda t, y: [y[1], (-kdp(y[0]) + kdp(X - y[0])) / m]
        T1 = softcore.period_T("left", X, E, d, m=m)
        sol = solve_ivp(f, (0.0, T1), [X / 2, np.sqrt(2 * E / m)],
                        method="DOP853", rtol=1e-12, atol=1e-14,
                        dense_output=True)
        ts = np.linspace(0.0, T1, 200001)
        avg = simpson(np.array([-kdp(X - x) for x in sol.sol(ts)[0]]),
                      x=ts) / T1
        pred = np.sqrt(8 * m * E) / T1
        worst = max(worst, abs(avg - pred) / pred)
    ok = worst < 1e-6
    report("7 averaged-force identity", ok, f"worst rel error {worst:.2e}")
    assert worst < 1e-6


def test_criterion_8_mechanical_equilibrium():
    """P1 = P2, W = 0: X stays within C * epsilon of its start over
    t = 1/epsilon, with C stable under epsilon-halving."""
    h0 = SlowState(0.5, 0.0, [np.sqrt(2.0)], [np.sqrt(2.0)])
    C = {}
    for eps in (0.02, 0.01):
        cfg = SystemConfig(epsilon=eps)
        rng = np.random.default_rng(3)
        sup = 0.0
        for _ in range(4):
            phases = sample_phases(h0, 1, 1, rng)
            full0 = build_hard_state(h0, cfg, phases)
            ts, rows, _, _ = slow_samples_hard(full0, cfg, 1.0)
            sup = max(sup, float(np.max(np.abs(rows[:, 0] - 0.5))))
        C[eps] = sup / eps
    ratio = C[0.01] / C[0.02]
    ok = 0.5 <= ratio <= 2.0 and max(C.values()) < 5.0
    report("8 mechanical equilibrium", ok,
           f"C(0.02)={C[0.02]:.3f}, C(0.01)={C[0.01]:.3f}, ratio={ratio:.2f}")
    assert 0.5 <= ratio <= 2.0
    assert max(C.values()) < 5.0


def test_criterion_9_exact_conservation():
    """Hard-core energy drift <= 1e-12 over 1e6 collision events; soft-core
    Hamiltonian drift <= 1e-8 over t = 1/epsilon at the default step."""
    cfg = SystemConfig(epsilon=0.1)
    st0 = FullState(0.0, 0.5, 0.0, [0.25], [1.0], [0.75], [-1.0])
    E0 = hardcore.total_energy(st0, cfg)
    # ~4 events per unit time (2 per particle: one piston or wall pair)
    final, _, _, counts = hardcore.evolve(st0, 2.7e5, cfg,
                                          collect_events=False)
    piston_events = int(sum(counts["left"]) + sum(counts["right"]))
    # wall reflections alternate with piston hits, doubling the count
    n_events = 2 * piston_events
    hard_drift = abs(hardcore.total_energy(final, cfg) - E0) / E0

    cfg_s = SystemConfig(epsilon=0.01, delta=0.05)
    v1, v2 = np.sqrt(2 * 0.4), np.sqrt(2 * 0.2)
    soft0 = FullState(0.0, 0.5, 0.0, [0.25], [v1], [0.75], [-v2])
    _, _, soft_drift = softcore.integrate(soft0, 100.0, cfg_s)
    ok = hard_drift <= 1e-12 and n_events >= 1_000_000 and soft_drift <= 1e-8
    report("9 exact conservation", ok,
           f"hard drift {hard_drift:.2e} over ~{n_events} events, "
           f"soft drift {soft_drift:.2e}")
    assert n_events >= 1_000_000
    assert hard_drift <= 1e-12
    assert soft_drift <= 1e-8


def test_criterion_10_property_suites():
    """Structure of the collision algebra and the N-piston chain."""
    rng = np.random.default_rng(5)
    # determinant 1 to 1e-14
    det_ok = True
    for _ in range(50):
        m, eps = rng.uniform(0.1, 10.0), rng.uniform(1e-3, 1.0)
        for side in ("left", "right"):
            det_ok &= abs(np.linalg.det(
                hardcore.collision_matrix_s(side, m, eps)) - 1.0) < 1e-14

    # commutator of simultaneous left/right collision blocks is O(eps^2)
    def commutator_norm(eps):
        A = hardcore.collision_matrix_s("left", 1.0, eps)
        B = hardcore.collision_matrix_s("right", 1.0, eps)
        L = np.eye(3)
        L[np.ix_([0, 1], [0, 1])] = A       # acts on (s1, W)
        R = np.eye(3)
        R[1, 1], R[1, 2] = B[1, 1], B[1, 0]  # W row of B acting on (s2, W)
        R[2, 1], R[2, 2] = B[0, 1], B[0, 0]
        return np.linalg.norm(L @ R - R @ L)

    ratios = [commutator_norm(e) / e ** 2 for e in (0.02, 0.01, 0.005)]
    comm_ok = (max(ratios) - min(ratios)) / np.mean(ratios) < 0.2

    # force-band property on sampled frozen orbits
    band_ok = True
    X, m = 0.5, 1.0
    for E, d in ((0.5, 0.1), (0.3, 0.05), (0.7, 0.08)):
        kdp = lambda y: float(softcore.kappa_delta_prime(y, d, softcore.CUBIC))
        f = lambda t, y: [y[1], (-kdp(y[0]) + kdp(X - y[0])) / m]
        T1 = softcore.period_T("left", X, E, d, m=m)
        sol = solve_ivp(f, (0.0, 2 * T1), [X / 2, np.sqrt(2 * E / m)],
                        method="DOP853", rtol=1e-12, atol=1e-14,
                        dense_output=True)
        width = softcore.delta_band_width("left", X, E, d, m=m)
        cfg0 = SystemConfig(epsilon=0.0, delta=d)
        for t in np.linspace(0.0, 2 * T1, 240):
            x, v = sol.sol(t)
            if kdp(X - x) != 0.0:
                st = FullState(0.0, X, 0.0, [x], [v], [0.75],
                               [-np.sqrt(2 * 0.3 / m)])
                phi = softcore.soft_angle_variables(st, cfg0).phi_left[0]
                band_ok &= abs(phi - 0.5) <= width + 1e-9

    # N = 3 pistons: effective Hamiltonian conserved to 1e-8
    st0 = NPistonState([0.25, 0.5, 0.75], [0.0, 0.0, 0.0],
                       [1.0, 1.0, 1.0],
                       ([2.0], [1.0], [1.5], [1.0]),
                       ([1.0], [1.0], [1.0], [1.0]))
    H0 = npiston_hamiltonian(st0, st0)
    _, states = solve_npiston(st0, 2.0, tol=1e-11,
                              t_eval=np.linspace(0.0, 2.0, 50))
    n_dev = max(abs(npiston_hamiltonian(s, st0) - H0) / abs(H0)
                for s in states)
    np_ok = n_dev < 1e-8

    ok = det_ok and comm_ok and band_ok and np_ok
    report("10 property suites", ok,
           f"det={det_ok}, commutator ratios="
           f"{['%.4f' % r for r in ratios]}, band={band_ok}, "
           f"npiston dev={n_dev:.2e}")
    assert det_ok
    assert comm_ok
    assert band_ok
    assert np_ok
