"""Soft-core (delta > 0) Hamiltonian dynamics.

The gas interacts with the walls and the piston through the compactly
supported potential kappa_delta(x) = kappa(x/delta).  This module holds the
potential profiles, the equations of motion and their fixed-step symplectic
integrator, the frozen-piston period quadratures, angle variables, and the
force-band width used by the averaging checks.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numba import njit
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from .config import ConfigError
from .state import FullState

DEFAULT_BAND_MARGIN = 0.05  # times the barrier height


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class PotentialProfile:
    """A C^2 wall/piston potential shape kappa on [0, infinity).

    kappa vanishes for arguments >= 1 and decreases strictly on [0, 1).
    `singular_power` is the exponent p with -(kappa^-1)'(u) ~ u^-p as
    u -> 0+, when known; it selects an exact substitution for the endpoint
    singularity in the period quadratures (tanh-sinh is used otherwise).
    """

    name: str
    kappa: callable
    kappa_prime: callable
    kappa_inv: callable
    kappa_inv_prime: callable
    kappa_inv_second: callable
    barrier: float
    singular_power: float = None


def _cubic_kappa(u):
    u = np.asarray(u, float)
    return np.where(u < 1.0, (1.0 - u) ** 3, 0.0)


def _cubic_kappa_prime(u):
    u = np.asarray(u, float)
    return np.where(u < 1.0, -3.0 * (1.0 - u) ** 2, 0.0)


CUBIC = PotentialProfile(
    name="cubic",
    kappa=_cubic_kappa,
    kappa_prime=_cubic_kappa_prime,
    kappa_inv=lambda y: 1.0 - np.asarray(y, float) ** (1.0 / 3.0),
    kappa_inv_prime=lambda y: -np.asarray(y, float) ** (-2.0 / 3.0) / 3.0,
    kappa_inv_second=lambda y: 2.0 * np.asarray(y, float) ** (-5.0 / 3.0) / 9.0,
    barrier=1.0,
    singular_power=2.0 / 3.0,
)

_PROFILES = {"cubic": CUBIC}


def get_profile(name):
    if isinstance(name, PotentialProfile):
        return name
    try:
        return _PROFILES[name]
    except KeyError:
        raise ConfigError(f"unknown potential profile {name!r}") from None


def load_tabulated_profile(path, name="tabulated"):
    """Build a profile from a CSV of (u, kappa, kappa_prime) rows.

    The table must cover [0, 1] with kappa strictly decreasing; splines
    supply the inverse and its derivatives.
    """
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    u, k, kp = data[:, 0], data[:, 1], data[:, 2]
    if u[0] != 0.0 or u[-1] < 1.0:
        raise ConfigError("tabulated profile must cover u in [0, 1]")
    if np.any(np.diff(k)[k[:-1] > 0] >= 0):
        raise ConfigError("tabulated kappa must be strictly decreasing on [0,1)")
    kspl = CubicSpline(u, k)
    inside = k > 0
    inv = CubicSpline(k[inside][::-1], u[inside][::-1])
    prof = PotentialProfile(
        name=name,
        kappa=lambda x: np.where(np.asarray(x, float) < 1.0, kspl(x), 0.0),
        kappa_prime=lambda x: np.where(np.asarray(x, float) < 1.0,
                                       kspl(x, 1), 0.0),
        kappa_inv=inv,
        kappa_inv_prime=lambda y: inv(y, 1),
        kappa_inv_second=lambda y: inv(y, 2),
        barrier=float(k[0]),
    )
    _PROFILES[name] = prof
    return prof


def kappa_delta(x, delta, profile):
    return profile.kappa(np.asarray(x, float) / delta)


def kappa_delta_prime(x, delta, profile):
    return profile.kappa_prime(np.asarray(x, float) / delta) / delta


def potential_U(side, x, X, delta, profile):
    """Single-particle potential energy inside its chamber."""
    x = np.asarray(x, float)
    if delta == 0.0:
        return np.zeros_like(x)
    if side == "left":
        return kappa_delta(x, delta, profile) + kappa_delta(X - x, delta, profile)
    return kappa_delta(x - X, delta, profile) + kappa_delta(1 - x, delta, profile)


def total_hamiltonian(state, cfg, profile=None):
    profile = get_profile(profile or cfg.potential)
    ml = np.asarray(cfg.masses_left)
    mr = np.asarray(cfg.masses_right)
    H = np.sum(ml * state.v_left ** 2) / 2 + np.sum(mr * state.v_right ** 2) / 2
    H += np.sum(potential_U("left", state.x_left, state.X, cfg.delta, profile))
    H += np.sum(potential_U("right", state.x_right, state.X, cfg.delta, profile))
    if cfg.epsilon > 0:
        H += state.V ** 2 / (2 * cfg.epsilon ** 2)
    return float(H)


def rhs(state, cfg, profile=None):
    """Time derivative of the full state under the smooth dynamics."""
    if cfg.delta == 0.0:
        raise ConfigError("delta = 0: use the hard-core event dynamics")
    profile = get_profile(profile or cfg.potential)
    d = cfg.delta
    kdp = lambda y: kappa_delta_prime(y, d, profile)
    ml = np.asarray(cfg.masses_left)
    mr = np.asarray(cfg.masses_right)
    al = (-kdp(state.x_left) + kdp(state.X - state.x_left)) / ml
    ar = (-kdp(state.x_right - state.X) + kdp(1 - state.x_right)) / mr
    f_piston = -np.sum(kdp(state.X - state.x_left)) \
        + np.sum(kdp(state.x_right - state.X))
    dV = cfg.epsilon ** 2 * f_piston
    return (state.V, dV, state.v_left.copy(), al, state.v_right.copy(), ar)


# ---------------------------------------------------------------------------
# fixed-step symplectic integration (cubic profile compiled with numba)

# Suzuki-Yoshida 4th-order composition weights for the basic leapfrog
_W1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
_YOSHIDA4 = np.array([_W1, 1.0 - 2.0 * _W1, _W1])
_ORDER2 = np.array([1.0])


@njit(cache=True)
def _cubic_kdp(y, delta):
    u = y / delta
    if u < 1.0:
        return -3.0 * (1.0 - u) * (1.0 - u) / delta
    return 0.0


@njit(cache=True)
def _cubic_kd(y, delta):
    u = y / delta
    if u < 1.0:
        return (1.0 - u) ** 3
    return 0.0


@njit(cache=True)
def _energies_cubic(X, V, xl, vl, xr, vr, ml, mr, invM, delta, out):
    """Per-particle energies followed by the total Hamiltonian."""
    H = 0.0
    if invM > 0.0:
        H = 0.5 * V * V / invM
    for j in range(xl.size):
        E = 0.5 * ml[j] * vl[j] * vl[j] + _cubic_kd(xl[j], delta) \
            + _cubic_kd(X - xl[j], delta)
        out[j] = E
        H += E
    for j in range(xr.size):
        E = 0.5 * mr[j] * vr[j] * vr[j] + _cubic_kd(xr[j] - X, delta) \
            + _cubic_kd(1.0 - xr[j], delta)
        out[xl.size + j] = E
        H += E
    return H


@njit(cache=True)
def _verlet_cubic(X, V, xl, vl, xr, vr, ml, mr, invM, delta,
                  t0, until_t, dt, weights, sample_times, sample_out):
    """Composed position-Verlet steps; samples (X, V, E_j..., H) on a grid.

    Returns (X, V, t, status): status 1 flags a barrier breach.
    """
    n1 = xl.size
    n2 = xr.size
    t = t0
    si = 0
    escratch = np.empty(n1 + n2)
    # emit any samples that coincide with the start time
    while si < sample_times.size and sample_times[si] <= t + 1e-12:
        H = _energies_cubic(X, V, xl, vl, xr, vr, ml, mr, invM, delta,
                            escratch)
        sample_out[si, 0] = X
        sample_out[si, 1] = V
        for k in range(n1 + n2):
            sample_out[si, 2 + k] = escratch[k]
            if escratch[k] >= 1.0:  # cubic barrier height
                return X, V, t, 1
        sample_out[si, 2 + n1 + n2] = H
        si += 1
    while t < until_t - 1e-15:
        # nominal step dt, clamped to land exactly on the horizon and on
        # the next requested sample time
        h = dt
        if t + h > until_t:
            h = until_t - t
        if si < sample_times.size and sample_times[si] < t + h - 1e-12:
            h = sample_times[si] - t
        for w in weights:
            hw = h * w
            # drift half step
            X += V * hw * 0.5
            for j in range(n1):
                xl[j] += vl[j] * hw * 0.5
            for j in range(n2):
                xr[j] += vr[j] * hw * 0.5
            # kick
            fp = 0.0
            for j in range(n1):
                fw = _cubic_kdp(xl[j], delta)
                fpist = _cubic_kdp(X - xl[j], delta)
                vl[j] += hw * (-fw + fpist) / ml[j]
                fp -= fpist
            for j in range(n2):
                fpist = _cubic_kdp(xr[j] - X, delta)
                fw = _cubic_kdp(1.0 - xr[j], delta)
                vr[j] += hw * (-fpist + fw) / mr[j]
                fp += fpist
            V += hw * invM * fp
            # drift half step
            X += V * hw * 0.5
            for j in range(n1):
                xl[j] += vl[j] * hw * 0.5
            for j in range(n2):
                xr[j] += vr[j] * hw * 0.5
        t += h
        while si < sample_times.size and sample_times[si] <= t + 1e-12:
            H = _energies_cubic(X, V, xl, vl, xr, vr, ml, mr, invM, delta,
                                escratch)
            sample_out[si, 0] = X
            sample_out[si, 1] = V
            for k in range(n1 + n2):
                sample_out[si, 2 + k] = escratch[k]
                if escratch[k] >= 1.0:  # cubic barrier height
                    return X, V, t, 1
            sample_out[si, 2 + n1 + n2] = H
            si += 1
    return X, V, t, 0


def default_step(cfg, state=None, steps_per_skin=480, v_ref=None):
    """Fixed step resolving the potential skin by `steps_per_skin` steps.

    The 1.25 headroom on the reference speed covers speed growth while the
    piston compresses a chamber during a run.
    """
    if v_ref is None:
        if state is not None:
            speeds = [np.max(np.abs(state.v_left)), np.max(np.abs(state.v_right))]
            v_ref = 1.25 * max(max(speeds), 1e-3)
        else:
            v_ref = 2.0
    return cfg.delta / (steps_per_skin * v_ref)


def integrate(state, until_t, cfg, sample_times=None, dt=None, order=4,
              drift_tol=1e-7, profile=None):
    """Advance the smooth dynamics to `until_t` with a fixed-step scheme.

    Uses a position-Verlet leapfrog (4th-order Yoshida composition by
    default).  Samples record (X, V, per-particle energies, H) at the
    requested times.  Raises on barrier breach or on Hamiltonian drift
    beyond `drift_tol` relative.
    """
    if cfg.delta == 0.0:
        raise ConfigError("delta = 0: use the hard-core event dynamics")
    prof = get_profile(profile or cfg.potential)
    if dt is None:
        dt = default_step(cfg, state)
    weights = _YOSHIDA4 if order == 4 else _ORDER2
    sample_times = np.array([] if sample_times is None else sample_times, float)
    n1, n2 = cfg.n1, cfg.n2
    sample_out = np.empty((sample_times.size, 3 + n1 + n2))
    xl, vl = state.x_left.copy(), state.v_left.copy()
    xr, vr = state.x_right.copy(), state.v_right.copy()
    ml = np.asarray(cfg.masses_left, float)
    mr = np.asarray(cfg.masses_right, float)
    invM = cfg.epsilon ** 2

    if prof.name != "cubic":
        return _integrate_generic(state, until_t, cfg, prof, sample_times,
                                  dt, weights, drift_tol)

    H0 = total_hamiltonian(state, cfg, prof)
    X, V, t, status = _verlet_cubic(
        state.X, state.V, xl, vl, xr, vr, ml, mr, invM, cfg.delta,
        state.t, until_t, dt, weights, sample_times, sample_out)
    if status == 1:
        raise IntegrationError("barrier breach: particle energy reached kappa(0)")
    final = FullState(t, X, V, xl, vl, xr, vr)
    H1 = total_hamiltonian(final, cfg, prof)
    scale = max(abs(H0), 1.0)
    drift = abs(H1 - H0) / scale
    if sample_times.size:
        drift = max(drift, np.max(np.abs(sample_out[:, -1] - H0)) / scale)
    if drift > drift_tol:
        raise IntegrationError(
            f"Hamiltonian drift {drift:.3e} exceeds {drift_tol:.1e}; "
            "reduce the step size")
    return final, (sample_times, sample_out), drift


def _integrate_generic(state, until_t, cfg, prof, sample_times, dt, weights,
                       drift_tol):
    """Plain-Python fallback for non-cubic profiles (slow)."""
    d = cfg.delta
    kdp = lambda y: prof.kappa_prime(np.asarray(y) / d) / d
    X, V = state.X, state.V
    xl, vl = state.x_left.copy(), state.v_left.copy()
    xr, vr = state.x_right.copy(), state.v_right.copy()
    ml = np.asarray(cfg.masses_left, float)
    mr = np.asarray(cfg.masses_right, float)
    invM = cfg.epsilon ** 2
    t = state.t
    si = 0
    rows = np.empty((sample_times.size, 3 + cfg.n1 + cfg.n2))
    H0 = total_hamiltonian(state, cfg, prof)

    def emit(limit):
        nonlocal si
        while si < sample_times.size and sample_times[si] <= limit + 1e-12:
            snap = FullState(t, X, V, xl, vl, xr, vr)
            E1 = ml * vl ** 2 / 2 + potential_U("left", xl, X, d, prof)
            E2 = mr * vr ** 2 / 2 + potential_U("right", xr, X, d, prof)
            if np.any(E1 >= prof.barrier) or np.any(E2 >= prof.barrier):
                raise IntegrationError("barrier breach")
            rows[si] = np.concatenate([[X, V], E1, E2,
                                       [total_hamiltonian(snap, cfg, prof)]])
            si += 1

    emit(t)
    while t < until_t - 1e-15:
        h = min(dt, until_t - t)
        if si < sample_times.size and sample_times[si] < t + h - 1e-12:
            h = sample_times[si] - t
        for w in weights:
            hw = h * w
            X += V * hw / 2
            xl += vl * hw / 2
            xr += vr * hw / 2
            f_pl = kdp(X - xl)
            f_pr = kdp(xr - X)
            vl += hw * (-kdp(xl) + f_pl) / ml
            vr += hw * (-f_pr + kdp(1 - xr)) / mr
            V += hw * invM * (-np.sum(f_pl) + np.sum(f_pr))
            X += V * hw / 2
            xl += vl * hw / 2
            xr += vr * hw / 2
        t += h
        emit(t)
    final = FullState(t, X, V, xl, vl, xr, vr)
    H1 = total_hamiltonian(final, cfg, prof)
    drift = abs(H1 - H0) / max(abs(H0), 1.0)
    if drift > drift_tol:
        raise IntegrationError(f"Hamiltonian drift {drift:.3e}")
    return final, (sample_times, rows), drift


# ---------------------------------------------------------------------------
# frozen-piston periods and the singular quadratures behind them

def _band_check(E, profile, margin):
    if not (margin < E < profile.barrier - margin):
        raise ConfigError(
            f"energy {E} outside the band ({margin}, {profile.barrier - margin})")


def _g(profile):
    # integrand factor -(kappa^-1)'(u), positive and singular at u -> 0+
    return lambda u: -profile.kappa_inv_prime(u)


def F_integral(E, profile=CUBIC, margin=None):
    """F(E) = integral over the skin of ds / sqrt(E - kappa(s)).

    Computed in the substituted form int_0^E -(kappa^-1)'(u) / sqrt(E-u) du,
    split at half the band margin; each piece gets a singularity-killing
    change of variable.
    """
    profile = get_profile(profile)
    if margin is None:
        margin = DEFAULT_BAND_MARGIN * profile.barrier
    _band_check(E, profile, margin)
    g = _g(profile)
    c = margin / 2.0
    # piece on [0, c]: endpoint singularity of g at u = 0
    if profile.singular_power is not None:
        q = 1.0 / (1.0 - profile.singular_power)
        # u = w^q turns g(u) du into a bounded integrand
        f1 = lambda w: g(w ** q) * q * w ** (q - 1.0) / np.sqrt(E - w ** q)
        F1 = quad(f1, 0.0, c ** (1.0 / q), limit=200)[0]
    else:
        import mpmath
        f1 = lambda u: float(g(float(u))) / np.sqrt(E - float(u))
        F1 = float(mpmath.quad(f1, [0, c]))
    # piece on [c, E]: (E-u)^(-1/2) endpoint, killed by u = E - r^2
    f2 = lambda r: 2.0 * g(E - r * r)
    F2 = quad(f2, 0.0, np.sqrt(E - c), limit=200)[0]
    return F1 + F2


def F_prime(E, profile=CUBIC, margin=None):
    """dF/dE via the split-and-substitute form of the two pieces."""
    profile = get_profile(profile)
    if margin is None:
        margin = DEFAULT_BAND_MARGIN * profile.barrier
    _band_check(E, profile, margin)
    g = _g(profile)
    c = margin / 2.0
    if profile.singular_power is not None:
        q = 1.0 / (1.0 - profile.singular_power)
        f1 = lambda w: -g(w ** q) * q * w ** (q - 1.0) / (2 * (E - w ** q) ** 1.5)
        dF1 = quad(f1, 0.0, c ** (1.0 / q), limit=200)[0]
    else:
        import mpmath
        f1 = lambda u: -float(g(float(u))) / (2 * (E - float(u)) ** 1.5)
        dF1 = float(mpmath.quad(f1, [0, c]))
    # d/dE of int_c^E g(u)/sqrt(E-u) du with v = E - u, then v = r^2;
    # g'(u) = -(kappa_inv)''(u)
    g2 = lambda r: -2.0 * float(profile.kappa_inv_second(E - r * r))
    dF2 = g(c) / np.sqrt(E - c) + quad(g2, 0.0, np.sqrt(E - c), limit=200)[0]
    return dF1 + dF2


def G_integral(E, profile=CUBIC):
    """Integral over the skin of sqrt(E - kappa(s)) ds (regular)."""
    profile = get_profile(profile)
    lo = float(profile.kappa_inv(E))
    f = lambda s: np.sqrt(max(E - float(profile.kappa(s)), 0.0))
    return quad(f, lo, 1.0, limit=200)[0]


def _chamber_width(side, X):
    return X if side == "left" else 1.0 - X


def period_T(side, X, E, delta, profile=CUBIC, m=1.0, margin=None):
    """Oscillation period of a gas particle with the piston frozen.

    delta = 0 gives the exact bounce period sqrt(2 m / E) * width; delta > 0
    adds the skin correction through F(E), continuously in delta.
    """
    profile = get_profile(profile)
    if margin is None:
        margin = DEFAULT_BAND_MARGIN * profile.barrier
    L = _chamber_width(side, X)
    if delta == 0.0:
        # exact bounce kinematics, valid for any E > 0
        if E <= 0:
            raise ConfigError("energy must be positive")
        return np.sqrt(2.0 * m / E) * L
    if delta > L / 2:
        raise ConfigError("delta too large for the chamber")
    _band_check(E, profile, margin)
    F = F_integral(E, profile, margin)
    return np.sqrt(m / 2.0) * ((2.0 * L - 4.0 * delta) / np.sqrt(E)
                               + 4.0 * delta * F)


def period_partials(side, X, E, delta, profile=CUBIC, m=1.0, margin=None):
    """(dT/dX, dT/dE): analytic plateau parts plus the differentiated
    skin quadrature."""
    profile = get_profile(profile)
    if margin is None:
        margin = DEFAULT_BAND_MARGIN * profile.barrier
    _band_check(E, profile, margin)
    sgn = 1.0 if side == "left" else -1.0
    dT_dX = sgn * np.sqrt(m / 2.0) * 2.0 / np.sqrt(E)
    L = _chamber_width(side, X)
    dF = F_prime(E, profile, margin) if delta > 0 else 0.0
    dT_dE = np.sqrt(m / 2.0) * (-(2.0 * L - 4.0 * delta) / (2 * E ** 1.5)
                                + 4.0 * delta * dF)
    return dT_dX, dT_dE


def skin_time(E, delta, profile=CUBIC, m=1.0, margin=None):
    """Time to traverse one potential skin from the turning point out."""
    return delta * np.sqrt(m / 2.0) * F_integral(E, profile, margin)


def delta_band_width(side, X, E, delta, profile=CUBIC, m=1.0):
    """Half-width of the angle band around 1/2 where the piston-side force
    can be nonzero: skin transit time over the period."""
    T = period_T(side, X, E, delta, profile, m)
    return skin_time(E, delta, profile, m) / T


def turning_point(E, delta, profile=CUBIC):
    """Penetration depth a with kappa_delta(a) = E."""
    return delta * float(get_profile(profile).kappa_inv(E))


def soft_angle_variables(state, cfg, profile=None):
    """Angle coordinates of each gas particle along its frozen-piston orbit.

    phi = 0 at the wall-side turning point and 1/2 at the piston-side one.
    Inside a potential skin the velocity-integral form is used (regular at
    turning points); on the plateau, elapsed time is accumulated directly.
    """
    from .hardcore import AngleState

    prof = get_profile(profile or cfg.potential)
    d = cfg.delta
    if d <= 0:
        raise ConfigError("soft angles need delta > 0")
    g = _g(prof)

    def one(side, x, v, m):
        L = _chamber_width(side, state.X)
        # mirror the right chamber onto [0, L], wall at 0, piston at L
        xi = x if side == "left" else 1.0 - x
        vi = v if side == "left" else -v
        U = float(prof.kappa(xi / d)) + float(prof.kappa((L - xi) / d))
        E = m * v * v / 2 + U
        T = period_T(side, state.X, E, d, prof, m)
        t_skin = skin_time(E, d, prof, m)

        def skin_phase(w_end):
            # time from the turning point, by the velocity integral
            f = lambda w: float(g(E - m * w * w / 2.0))
            val = quad(f, 0.0, abs(w_end), limit=200)[0]
            return m * d * val

        if xi < d:  # wall skin
            tau = skin_phase(vi)
            phi = tau / T if vi >= 0 else -tau / T
        elif xi > L - d:  # piston skin
            tau = skin_phase(vi)
            phi = 0.5 - tau / T if vi >= 0 else 0.5 + tau / T
        else:  # plateau
            tau = t_skin + (xi - d) * np.sqrt(m / (2.0 * E))
            phi = tau / T if vi > 0 else 1.0 - tau / T
        return phi % 1.0

    ml, mr = cfg.masses_left, cfg.masses_right
    phi1 = np.array([one("left", state.x_left[j], state.v_left[j], ml[j])
                     for j in range(cfg.n1)])
    phi2 = np.array([one("right", state.x_right[j], state.v_right[j], mr[j])
                     for j in range(cfg.n2)])
    return AngleState(phi1, phi2)


@lru_cache(maxsize=8)
def _F_spline(profile_name, margin, n=1600):
    prof = get_profile(profile_name)
    lo = margin * 1.001
    hi = prof.barrier - margin * 1.001
    Es = np.linspace(lo, hi, n)
    Fs = np.array([F_integral(E, prof, margin) for E in Es])
    return CubicSpline(Es, Fs)


def F_interp(E, profile=CUBIC, margin=None):
    """Spline-tabulated F(E), for use inside ODE right-hand sides."""
    prof = get_profile(profile)
    if margin is None:
        margin = DEFAULT_BAND_MARGIN * prof.barrier
    return float(_F_spline(prof.name, margin)(E))
