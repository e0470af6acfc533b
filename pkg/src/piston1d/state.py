"""Full microscopic state, slow-variable projection, and pressures."""

from dataclasses import dataclass

import numpy as np

from .config import ConfigError


@dataclass(frozen=True)
class FullState:
    """Snapshot of the microscopic system at time t.

    X, V are the piston position and velocity (V = epsilon * W); the gas
    arrays hold positions and velocities for each side.  Instances are
    value-semantic: arrays are copied on construction.
    """

    t: float
    X: float
    V: float
    x_left: np.ndarray
    v_left: np.ndarray
    x_right: np.ndarray
    v_right: np.ndarray

    def __post_init__(self):
        for name in ("x_left", "v_left", "x_right", "v_right"):
            arr = np.array(getattr(self, name), dtype=float)
            object.__setattr__(self, name, arr)

    def copy(self, **kw):
        d = dict(t=self.t, X=self.X, V=self.V,
                 x_left=self.x_left, v_left=self.v_left,
                 x_right=self.x_right, v_right=self.v_right)
        d.update(kw)
        return FullState(**d)


@dataclass(frozen=True)
class SlowState:
    """Slow variables (X, W, per-particle speeds or energies).

    W is stored rather than V; V is reconstructed as epsilon * W.  In hard
    mode `left`/`right` hold speeds |v|; in soft mode they hold the
    per-particle energies.
    """

    X: float
    W: float
    left: np.ndarray
    right: np.ndarray
    mode: str = "hard-speeds"

    def __post_init__(self):
        object.__setattr__(self, "left", np.array(self.left, dtype=float))
        object.__setattr__(self, "right", np.array(self.right, dtype=float))
        if self.mode not in ("hard-speeds", "soft-energies"):
            raise ConfigError(f"unknown slow-state mode {self.mode!r}")

    def as_array(self):
        return np.concatenate([[self.X, self.W], self.left, self.right])

    @classmethod
    def from_array(cls, arr, n1, n2, mode="hard-speeds"):
        return cls(arr[0], arr[1], arr[2:2 + n1], arr[2 + n1:2 + n1 + n2], mode)

    def to_mode(self, mode, masses_left, masses_right):
        """Convert between speed and energy representations (E = m s^2 / 2)."""
        if mode == self.mode:
            return self
        ml = np.asarray(masses_left, float)
        mr = np.asarray(masses_right, float)
        if mode == "soft-energies":
            return SlowState(self.X, self.W, ml * self.left ** 2 / 2,
                             mr * self.right ** 2 / 2, mode)
        return SlowState(self.X, self.W, np.sqrt(2 * self.left / ml),
                         np.sqrt(2 * self.right / mr), mode)


def slow_state_of(full, cfg, mode=None):
    """Project a full state onto the slow variables.

    Hard mode records speeds |v|; soft mode records per-particle energies
    including the potential terms.  With epsilon = 0 the piston must be at
    rest (W is undefined otherwise).
    """
    if len(full.x_left) != cfg.n1 or len(full.x_right) != cfg.n2:
        raise ConfigError("state array lengths do not match config")
    if mode is None:
        mode = "soft-energies" if cfg.delta > 0 else "hard-speeds"
    if cfg.epsilon == 0.0:
        if full.V != 0.0:
            raise ConfigError("W undefined: epsilon = 0 with nonzero V")
        W = 0.0
    else:
        W = full.V / cfg.epsilon
    ml = np.asarray(cfg.masses_left, float)
    mr = np.asarray(cfg.masses_right, float)
    if mode == "hard-speeds":
        return SlowState(full.X, W, np.abs(full.v_left), np.abs(full.v_right))
    from .softcore import get_profile, potential_U
    profile = get_profile(cfg.potential)
    U1 = potential_U("left", full.x_left, full.X, cfg.delta, profile)
    U2 = potential_U("right", full.x_right, full.X, cfg.delta, profile)
    E1 = ml * full.v_left ** 2 / 2 + U1
    E2 = mr * full.v_right ** 2 / 2 + U2
    return SlowState(full.X, W, E1, E2, "soft-energies")


def side_energies(h, masses_left, masses_right):
    """Total kinetic energy of each gas (per side) from a slow state."""
    if h.mode == "hard-speeds":
        ml = np.asarray(masses_left, float)
        mr = np.asarray(masses_right, float)
        return (np.sum(ml * h.left ** 2 / 2), np.sum(mr * h.right ** 2 / 2))
    return (float(np.sum(h.left)), float(np.sum(h.right)))


def pressures(h, masses_left=None, masses_right=None):
    """Gas pressures (P1, P2): average force on the held-fixed piston.

    P1 = 2 E1 / X and P2 = 2 E2 / (1 - X) with E_i the total energy of the
    gas on side i.
    """
    if not (0.0 < h.X < 1.0):
        raise ConfigError("pressures undefined at X in {0, 1}")
    if h.mode == "hard-speeds" and masses_left is None:
        masses_left = np.ones_like(h.left)
        masses_right = np.ones_like(h.right)
    E1, E2 = side_energies(h, masses_left, masses_right)
    return 2 * E1 / h.X, 2 * E2 / (1 - h.X)
