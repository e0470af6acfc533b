"""System configuration and the compact set of admissible slow states."""

import json
from dataclasses import dataclass, field, fields

import numpy as np

# Field names accepted in a JSON config document.  Anything else is an error.
_CONFIG_FIELDS = (
    "n1", "n2", "masses_left", "masses_right", "epsilon", "delta",
    "potential", "horizon_T", "seed",
)


class ConfigError(ValueError):
    """Raised when a configuration document fails validation."""


@dataclass(frozen=True)
class SystemConfig:
    """Parameters for one piston-plus-gas system.

    All quantities are dimensionless: positions live in the unit interval,
    the default potential barrier height is 1, and the piston mass is
    1/epsilon^2 (epsilon = 0 means a frozen piston).
    """

    n1: int = 1
    n2: int = 1
    masses_left: tuple = (1.0,)
    masses_right: tuple = (1.0,)
    epsilon: float = 0.01
    delta: float = 0.0
    potential: str = "cubic"
    horizon_T: float = 1.0
    seed: int = 0

    def __post_init__(self):
        ml = tuple(float(m) for m in self.masses_left)
        mr = tuple(float(m) for m in self.masses_right)
        object.__setattr__(self, "masses_left", ml)
        object.__setattr__(self, "masses_right", mr)
        if self.n1 < 1 or self.n2 < 1:
            raise ConfigError("need at least one gas particle on each side")
        if len(ml) != self.n1 or len(mr) != self.n2:
            raise ConfigError("mass array lengths must match particle counts")
        if any(m <= 0 for m in ml + mr):
            raise ConfigError("all masses must be positive")
        if self.epsilon < 0:
            raise ConfigError("epsilon must be >= 0")
        if self.delta < 0:
            raise ConfigError("delta must be >= 0")
        if self.horizon_T <= 0:
            raise ConfigError("horizon_T must be positive")

    @property
    def piston_mass(self):
        if self.epsilon == 0.0:
            return np.inf
        return self.epsilon ** -2

    def replace(self, **kw):
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d.update(kw)
        return SystemConfig(**d)

    @classmethod
    def from_dict(cls, doc):
        unknown = set(doc) - set(_CONFIG_FIELDS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    @classmethod
    def from_json(cls, path):
        with open(path) as f:
            doc = json.load(f)
        if not isinstance(doc, dict):
            raise ConfigError("config document must be a JSON object")
        return cls.from_dict(doc)

    def to_dict(self):
        return {
            "n1": self.n1, "n2": self.n2,
            "masses_left": list(self.masses_left),
            "masses_right": list(self.masses_right),
            "epsilon": self.epsilon, "delta": self.delta,
            "potential": self.potential, "horizon_T": self.horizon_T,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class CompactSet:
    """Closed box of admissible slow states.

    Bounds keep X away from {0, 1}, W bounded, and the per-particle value
    (speed in hard mode, energy in soft mode) away from the forbidden
    endpoints 0 and, in soft mode, the barrier height.
    """

    X_bounds: tuple = (0.1, 0.9)
    W_bound: float = 10.0
    value_bounds: tuple = (0.1, 10.0)
    mode: str = "hard-speeds"

    def __post_init__(self):
        lo, hi = self.X_bounds
        if not (0.0 < lo <= hi < 1.0):
            raise ConfigError("X_bounds must be a closed interval inside (0,1)")
        vlo, vhi = self.value_bounds
        if not (0.0 < vlo <= vhi):
            raise ConfigError("value_bounds must be positive")
        if self.W_bound <= 0:
            raise ConfigError("W_bound must be positive")

    @property
    def margin(self):
        """Distance from the bounds to the forbidden boundary values."""
        xlo, xhi = self.X_bounds
        return min(xlo, 1.0 - xhi, self.value_bounds[0])

    def contains(self, h):
        """Membership test for a SlowState (closed set: boundary included)."""
        if h.mode != self.mode:
            raise ConfigError(
                f"mode mismatch: state is {h.mode!r}, set is {self.mode!r}")
        xlo, xhi = self.X_bounds
        if not (xlo <= h.X <= xhi):
            return False
        if abs(h.W) > self.W_bound:
            return False
        vlo, vhi = self.value_bounds
        vals = np.concatenate([h.left, h.right])
        return bool(np.all((vlo <= vals) & (vals <= vhi)))


def default_compact_set(mode="hard-speeds", barrier=1.0):
    """The default generous compact set for each slow-variable mode."""
    if mode == "hard-speeds":
        return CompactSet((0.1, 0.9), 10.0, (0.1, 10.0), mode)
    if mode == "soft-energies":
        return CompactSet((0.1, 0.9), 10.0, (0.05 * barrier, 0.95 * barrier), mode)
    raise ConfigError(f"unknown mode {mode!r}")
