"""Slow-fast piston dynamics: exact hard-core collisions, smooth soft-core
Hamiltonian dynamics, their averaged equations, and convergence studies."""

__version__ = "0.1.0"

from .config import CompactSet, ConfigError, SystemConfig, default_compact_set
from .state import FullState, SlowState, pressures, slow_state_of
from .hardcore import (Event, apply_piston_collision, apply_simultaneous,
                       apply_wall_collision, angle_variables, evolve,
                       liouville_density, next_event)
from .softcore import (CUBIC, F_integral, PotentialProfile, delta_band_width,
                       get_profile, integrate, period_T, period_partials,
                       potential_U, rhs, soft_angle_variables)
from .averaged import (AveragedTrajectory, NPistonState, adiabatic_invariant,
                       avg_field_hard, avg_field_npiston, avg_field_soft,
                       effective_hamiltonian, find_period, solve_averaged,
                       solve_npiston)
from .harness import (EnsembleSpec, collision_rate_audit, convergence_study,
                      hard_soft_comparison, sup_deviation)
