"""Nonlocal conservation laws with an L^p downstream average.

``q_t + (V(W[q]) q)_x = 0`` with
``W[q](x) = ((1/eta) int_x^inf (gamma((y-x)/eta) q(y))**p dy)**(1/p)``,
including the geometric-mean (``p = 0``) and weighted-supremum
(``p = inf``) limits, plus a Godunov reference for the local law.
"""

__version__ = "0.1.0"

from .errors import (CellInversionError, InvalidScenarioError, InvariantViolation,
                     PicardNonConvergence, SolverError, UnsupportedError)
from .fields import (Datum, Field, Grid, VelocityModel, constant, field_from_datum,
                     l1_distance, riemann, total_variation)
from .kernels import Kernel, lp_norm, l0_geometric_norm, normalize
from .operators import NonlocalField, evaluate
from .scenario import Scenario, load_scenario, scenario_from_dict
from .solver import PicardConfig, SolverConfig, Trajectory, mass, solve
from .local import LocalScenario, exact_riemann, solve_godunov
