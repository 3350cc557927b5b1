"""Hyperbolic spin Ruijsenaars-Schneider models on the trivial groupoid U x SL(n+1) x U.

Two independent solvers (Runge-Kutta integration of the equations of motion
and the exact factorization method) plus numerical checks of the underlying
dynamical r-matrix identities.
"""

from .errors import (AccuracyError, BreakdownError, ComposabilityError, ContinuityError,
                     DimensionError, InvariantError, RangeError, SingularityError,
                     SpinRSError, StepLimitError)
from .lie import SimpleSubset, fundamental_characters, invariant_gradient, power_traces
from .rmatrix import RMatrixSpec, apply_R, apply_Rpm, mdybe_residual
from .hamiltonian import HamiltonianSpec
from .groupoid import GroupoidPoint, Observable, bracket_eval
from .dynamics import (IntegratorConfig, RSState, Trajectory, conserved_report, eom_field,
                       integrate)
from .factorization import FactorizationResult, factorization_residual, solve
from .config import ConfigError, RunConfig

__version__ = "0.1.0"
