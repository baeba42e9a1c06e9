"""Tabular TD learning in gridworlds with state-dependent thermal noise.

The package pairs a simulation stack (environments, four TD(0) learners, a
vectorised population engine, an experiment harness) with an exact
absorbing-Markov-chain treatment of the same worlds, so every simulated
first-passage-time estimate can be checked against linear algebra.
"""

__version__ = "0.1.0"

from .catalog import CATALOG, canonical_specs, make_spec
from .env import (ABSORBED, FINAL_POSITION, FIRST_CROSSING, EnvState, GridSpec,
                  SpecError, StepOutcome, reset, step)
from .learners import ALGORITHMS, EpsilonSchedule, Hyperparams, train

__all__ = [
    "ABSORBED", "ALGORITHMS", "CATALOG", "EnvState", "EpsilonSchedule",
    "FINAL_POSITION", "FIRST_CROSSING", "GridSpec", "Hyperparams", "SpecError",
    "StepOutcome", "__version__", "canonical_specs", "make_spec", "reset",
    "step", "train",
]
