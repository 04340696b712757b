"""Simulated annealing of Ising models with Glauber, SCA and epsilon-SCA dynamics."""
from .dynamics import EngineKind, EngineSpec, TrialRecord, anneal, anneal_many, auto_pinning
from .errors import ConfigurationError, InvalidInputError, NumericalError
from .model import IsingModel, energy, largest_eigenvalue
from .schedules import AnnealingSchedule, constant, exponential, logarithmic, make_theorem3_schedule

__version__ = "0.1.0"
