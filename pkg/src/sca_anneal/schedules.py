"""Cooling schedules t -> beta_t."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidInputError
from .model import IsingModel, gamma, largest_eigenvalue

__all__ = [
    "ScheduleKind",
    "AnnealingSchedule",
    "PinningWarning",
    "beta_at",
    "exponential",
    "logarithmic",
    "constant",
    "make_theorem3_schedule",
    "DEFAULT_BETA0",
    "DEFAULT_ALPHA",
]

DEFAULT_BETA0 = 1e-3
DEFAULT_ALPHA = 1e-3


class ScheduleKind(str, Enum):
    EXPONENTIAL = "exp"
    LOGARITHMIC = "log"
    CONSTANT = "const"


class PinningWarning(UserWarning):
    """Pinning below lambda/2, where convergence of annealing is no longer guaranteed."""


@dataclass(frozen=True)
class AnnealingSchedule:
    kind: ScheduleKind
    beta0: float | None = None
    alpha: float | None = None
    gamma_total: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ScheduleKind(self.kind))
        required = {
            ScheduleKind.EXPONENTIAL: ("beta0", "alpha"),
            ScheduleKind.LOGARITHMIC: ("gamma_total",),
            ScheduleKind.CONSTANT: ("beta0",),
        }[self.kind]
        for name in required:
            value = getattr(self, name)
            if value is None or not math.isfinite(value) or value <= 0:
                raise InvalidInputError(f"{self.kind.value} schedule needs finite {name} > 0, got {value}")

    @property
    def first_step(self) -> int:
        """Smallest admissible step index (log t is undefined at 0)."""
        return 1 if self.kind is ScheduleKind.LOGARITHMIC else 0

    def __call__(self, t: int) -> float:
        return beta_at(self, t)

    def betas(self, num_steps: int, start: int | None = None) -> np.ndarray:
        start = self.first_step if start is None else start
        return np.array([beta_at(self, t) for t in range(start, start + num_steps)])

    def describe(self) -> dict:
        out = {"kind": self.kind.value}
        for name in ("beta0", "alpha", "gamma_total"):
            if getattr(self, name) is not None:
                out[name] = getattr(self, name)
        return out


def beta_at(schedule: AnnealingSchedule, t: int) -> float:
    if t < 0:
        raise InvalidInputError(f"step index must be nonnegative, got {t}")
    if schedule.kind is ScheduleKind.EXPONENTIAL:
        # overflow to +inf is handled by the dynamics as the zero-temperature limit
        with np.errstate(over="ignore"):
            return float(schedule.beta0 * np.exp(schedule.alpha * t))
    if schedule.kind is ScheduleKind.LOGARITHMIC:
        if t == 0:
            raise InvalidInputError("logarithmic schedule is undefined at t=0; start at t=1")
        return math.log(t) / schedule.gamma_total
    return float(schedule.beta0)


def exponential(beta0: float = DEFAULT_BETA0, alpha: float = DEFAULT_ALPHA) -> AnnealingSchedule:
    return AnnealingSchedule(ScheduleKind.EXPONENTIAL, beta0=beta0, alpha=alpha)


def logarithmic(gamma_total: float) -> AnnealingSchedule:
    return AnnealingSchedule(ScheduleKind.LOGARITHMIC, gamma_total=gamma_total)


def constant(beta: float) -> AnnealingSchedule:
    return AnnealingSchedule(ScheduleKind.CONSTANT, beta0=beta)


def make_theorem3_schedule(model: IsingModel, q, tol: float = 1e-6) -> AnnealingSchedule:
    """Logarithmic schedule beta_t = log(t) / Gamma for SCA with pinning ``q``.

    Pinning below lambda/2 only triggers a :class:`PinningWarning`; the bound
    is sufficient, not necessary.
    """
    q = np.broadcast_to(np.asarray(q, dtype=float), (model.num_vertices,))
    lam = largest_eigenvalue(model)
    if np.any(q < lam / 2 - tol):
        warnings.warn(
            f"pinning min(q)={q.min():.6g} is below lambda/2={lam / 2:.6g}",
            PinningWarning,
            stacklevel=2,
        )
    g = gamma(model, q)
    if not math.isfinite(g) or g <= 0:
        raise InvalidInputError(f"Gamma must be finite and positive, got {g}")
    return logarithmic(g)
