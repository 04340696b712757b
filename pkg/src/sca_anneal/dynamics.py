"""Glauber, SCA and epsilon-SCA dynamics, single steps and annealing runs.

Random numbers: every chain owns one ``numpy.random.Generator``. The first
``N`` uniforms choose the initial configuration (spin +1 iff u < 1/2); each
subsequent kernel application consumes ``N`` uniforms for the parallel
engines (vertex order ascending) and 2 for Glauber (site, then spin). The
batched annealer draws the same numbers in blocks, so ``anneal_many`` and
repeated single ``step`` calls produce identical trajectories.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import expit

from .errors import ConfigurationError, InvalidInputError
from .model import IsingModel, as_config, cavity_field, cavity_fields, energies, largest_eigenvalue
from .schedules import AnnealingSchedule

__all__ = [
    "EngineKind",
    "EngineSpec",
    "ChainState",
    "TrialRecord",
    "auto_pinning",
    "sca_local_prob",
    "epsilon_sca_flip_prob",
    "epsilon_sca_local_prob",
    "glauber_local_prob",
    "sca_plus_probs",
    "epsilon_sca_flip_probs",
    "heat_bath_plus_probs",
    "initial_state",
    "sca_step",
    "epsilon_sca_step",
    "glauber_step",
    "step",
    "anneal",
    "anneal_many",
]

# bytes of uniforms buffered per block in anneal_many
_RNG_BUFFER_BYTES = 32 * 2**20


class EngineKind(str, Enum):
    GLAUBER = "glauber"
    SCA = "sca"
    EPSILON_SCA = "esca"


# stable per-kind codes used for trial-seed derivation
KIND_CODES = {EngineKind.GLAUBER: 0, EngineKind.SCA: 1, EngineKind.EPSILON_SCA: 2}


@dataclass(frozen=True, eq=False)
class EngineSpec:
    kind: EngineKind
    pinning: np.ndarray | None = None
    epsilon: float | None = None

    def __post_init__(self):
        kind = EngineKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is EngineKind.SCA:
            if self.pinning is None:
                raise ConfigurationError("SCA engine requires pinning parameters")
            q = np.atleast_1d(np.asarray(self.pinning, dtype=float)).copy()
            if q.ndim != 1 or np.any(~np.isfinite(q)) or np.any(q < 0):
                raise ConfigurationError("pinning parameters must be finite and nonnegative")
            q.flags.writeable = False
            object.__setattr__(self, "pinning", q)
        elif self.pinning is not None:
            raise ConfigurationError(f"{kind.value} engine takes no pinning parameters")
        if kind is EngineKind.EPSILON_SCA:
            eps = self.epsilon
            if eps is None or not (0 < eps <= 1):
                raise ConfigurationError(f"epsilon must lie in (0, 1], got {eps}")
            object.__setattr__(self, "epsilon", float(eps))
        elif self.epsilon is not None:
            raise ConfigurationError(f"{kind.value} engine takes no epsilon")

    @classmethod
    def glauber(cls) -> "EngineSpec":
        return cls(EngineKind.GLAUBER)

    @classmethod
    def sca(cls, pinning) -> "EngineSpec":
        return cls(EngineKind.SCA, pinning=pinning)

    @classmethod
    def epsilon_sca(cls, epsilon: float) -> "EngineSpec":
        return cls(EngineKind.EPSILON_SCA, epsilon=epsilon)

    def pinning_for(self, model: IsingModel) -> np.ndarray:
        """Per-vertex pinning (a scalar pinning is broadcast to every vertex)."""
        q = self.pinning
        if q.shape == (1,):
            return np.full(model.num_vertices, q[0])
        if q.shape != (model.num_vertices,):
            raise ConfigurationError(f"pinning has length {q.size}, model has {model.num_vertices} vertices")
        return q

    def validate(self, model: IsingModel) -> None:
        if self.kind is EngineKind.SCA:
            self.pinning_for(model)

    @property
    def label(self) -> str:
        if self.kind is EngineKind.SCA:
            q = self.pinning
            if np.all(q == q[0]):
                return f"sca(q={float(q[0]):.6g})"
            return "sca(q=vector)"
        if self.kind is EngineKind.EPSILON_SCA:
            return f"esca(eps={self.epsilon:.6g})"
        return "glauber"

    def describe(self) -> dict:
        out = {"kind": self.kind.value}
        if self.kind is EngineKind.SCA:
            q = self.pinning
            out["pinning"] = float(q[0]) if np.all(q == q[0]) else [float(v) for v in q]
        if self.kind is EngineKind.EPSILON_SCA:
            out["epsilon"] = self.epsilon
        return out


def auto_pinning(model: IsingModel) -> np.ndarray:
    """Homogeneous pinning q_x = lambda/2, the sufficient value for SCA annealing."""
    return np.full(model.num_vertices, max(largest_eigenvalue(model), 0.0) / 2)


@dataclass
class ChainState:
    """Current configuration of one chain; ``rng`` is advanced in place by each step."""

    config: np.ndarray
    rng: np.random.Generator
    step_index: int = 0


@dataclass
class TrialRecord:
    engine: EngineSpec
    schedule: AnnealingSchedule
    seed: int
    min_energy: float
    best_config: np.ndarray
    best_step: int
    final_config: np.ndarray
    duration: float
    trace: np.ndarray | None = field(default=None, repr=False)


# -- per-site probabilities ---------------------------------------------------


def _scaled(beta: float, a):
    """beta * a, with the beta = inf limit taken as sign(a) * inf (and 0 at a = 0)."""
    if math.isinf(beta):
        a = np.asarray(a, dtype=float)
        return np.where(a > 0, np.inf, np.where(a < 0, -np.inf, 0.0))
    return beta * a


def _check_beta(beta: float) -> None:
    if not beta >= 0:
        raise InvalidInputError(f"inverse temperature must be >= 0, got {beta}")


def sca_plus_probs(fields, spins, q, beta: float) -> np.ndarray:
    """P(new spin = +1) under SCA; exp(b s)/(2 cosh b) is expit(2 b s)."""
    return expit(_scaled(beta, fields + q * spins))


def epsilon_sca_flip_probs(fields, spins, beta: float) -> np.ndarray:
    """q = 0 SCA probability of landing on -s_x (before thinning by epsilon)."""
    return expit(_scaled(beta, -fields * spins))


def heat_bath_plus_probs(fields, beta: float) -> np.ndarray:
    return expit(_scaled(2.0 * beta, fields))


def sca_local_prob(model: IsingModel, config, x: int, q_x: float, beta: float, s: int) -> float:
    _check_beta(beta)
    if q_x < 0:
        raise InvalidInputError(f"pinning must be nonnegative, got {q_x}")
    if s not in (-1, 1):
        raise InvalidInputError(f"spin value must be +1 or -1, got {s}")
    sigma = as_config(model, config)
    a = _scaled(beta, cavity_field(model, sigma, x) + q_x * sigma[x])
    return float(expit(s * a))


def epsilon_sca_flip_prob(model: IsingModel, config, x: int, beta: float) -> float:
    _check_beta(beta)
    sigma = as_config(model, config)
    return float(epsilon_sca_flip_probs(cavity_field(model, sigma, x), sigma[x], beta))


def epsilon_sca_local_prob(model: IsingModel, config, x: int, epsilon: float, beta: float, s: int) -> float:
    """(1 - eps) [s == s_x] + eps * p_{x,0}(s | config)."""
    sigma = as_config(model, config)
    p_flip = epsilon_sca_flip_prob(model, sigma, x, beta)
    if s == sigma[x]:
        return (1 - epsilon) + epsilon * (1 - p_flip)
    return epsilon * p_flip


def glauber_local_prob(model: IsingModel, config, x: int, beta: float, s: int) -> float:
    """Heat-bath probability that site ``x``, once selected, is set to ``s``."""
    _check_beta(beta)
    sigma = as_config(model, config)
    p_plus = float(heat_bath_plus_probs(cavity_field(model, sigma, x), beta))
    return p_plus if s == 1 else 1.0 - p_plus


# -- single-chain steps ---------------------------------------------------------


def initial_state(model: IsingModel, seed) -> ChainState:
    """Uniformly random configuration drawn from a fresh generator for ``seed``."""
    rng = np.random.default_rng(seed)
    config = np.where(rng.random(model.num_vertices) < 0.5, 1, -1).astype(np.int8)
    return ChainState(config, rng, 0)


def sca_step(model: IsingModel, state: ChainState, q, beta: float) -> ChainState:
    """One parallel SCA update.

    ``state.config`` may also be a (M, N) batch of chains sharing the
    generator; rows consume uniforms in order.
    """
    _check_beta(beta)
    q = np.broadcast_to(np.asarray(q, dtype=float), (model.num_vertices,))
    sigma = state.config.astype(float)
    p = sca_plus_probs(cavity_fields(model, sigma), sigma, q, beta)
    u = state.rng.random(sigma.shape)
    new = np.where(u < p, 1, -1).astype(np.int8)
    return ChainState(new, state.rng, state.step_index + 1)


def epsilon_sca_step(model: IsingModel, state: ChainState, epsilon: float, beta: float) -> ChainState:
    _check_beta(beta)
    if not 0 < epsilon <= 1:
        raise InvalidInputError(f"epsilon must lie in (0, 1], got {epsilon}")
    sigma = state.config.astype(float)
    p = epsilon * epsilon_sca_flip_probs(cavity_fields(model, sigma), sigma, beta)
    u = state.rng.random(sigma.shape)
    new = np.where(u < p, -state.config, state.config).astype(np.int8)
    return ChainState(new, state.rng, state.step_index + 1)


def glauber_step(model: IsingModel, state: ChainState, beta: float) -> ChainState:
    _check_beta(beta)
    n = model.num_vertices
    u_site, u_spin = state.rng.random(2)
    x = min(int(u_site * n), n - 1)
    new = state.config.copy()
    p_plus = heat_bath_plus_probs(cavity_field(model, state.config, x), beta)
    new[x] = 1 if u_spin < p_plus else -1
    return ChainState(new, state.rng, state.step_index + 1)


def step(model: IsingModel, state: ChainState, spec: EngineSpec, beta: float) -> ChainState:
    if spec.kind is EngineKind.GLAUBER:
        return glauber_step(model, state, beta)
    if spec.kind is EngineKind.SCA:
        return sca_step(model, state, spec.pinning_for(model), beta)
    return epsilon_sca_step(model, state, spec.epsilon, beta)


# -- annealing -------------------------------------------------------------------


def anneal(
    model: IsingModel,
    spec: EngineSpec,
    schedule: AnnealingSchedule,
    num_steps: int,
    seed,
    *,
    sweeps_per_step: int = 1,
    record_trace: bool = False,
) -> TrialRecord:
    """One annealing run; see :func:`anneal_many`."""
    return anneal_many(
        model, spec, schedule, num_steps, [seed], sweeps_per_step=sweeps_per_step, record_trace=record_trace
    )[0]


def anneal_many(
    model: IsingModel,
    spec: EngineSpec,
    schedule: AnnealingSchedule,
    num_steps: int,
    seeds,
    *,
    sweeps_per_step: int = 1,
    record_trace: bool = False,
) -> list[TrialRecord]:
    """Run independent annealing chains in lock-step, one per seed.

    Step ``t`` (0-based) applies the kernel ``sweeps_per_step`` times at
    ``beta = schedule(schedule.first_step + t)``. Every visited configuration
    (the initial one included) is a candidate for the minimum; ties keep the
    earliest. ``best_step`` counts kernel applications before the best was
    reached.
    """
    if num_steps < 1:
        raise InvalidInputError(f"num_steps must be >= 1, got {num_steps}")
    if sweeps_per_step < 1:
        raise InvalidInputError(f"sweeps_per_step must be >= 1, got {sweeps_per_step}")
    spec.validate(model)
    seeds = list(seeds)
    if not seeds:
        return []
    t_start = time.perf_counter()
    n, T, k = model.num_vertices, len(seeds), sweeps_per_step
    rngs = [np.random.default_rng(s) for s in seeds]
    S = np.empty((T, n))
    for i, rng in enumerate(rngs):
        S[i] = np.where(rng.random(n) < 0.5, 1.0, -1.0)

    glauber = spec.kind is EngineKind.GLAUBER
    draws = (2 if glauber else n) * k
    block = max(1, min(num_steps, _RNG_BUFFER_BYTES // (8 * T * draws)))
    num_visits = num_steps * k + 1
    trace = np.empty((T, num_visits)) if record_trace else None

    h = model.h
    q = spec.pinning_for(model) if spec.kind is EngineKind.SCA else None
    best_E = np.full(T, np.inf)
    best_step = np.zeros(T, dtype=np.int64)
    best_cfg = S.astype(np.int8)
    rows = np.arange(T)

    def visit(E, idx):
        better = E < best_E
        if better.any():
            best_E[better] = E[better]
            best_step[better] = idx
            best_cfg[better] = S[better]
        if trace is not None:
            trace[:, idx] = E

    def batch_energy():
        return energies(model, S)

    E = batch_energy() if glauber else None
    U = None
    idx = 0
    for t in range(num_steps):
        if t % block == 0:
            c = min(block, num_steps - t)
            U = np.stack([rng.random((c, draws)) for rng in rngs], axis=1)
        beta = schedule(schedule.first_step + t)
        _check_beta(beta)
        u_step = U[t % block]
        for sweep in range(k):
            if glauber:
                visit(E, idx)
                u = u_step[:, 2 * sweep : 2 * sweep + 2]
                sites = np.minimum((u[:, 0] * n).astype(np.int64), n - 1)
                if model.prefers_dense:
                    f = np.einsum("tn,tn->t", model.dense_J[sites], S)
                else:
                    f = np.asarray(model.J[sites].multiply(S).sum(axis=1)).ravel()
                f += h[sites]
                new = np.where(u[:, 1] < heat_bath_plus_probs(f, beta), 1.0, -1.0)
                E = E - (new - S[rows, sites]) * f
                S[rows, sites] = new
            else:
                JS = model.coupling_product(S)
                F = JS + h
                visit(-0.5 * np.einsum("tn,tn->t", S, JS) - S @ h, idx)
                u = u_step[:, sweep * n : (sweep + 1) * n]
                if q is not None:
                    S = np.where(u < sca_plus_probs(F, S, q, beta), 1.0, -1.0)
                else:
                    p = spec.epsilon * epsilon_sca_flip_probs(F, S, beta)
                    S = np.where(u < p, -S, S)
            idx += 1
    visit(E if glauber else batch_energy(), idx)

    # incremental Glauber energies may drift in the last bits; report exact values
    best_E = energies(model, best_cfg)
    per_trial = (time.perf_counter() - t_start) / T
    final = S.astype(np.int8)
    return [
        TrialRecord(
            engine=spec,
            schedule=schedule,
            seed=seeds[i],
            min_energy=float(best_E[i]),
            best_config=best_cfg[i].copy(),
            best_step=int(best_step[i]),
            final_config=final[i].copy(),
            duration=per_trial,
            trace=None if trace is None else trace[i].copy(),
        )
        for i in range(T)
    ]
