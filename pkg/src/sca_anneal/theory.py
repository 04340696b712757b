"""Exact small-system analysis: full kernels, ground states, mixing bounds.

Configurations are indexed little-endian: bit ``i`` of the index is
``(s_i + 1) / 2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import (
    EngineKind,
    EngineSpec,
    epsilon_sca_flip_probs,
    heat_bath_plus_probs,
    sca_plus_probs,
)
from .errors import ConfigurationError, InvalidInputError, NumericalError
from .model import IsingModel, as_config, cavity_fields, energies
from .schedules import AnnealingSchedule

__all__ = [
    "ExactKernel",
    "GroundStateSet",
    "MixingBound",
    "MixingReport",
    "all_configs",
    "config_index",
    "brute_force_ground_states",
    "build_exact_kernel",
    "site_plus_probs",
    "mixing_bound_sca",
    "mixing_bound_epsilon_sca",
    "mixing_bound",
    "tv_distance",
    "stationary_distribution",
    "verify_mixing",
    "coupling_terms",
    "coupling_disagreement",
    "gibbs_distribution",
    "annealed_distributions",
]

BRUTE_FORCE_CAP = 30
KERNEL_CAP = 12
_CHUNK = 1 << 16


def all_configs(n: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Configurations with indices in [start, stop), shape (stop - start, n), values +/-1."""
    stop = 1 << n if stop is None else stop
    idx = np.arange(start, stop, dtype=np.int64)
    return (((idx[:, None] >> np.arange(n)) & 1) * 2 - 1).astype(np.int8)


def config_index(config) -> int:
    bits = (np.asarray(config) > 0).astype(np.int64)
    return int(bits @ (1 << np.arange(bits.size, dtype=np.int64)))


@dataclass(frozen=True, eq=False)
class GroundStateSet:
    configs: np.ndarray
    min_energy: float
    num_vertices: int

    @property
    def indices(self) -> list[int]:
        return [config_index(c) for c in self.configs]

    def distribution(self) -> np.ndarray:
        """Uniform law over the ground states as a 2^N vector."""
        p = np.zeros(1 << self.num_vertices)
        p[self.indices] = 1.0 / len(self.configs)
        return p


def brute_force_ground_states(model: IsingModel, cap: int = BRUTE_FORCE_CAP) -> GroundStateSet:
    n = model.num_vertices
    if n > cap:
        raise InvalidInputError(f"brute force refused: N={n} exceeds cap {cap}")
    best = math.inf
    found: list[np.ndarray] = []
    total = 1 << n
    for start in range(0, total, _CHUNK):
        S = all_configs(n, start, min(start + _CHUNK, total))
        E = energies(model, S)
        m = E.min()
        if m < best:
            best, found = m, [S[E == m]]
        elif m == best:
            found.append(S[E == m])
    return GroundStateSet(np.concatenate(found), float(best), n)


@dataclass(frozen=True, eq=False)
class ExactKernel:
    matrix: np.ndarray
    spec: EngineSpec
    beta: float


def site_plus_probs(model: IsingModel, spec: EngineSpec, beta: float, S: np.ndarray) -> np.ndarray:
    """P(new spin_x = +1 | config) for every row of ``S`` and every x (parallel engines)."""
    S = np.asarray(S, dtype=float)
    F = cavity_fields(model, S)
    if spec.kind is EngineKind.SCA:
        return sca_plus_probs(F, S, spec.pinning_for(model), beta)
    if spec.kind is EngineKind.EPSILON_SCA:
        flip = spec.epsilon * epsilon_sca_flip_probs(F, S, beta)
        return np.where(S > 0, 1.0 - flip, flip)
    raise ConfigurationError("site-wise product form exists only for SCA and epsilon-SCA")


def _product_kernel(P_plus: np.ndarray) -> np.ndarray:
    M, n = P_plus.shape
    K = np.stack([1.0 - P_plus[:, n - 1], P_plus[:, n - 1]], axis=1)
    for x in range(n - 2, -1, -1):
        pair = np.stack([1.0 - P_plus[:, x], P_plus[:, x]], axis=1)
        K = (K[:, :, None] * pair[:, None, :]).reshape(M, -1)
    return K


def build_exact_kernel(model: IsingModel, spec: EngineSpec, beta: float, cap: int = KERNEL_CAP) -> ExactKernel:
    n = model.num_vertices
    if n > cap:
        raise InvalidInputError(f"exact kernel refused: N={n} exceeds cap {cap}")
    if beta < 0:
        raise InvalidInputError(f"inverse temperature must be >= 0, got {beta}")
    spec.validate(model)
    S = all_configs(n).astype(float)
    if spec.kind is EngineKind.GLAUBER:
        M = S.shape[0]
        P_plus = heat_bath_plus_probs(cavity_fields(model, S), beta)
        p_flip = np.where(S > 0, 1.0 - P_plus, P_plus) / n
        K = np.zeros((M, M))
        rows = np.arange(M)
        for x in range(n):
            K[rows, rows ^ (1 << x)] += p_flip[:, x]
        K[rows, rows] += 1.0 - p_flip.sum(axis=1)
    else:
        K = _product_kernel(site_plus_probs(model, spec, beta, S))
    return ExactKernel(K, spec, beta)


@dataclass(frozen=True)
class MixingBound:
    r: float
    t_bound: int | None

    @property
    def applicable(self) -> bool:
        return self.t_bound is not None


def _bound_from_r(r: float, n: int, delta: float) -> MixingBound:
    if not 0 < delta < 1:
        raise InvalidInputError(f"delta must lie in (0, 1), got {delta}")
    if r >= 1:
        return MixingBound(r, None)
    if r == 0:
        return MixingBound(r, 1)
    t = math.ceil((math.log(n) - math.log(delta)) / math.log(1 / r))
    return MixingBound(r, max(t, 1))


def _tanh_row_sums(model: IsingModel, beta: float) -> np.ndarray:
    A = abs(model.J).tocsr()
    A.data = np.tanh(beta * A.data / 2)
    return np.asarray(A.sum(axis=1)).ravel()


def mixing_bound_sca(model: IsingModel, q, beta: float, delta: float) -> MixingBound:
    """max_x (tanh(beta q_x/2) + sum_y tanh(beta |J_xy|/2)) and the resulting mixing-time bound."""
    if beta < 0:
        raise InvalidInputError(f"inverse temperature must be >= 0, got {beta}")
    q = np.broadcast_to(np.asarray(q, dtype=float), (model.num_vertices,))
    r = float(np.max(np.tanh(beta * q / 2) + _tanh_row_sums(model, beta)))
    return _bound_from_r(r, model.num_vertices, delta)


def mixing_bound_epsilon_sca(model: IsingModel, epsilon: float, beta: float, delta: float) -> MixingBound:
    if not 0 < epsilon <= 1:
        raise InvalidInputError(f"epsilon must lie in (0, 1], got {epsilon}")
    if beta < 0:
        raise InvalidInputError(f"inverse temperature must be >= 0, got {beta}")
    r = (1 - epsilon) + epsilon * float(np.max(_tanh_row_sums(model, beta)))
    return _bound_from_r(r, model.num_vertices, delta)


def mixing_bound(model: IsingModel, spec: EngineSpec, beta: float, delta: float) -> MixingBound:
    if spec.kind is EngineKind.SCA:
        return mixing_bound_sca(model, spec.pinning_for(model), beta, delta)
    if spec.kind is EngineKind.EPSILON_SCA:
        return mixing_bound_epsilon_sca(model, spec.epsilon, beta, delta)
    raise ConfigurationError("mixing bounds are stated for SCA and epsilon-SCA only")


def tv_distance(p, q, atol: float = 1e-9) -> float:
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise InvalidInputError(f"distributions have shapes {p.shape} and {q.shape}")
    for name, d in (("p", p), ("q", q)):
        if abs(d.sum() - 1) > atol or np.any(d < -atol):
            raise InvalidInputError(f"{name} is not a probability distribution (sum={d.sum()!r})")
    return 0.5 * float(np.abs(p - q).sum())


def stationary_distribution(K: np.ndarray, tol: float = 1e-13, max_iter: int = 10**6) -> np.ndarray:
    """Stationary law of a row-stochastic matrix.

    Solves pi (K - I) = 0 with sum(pi) = 1 directly. Falls back to iterating
    mu <- mu K from the uniform law (until successive iterates are within
    ``tol`` in TV) when the system is singular, i.e. the chain is reducible.
    """
    K = K.matrix if isinstance(K, ExactKernel) else np.asarray(K)
    M = K.shape[0]
    A = K.T - np.eye(M)
    A[-1, :] = 1.0
    b = np.zeros(M)
    b[-1] = 1.0
    try:
        pi = np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        pi = None
    if pi is not None and np.all(np.isfinite(pi)) and pi.min() > -1e-12:
        pi = np.clip(pi, 0.0, None)
        pi /= pi.sum()
        if 0.5 * np.abs(pi @ K - pi).sum() < max(tol, 1e-12):
            return pi
    mu = np.full(M, 1.0 / M)
    for _ in range(max_iter):
        nxt = mu @ K
        nxt /= nxt.sum()
        if 0.5 * np.abs(nxt - mu).sum() < tol:
            return nxt
        mu = nxt
    raise NumericalError(f"stationary iteration did not reach TV < {tol} in {max_iter} steps")


@dataclass(frozen=True)
class MixingReport:
    engine: str
    beta: float
    delta: float
    r: float
    t_bound: int | None
    tv: float | None
    passed: bool | None

    @property
    def applicable(self) -> bool:
        return self.t_bound is not None

    def as_dict(self) -> dict:
        return {
            "engine": self.engine,
            "beta": self.beta,
            "delta": self.delta,
            "r": self.r,
            "t_bound": self.t_bound,
            "tv": self.tv,
            "status": "inapplicable" if not self.applicable else ("pass" if self.passed else "fail"),
        }


def verify_mixing(model: IsingModel, spec: EngineSpec, beta: float, delta: float) -> MixingReport:
    """Worst-case TV to stationarity after the bound's number of steps, computed exactly."""
    if model.num_vertices > 10:
        raise InvalidInputError(f"verify_mixing supports N <= 10, got {model.num_vertices}")
    bound = mixing_bound(model, spec, beta, delta)
    if not bound.applicable:
        return MixingReport(spec.label, beta, delta, bound.r, None, None, None)
    K = build_exact_kernel(model, spec, beta).matrix
    pi = stationary_distribution(K)
    Kt = np.linalg.matrix_power(K, bound.t_bound)
    tv = float(0.5 * np.abs(Kt - pi[None, :]).sum(axis=1).max())
    return MixingReport(spec.label, beta, delta, bound.r, bound.t_bound, tv, tv <= delta)


def coupling_terms(model: IsingModel, spec: EngineSpec, beta: float, config, x: int) -> np.ndarray:
    """|p(s, y) - p(s^x, y)| for every y, where p is the per-site probability of +1."""
    s = as_config(model, config)
    if not 0 <= x < model.num_vertices:
        raise InvalidInputError(f"vertex {x} out of range")
    sx = s.copy()
    sx[x] = -sx[x]
    P = site_plus_probs(model, spec, beta, np.stack([s, sx]))
    return np.abs(P[0] - P[1])


def coupling_disagreement(model: IsingModel, spec: EngineSpec, beta: float, config, x: int) -> float:
    """Expected number of disagreeing sites after one step of the threshold coupling from s and s^x."""
    terms = coupling_terms(model, spec, beta, config, x)
    return float(terms[x] + terms[model.neighbors(x)].sum())


def gibbs_distribution(model: IsingModel, beta: float) -> np.ndarray:
    """exp(-beta H) normalised over all 2^N configurations."""
    E = energies(model, all_configs(model.num_vertices))
    w = np.exp(-beta * (E - E.min()))
    return w / w.sum()


def annealed_distributions(
    model: IsingModel,
    spec: EngineSpec,
    schedule: AnnealingSchedule,
    checkpoints,
    start: int | None = None,
) -> dict[int, np.ndarray]:
    """Law of the inhomogeneous chain started uniform, at each requested step count.

    Step ``k`` applies the kernel at ``schedule(start + k - 1)``.
    """
    start = schedule.first_step if start is None else start
    checkpoints = sorted(set(int(c) for c in checkpoints))
    n = model.num_vertices
    if n > KERNEL_CAP:
        raise InvalidInputError(f"exact kernel refused: N={n} exceeds cap {KERNEL_CAP}")
    S = all_configs(n).astype(float)
    mu = np.full(S.shape[0], 1.0 / S.shape[0])
    out = {}
    if 0 in checkpoints:
        out[0] = mu.copy()
    for k in range(1, checkpoints[-1] + 1):
        beta = schedule(start + k - 1)
        if spec.kind is EngineKind.GLAUBER:
            K = build_exact_kernel(model, spec, beta).matrix
        else:
            K = _product_kernel(site_plus_probs(model, spec, beta, S))
        mu = mu @ K
        if k in checkpoints:
            out[k] = mu.copy()
    return out
