"""Benchmark instance families and the line-oriented instance file format.

File format (0-indexed vertices, ``#`` starts a comment)::

    ising <N>
    J <x> <y> <value>      # one line per unordered pair, x < y
    h <x> <value>          # only nonzero fields
    tsp <n> <A> <B>        # TSP instances only
    d <i> <j> <value>      # TSP distances, i < j

Generator metadata travels in ``# meta key=value`` comment lines so readers
that ignore comments still see a valid instance.
"""
from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import InvalidInputError
from .model import IsingModel

__all__ = [
    "TspInstance",
    "TourDecoding",
    "InstanceArtifact",
    "gen_gaussian_spin_glass",
    "gen_bernoulli_spin_glass",
    "gen_max_cut",
    "gen_tsp",
    "tsp_model",
    "decode_tour",
    "encode_tour",
    "tour_length",
    "cut_value",
    "regenerate",
    "write_instance",
    "read_instance",
    "format_instance",
    "parse_instance",
    "GENERATORS",
]

MAX_COMPLETE_N = 20000


@dataclass(frozen=True, eq=False)
class TspInstance:
    """Symmetric TSP with the one-hot (city, position) spin encoding.

    Spin ``v * n + j`` is +1 iff city ``v`` is visited at position ``j``.
    ``energy_offset`` is the constant dropped when converting the QUBO to
    Ising form: QUBO value = H + energy_offset.
    """

    num_cities: int
    distances: np.ndarray = field(repr=False)
    penalty_a: float
    tour_weight_b: float
    energy_offset: float = field(default=0.0, repr=False)

    def __post_init__(self):
        d = np.asarray(self.distances)
        n = self.num_cities
        if n < 3 or d.shape != (n, n):
            raise InvalidInputError(f"need n >= 3 and an (n, n) distance matrix, got n={n}, shape={d.shape}")
        off = ~np.eye(n, dtype=bool)
        if not np.array_equal(d, d.T) or np.any(d[off] <= 0) or np.any(np.diag(d) != 0):
            raise InvalidInputError("distances must be symmetric, positive off the diagonal, zero on it")
        d = d.copy()
        d.flags.writeable = False
        object.__setattr__(self, "distances", d)

    @property
    def num_spins(self) -> int:
        return self.num_cities**2

    def spin(self, city: int, position: int) -> int:
        return city * self.num_cities + position


@dataclass(frozen=True)
class TourDecoding:
    valid: bool
    tour: tuple[int, ...] | None
    length: float | None
    violations: tuple[str, ...] = ()


@dataclass(frozen=True, eq=False)
class InstanceArtifact:
    model: IsingModel
    family: str
    params: dict
    seed: int | None
    tsp: TspInstance | None = None

    @property
    def metadata(self) -> dict:
        return {"family": self.family, "seed": self.seed, **self.params}


def _rng(seed):
    return np.random.default_rng(seed)


def _check_complete(n: int) -> None:
    if n < 2:
        raise InvalidInputError(f"need N >= 2, got {n}")
    if n > MAX_COMPLETE_N:
        raise InvalidInputError(f"complete graph with N={n} exceeds the supported maximum {MAX_COMPLETE_N}")


def _check_prob(p: float) -> None:
    if not 0 <= p <= 1:
        raise InvalidInputError(f"probability must lie in [0, 1], got {p}")


def _from_upper(n: int, values: np.ndarray, keep: np.ndarray | None = None) -> IsingModel:
    """Symmetric model from values laid out over the row-major strict upper triangle."""
    rows, cols = np.triu_indices(n, k=1)
    if keep is not None:
        rows, cols, values = rows[keep], cols[keep], values[keep]
    nz = values != 0
    rows, cols, values = rows[nz], cols[nz], values[nz]
    J = sp.csr_array(
        (np.concatenate([values, values]), (np.concatenate([rows, cols]), np.concatenate([cols, rows]))),
        shape=(n, n),
    )
    J.sort_indices()
    return IsingModel(n, J, np.zeros(n))


def gen_gaussian_spin_glass(N: int, seed) -> InstanceArtifact:
    """Complete graph, i.i.d. standard normal couplings, no fields."""
    _check_complete(N)
    values = _rng(seed).standard_normal(N * (N - 1) // 2)
    return InstanceArtifact(_from_upper(N, values), "gaussian", {"N": N}, seed)


def gen_bernoulli_spin_glass(N: int, p: float, seed) -> InstanceArtifact:
    """Complete graph, J = +1 with probability p and -1 otherwise, no fields."""
    _check_complete(N)
    _check_prob(p)
    values = np.where(_rng(seed).random(N * (N - 1) // 2) < p, 1.0, -1.0)
    return InstanceArtifact(_from_upper(N, values), "bernoulli", {"N": N, "p": p}, seed)


def gen_max_cut(N: int, p: float, seed) -> InstanceArtifact:
    """Erdos-Renyi G(N, p) with J = -1 on edges, so H = |E| - 2 cut."""
    _check_complete(N)
    _check_prob(p)
    m = N * (N - 1) // 2
    edges = _rng(seed).random(m) < p
    return InstanceArtifact(_from_upper(N, -np.ones(m), keep=edges), "maxcut", {"N": N, "p": p}, seed)


def cut_value(model: IsingModel, config) -> int:
    """Number of coupled pairs whose spins disagree."""
    s = np.asarray(config)
    coo = sp.triu(model.J, k=1).tocoo()
    return int(np.count_nonzero(s[coo.row] != s[coo.col]))


def tsp_model(num_cities: int, distances, penalty_a: float | None = None, tour_weight_b: float = 1.0):
    """Encode a TSP instance; returns ``(IsingModel, TspInstance)``.

    QUBO over x[v, j] in {0, 1}::

        A * sum_v (1 - sum_j x[v,j])^2 + A * sum_j (1 - sum_v x[v,j])^2
        + B * sum_j sum_{u != v} d[u,v] x[u,j] x[v,j+1]     (j+1 mod n)

    Substituting x = (1 + s)/2 gives J = -Q/4 on each pair and
    h_i = -(c_i/2 + sum_k Q_ik/4); the constant is dropped.
    """
    n = int(num_cities)
    d = np.asarray(distances, dtype=float)
    if penalty_a is None:
        penalty_a = float(d.max())
    A, B = float(penalty_a), float(tour_weight_b)
    N = n * n
    Q = np.zeros((N, N))
    c = np.full(N, -2.0 * A)
    idx = np.arange(N).reshape(n, n)  # idx[city, position]
    for v in range(n):
        for j, k in itertools.combinations(range(n), 2):
            Q[idx[v, j], idx[v, k]] += 2 * A  # one position per city
            Q[idx[j, v], idx[k, v]] += 2 * A  # one city per position
    for j in range(n):
        jn = (j + 1) % n
        for u in range(n):
            for v in range(n):
                if u != v:
                    a, b = idx[u, j], idx[v, jn]
                    Q[min(a, b), max(a, b)] += B * d[u, v]
    Q = Q + Q.T  # symmetric, each pair weight now appears at (a,b) and (b,a)
    J = -Q / 4
    h = -(c / 2 + Q.sum(axis=1) / 4)
    offset = Q.sum() / 8 + c.sum() / 2 + 2 * n * A
    model = IsingModel.from_dense(J, h)
    inst = TspInstance(n, d, A, B, energy_offset=float(offset))
    return model, inst


def gen_tsp(n: int, seed) -> InstanceArtifact:
    """Random symmetric integer distances in {1..100}; A = max distance, B = 1."""
    if n < 3:
        raise InvalidInputError(f"need n >= 3 cities, got {n}")
    values = _rng(seed).integers(1, 101, size=n * (n - 1) // 2)
    d = np.zeros((n, n))
    rows, cols = np.triu_indices(n, k=1)
    d[rows, cols] = values
    d[cols, rows] = values
    model, inst = tsp_model(n, d)
    return InstanceArtifact(model, "tsp", {"n": n}, seed, tsp=inst)


def tour_length(instance: TspInstance, tour) -> float:
    d = instance.distances
    return float(sum(d[tour[i], tour[(i + 1) % len(tour)]] for i in range(len(tour))))


def encode_tour(instance: TspInstance, tour) -> np.ndarray:
    """Spin configuration placing ``tour[j]`` at position ``j``."""
    n = instance.num_cities
    if sorted(tour) != list(range(n)):
        raise InvalidInputError(f"tour must be a permutation of 0..{n - 1}")
    x = np.full((n, n), -1, dtype=np.int8)
    for j, v in enumerate(tour):
        x[v, j] = 1
    return x.ravel()


def decode_tour(instance: TspInstance, config) -> TourDecoding:
    n = instance.num_cities
    s = np.asarray(config)
    if s.shape != (n * n,):
        raise InvalidInputError(f"configuration length {s.size} != n^2 = {n * n}")
    x = (s.reshape(n, n) == 1)
    violations = []
    for v, count in enumerate(x.sum(axis=1)):
        if count != 1:
            violations.append(f"city {v} occupies {count} positions")
    for j, count in enumerate(x.sum(axis=0)):
        if count != 1:
            violations.append(f"position {j} holds {count} cities")
    if violations:
        return TourDecoding(False, None, None, tuple(violations))
    tour = tuple(int(np.flatnonzero(x[:, j])[0]) for j in range(n))
    return TourDecoding(True, tour, tour_length(instance, tour))


GENERATORS = {
    "gaussian": lambda params, seed: gen_gaussian_spin_glass(int(params["N"]), seed),
    "bernoulli": lambda params, seed: gen_bernoulli_spin_glass(int(params["N"]), float(params["p"]), seed),
    "maxcut": lambda params, seed: gen_max_cut(int(params["N"]), float(params["p"]), seed),
    "tsp": lambda params, seed: gen_tsp(int(params["n"]), seed),
}


def regenerate(artifact: InstanceArtifact) -> InstanceArtifact:
    """Rebuild an instance from its recorded family, parameters and seed."""
    if artifact.family not in GENERATORS:
        raise InvalidInputError(f"family {artifact.family!r} cannot be regenerated")
    return GENERATORS[artifact.family](artifact.params, artifact.seed)


# -- file format -------------------------------------------------------------------


def _num(value: float) -> str:
    value = float(value)
    return str(int(value)) if value.is_integer() and abs(value) < 2**53 else repr(value)


def format_instance(artifact: InstanceArtifact) -> str:
    model = artifact.model
    lines = ["# sca_anneal instance", f"# meta family={artifact.family}"]
    if artifact.seed is not None:
        lines.append(f"# meta seed={artifact.seed}")
    for key, value in artifact.params.items():
        lines.append(f"# meta {key}={value}")
    lines.append(f"ising {model.num_vertices}")
    for (x, y), value in sorted(model.couplings.items()):
        lines.append(f"J {x} {y} {_num(value)}")
    for x in np.flatnonzero(model.h):
        lines.append(f"h {x} {_num(model.h[x])}")
    if artifact.tsp is not None:
        t = artifact.tsp
        lines.append(f"tsp {t.num_cities} {_num(t.penalty_a)} {_num(t.tour_weight_b)}")
        for i, j in itertools.combinations(range(t.num_cities), 2):
            lines.append(f"d {i} {j} {_num(t.distances[i, j])}")
    return "\n".join(lines) + "\n"


def _meta_value(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return None if text == "None" else text


def parse_instance(text: str, source: str = "<string>") -> InstanceArtifact:
    meta: dict = {}
    n = None
    couplings: dict = {}
    fields: dict = {}
    tsp_header = None
    dist: dict = {}

    def fail(lineno, msg):
        raise InvalidInputError(f"{source}:{lineno}: {msg}")

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("meta ") and "=" in body:
                key, _, value = body[5:].partition("=")
                meta[key.strip()] = _meta_value(value.strip())
            continue
        parts = line.split()
        tag, args = parts[0], parts[1:]
        try:
            if tag == "ising" and len(args) == 1:
                if n is not None:
                    fail(lineno, "duplicate 'ising' header")
                n = int(args[0])
            elif tag == "J" and len(args) == 3:
                key = (int(args[0]), int(args[1]))
                if key in couplings or key[::-1] in couplings:
                    fail(lineno, f"duplicate coupling {key}")
                couplings[key] = float(args[2])
            elif tag == "h" and len(args) == 2:
                fields[int(args[0])] = float(args[1])
            elif tag == "tsp" and len(args) == 3:
                tsp_header = (int(args[0]), float(args[1]), float(args[2]))
            elif tag == "d" and len(args) == 3:
                dist[(int(args[0]), int(args[1]))] = float(args[2])
            else:
                fail(lineno, f"unrecognised line {line!r}")
        except ValueError as exc:
            if isinstance(exc, InvalidInputError):
                raise
            fail(lineno, f"bad number in {line!r}")
    if n is None:
        raise InvalidInputError(f"{source}: missing 'ising <N>' header")
    model = IsingModel.from_couplings(n, couplings, fields)
    tsp = None
    if tsp_header is not None:
        nc, A, B = tsp_header
        d = np.zeros((nc, nc))
        for (i, j), value in dist.items():
            d[i, j] = d[j, i] = value
        rebuilt, tsp = tsp_model(nc, d, A, B)
        if rebuilt.num_vertices != n:
            raise InvalidInputError(f"{source}: tsp header implies {nc * nc} spins, file has {n}")
    family = meta.pop("family", "custom")
    seed = meta.pop("seed", None)
    return InstanceArtifact(model, str(family), meta, seed, tsp=tsp)


def write_instance(artifact: InstanceArtifact, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_instance(artifact))


def read_instance(path) -> InstanceArtifact:
    with open(path, encoding="utf-8") as fh:
        return parse_instance(fh.read(), source=os.fspath(path))
