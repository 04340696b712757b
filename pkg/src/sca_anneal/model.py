"""Ising Hamiltonians on arbitrary finite graphs.

    H(s) = -1/2 sum_{x,y} J[x,y] s_x s_y - sum_x h_x s_x

Couplings are kept in CSR form with sorted column indices per row, so a
sweep over all couplings costs O(|E|). Dense copies are produced lazily for
small or nearly complete graphs where BLAS is faster than sparse products.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .errors import InvalidInputError, NumericalError

__all__ = [
    "IsingModel",
    "as_config",
    "energy",
    "energies",
    "cavity_field",
    "cavity_fields",
    "flip_delta",
    "largest_eigenvalue",
    "gamma",
    "gamma_per_vertex",
]

# above this fill ratio the dense product beats CSR for the batched dynamics
_DENSE_FILL = 0.25
_DENSE_MAX_N = 4096
_EIG_DENSE_MAX_N = 64
_EIG_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class IsingModel:
    """Immutable Ising model.

    Build with :meth:`from_couplings` or :meth:`from_dense`; the raw
    constructor expects an already canonical symmetric CSR matrix.
    """

    num_vertices: int
    J: sp.csr_array
    h: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = self.num_vertices
        if n < 1:
            raise InvalidInputError(f"num_vertices must be positive, got {n}")
        if self.J.shape != (n, n):
            raise InvalidInputError(f"coupling matrix shape {self.J.shape} != ({n}, {n})")
        if self.h.shape != (n,):
            raise InvalidInputError(f"field vector shape {self.h.shape} != ({n},)")
        if self.J.nnz and np.any(self.J.data == 0):
            raise InvalidInputError("stored zero couplings are not allowed")
        if np.any(self.J.diagonal() != 0):
            raise InvalidInputError("self-couplings J[x,x] are not allowed")
        if (self.J - self.J.T).count_nonzero():
            raise InvalidInputError("coupling matrix is not symmetric")
        if not (np.all(np.isfinite(self.J.data)) and np.all(np.isfinite(self.h))):
            raise InvalidInputError("couplings and fields must be finite")
        self.J.data.flags.writeable = False
        self.h.flags.writeable = False

    @classmethod
    def from_couplings(
        cls,
        num_vertices: int,
        couplings: Mapping[tuple[int, int], float],
        fields: Sequence[float] | Mapping[int, float] | None = None,
    ) -> "IsingModel":
        """Build from ``{(x, y): J}``; each unordered pair given once, either order.

        Zero-valued couplings are dropped.
        """
        n = int(num_vertices)
        rows, cols, vals = [], [], []
        seen = set()
        for (x, y), value in couplings.items():
            x, y = int(x), int(y)
            if x == y:
                raise InvalidInputError(f"self-coupling at vertex {x}")
            if not (0 <= x < n and 0 <= y < n):
                raise InvalidInputError(f"coupling ({x}, {y}) out of range for N={n}")
            key = (min(x, y), max(x, y))
            if key in seen:
                raise InvalidInputError(f"pair {key} given more than once")
            seen.add(key)
            if value == 0:
                continue
            rows += [x, y]
            cols += [y, x]
            vals += [float(value), float(value)]
        J = sp.csr_array(
            (np.asarray(vals, dtype=float), (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))),
            shape=(n, n),
        )
        J.sort_indices()
        return cls(n, J, _field_vector(n, fields))

    @classmethod
    def from_dense(cls, J, h=None) -> "IsingModel":
        J = np.asarray(J, dtype=float)
        if J.ndim != 2 or J.shape[0] != J.shape[1]:
            raise InvalidInputError(f"coupling matrix must be square, got shape {J.shape}")
        n = J.shape[0]
        if np.any(np.diag(J) != 0):
            raise InvalidInputError("self-couplings J[x,x] are not allowed")
        Jc = sp.csr_array(J)
        Jc.eliminate_zeros()
        Jc.sort_indices()
        return cls(n, Jc, _field_vector(n, h))

    @property
    def couplings(self) -> dict[tuple[int, int], float]:
        """Stored couplings as ``{(x, y): J}`` with ``x < y``."""
        coo = sp.triu(self.J, k=1).tocoo()
        return {(int(x), int(y)): float(v) for x, y, v in zip(coo.row, coo.col, coo.data)}

    @property
    def num_edges(self) -> int:
        return self.J.nnz // 2

    def neighbors(self, x: int) -> np.ndarray:
        _check_vertex(self, x)
        return self.J.indices[self.J.indptr[x] : self.J.indptr[x + 1]]

    @cached_property
    def dense_J(self) -> np.ndarray:
        out = self.J.toarray()
        out.flags.writeable = False
        return out

    @cached_property
    def prefers_dense(self) -> bool:
        n = self.num_vertices
        return n <= _DENSE_MAX_N and self.J.nnz >= _DENSE_FILL * n * n

    @cached_property
    def abs_row_sums(self) -> np.ndarray:
        """sum_y |J[x,y]| for every x."""
        out = np.asarray(abs(self.J).sum(axis=1)).ravel()
        out.flags.writeable = False
        return out

    @cached_property
    def is_dyadic(self) -> bool:
        """True when 4*J and 4*h are integers, i.e. energies are exact in floating point."""
        vals = np.concatenate([self.J.data, self.h]) * 4.0
        return bool(np.all(vals == np.round(vals)) and np.all(np.abs(vals) < 2**40))

    def coupling_product(self, spins: np.ndarray) -> np.ndarray:
        """Row-wise ``J @ s`` for a batch ``spins`` of shape (M, N)."""
        if self.prefers_dense:
            return spins @ self.dense_J
        return np.asarray((self.J @ spins.T).T)

    def __repr__(self):
        return f"IsingModel(num_vertices={self.num_vertices}, num_edges={self.num_edges})"


def _field_vector(n, fields) -> np.ndarray:
    h = np.zeros(n)
    if fields is None:
        return h
    if isinstance(fields, Mapping):
        for x, value in fields.items():
            if not 0 <= int(x) < n:
                raise InvalidInputError(f"field index {x} out of range for N={n}")
            h[int(x)] = float(value)
        return h
    arr = np.asarray(fields, dtype=float)
    if arr.shape != (n,):
        raise InvalidInputError(f"expected {n} fields, got shape {arr.shape}")
    return arr.copy()


def _check_vertex(model: IsingModel, x) -> int:
    if not isinstance(x, (int, np.integer)) or not 0 <= x < model.num_vertices:
        raise InvalidInputError(f"vertex {x!r} out of range for N={model.num_vertices}")
    return int(x)


def as_config(model: IsingModel, spins) -> np.ndarray:
    """Validate a spin configuration and return it as a float array of +/-1."""
    s = np.asarray(spins)
    if s.shape != (model.num_vertices,):
        raise InvalidInputError(
            f"configuration has shape {s.shape}, model has {model.num_vertices} vertices"
        )
    if not np.all((s == 1) | (s == -1)):
        raise InvalidInputError("spins must be exactly +1 or -1")
    return s.astype(float)


def energy(model: IsingModel, config) -> float:
    s = as_config(model, config)
    return float(-0.5 * s @ (model.J @ s) - model.h @ s)


def energies(model: IsingModel, configs) -> np.ndarray:
    """Energies of a batch of configurations, shape (M, N) -> (M,)."""
    S = np.asarray(configs, dtype=float)
    if S.ndim != 2 or S.shape[1] != model.num_vertices:
        raise InvalidInputError(f"expected shape (M, {model.num_vertices}), got {S.shape}")
    JS = model.coupling_product(S)
    return -0.5 * np.einsum("mi,mi->m", S, JS) - S @ model.h


def cavity_field(model: IsingModel, config, x: int) -> float:
    """Local field sum_y J[x,y] s_y + h_x seen by vertex ``x``."""
    s = as_config(model, config)
    x = _check_vertex(model, x)
    lo, hi = model.J.indptr[x], model.J.indptr[x + 1]
    return float(model.J.data[lo:hi] @ s[model.J.indices[lo:hi]] + model.h[x])


def cavity_fields(model: IsingModel, config) -> np.ndarray:
    """All cavity fields at once, (N,) -> (N,) or (M, N) -> (M, N)."""
    S = np.asarray(config, dtype=float)
    if S.ndim == 1:
        return model.J @ as_config(model, S) + model.h
    return model.coupling_product(S) + model.h


def flip_delta(model: IsingModel, config, x: int) -> float:
    """H(s with s_x flipped) - H(s)."""
    s = as_config(model, config)
    return 2.0 * s[x] * cavity_field(model, s, x)


def largest_eigenvalue(model: IsingModel, tol: float = _EIG_TOL, max_iter: int | None = None) -> float:
    """Largest eigenvalue of the matrix [-J] (zero diagonal).

    Dense symmetric eigensolve for N <= 64, implicitly restarted Lanczos
    (ARPACK) above that.
    """
    n = model.num_vertices
    if model.J.nnz == 0:
        return 0.0
    if n <= _EIG_DENSE_MAX_N:
        return float(np.linalg.eigvalsh(-model.dense_J)[-1])
    if max_iter is None:
        max_iter = max(1000, int(math.ceil(10 * n * math.log(n))))
    v0 = np.random.default_rng(0).standard_normal(n)
    try:
        vals = eigsh(-model.J.astype(float), k=1, which="LA", tol=tol, maxiter=max_iter, v0=v0,
                     return_eigenvectors=False)
    except ArpackNoConvergence as exc:
        raise NumericalError(
            f"Lanczos did not converge in {max_iter} iterations (N={n}, nnz={model.J.nnz}): {exc}"
        ) from None
    return float(vals[-1])


def _pinning_vector(model: IsingModel, q) -> np.ndarray:
    q = np.broadcast_to(np.asarray(q, dtype=float), (model.num_vertices,))
    if np.any(~np.isfinite(q)) or np.any(q < 0):
        raise InvalidInputError("pinning parameters must be finite and nonnegative")
    return q


def gamma_per_vertex(model: IsingModel, q) -> np.ndarray:
    """q_x + |h_x| + sum_y |J[x,y]| for each vertex."""
    return _pinning_vector(model, q) + np.abs(model.h) + model.abs_row_sums


def gamma(model: IsingModel, q) -> float:
    return float(gamma_per_vertex(model, q).sum())
