"""Row-stochastic matrices, chains of them, and the linear averaging dynamics.

The dynamics is x(n+1) = A_n x(n) where every A_n is row stochastic.  Backward
products accumulate the latest matrix on the *left*:

    P(n, k) = A_{n-1} A_{n-2} ... A_k

so that x(n) = P(n, k) x(k).  Chains are either exogenous (explicit matrices,
or an index rule n -> A_n) or endogenous (a generator producing A_n from the
current state).  Endogenous chains are materialized lazily and every realized
matrix is cached, so that later analyses replay exactly the chain the
trajectory saw.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    IndexOutOfRange,
    InvalidParameter,
    NegativeEntry,
    RowSumViolation,
)

# Row-sum tolerance for freshly constructed matrices, and the relaxed value
# appropriate for accumulated products of up to ~1e6 factors.
ROW_SUM_TOL = 1e-12
PRODUCT_ROW_SUM_TOL = 1e-9


@dataclass(frozen=True)
class StochasticMatrix:
    """A validated s x s matrix with nonnegative entries and unit row sums."""

    entries: np.ndarray

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def row(self, i: int) -> np.ndarray:
        return self.entries[i]

    def __array__(self, dtype=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


def validate_matrix(raw, tau_row: float = ROW_SUM_TOL) -> StochasticMatrix:
    """Validate a raw square array as row stochastic.

    Entries must be nonnegative and each row sum must be within ``tau_row``
    of 1; rows within tolerance are renormalized to sum to exactly 1, rows
    outside it are rejected.
    """
    a = np.array(raw, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    if np.any(a < 0.0):
        i, j = np.argwhere(a < 0.0)[0]
        raise NegativeEntry(int(i), int(j), float(a[i, j]))
    sums = a.sum(axis=1)
    bad = np.abs(sums - 1.0) > tau_row
    if np.any(bad):
        i = int(np.argmax(bad))
        raise RowSumViolation(i, float(sums[i]))
    a /= sums[:, None]
    a.setflags(write=False)
    return StochasticMatrix(a)


@dataclass(frozen=True)
class StateVector:
    """Agent states at one time index: shape (s,) for scalar models, (s, d) else."""

    values: np.ndarray
    time_index: int = 0

    @property
    def size(self) -> int:
        return self.values.shape[0]


def as_state(values, time_index: int = 0) -> StateVector:
    if isinstance(values, StateVector):
        return values
    v = np.array(values, dtype=float)
    v.setflags(write=False)
    return StateVector(v, time_index)


def step(x: StateVector, a: StochasticMatrix) -> StateVector:
    """One update x(n+1) = A x(n), applied to each coordinate of d-dim states."""
    if a.size != x.size:
        raise DimensionMismatch(
            f"matrix size {a.size} does not match state length {x.size}"
        )
    new = a.entries @ x.values
    new.setflags(write=False)
    return StateVector(new, x.time_index + 1)


class Chain:
    """A sequence (A_n) of row-stochastic matrices, defined for n >= start_index.

    Matrices are cached as raw read-only float arrays.  ``length`` may be
    ``None`` for rule- or dynamics-backed chains that can be extended on
    demand.
    """

    def __init__(self, *, start_index: int = 0, length: int | None = None,
                 tau_row: float = ROW_SUM_TOL):
        if start_index < 0:
            raise InvalidParameter("start_index must be >= 0")
        self.start_index = start_index
        self.length = length
        self._tau_row = tau_row
        self._arrays: list[np.ndarray] = []
        self._rule: Callable[[int], object] | None = None
        self._generator: Callable[[np.ndarray, int], object] | None = None
        self._states: list[np.ndarray] | None = None

    # ------------------------------------------------------------------ #
    # constructors

    @classmethod
    def from_matrices(cls, matrices: Sequence, start_index: int = 0,
                      tau_row: float = ROW_SUM_TOL) -> "Chain":
        """Explicit finite chain from raw arrays or StochasticMatrix values."""
        chain = cls(start_index=start_index, length=len(matrices), tau_row=tau_row)
        for m in matrices:
            chain._append(m)
        if not chain._arrays:
            raise InvalidParameter("a chain needs at least one matrix")
        return chain

    @classmethod
    def from_rule(cls, rule: Callable[[int], object], length: int | None = None,
                  start_index: int = 0, tau_row: float = ROW_SUM_TOL) -> "Chain":
        """Exogenous chain A_n = rule(n); materialized lazily and cached."""
        chain = cls(start_index=start_index, length=length, tau_row=tau_row)
        chain._rule = rule
        return chain

    @classmethod
    def from_dynamics(cls, generator: Callable[[np.ndarray, int], object],
                      x0, length: int | None = None,
                      tau_row: float = ROW_SUM_TOL) -> "Chain":
        """Endogenous chain: A_n = generator(x(n), n), x(n+1) = A_n x(n).

        The generator must be deterministic given (state, n).  States and
        matrices are cached as they are realized.
        """
        chain = cls(start_index=0, length=length, tau_row=tau_row)
        chain._generator = generator
        x = as_state(x0)
        chain._states = [x.values]
        return chain

    # ------------------------------------------------------------------ #

    @property
    def is_endogenous(self) -> bool:
        return self._generator is not None

    @property
    def end_index(self) -> int | None:
        return None if self.length is None else self.start_index + self.length

    @property
    def size(self) -> int:
        if not self._arrays:
            self._materialize_through(self.start_index)
        return self._arrays[0].shape[0]

    def _append(self, m) -> None:
        if isinstance(m, StochasticMatrix):
            arr = m.entries
        else:
            arr = validate_matrix(m, self._tau_row).entries
        if self._arrays and arr.shape != self._arrays[0].shape:
            raise DimensionMismatch(
                f"matrix shape {arr.shape} differs from chain shape "
                f"{self._arrays[0].shape}"
            )
        self._arrays.append(arr)

    def _check_index(self, n: int) -> None:
        if n < self.start_index:
            raise IndexOutOfRange(
                f"index {n} precedes chain start {self.start_index}"
            )
        if self.end_index is not None and n >= self.end_index:
            raise IndexOutOfRange(
                f"index {n} beyond chain end {self.end_index}"
            )

    def _materialize_through(self, n: int) -> None:
        self._check_index(n)
        pos = n - self.start_index
        while len(self._arrays) <= pos:
            idx = self.start_index + len(self._arrays)
            if self._rule is not None:
                self._append(self._rule(idx))
            elif self._generator is not None:
                x = self._states[-1]
                self._append(self._generator(x, idx))
                self._states.append(self._arrays[-1] @ x)
            else:
                raise IndexOutOfRange(
                    f"explicit chain has no matrix at index {idx}"
                )

    def array(self, n: int) -> np.ndarray:
        """Raw read-only entries of A_n."""
        self._materialize_through(n)
        return self._arrays[n - self.start_index]

    def matrix(self, n: int) -> StochasticMatrix:
        return StochasticMatrix(self.array(n))

    def stacked(self, k: int, n: int) -> np.ndarray:
        """Array of shape (n-k, s, s) holding A_k .. A_{n-1}."""
        if n <= k:
            raise IndexOutOfRange(f"need n > k, got k={k}, n={n}")
        self._materialize_through(n - 1)
        i0 = k - self.start_index
        return np.stack(self._arrays[i0:i0 + (n - k)])

    def state(self, n: int) -> np.ndarray:
        """Realized state x(n) of an endogenous chain (x(0) is the seed state)."""
        if self._states is None:
            raise InvalidParameter("state() is only defined for endogenous chains")
        if n > 0:
            self._materialize_through(n - 1)
        return self._states[n]

    @property
    def realized_length(self) -> int:
        return len(self._arrays)


def backward_product(chain: Chain, k: int, n: int,
                     tau_row: float = PRODUCT_ROW_SUM_TOL) -> StochasticMatrix:
    """The backward product P(n, k) = A_{n-1} A_{n-2} ... A_k.

    Requires n > k >= 0 and the chain to be defined on [k, n).  The result is
    validated as row stochastic under the relaxed product tolerance.
    """
    if not (0 <= k < n):
        raise IndexOutOfRange(f"need n > k >= 0, got k={k}, n={n}")
    chain._check_index(k)
    chain._check_index(n - 1)
    product = chain.array(k).copy()
    for m in range(k + 1, n):
        product = chain.array(m) @ product
    return validate_matrix(product, tau_row)


def trajectory(chain: Chain, x0=None, horizon: int = 0) -> list[StateVector]:
    """States [x(0), ..., x(horizon)] under x(m+1) = A_m x(m).

    For endogenous chains ``x0`` may be omitted; if given it must match the
    chain's own seed state, since the realized matrices depend on it.
    """
    if horizon < 0:
        raise InvalidParameter("horizon must be >= 0")
    if chain.is_endogenous:
        seed = chain.state(0)
        if x0 is not None and not np.array_equal(as_state(x0).values, seed):
            raise InvalidParameter(
                "x0 differs from the endogenous chain's seed state"
            )
        x = StateVector(seed, chain.start_index)
    elif x0 is None:
        raise InvalidParameter("x0 is required for exogenous chains")
    else:
        x = as_state(x0, chain.start_index)
    out = [x]
    for m in range(horizon):
        x = step(x, chain.matrix(chain.start_index + m))
        out.append(x)
    return out


def coordinate_spread(values: np.ndarray) -> float:
    """Sum over coordinates of (max_i - min_i); collapses to max-min for scalars."""
    v = np.asarray(values, dtype=float)
    if v.ndim == 1:
        return float(v.max() - v.min())
    return float((v.max(axis=0) - v.min(axis=0)).sum())


def max_pairwise_distance(values: np.ndarray) -> float:
    """Largest Euclidean distance between any two rows (|x_i - x_j| for scalars)."""
    v = np.asarray(values, dtype=float)
    if v.ndim == 1:
        return float(v.max() - v.min())
    diff = v[:, None, :] - v[None, :, :]
    return float(np.sqrt((diff * diff).sum(axis=-1)).max())
