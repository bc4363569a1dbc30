"""Transition-matrix generators for the three consensus models.

* JLM: exogenous equal-weight neighborhood averaging on a symmetric,
  possibly time-varying graph; a_ii = a_ij = 1/(1+d_i) for j in D_i(n).
* Finite-range (Krause-type): endogenous rates a_ij proportional to a
  non-increasing kernel of the inter-agent distance, vanishing at radius R.
* Generalized Cucker-Smale: positions integrate velocities, velocities
  average under distance-decaying rates a_ij = f(|X_i - X_j|).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .chain import Chain, StochasticMatrix, as_state, validate_matrix
from .errors import (
    AsymmetricNeighborSet,
    DimensionMismatch,
    InvalidParameter,
    SelfConfidenceViolated,
)


def pairwise_distances(values: np.ndarray) -> np.ndarray:
    """s x s matrix of |x_i - x_j| (Euclidean norm for d-dimensional states)."""
    v = np.asarray(values, dtype=float)
    if v.ndim == 1:
        return np.abs(v[:, None] - v[None, :])
    diff = v[:, None, :] - v[None, :, :]
    return np.sqrt((diff * diff).sum(axis=-1))


# --------------------------------------------------------------------------- #
# kernels


@dataclass(frozen=True)
class Kernel:
    """Interaction kernel y >= 0 -> f(y) >= 0, declared non-increasing or not."""

    fn: Callable
    name: str
    non_increasing: bool = True
    params: dict = field(default_factory=dict)

    def __call__(self, y):
        return self.fn(np.asarray(y, dtype=float))


def power_law_kernel(K: float, sigma: float, beta: float) -> Kernel:
    """f(y) = K / (sigma^2 + y^2)^beta; non-increasing for beta >= 0."""
    if not (K > 0 and sigma > 0 and beta >= 0):
        raise InvalidParameter(
            f"power-law kernel needs K > 0, sigma > 0, beta >= 0; "
            f"got K={K}, sigma={sigma}, beta={beta}"
        )
    return Kernel(
        fn=lambda y: K / (sigma**2 + y**2) ** beta,
        name="power-law",
        params={"K": float(K), "sigma": float(sigma), "beta": float(beta)},
    )


def krause_kernel(radius: float) -> Kernel:
    """Indicator kernel: f(y) = 1 for y < R and 0 elsewhere (f(R) = 0)."""
    if radius <= 0:
        raise InvalidParameter(f"radius must be positive, got {radius}")
    return Kernel(
        fn=lambda y: (y < radius).astype(float),
        name="krause",
        params={"radius": float(radius)},
    )


def constant_kernel(value: float) -> Kernel:
    if value < 0:
        raise InvalidParameter(f"kernel value must be >= 0, got {value}")
    return Kernel(
        fn=lambda y: np.full_like(y, value, dtype=float),
        name="constant",
        params={"value": float(value)},
    )


# --------------------------------------------------------------------------- #
# JLM model


class JLMSchedule:
    """Symmetric neighbor schedule n -> adjacency (no self-loops).

    Realized adjacencies are deterministic functions of n, so the chain can be
    replayed for post-hoc analysis.
    """

    def __init__(self, adjacency_fn: Callable[[int], np.ndarray], s: int,
                 length: int | None = None, description: str = ""):
        self.s = s
        self.length = length
        self.description = description
        self._fn = adjacency_fn

    def adjacency(self, n: int) -> np.ndarray:
        adj = np.asarray(self._fn(n), dtype=bool)
        if adj.shape != (self.s, self.s):
            raise DimensionMismatch(
                f"adjacency at n={n} has shape {adj.shape}, expected {(self.s, self.s)}"
            )
        return adj

    def neighbors(self, i: int, n: int) -> tuple[int, ...]:
        return tuple(np.flatnonzero(self.adjacency(n)[i]))

    # ------------------------------------------------------------------ #

    @classmethod
    def from_edges(cls, s: int, edges_per_step: list, description: str = "explicit"):
        """One undirected edge list per step; the schedule ends after the list."""
        stack = np.zeros((len(edges_per_step), s, s), dtype=bool)
        for n, edges in enumerate(edges_per_step):
            for (i, j) in edges:
                stack[n, i, j] = stack[n, j, i] = True
        return cls(lambda n: stack[n], s, length=len(edges_per_step),
                   description=description)

    @classmethod
    def periodic(cls, s: int, patterns: list, description: str = "periodic"):
        """Cycles through a list of undirected edge lists forever."""
        stacks = []
        for edges in patterns:
            adj = np.zeros((s, s), dtype=bool)
            for (i, j) in edges:
                adj[i, j] = adj[j, i] = True
            stacks.append(adj)
        return cls(lambda n: stacks[n % len(stacks)], s, description=description)

    @classmethod
    def complete(cls, s: int):
        adj = ~np.eye(s, dtype=bool)
        return cls(lambda n: adj, s, description="complete")

    @classmethod
    def empty(cls, s: int):
        adj = np.zeros((s, s), dtype=bool)
        return cls(lambda n: adj, s, description="empty")

    @classmethod
    def random(cls, s: int, p: float, seed: int, length: int):
        """Seeded Erdos-Renyi graph process, pregenerated for determinism."""
        if not (0.0 <= p <= 1.0):
            raise InvalidParameter(f"edge probability must be in [0,1], got {p}")
        rng = np.random.default_rng(seed)
        upper = rng.random((length, s, s)) < p
        stack = np.triu(upper, 1)
        stack = stack | stack.transpose(0, 2, 1)
        return cls(lambda n: stack[n], s, length=length,
                   description=f"random(p={p}, seed={seed})")


def jlm_matrix(schedule: JLMSchedule, n: int) -> StochasticMatrix:
    """Equal-weight averaging row per agent: a_ij = 1/(1+d_i) on {i} + D_i(n)."""
    adj = schedule.adjacency(n)
    if adj.diagonal().any():
        i = int(np.argmax(adj.diagonal()))
        raise InvalidParameter(f"agent {i} listed as its own neighbor at n={n}")
    if not np.array_equal(adj, adj.T):
        i, j = np.argwhere(adj & ~adj.T)[0]
        raise AsymmetricNeighborSet(int(j), int(i), n)
    weights = adj.astype(float) + np.eye(schedule.s)
    weights /= weights.sum(axis=1)[:, None]
    weights.setflags(write=False)
    return StochasticMatrix(weights)


def jlm_chain(schedule: JLMSchedule, length: int | None = None) -> Chain:
    n = length if length is not None else schedule.length
    return Chain.from_rule(lambda i: jlm_matrix(schedule, i), length=n)


# --------------------------------------------------------------------------- #
# finite-range (Krause-type) model


class FiniteRangeSpec:
    """Shared or per-agent interaction kernels vanishing at radius R(_i)."""

    def __init__(self, kernel, radius):
        kernels = tuple(kernel) if isinstance(kernel, (list, tuple)) else (kernel,)
        radii = tuple(float(r) for r in radius) if isinstance(radius, (list, tuple)) \
            else (float(radius),)
        if len(kernels) != len(radii):
            raise InvalidParameter("kernel and radius lists must have equal length")
        for k, r in zip(kernels, radii):
            if r <= 0:
                raise InvalidParameter(f"radius must be positive, got {r}")
            if float(k(0.0)) <= 0:
                raise InvalidParameter("kernel must satisfy f(0) > 0")
        self.kernels = kernels
        self.radii = radii

    @property
    def per_agent(self) -> bool:
        return len(self.kernels) > 1

    def kernel_for(self, i: int) -> Kernel:
        return self.kernels[i % len(self.kernels)] if self.per_agent else self.kernels[0]

    @classmethod
    def krause(cls, radius: float) -> "FiniteRangeSpec":
        return cls(krause_kernel(radius), radius)


def finite_range_matrix(spec: FiniteRangeSpec, x) -> StochasticMatrix:
    """Row i is the kernel profile around X_i, normalized; the k = i term keeps
    every denominator at least f_i(0) > 0."""
    values = as_state(x).values
    dist = pairwise_distances(values)
    if spec.per_agent:
        if len(spec.kernels) != values.shape[0]:
            raise DimensionMismatch(
                f"{len(spec.kernels)} kernels for {values.shape[0]} agents"
            )
        weights = np.stack([spec.kernels[i](dist[i]) for i in range(len(dist))])
    else:
        weights = spec.kernels[0](dist)
    weights = weights / weights.sum(axis=1)[:, None]
    return validate_matrix(weights)


def finite_range_chain(spec: FiniteRangeSpec, x0, length: int | None = None) -> Chain:
    return Chain.from_dynamics(
        lambda x, n: finite_range_matrix(spec, x), x0, length=length
    )


# --------------------------------------------------------------------------- #
# generalized Cucker-Smale model


@dataclass(frozen=True)
class CSSpec:
    """Kernel, step scale h, and state dimension of the C-S dynamics."""

    kernel: Kernel
    h: float
    dim: int = 3

    def __post_init__(self):
        if self.h <= 0:
            raise InvalidParameter(f"step scale h must be positive, got {self.h}")
        if self.dim < 1:
            raise InvalidParameter(f"dimension must be >= 1, got {self.dim}")


@dataclass(frozen=True)
class CSState:
    positions: np.ndarray
    velocities: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.positions, dtype=float)
        v = np.asarray(self.velocities, dtype=float)
        if p.shape != v.shape or p.ndim != 2:
            raise DimensionMismatch(
                f"positions {p.shape} and velocities {v.shape} must both be (s, d)"
            )
        object.__setattr__(self, "positions", p)
        object.__setattr__(self, "velocities", v)

    @property
    def size(self) -> int:
        return self.positions.shape[0]


def cs_rates(spec: CSSpec, positions: np.ndarray, n: int = 0) -> np.ndarray:
    """Raw transition matrix from current positions.

    Off-diagonal a_ij = f(|X_i - X_j|); the diagonal absorbs the remainder.
    A non-positive diagonal is a hard error; a diagonal in (0, 1/s] merely
    loses the self-confidence guard, so the simulation warns and continues.
    """
    s = positions.shape[0]
    rates = spec.kernel(pairwise_distances(positions))
    np.fill_diagonal(rates, 0.0)
    diag = 1.0 - rates.sum(axis=1)
    if np.any(diag <= 0.0):
        i = int(np.argmin(diag))
        raise SelfConfidenceViolated(i, n, float(diag[i]))
    if np.any(diag <= 1.0 / s):
        warnings.warn(
            "diagonal rate <= 1/s; self-confidence guard lost "
            "(kernel does not satisfy f < 1/s at realized distances)",
            RuntimeWarning,
            stacklevel=2,
        )
    rates[np.diag_indices(s)] = diag
    return rates


def cs_step(spec: CSSpec, state: CSState, n: int = 0) -> tuple[CSState, StochasticMatrix]:
    """One step of X_i' = X_i + h V_i and velocity averaging under the realized rates."""
    rates = cs_rates(spec, state.positions, n)
    new_velocities = rates @ state.velocities
    new_positions = state.positions + spec.h * state.velocities
    return CSState(new_positions, new_velocities), validate_matrix(rates)


@dataclass
class CSRun:
    """A realized C-S trajectory with enough recorded to audit the proof bounds."""

    spec: CSSpec
    initial: CSState
    final: CSState
    steps: int
    z_series: np.ndarray          # velocity-component spread sum per step
    diameter_series: np.ndarray   # max pairwise position distance per step
    m_x: float
    m_v: float
    positions: np.ndarray | None = None    # (N+1, s, d) when recorded
    velocities: np.ndarray | None = None
    matrices: np.ndarray | None = None     # (N, s, s) when recorded
    stopped_early: bool = False

    def chain(self) -> Chain:
        if self.matrices is None:
            raise InvalidParameter("run was not recorded; re-run with record=True")
        return Chain.from_matrices(list(self.matrices))


def _component_spread(velocities: np.ndarray) -> float:
    return float((velocities.max(axis=0) - velocities.min(axis=0)).sum())


def simulate_cs(spec: CSSpec, state0: CSState, horizon: int,
                record: bool = True, stop_spread: float | None = None,
                extra_steps: int = 0) -> CSRun:
    """Run the dynamics for up to ``horizon`` steps.

    With ``stop_spread`` set, stops ``extra_steps`` steps after the velocity
    spread z(n) first drops below it (the tail confirms the position diameter
    has stopped growing).  ``record=False`` keeps only the scalar series.
    """
    if state0.positions.shape[1] != spec.dim:
        raise DimensionMismatch(
            f"state dimension {state0.positions.shape[1]} != spec.dim {spec.dim}"
        )
    s = state0.size
    sup_f = float(spec.kernel(0.0))
    if spec.kernel.non_increasing and sup_f >= 1.0 / s:
        warnings.warn(
            f"kernel sup f = {sup_f:.6g} >= 1/s = {1.0 / s:.6g}; "
            "the self-confidence guard f < 1/s does not hold",
            RuntimeWarning,
            stacklevel=2,
        )

    x, v = state0.positions.copy(), state0.velocities.copy()
    z = np.empty(horizon + 1)
    diam = np.empty(horizon + 1)
    if record:
        xs = np.empty((horizon + 1, s, spec.dim))
        vs = np.empty((horizon + 1, s, spec.dim))
        mats = np.empty((horizon, s, s))
        xs[0], vs[0] = x, v

    z[0] = _component_spread(v)
    diam[0] = pairwise_distances(x).max()
    m_x = float(diam[0])
    m_v = float(pairwise_distances(v).max())

    n_done = 0
    stop_at = None
    for n in range(horizon):
        rates = cs_rates(spec, x, n)
        x = x + spec.h * v
        v = rates @ v
        n_done = n + 1
        z[n_done] = _component_spread(v)
        diam[n_done] = pairwise_distances(x).max()
        if record:
            xs[n_done], vs[n_done] = x, v
            mats[n] = rates
        if stop_spread is not None and stop_at is None and z[n_done] < stop_spread:
            stop_at = n_done + extra_steps
        if stop_at is not None and n_done >= stop_at:
            break

    final = CSState(x, v)
    return CSRun(
        spec=spec,
        initial=state0,
        final=final,
        steps=n_done,
        z_series=z[:n_done + 1],
        diameter_series=diam[:n_done + 1],
        m_x=m_x,
        m_v=m_v,
        positions=xs[:n_done + 1] if record else None,
        velocities=vs[:n_done + 1] if record else None,
        matrices=mats[:n_done] if record else None,
        stopped_early=n_done < horizon,
    )
