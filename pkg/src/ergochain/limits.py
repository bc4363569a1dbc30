"""Numeric classification of chains as ergodic / class-ergodic / inconclusive,
and the three verdict pipelines combining property checks, the interaction
graph, and limit classification.

A chain is classified by examining backward products A(n, k) at a geometric
ladder of horizons: a stabilized product with (near-)identical rows is
ergodic evidence; a stabilized product whose rows group into blocks that keep
almost all column mass inside their own block is class-ergodic evidence.
Everything here is numeric evidence at a finite horizon, never a proof, and
pipeline disagreements are reported as findings rather than errors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chain import Chain
from .errors import InvalidParameter
from .interaction import IslandPartition, interaction_islands
from .properties import (
    BOUNDED,
    DIVERGENT,
    INCONCLUSIVE,
    S_MAX,
    TrendPolicy,
    absolute_flow_worst_case,
    balanced_asymmetry_constant,
    self_confidence,
    typesymmetry_constant,
)

TAU_LIMIT = 1e-8
TAU_LEAK = 1e-8

ERGODIC = "ergodic"
CLASS_ERGODIC = "class-ergodic"

# Geometric horizon ladder 2^4 .. 2^14: exposes slow convergence while
# keeping the number of snapshots small.
DEFAULT_HORIZONS = tuple(2**j for j in range(4, 15))


@dataclass(frozen=True)
class LimitClassification:
    verdict: str
    limit_matrix: np.ndarray
    island_partition: IslandPartition
    residuals: tuple
    start_index: int
    stabilized: bool
    max_row_gap: float
    max_leak: float


@dataclass
class ClassifySummary:
    """Per-start-index classifications plus the combined verdict."""

    per_k: dict[int, LimitClassification]
    verdict: str
    island_partition: IslandPartition

    def verdicts(self) -> dict[int, str]:
        return {k: c.verdict for k, c in self.per_k.items()}


def _group_rows(product: np.ndarray, tau: float) -> list[tuple[int, ...]]:
    """Single-linkage grouping of near-equal rows (max-norm distance < tau)."""
    s = product.shape[0]
    parent = list(range(s))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(s):
        for j in range(i + 1, s):
            if np.abs(product[i] - product[j]).max() < tau:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(s):
        groups.setdefault(find(i), []).append(i)
    return sorted((tuple(sorted(g)) for g in groups.values()), key=lambda g: g[0])


def _max_row_gap(product: np.ndarray, groups=None) -> float:
    """Largest max-norm distance between rows (within groups, if given)."""
    worst = 0.0
    if groups is None:
        groups = [tuple(range(product.shape[0]))]
    for g in groups:
        for a in range(len(g)):
            for b in range(a + 1, len(g)):
                worst = max(worst, float(np.abs(product[g[a]] - product[g[b]]).max()))
    return worst


def _max_leak(product: np.ndarray, groups) -> float:
    """Largest row mass falling outside the row's own group columns."""
    worst = 0.0
    for g in groups:
        cols = np.ones(product.shape[1], dtype=bool)
        cols[list(g)] = False
        for i in g:
            worst = max(worst, float(product[i, cols].sum()))
    return worst


def classify_limit(chain: Chain, k: int, horizons,
                   tau_limit: float = TAU_LIMIT,
                   tau_leak: float = TAU_LEAK) -> LimitClassification:
    """Classify backward products A(n, k) at the given increasing horizons.

    Verdict rules: the product must have stabilized (the last two snapshots
    agree entrywise within tau_limit); then identical rows overall mean
    ergodic, and a row grouping whose blocks are tight and keep column mass
    leak below tau_leak means class-ergodic.  Anything else is inconclusive.
    """
    horizons = [int(h) for h in horizons]
    if not horizons or any(b <= a for a, b in zip(horizons, horizons[1:])):
        raise InvalidParameter("horizons must be a non-empty increasing list")
    if horizons[0] <= k:
        raise InvalidParameter(f"horizons must exceed start index k={k}")

    residuals = []
    product = np.eye(chain.size)
    previous = None
    n = k
    for h in horizons:
        for m in range(n, h):
            product = chain.array(m) @ product
        n = h
        gap = _max_row_gap(product)
        delta_prev = float(np.abs(product - previous).max()) if previous is not None else None
        residuals.append({"horizon": h, "max_row_gap": gap, "delta_prev": delta_prev})
        previous = product.copy()

    stabilized = len(horizons) < 2 or residuals[-1]["delta_prev"] < tau_limit
    groups = _group_rows(product, tau_limit)
    overall_gap = residuals[-1]["max_row_gap"]
    within_gap = _max_row_gap(product, groups)
    leak = _max_leak(product, groups)

    if stabilized and overall_gap < tau_limit:
        verdict = ERGODIC
        partition = IslandPartition((tuple(range(chain.size)),))
    elif stabilized and within_gap < tau_limit and leak < tau_leak:
        verdict = CLASS_ERGODIC
        partition = IslandPartition(tuple(groups))
    else:
        verdict = INCONCLUSIVE
        partition = IslandPartition(tuple(groups))

    return LimitClassification(
        verdict=verdict,
        limit_matrix=product,
        island_partition=partition,
        residuals=tuple(residuals),
        start_index=k,
        stabilized=bool(stabilized),
        max_row_gap=float(overall_gap),
        max_leak=float(leak),
    )


def default_start_indices(horizon: int) -> tuple[int, ...]:
    """Sampled stand-in for the definitions' 'for each k >= 0'."""
    return tuple(sorted({0, horizon // 10, horizon // 3}))


def usable_horizons(horizon: int, k: int = 0, horizons=None) -> list[int]:
    ladder = list(horizons) if horizons is not None else list(DEFAULT_HORIZONS)
    out = sorted({h for h in ladder if k < h <= horizon} | {horizon})
    return [h for h in out if h > k]


def classify_limit_multi(chain: Chain, horizon: int, ks=None, horizons=None,
                         tau_limit: float = TAU_LIMIT,
                         tau_leak: float = TAU_LEAK) -> ClassifySummary:
    """Classify from several start indices; verdicts must agree to stand."""
    if ks is None:
        ks = default_start_indices(horizon)
    per_k = {}
    for k in sorted(set(int(k) for k in ks)):
        per_k[k] = classify_limit(
            chain, k, usable_horizons(horizon, k, horizons), tau_limit, tau_leak
        )
    verdicts = {c.verdict for c in per_k.values()}
    verdict = verdicts.pop() if len(verdicts) == 1 else INCONCLUSIVE
    partition = per_k[min(per_k)].island_partition
    return ClassifySummary(per_k=per_k, verdict=verdict, island_partition=partition)


# --------------------------------------------------------------------------- #
# theorem pipelines


@dataclass
class TheoremReport:
    theorem: str
    hypotheses: dict
    flows: list
    predicted: str
    observed: ClassifySummary
    agreement: bool | None
    notes: list[str] = field(default_factory=list)


def _agreement(predicted: str, observed: str) -> bool | None:
    """Compare a predicted verdict with an observed one on the verdict lattice
    (ergodic implies class-ergodic; inconclusive settles nothing)."""
    if predicted == INCONCLUSIVE or observed == INCONCLUSIVE:
        return None
    if predicted == ERGODIC:
        return observed == ERGODIC
    if predicted == "not-ergodic":
        return observed != ERGODIC
    if predicted == CLASS_ERGODIC:
        return observed in (ERGODIC, CLASS_ERGODIC)
    if predicted == "not-class-ergodic":
        return observed not in (ERGODIC, CLASS_ERGODIC)
    return None


def theorem1_pipeline(chain: Chain, horizon: int, reference_chain: Chain | None = None,
                      s_max: int = S_MAX, ks=None, horizons=None,
                      tau_limit: float = TAU_LIMIT, tau_leak: float = TAU_LEAK,
                      policy: TrendPolicy = TrendPolicy()) -> TheoremReport:
    """Ergodicity iff absolute infinite flow, for (l1-approximations of)
    balanced asymmetric chains; checked as worst-case flow divergence at every
    cardinality versus the observed limit classification."""
    from .properties import l1_distance  # local import to avoid cycle noise

    notes = []
    s = chain.size
    m_bal = balanced_asymmetry_constant(chain, horizon, s_max)
    hypotheses = {"balanced_asymmetry_constant": m_bal}
    if reference_chain is not None:
        series = l1_distance(chain, reference_chain, horizon, policy)
        hypotheses["l1_distance_to_reference"] = series.summary()
        hypotheses["reference_balanced_asymmetry_constant"] = \
            balanced_asymmetry_constant(reference_chain, horizon, s_max)
    if not np.isfinite(m_bal) and reference_chain is None:
        notes.append(
            "balanced-asymmetry precondition not verified on the realized horizon"
        )

    flows = []
    verdicts = []
    for c in range(1, s):
        series = absolute_flow_worst_case(chain, c, horizon, s_max=s_max,
                                          policy=policy)
        flows.append(series.summary())
        verdicts.append(series.verdict)
    if all(v == DIVERGENT for v in verdicts):
        predicted = ERGODIC
    elif any(v == BOUNDED for v in verdicts):
        predicted = "not-ergodic"
    else:
        predicted = INCONCLUSIVE

    observed = classify_limit_multi(chain, horizon, ks, horizons, tau_limit, tau_leak)
    agreement = _agreement(predicted, observed.verdict)
    if agreement is False:
        notes.append("prediction disagrees with observed classification")
    return TheoremReport("theorem1", hypotheses, flows, predicted, observed,
                         agreement, notes)


def theorem2_pipeline(chain: Chain, horizon: int, s_max: int = S_MAX,
                      ks=None, horizons=None, tau_limit: float = TAU_LIMIT,
                      tau_leak: float = TAU_LEAK,
                      policy: TrendPolicy = TrendPolicy()) -> TheoremReport:
    """Class-ergodicity iff absolute infinite flow over each island; islands
    come from the strong interaction digraph of the realized chain."""
    notes = []
    m_bal = balanced_asymmetry_constant(chain, horizon, s_max)
    if not np.isfinite(m_bal):
        notes.append(
            "balanced-asymmetry precondition (Lemma on island equivalence) "
            "not verified on the realized horizon; islands are reported as SCCs"
        )
    _, digraph, island_partition = interaction_islands(chain, horizon, policy)

    flows = []
    island_ok = []
    for island in island_partition.classes:
        island_verdicts = []
        for c in range(1, len(island)):
            series = absolute_flow_worst_case(chain, c, horizon,
                                              restrict_to=island, s_max=s_max,
                                              policy=policy)
            flows.append(series.summary())
            island_verdicts.append(series.verdict)
        # singleton islands have no proper sub-cut: vacuously divergent
        island_ok.append(all(v == DIVERGENT for v in island_verdicts))
        if any(v == BOUNDED for v in island_verdicts):
            island_ok[-1] = False

    if all(island_ok):
        predicted = CLASS_ERGODIC
    elif any(f["verdict"] == BOUNDED for f in flows):
        predicted = "not-class-ergodic"
    else:
        predicted = INCONCLUSIVE

    hypotheses = {
        "balanced_asymmetry_constant": m_bal,
        "islands": island_partition.as_lists(),
        "digraph_edges": digraph.edge_list(),
    }
    observed = classify_limit_multi(chain, horizon, ks, horizons, tau_limit, tau_leak)
    agreement = _agreement(predicted, observed.verdict)
    if observed.island_partition.classes != island_partition.classes \
            and observed.verdict in (ERGODIC, CLASS_ERGODIC):
        if not (observed.verdict == ERGODIC and island_partition.count == 1):
            notes.append(
                "limit row groups differ from interaction-graph islands: "
                f"{observed.island_partition.as_lists()} vs "
                f"{island_partition.as_lists()}"
            )
    if agreement is False:
        notes.append("prediction disagrees with observed classification")
    return TheoremReport("theorem2", hypotheses, flows, predicted, observed,
                         agreement, notes)


def theorem3_pipeline(chain: Chain, horizon: int, s_max: int = S_MAX,
                      ks=None, horizons=None, tau_limit: float = TAU_LIMIT,
                      tau_leak: float = TAU_LEAK) -> TheoremReport:
    """Self-confidence plus type-symmetry predict class-ergodicity (a
    sufficient condition; failing hypotheses settle nothing)."""
    delta = self_confidence(chain, horizon)
    m_type = typesymmetry_constant(chain, horizon, s_max)
    hypotheses = {
        "self_confidence_delta": delta,
        "typesymmetry_constant": m_type,
    }
    holds = delta > 0 and np.isfinite(m_type)
    predicted = CLASS_ERGODIC if holds else INCONCLUSIVE
    observed = classify_limit_multi(chain, horizon, ks, horizons, tau_limit, tau_leak)
    agreement = _agreement(predicted, observed.verdict)
    notes = []
    if agreement is False:
        notes.append("prediction disagrees with observed classification")
    return TheoremReport("theorem3", hypotheses, [], predicted, observed,
                         agreement, notes)
