"""Chain properties over a realized finite horizon.

Computes the tight self-confidence bound delta and the tight constants M for
sub-symmetry, type-symmetry, and balanced asymmetry, plus the cumulative flow
series behind the infinite-flow and absolute-infinite-flow properties.  All
of these notions are asymptotic; over a finite horizon the tool reports tight
constants and *trend* verdicts, never proofs.

Conventions for tight constants: the constraint family is ``lhs <= M * rhs``
over all admissible index tuples; pairs with lhs = rhs = 0 are vacuous and
skipped, lhs > 0 with rhs = 0 forces M = +inf, and a family with no binding
constraint at all reports 1.0 (any positive M satisfies it).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .chain import Chain
from .errors import (
    CardinalityMismatch,
    DimensionMismatch,
    EmptyOrFullSubset,
    InvalidParameter,
    SizeLimitExceeded,
)

# Exhaustive subset enumeration cap: 2^12 subsets is still desk-scale.
S_MAX = 12

DIVERGENT = "divergent-trend"
BOUNDED = "bounded-trend"
INCONCLUSIVE = "inconclusive"

_CHUNK = 4096


@dataclass(frozen=True)
class TrendPolicy:
    """Finite-horizon divergence heuristic for non-decreasing partial sums.

    Classifies divergent-trend when the average increment over the last
    W = window_fraction * horizon steps exceeds theta_div, bounded-trend when
    the total increment over that window is below theta_bound, otherwise
    inconclusive.
    """

    window_fraction: float = 0.25
    theta_div: float = 1e-8
    theta_bound: float = 1e-6

    def window(self, n: int) -> int:
        return max(1, min(n, int(n * self.window_fraction)))

    def classify(self, partial_sums) -> str:
        ps = np.asarray(partial_sums, dtype=float)
        if ps.size == 0:
            return INCONCLUSIVE
        w = self.window(ps.size)
        base = ps[-1 - w] if w < ps.size else 0.0
        tail_total = float(ps[-1] - base)
        if tail_total / w > self.theta_div:
            return DIVERGENT
        if tail_total < self.theta_bound:
            return BOUNDED
        return INCONCLUSIVE


@dataclass(frozen=True)
class FlowSeries:
    """Cumulative cut-flow sums for one cut descriptor, with a trend verdict."""

    cut: dict
    partial_sums: np.ndarray
    verdict: str
    witness: tuple | None = None

    @property
    def total(self) -> float:
        return float(self.partial_sums[-1]) if self.partial_sums.size else 0.0

    def summary(self) -> dict:
        out = {"cut": self.cut, "total": self.total, "verdict": self.verdict,
               "steps": int(self.partial_sums.size)}
        if self.witness is not None:
            out["witness"] = [list(t) for t in self.witness]
        return out


@dataclass(frozen=True)
class PropertyReport:
    """Tight constants for one realized chain horizon, with verdicts."""

    horizon: int
    delta: float
    m_subsym: float
    m_typesym: float | None
    m_balanced: float | None
    verdicts: dict[str, str] = field(default_factory=dict)


def _iter_chunks(chain: Chain, horizon: int, chunk: int = _CHUNK):
    start = chain.start_index
    for base in range(0, horizon, chunk):
        hi = min(base + chunk, horizon)
        yield chain.stacked(start + base, start + hi)


def _check_horizon(horizon: int) -> None:
    if horizon < 1:
        raise InvalidParameter("horizon must be >= 1")


def _subset_masks(members, cardinality: int) -> np.ndarray:
    """0/1 indicator rows (one per subset) in combinations order."""
    members = list(members)
    combos = list(itertools.combinations(members, cardinality))
    masks = np.zeros((len(combos), max(members) + 1), dtype=float)
    for r, combo in enumerate(combos):
        masks[r, list(combo)] = 1.0
    return masks


def _tight_ratio(lhs: np.ndarray, rhs: np.ndarray, best: float) -> tuple[float, bool]:
    """Fold constraint lhs <= M rhs into a running tight maximum."""
    if np.any((lhs > 0) & (rhs == 0)):
        return np.inf, True
    mask = rhs > 0
    if not np.any(mask):
        return best, False
    return max(best, float((lhs[mask] / rhs[mask]).max())), True


# --------------------------------------------------------------------------- #
# tight constants


def self_confidence(chain: Chain, horizon: int) -> float:
    """Largest delta with a_ii(n) >= delta for all i and n < horizon."""
    _check_horizon(horizon)
    delta = np.inf
    for block in _iter_chunks(chain, horizon):
        diag = block.diagonal(axis1=1, axis2=2)
        delta = min(delta, float(diag.min()))
    return delta


def subsymmetry_constant(chain: Chain, horizon: int) -> float:
    """Tight minimum M with a_ij(n) <= M a_ji(n) wherever a_ij(n) > 0."""
    _check_horizon(horizon)
    best, bound = 0.0, False
    for block in _iter_chunks(chain, horizon):
        bt = block.transpose(0, 2, 1)
        pos = block > 0
        if np.any(pos & (bt == 0)):
            return np.inf
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(pos, block / bt, 0.0)
        best = max(best, float(ratios.max()))
        bound = bound or bool(pos.any())
    return best if bound else 1.0


def typesymmetry_constant(chain: Chain, horizon: int, s_max: int = S_MAX) -> float:
    """Tight minimum M over all proper nonempty cuts T of
    sum_{i in T, j not in T} a_ij(n) <= M sum_{i not in T, j in T} a_ij(n)."""
    _check_horizon(horizon)
    s = chain.size
    if s > s_max:
        raise SizeLimitExceeded(s, s_max)
    if s == 1:
        return 1.0
    masks = np.concatenate([_subset_masks(range(s), c) for c in range(1, s)])
    comp = 1.0 - masks
    best, bound = 0.0, False
    for block in _iter_chunks(chain, horizon):
        # out[n, t] = sum_{i in T_t, j not in T_t} a_ij(n); computed directly
        # (not via 1 - in) to avoid cancellation on near-saturated cuts.
        out = np.einsum("ti,nij,tj->nt", masks, block, comp, optimize=True)
        inn = np.einsum("ti,nij,tj->nt", comp, block, masks, optimize=True)
        best, b = _tight_ratio(out, inn, best)
        if np.isinf(best):
            return np.inf
        bound = bound or b
    return best if bound else 1.0


def balanced_asymmetry_constant(chain: Chain, horizon: int,
                                s_max: int = S_MAX) -> float:
    """Tight minimum M over ordered equal-cardinality pairs (S1, S2) of
    sum_{i in S1, j not in S2} a_ij(n) <= M sum_{i not in S1, j in S2} a_ij(n)."""
    _check_horizon(horizon)
    s = chain.size
    if s > s_max:
        raise SizeLimitExceeded(s, s_max)
    if s == 1:
        return 1.0
    mask_by_card = {c: _subset_masks(range(s), c) for c in range(1, s)}
    best, bound = 0.0, False
    for block in _iter_chunks(chain, horizon):
        for c, u in mask_by_card.items():
            v = 1.0 - u
            # lhs[n, a, b] = sum_{i in S_a} sum_{j not in S_b} a_ij(n)
            lhs = np.matmul(np.matmul(u, block), v.T)
            rhs = np.matmul(np.matmul(v, block), u.T)
            best, b = _tight_ratio(lhs, rhs, best)
            if np.isinf(best):
                return np.inf
            bound = bound or b
    return best if bound else 1.0


# --------------------------------------------------------------------------- #
# flow accumulators


def l1_distance(chain_a: Chain, chain_b: Chain, horizon: int,
                policy: TrendPolicy = TrendPolicy()) -> FlowSeries:
    """Cumulative max-norm differences sum_n max_ij |a_ij(n) - b_ij(n)|."""
    _check_horizon(horizon)
    if chain_a.size != chain_b.size:
        raise DimensionMismatch(
            f"chain sizes differ: {chain_a.size} vs {chain_b.size}"
        )
    terms = np.empty(horizon)
    for n in range(horizon):
        a = chain_a.array(chain_a.start_index + n)
        b = chain_b.array(chain_b.start_index + n)
        terms[n] = np.abs(a - b).max()
    ps = np.cumsum(terms)
    return FlowSeries({"kind": "l1-distance"}, ps, policy.classify(ps))


def _normalize_subset(chain: Chain, subset) -> tuple[int, ...]:
    t = tuple(sorted(int(i) for i in subset))
    s = chain.size
    if len(t) == 0 or len(t) >= s or len(set(t)) != len(t):
        raise EmptyOrFullSubset(
            f"subset {t} must be a proper nonempty subset of 0..{s - 1}"
        )
    if t[0] < 0 or t[-1] >= s:
        raise EmptyOrFullSubset(f"subset {t} out of range for s={s}")
    return t


def infinite_flow_series(chain: Chain, subset, horizon: int,
                         one_sided: bool = False,
                         policy: TrendPolicy = TrendPolicy()) -> FlowSeries:
    """Cut-flow partial sums for a fixed proper nonempty subset T.

    Two-sided form sums a_ij(n) + a_ji(n) over i in T, j not in T; the
    one-sided variant sums a_ij(n) over i not in T, j in T only.
    """
    _check_horizon(horizon)
    t = _normalize_subset(chain, subset)
    s = chain.size
    u = np.zeros(s)
    u[list(t)] = 1.0
    v = 1.0 - u
    terms = []
    for block in _iter_chunks(chain, horizon):
        inn = np.einsum("i,nij,j->n", v, block, u)
        if one_sided:
            terms.append(inn)
        else:
            out = np.einsum("i,nij,j->n", u, block, v)
            terms.append(out + inn)
    ps = np.cumsum(np.concatenate(terms))
    cut = {"kind": "fixed", "subset": list(t), "one_sided": one_sided}
    return FlowSeries(cut, ps, policy.classify(ps))


def absolute_flow_series(chain: Chain, subsets, horizon: int,
                         one_sided: bool = False,
                         policy: TrendPolicy = TrendPolicy()) -> FlowSeries:
    """Cross-flow partial sums along a given subset sequence T(0..horizon).

    The step-n term couples T(n+1) with T(n): two-sided it is
    sum_{i in T(n+1), j not in T(n)} a_ij(n) + sum_{i not in T(n+1), j in T(n)} a_ij(n);
    one-sided only the second sum is kept.
    """
    _check_horizon(horizon)
    seq = [_normalize_subset(chain, t) for t in subsets]
    if len(seq) < horizon + 1:
        raise InvalidParameter(
            f"need {horizon + 1} subsets for horizon {horizon}, got {len(seq)}"
        )
    cards = {len(t) for t in seq}
    if len(cards) != 1:
        raise CardinalityMismatch(f"subset cardinalities differ: {sorted(cards)}")
    s = chain.size
    masks = np.zeros((len(seq), s))
    for r, t in enumerate(seq):
        masks[r, list(t)] = 1.0
    terms = np.empty(horizon)
    for n in range(horizon):
        a = chain.array(chain.start_index + n)
        u_now, u_next = masks[n], masks[n + 1]
        inn = (1.0 - u_next) @ a @ u_now
        if one_sided:
            terms[n] = inn
        else:
            terms[n] = u_next @ a @ (1.0 - u_now) + inn
    ps = np.cumsum(terms)
    cut = {"kind": "sequence", "cardinality": len(seq[0]), "one_sided": one_sided}
    return FlowSeries(cut, ps, policy.classify(ps))


def absolute_flow_worst_case(chain: Chain, cardinality: int, horizon: int,
                             one_sided: bool = False,
                             restrict_to=None, s_max: int = S_MAX,
                             policy: TrendPolicy = TrendPolicy()) -> FlowSeries:
    """Minimum achievable cumulative cross-flow over all subset sequences.

    Makes the "for every sequence of subsets" quantifier checkable: a forward
    dynamic program whose state is the current subset returns, per step, the
    least cumulative sum any cardinality-c sequence can have accumulated, and
    the argmin sequence as witness.  ``restrict_to`` draws the subsets from a
    sub-population (an island) while flows are still counted against the full
    agent set.
    """
    _check_horizon(horizon)
    s = chain.size
    if s > s_max:
        raise SizeLimitExceeded(s, s_max)
    members = sorted(restrict_to) if restrict_to is not None else list(range(s))
    if not (1 <= cardinality <= len(members)):
        raise EmptyOrFullSubset(
            f"cardinality {cardinality} infeasible for {len(members)} members"
        )
    combos = list(itertools.combinations(members, cardinality))
    u = np.zeros((len(combos), s))
    for r, combo in enumerate(combos):
        u[r, list(combo)] = 1.0
    v = 1.0 - u

    dp = np.zeros(len(combos))
    parents = np.empty((horizon, len(combos)), dtype=np.int64)
    mins = np.empty(horizon)
    for n in range(horizon):
        a = chain.array(chain.start_index + n)
        cost = (v @ a) @ u.T              # cost[b, a] one-sided term
        if not one_sided:
            cost = cost + (u @ a) @ v.T   # adds sum_{i in T(n+1), j not in T(n)}
        total = dp[None, :] + cost
        parents[n] = np.argmin(total, axis=1)
        dp = total[np.arange(len(combos)), parents[n]]
        mins[n] = dp.min()

    # Recover the argmin subset sequence by walking parents backwards.
    idx = int(np.argmin(dp))
    path = [idx]
    for n in range(horizon - 1, -1, -1):
        idx = int(parents[n, path[-1]])
        path.append(idx)
    witness = tuple(combos[i] for i in reversed(path))
    cut = {"kind": "worst-case", "cardinality": cardinality,
           "one_sided": one_sided,
           "restricted_to": members if restrict_to is not None else None}
    return FlowSeries(cut, mins, policy.classify(mins), witness=witness)


# --------------------------------------------------------------------------- #


def property_report(chain: Chain, horizon: int, s_max: int = S_MAX) -> PropertyReport:
    """Compute all tight constants with holds/fails/inconclusive verdicts.

    Cut-based constants are skipped (verdict inconclusive) when s exceeds the
    exhaustive enumeration cap.
    """
    delta = self_confidence(chain, horizon)
    m_sub = subsymmetry_constant(chain, horizon)
    verdicts = {
        "self-confidence": "holds" if delta > 0 else "fails",
        "subsymmetry": "holds" if np.isfinite(m_sub) else "fails",
    }
    try:
        m_type = typesymmetry_constant(chain, horizon, s_max)
        verdicts["typesymmetry"] = "holds" if np.isfinite(m_type) else "fails"
    except SizeLimitExceeded:
        m_type = None
        verdicts["typesymmetry"] = INCONCLUSIVE
    try:
        m_bal = balanced_asymmetry_constant(chain, horizon, s_max)
        verdicts["balanced-asymmetry"] = "holds" if np.isfinite(m_bal) else "fails"
    except SizeLimitExceeded:
        m_bal = None
        verdicts["balanced-asymmetry"] = INCONCLUSIVE
    return PropertyReport(horizon, delta, m_sub, m_type, m_bal, verdicts)
