"""Consensus certificate for the generalized Cucker-Smale dynamics.

The pre-run certificate compares the initial velocity spread M_v against
(s / 3h) * integral of f over [M_x, infinity): if the strict inequality holds
and sup f < 1/s, velocity consensus and a bounded flock diameter are
guaranteed.  Because the certificate is a strict inequality, the improper
integral is *bounded*, never guessed: the power-law family gets analytic
values or analytic tail brackets, generic non-increasing kernels get adaptive
quadrature on a growing finite window plus a geometric decay model for the
tail.

The runtime monitor audits the contraction argument behind the certificate on
a recorded run: the per-step inequality z(n+1) <= (1 - s f(g(n))) z(n), the
rate floor a_ij(n) >= f(g(n)), and the position-gap bound diameter <= g(n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import IntegralEstimateUnreliable, InvalidParameter
from .models import CSRun, CSSpec, CSState, Kernel, pairwise_distances

# Monitor slack: the proof's inequalities are exact in real arithmetic, so
# anything beyond rounding noise indicates an implementation bug.
EPS_MONITOR = 1e-10

_REL_TOL = 1e-10


@dataclass(frozen=True)
class CSCertificateInput:
    spec: CSSpec
    state: CSState
    m_x: float
    m_v: float


def certificate_input(spec: CSSpec, state: CSState) -> CSCertificateInput:
    """Derive M_x / M_v (largest initial pairwise position/velocity distances)."""
    m_x = float(pairwise_distances(state.positions).max())
    m_v = float(pairwise_distances(state.velocities).max())
    return CSCertificateInput(spec, state, m_x, m_v)


@dataclass(frozen=True)
class IntegralBounds:
    lower: float
    upper: float
    method: str

    @property
    def width(self) -> float:
        return self.upper - self.lower


def _power_law_tail(K: float, sigma: float, beta: float, y: float) -> tuple[float, float]:
    """Bracket of integral_y^inf K/(sigma^2 + t^2)^beta dt for beta > 1/2, y > 0.

    Uses t^2 <= sigma^2 + t^2 <= t^2 (1 + (sigma/y)^2) on t >= y.
    """
    base = K * y ** (1.0 - 2.0 * beta) / (2.0 * beta - 1.0)
    lower = base * (1.0 + (sigma / y) ** 2) ** (-beta)
    return lower, base


def kernel_tail_integral(kernel: Kernel, lower_limit: float,
                         rel_tol: float = _REL_TOL,
                         max_doublings: int = 60) -> IntegralBounds:
    """Bounds for integral of the kernel over [lower_limit, infinity).

    Returns (inf, inf) for provably divergent power-law tails.  For generic
    kernels the window [lower_limit, Y] is integrated by adaptive quadrature
    and Y doubles until successive doubling segments decay geometrically,
    giving a controllable tail model; failing that the integral is reported
    with an infinite upper bound (a usable lower bound remains).
    """
    if lower_limit < 0:
        raise InvalidParameter(f"integral lower limit must be >= 0, got {lower_limit}")
    if not kernel.non_increasing:
        raise InvalidParameter("certificate integrals require a non-increasing kernel")

    def quad_segment(a, b):
        value, err = integrate.quad(lambda t: float(kernel(t)), a, b,
                                    limit=200, epsabs=0.0, epsrel=1e-12)
        return value, err

    if kernel.name == "power-law":
        K = kernel.params["K"]
        sigma = kernel.params["sigma"]
        beta = kernel.params["beta"]
        if beta <= 0.5:
            # integrand ~ K t^(-2 beta): the tail diverges for beta <= 1/2
            return IntegralBounds(math.inf, math.inf, "analytic-divergent")
        if beta == 1.0:
            exact = (K / sigma) * (math.pi / 2.0 - math.atan(lower_limit / sigma))
            return IntegralBounds(exact, exact, "analytic-arctan")
        y = max(2.0 * lower_limit, 2.0 * sigma, 1.0)
        finite, quad_err = quad_segment(lower_limit, y)
        for _ in range(max_doublings):
            tail_lo, tail_hi = _power_law_tail(K, sigma, beta, y)
            lo = finite - quad_err + tail_lo
            hi = finite + quad_err + tail_hi
            if hi - lo <= rel_tol * max(lo, 1e-300):
                return IntegralBounds(lo, hi, "quadrature+analytic-tail")
            segment, seg_err = quad_segment(y, 2.0 * y)
            finite += segment
            quad_err += seg_err
            y *= 2.0
        raise IntegralEstimateUnreliable(
            f"power-law tail bracket did not reach rel_tol={rel_tol} "
            f"after {max_doublings} doublings"
        )

    # Generic non-increasing kernel: growing window plus decay-model tail.
    y = max(2.0 * lower_limit, 1.0)
    total, total_err = quad_segment(lower_limit, y)
    prev_segment = None
    for _ in range(max_doublings):
        segment, seg_err = quad_segment(y, 2.0 * y)
        total += segment
        total_err += seg_err
        if prev_segment is not None and prev_segment > 0:
            ratio = segment / prev_segment
            if ratio < 0.9:
                # remaining tail under the geometric decay model
                tail_hi = segment * ratio / (1.0 - ratio)
                lo = total - total_err
                hi = total + total_err + tail_hi
                if tail_hi <= rel_tol * max(lo, 1e-300) or hi - lo <= rel_tol * max(lo, 1e-300):
                    return IntegralBounds(lo, hi, "quadrature+decay-model")
        prev_segment = segment
        y *= 2.0
    # No controlled tail: keep the honest lower bound, unknown above.
    return IntegralBounds(total - total_err, math.inf, "quadrature-lower-only")


@dataclass(frozen=True)
class CertificateResult:
    certified: bool
    margin: float
    rhs: float
    rhs_lower: float
    rhs_upper: float
    f_bound_ok: bool
    method: str
    m_x: float
    m_v: float
    detail: dict


def certificate_check(inp: CSCertificateInput, rel_tol: float = _REL_TOL,
                      max_doublings: int = 60) -> CertificateResult:
    """Pre-run consensus certificate M_v < (s/3h) * integral_{M_x}^inf f(y) dy.

    Certification additionally requires sup f < 1/s (for a non-increasing f
    the supremum is f(0)).  The decision uses the certified *lower* bound of
    the right-hand side; on a genuinely undecidable bracket the estimate is
    reported as unreliable rather than rounded in either direction.
    """
    spec, s = inp.spec, inp.state.size
    if not spec.kernel.non_increasing:
        raise InvalidParameter("certificate requires a non-increasing kernel")
    sup_f = float(spec.kernel(0.0))
    f_bound_ok = sup_f < 1.0 / s

    bounds = kernel_tail_integral(spec.kernel, inp.m_x, rel_tol, max_doublings)
    factor = s / (3.0 * spec.h)
    rhs_lower = factor * bounds.lower
    rhs_upper = factor * bounds.upper

    certified = bool(f_bound_ok and inp.m_v < rhs_lower)
    if f_bound_ok and not certified and inp.m_v < rhs_upper:
        if math.isinf(rhs_upper):
            raise IntegralEstimateUnreliable(
                "kernel tail could not be bounded above and the finite-window "
                "lower bound does not already certify"
            )
        # m_v sits inside a tight bracket: strict inequality unverifiable
        # at the requested precision, so the check conservatively fails.
    rhs = rhs_lower if math.isinf(rhs_upper) else 0.5 * (rhs_lower + rhs_upper)
    margin = (rhs_lower if certified else rhs_upper) - inp.m_v

    detail = {
        "s": s,
        "h": spec.h,
        "sup_f": sup_f,
        "integral_lower": bounds.lower,
        "integral_upper": bounds.upper,
        # proof-form bookkeeping: 3 M_v < (s/h) * integral
        "proof_form_lhs": 3.0 * inp.m_v,
        "proof_form_rhs": (s / spec.h) * bounds.lower,
    }
    return CertificateResult(
        certified=certified,
        margin=float(margin),
        rhs=float(rhs),
        rhs_lower=float(rhs_lower),
        rhs_upper=float(rhs_upper),
        f_bound_ok=f_bound_ok,
        method=bounds.method,
        m_x=inp.m_x,
        m_v=inp.m_v,
        detail=detail,
    )


@dataclass(frozen=True)
class CorollaryResult:
    certified: bool
    branch: int
    threshold: float
    margin: float
    hypothesis_ok: bool


def corollary_check(K: float, sigma: float, beta: float, s: int, h: float,
                    m_x: float, m_v: float) -> CorollaryResult:
    """Closed-form certificate for the power-law kernel.

    Branch 1 (beta <= 1/2): certified outright.  Branch 2 (beta > 1/2):
    certified iff M_v < s K / (3 h (2 beta - 1) (M_x + sigma)^(2 beta - 1)).
    Both branches require the kernel bound K / sigma^(2 beta) < 1/s.
    """
    if not (K > 0 and sigma > 0 and beta >= 0 and h > 0 and s >= 1
            and m_x >= 0 and m_v >= 0):
        raise InvalidParameter(
            "corollary_check needs K, sigma, h > 0, beta >= 0, s >= 1, "
            "M_x, M_v >= 0"
        )
    hypothesis_ok = K / sigma ** (2.0 * beta) < 1.0 / s
    if beta <= 0.5:
        threshold = math.inf
        certified = hypothesis_ok
        margin = math.inf if certified else -math.inf
        branch = 1
    else:
        threshold = s * K / (3.0 * h * (2.0 * beta - 1.0)
                             * (m_x + sigma) ** (2.0 * beta - 1.0))
        certified = hypothesis_ok and m_v < threshold
        margin = threshold - m_v
        branch = 2
    return CorollaryResult(bool(certified), branch, float(threshold),
                           float(margin), bool(hypothesis_ok))


# --------------------------------------------------------------------------- #
# runtime contraction monitor


@dataclass(frozen=True)
class ContractionTrace:
    """Audited contraction quantities for one recorded run.

    z(n) sums, per velocity component, the gap between the largest and the
    smallest agent value; g(n) = M_x + h * sum_{m<n} z(m) dominates every
    pairwise position distance.  Violation lists hold step indices where a
    proof inequality failed beyond the numeric slack.
    """

    z_series: np.ndarray
    g_series: np.ndarray
    sorted_components: np.ndarray
    step_bound_violations: tuple[int, ...]
    rate_bound_violations: tuple[tuple[int, int, int], ...]
    gap_bound_violations: tuple[int, ...]
    max_gap_excess: float
    eps: float

    @property
    def clean(self) -> bool:
        return not (self.step_bound_violations or self.rate_bound_violations
                    or self.gap_bound_violations)


def contraction_monitor(run: CSRun, eps: float = EPS_MONITOR) -> ContractionTrace:
    """Check the proof inequalities on every step of a recorded run.

    Violations are findings, not errors; a certified scenario must produce a
    clean trace.
    """
    if run.velocities is None or run.matrices is None or run.positions is None:
        raise InvalidParameter("monitor needs a fully recorded run (record=True)")
    kernel = run.spec.kernel
    if not kernel.non_increasing:
        raise InvalidParameter("monitor requires a non-increasing kernel")

    velocities = run.velocities
    n_steps = run.steps
    s = velocities.shape[1]
    sorted_components = np.sort(velocities, axis=1)
    z = (sorted_components[:, -1, :] - sorted_components[:, 0, :]).sum(axis=1)

    g = np.empty(n_steps + 1)
    g[0] = run.m_x
    g[1:] = run.m_x + run.spec.h * np.cumsum(z[:-1])
    f_g = np.asarray(kernel(g), dtype=float)

    contraction = (1.0 - s * f_g[:-1]) * z[:-1]
    step_viol = np.flatnonzero(z[1:] > contraction + eps)

    rate_viol = []
    off_mask = ~np.eye(s, dtype=bool)
    for n in range(n_steps):
        floor = f_g[n] - eps
        bad = (run.matrices[n] < floor) & off_mask
        if bad.any():
            for i, j in np.argwhere(bad):
                rate_viol.append((int(n), int(i), int(j)))

    diameters = np.array([pairwise_distances(p).max() for p in run.positions])
    excess = diameters - g
    gap_viol = np.flatnonzero(excess > eps)

    return ContractionTrace(
        z_series=z,
        g_series=g,
        sorted_components=sorted_components,
        step_bound_violations=tuple(int(i) for i in step_viol),
        rate_bound_violations=tuple(rate_viol),
        gap_bound_violations=tuple(int(i) for i in gap_viol),
        max_gap_excess=float(excess.max()),
        eps=eps,
    )
