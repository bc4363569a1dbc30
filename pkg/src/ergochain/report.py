"""Run orchestration and machine-readable reports.

A run realizes the scenario's model, executes each requested analysis on the
realized chain, and writes a JSON report plus plot-ready CSV trajectory data.
The report body (scenario echo, simulation summary, per-analysis results) is
serialized canonically and is byte-deterministic given the scenario and seed;
wall-clock timing lives outside the body.
"""

from __future__ import annotations

import dataclasses
import json
import math
import time
from pathlib import Path

import numpy as np

from . import limits
from .certificate import (
    certificate_check,
    certificate_input,
    contraction_monitor,
    corollary_check,
)
from .chain import Chain, coordinate_spread, trajectory
from .errors import ErgochainError
from .interaction import interaction_islands, write_edge_list
from .models import simulate_cs
from .properties import TrendPolicy, infinite_flow_series, property_report
from .scenario import RuntimeBundle, Scenario, build_runtime

# Trajectory CSV rows are thinned to roughly this many steps per run.
_CSV_MAX_STEPS = 20_000


def to_jsonable(obj):
    """Recursively convert results to JSON-safe values (inf/nan as strings)."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [to_jsonable(v) for v in items]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable(dataclasses.asdict(obj))
    if isinstance(obj, Path):
        return str(obj)
    return obj


def canonical_json(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, allow_nan=False)


@dataclasses.dataclass
class RunReport:
    scenario: dict
    simulation: dict
    analyses: dict
    timing: dict
    artifacts: dict

    def body(self) -> dict:
        return {
            "scenario": self.scenario,
            "simulation": self.simulation,
            "analyses": self.analyses,
        }

    def body_text(self) -> str:
        return canonical_json(self.body())

    def full_text(self) -> str:
        return canonical_json({
            "scenario": self.scenario,
            "simulation": self.simulation,
            "analyses": self.analyses,
            "artifacts": self.artifacts,
            "timing": self.timing,
        })

    @property
    def failed_analyses(self) -> list[str]:
        return [name for name, result in self.analyses.items()
                if isinstance(result, dict) and "error" in result]


def write_trajectory_csv(path, frames) -> None:
    """Delimited trajectory output with header n,agent,component,value.

    ``frames`` yields (n, agent, component, value) tuples.
    """
    with open(path, "w") as fh:
        fh.write("n,agent,component,value\n")
        for n, agent, component, value in frames:
            fh.write(f"{n},{agent},{component},{value!r}\n")


def _scalar_frames(states: np.ndarray, stride: int):
    for n in range(0, states.shape[0], stride):
        for agent in range(states.shape[1]):
            yield n, agent, "x", float(states[n, agent])


def _cs_frames(positions: np.ndarray, velocities: np.ndarray, stride: int):
    dim = positions.shape[2]
    for n in range(0, positions.shape[0], stride):
        for agent in range(positions.shape[1]):
            for r in range(dim):
                yield n, agent, f"x{r}", float(positions[n, agent, r])
            for r in range(dim):
                yield n, agent, f"v{r}", float(velocities[n, agent, r])


class _RunContext:
    """Realized model state shared by the analyses of one run."""

    def __init__(self, sc: Scenario, bundle: RuntimeBundle):
        self.sc = sc
        self.bundle = bundle
        self.policy = TrendPolicy(theta_div=sc.tolerances["theta_div"],
                                  theta_bound=sc.tolerances["theta_bound"])
        self.cs_run = None
        self.scalar_states = None
        if bundle.cs_spec is not None:
            self.cs_run = simulate_cs(bundle.cs_spec, bundle.cs_state0,
                                      bundle.horizon, record=True)
            self.chain = self.cs_run.chain()
        else:
            self.chain = bundle.chain
            if bundle.scalar_x0 is not None:
                states = trajectory(self.chain, bundle.scalar_x0, bundle.horizon)
                self.scalar_states = np.stack([st.values for st in states])
        self.horizon = bundle.horizon

    def simulation_summary(self) -> dict:
        out = {"model": self.sc.model, "s": self.bundle.s,
               "horizon": self.horizon, "info": self.bundle.model_info}
        if self.cs_run is not None:
            run = self.cs_run
            out.update({
                "m_x": run.m_x,
                "m_v": run.m_v,
                "final_velocity_spread": float(run.z_series[-1]),
                "max_position_diameter": float(run.diameter_series.max()),
                "steps": run.steps,
            })
        elif self.scalar_states is not None:
            steps = self.scalar_states
            out.update({
                "initial_spread": coordinate_spread(steps[0]),
                "final_spread": coordinate_spread(steps[-1]),
                "final_step_change": float(np.abs(steps[-1] - steps[-2]).max())
                if steps.shape[0] > 1 else 0.0,
            })
        return out


def _classify_summary_dict(summary: limits.ClassifySummary, include_limit=True) -> dict:
    per_k = {}
    for k, cls in summary.per_k.items():
        entry = {
            "verdict": cls.verdict,
            "stabilized": cls.stabilized,
            "max_row_gap": cls.max_row_gap,
            "max_leak": cls.max_leak,
            "islands": cls.island_partition.as_lists(),
            "residuals": list(cls.residuals),
        }
        if include_limit:
            entry["limit_matrix"] = cls.limit_matrix
        per_k[str(k)] = entry
    return {
        "verdict": summary.verdict,
        "islands": summary.island_partition.as_lists(),
        "per_start_index": per_k,
    }


def _theorem_dict(rep: limits.TheoremReport) -> dict:
    return {
        "theorem": rep.theorem,
        "hypotheses": rep.hypotheses,
        "flows": rep.flows,
        "predicted": rep.predicted,
        "observed": _classify_summary_dict(rep.observed, include_limit=False),
        "agreement": rep.agreement,
        "notes": rep.notes,
        "evidence_kind": "numeric evidence at finite horizon, not a proof",
    }


def _run_analysis(name: str, ctx: _RunContext, out_dir: Path | None,
                  artifacts: dict):
    sc, chain, horizon = ctx.sc, ctx.chain, ctx.horizon
    tol = sc.tolerances
    s_max = int(tol["s_max"])
    common = dict(tau_limit=tol["tau_limit"], tau_leak=tol["tau_leak"])

    if name == "properties":
        rep = property_report(chain, horizon, s_max=s_max)
        flows = []
        if chain.size > 1:
            for i in range(chain.size):
                for one_sided in (False, True):
                    series = infinite_flow_series(chain, (i,), horizon,
                                                  one_sided=one_sided,
                                                  policy=ctx.policy)
                    flows.append(series.summary())
        return {
            "horizon": rep.horizon,
            "delta": rep.delta,
            "m_subsym": rep.m_subsym,
            "m_typesym": rep.m_typesym,
            "m_balanced": rep.m_balanced,
            "verdicts": rep.verdicts,
            "singleton_cut_flows": flows,
        }

    if name == "interaction-graph":
        totals, digraph, partition = interaction_islands(chain, horizon, ctx.policy)
        if out_dir is not None:
            edge_path = out_dir / "digraph.edges"
            write_edge_list(digraph, edge_path)
            artifacts["digraph_edges"] = edge_path
        return {
            "totals": totals.totals,
            "edges": digraph.edge_list(),
            "islands": partition.as_lists(),
            "policy": {"theta_div": ctx.policy.theta_div,
                       "theta_bound": ctx.policy.theta_bound,
                       "window_fraction": ctx.policy.window_fraction,
                       "note": "trend policy is a finite-horizon stand-in for "
                               "divergence of int(i,j)"},
        }

    if name == "classify":
        summary = limits.classify_limit_multi(chain, horizon, **common)
        return _classify_summary_dict(summary)

    if name == "theorem1":
        rep = limits.theorem1_pipeline(chain, horizon, s_max=s_max,
                                       policy=ctx.policy, **common)
        return _theorem_dict(rep)

    if name == "theorem2":
        rep = limits.theorem2_pipeline(chain, horizon, s_max=s_max,
                                       policy=ctx.policy, **common)
        return _theorem_dict(rep)

    if name == "theorem3":
        rep = limits.theorem3_pipeline(chain, horizon, s_max=s_max, **common)
        return _theorem_dict(rep)

    if name == "cs-certificate":
        if ctx.cs_run is None:
            return {"skipped": "cs-certificate requires the cucker-smale model"}
        spec = ctx.bundle.cs_spec
        inp = certificate_input(spec, ctx.bundle.cs_state0)
        cert = certificate_check(inp)
        result = {
            "certified": cert.certified,
            "margin": cert.margin,
            "rhs": cert.rhs,
            "rhs_lower": cert.rhs_lower,
            "rhs_upper": cert.rhs_upper,
            "f_bound_ok": cert.f_bound_ok,
            "method": cert.method,
            "m_x": cert.m_x,
            "m_v": cert.m_v,
            "detail": cert.detail,
        }
        if spec.kernel.name == "power-law":
            p = spec.kernel.params
            cor = corollary_check(p["K"], p["sigma"], p["beta"],
                                  ctx.bundle.s, spec.h, cert.m_x, cert.m_v)
            result["corollary"] = {
                "certified": cor.certified,
                "branch": cor.branch,
                "threshold": cor.threshold,
                "margin": cor.margin,
                "hypothesis_ok": cor.hypothesis_ok,
                "consistent_with_integral": (not cor.certified) or cert.certified,
            }
        trace = contraction_monitor(ctx.cs_run, eps=tol["eps_monitor"])
        result["monitor"] = {
            "clean": trace.clean,
            "step_bound_violations": len(trace.step_bound_violations),
            "rate_bound_violations": len(trace.rate_bound_violations),
            "gap_bound_violations": len(trace.gap_bound_violations),
            "max_gap_excess": trace.max_gap_excess,
            "final_z": float(trace.z_series[-1]),
            "final_g": float(trace.g_series[-1]),
        }
        return result

    return {"skipped": f"unknown analysis {name!r}"}


def run_scenario(sc: Scenario, out_dir=None, plots: bool = False,
                 write_csv: bool = True) -> RunReport:
    """Execute a scenario: simulate, analyze, and write artifacts.

    Analysis errors are collected per analysis without aborting siblings.
    Deterministic given the scenario and seed (timing excluded from the body).
    """
    t_start = time.perf_counter()
    out_path = None
    if out_dir is not None:
        out_path = Path(out_dir)
        out_path.mkdir(parents=True, exist_ok=True)

    bundle = build_runtime(sc)
    ctx = _RunContext(sc, bundle)

    artifacts: dict = {}
    analyses: dict = {}
    timing: dict = {}
    for name in sc.analyses:
        t0 = time.perf_counter()
        try:
            analyses[name] = _run_analysis(name, ctx, out_path, artifacts)
        except ErgochainError as exc:
            analyses[name] = {"error": f"{type(exc).__name__}: {exc}"}
        timing[name] = time.perf_counter() - t0

    if out_path is not None and write_csv:
        csv_path = out_path / "trajectory.csv"
        if ctx.cs_run is not None and ctx.cs_run.positions is not None:
            stride = max(1, ctx.cs_run.steps // _CSV_MAX_STEPS)
            write_trajectory_csv(csv_path, _cs_frames(
                ctx.cs_run.positions, ctx.cs_run.velocities, stride))
            artifacts["trajectory_csv"] = csv_path
        elif ctx.scalar_states is not None:
            stride = max(1, (ctx.scalar_states.shape[0] - 1) // _CSV_MAX_STEPS)
            write_trajectory_csv(csv_path, _scalar_frames(ctx.scalar_states, stride))
            artifacts["trajectory_csv"] = csv_path

    report = RunReport(
        scenario=to_jsonable(sc.echo()),
        simulation=to_jsonable(ctx.simulation_summary()),
        analyses=to_jsonable(analyses),
        timing={},
        artifacts={},
    )

    if plots and out_path is not None:
        from . import figures
        fig_paths = figures.render_run_figures(ctx, report, out_path)
        artifacts["figures"] = fig_paths

    timing["total"] = time.perf_counter() - t_start
    report.timing = to_jsonable(timing)
    report.artifacts = to_jsonable(artifacts)

    if out_path is not None:
        (out_path / "report.json").write_text(report.full_text() + "\n")
        artifacts["report"] = out_path / "report.json"
    return report
