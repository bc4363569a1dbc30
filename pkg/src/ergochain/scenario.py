"""Scenario files: a JSON description of one model run and its analyses.

Top-level keys: name, model, horizon, seed, analyses, tolerances, one
model-parameter section keyed by the model name, and initial_states.  File
references are resolved relative to the scenario file.  Matrix-list files
hold one matrix per block (rows of whitespace-separated reals), blocks
separated by blank lines, in chain order n = 0, 1, 2, ...
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .chain import Chain, ROW_SUM_TOL, validate_matrix
from .errors import ErgochainError, ParseError, ValidationError
from .models import (
    CSSpec,
    CSState,
    FiniteRangeSpec,
    JLMSchedule,
    jlm_chain,
    power_law_kernel,
    finite_range_chain,
)

MODELS = ("jlm", "finite-range", "cucker-smale", "explicit-chain")
ANALYSES = ("properties", "interaction-graph", "classify",
            "theorem1", "theorem2", "theorem3", "cs-certificate")

DEFAULT_TOLERANCES = {
    "tau_row": 1e-12,
    "tau_limit": 1e-8,
    "tau_leak": 1e-8,
    "theta_div": 1e-8,
    "theta_bound": 1e-6,
    "eps_monitor": 1e-10,
    "s_max": 12,
}

_MODEL_SECTION = {
    "jlm": "jlm",
    "finite-range": "finite_range",
    "cucker-smale": "cucker_smale",
    "explicit-chain": "explicit_chain",
}


@dataclass
class Scenario:
    name: str
    model: str
    horizon: int
    seed: int
    analyses: tuple[str, ...]
    tolerances: dict
    model_params: dict
    initial_states: object
    base_dir: Path
    raw: dict = field(repr=False, default_factory=dict)

    def echo(self) -> dict:
        """Normalized scenario (defaults filled) for report bodies."""
        return {
            "name": self.name,
            "model": self.model,
            "horizon": self.horizon,
            "seed": self.seed,
            "analyses": list(self.analyses),
            "tolerances": dict(self.tolerances),
            _MODEL_SECTION[self.model]: self.model_params,
            "initial_states": self.initial_states,
        }


def parse_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(str(path), str(exc)) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}", exc.msg) from exc
    return load_scenario(data, base_dir=path.parent)


def load_scenario(data: dict, base_dir=".") -> Scenario:
    if not isinstance(data, dict):
        raise ValidationError("scenario", "top level must be a JSON object")
    model = data.get("model")
    if model not in MODELS:
        raise ValidationError("model", f"must be one of {MODELS}, got {model!r}")

    horizon = data.get("horizon", 1000)
    if not isinstance(horizon, int) or horizon < 1:
        raise ValidationError("horizon", "must be a positive integer")
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ValidationError("seed", "must be a nonnegative integer")

    analyses = tuple(data.get("analyses", []))
    for a in analyses:
        if a not in ANALYSES:
            raise ValidationError("analyses", f"unknown analysis {a!r}")

    tolerances = dict(DEFAULT_TOLERANCES)
    for key, value in data.get("tolerances", {}).items():
        if key not in DEFAULT_TOLERANCES:
            raise ValidationError("tolerances", f"unknown tolerance {key!r}")
        tolerances[key] = int(value) if key == "s_max" else float(value)

    section = _MODEL_SECTION[model]
    params = data.get(section)
    if params is None:
        raise ValidationError(section, f"model {model!r} needs a {section!r} section")

    scenario = Scenario(
        name=str(data.get("name", "scenario")),
        model=model,
        horizon=horizon,
        seed=seed,
        analyses=analyses,
        tolerances=tolerances,
        model_params=params,
        initial_states=data.get("initial_states"),
        base_dir=Path(base_dir),
        raw=data,
    )
    build_runtime(scenario)  # fail fast on inconsistent sections
    return scenario


# --------------------------------------------------------------------------- #
# file ingestion


def parse_matrix_file(path, tau_row: float = ROW_SUM_TOL) -> list:
    """Matrix-list format: blank-line-separated blocks of whitespace rows."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise ParseError(str(path), str(exc)) from exc
    matrices = []
    block: list[list[float]] = []
    block_start = 1
    for lineno, line in enumerate(lines + [""], start=1):
        stripped = line.strip()
        if not stripped:
            if block:
                try:
                    matrices.append(validate_matrix(block, tau_row))
                except ErgochainError as exc:
                    raise ParseError(f"{path}:{block_start}", str(exc)) from exc
                block = []
            continue
        if not block:
            block_start = lineno
        try:
            block.append([float(tok) for tok in stripped.split()])
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}", str(exc)) from exc
    if not matrices:
        raise ParseError(str(path), "no matrices found")
    return matrices


def _read_numeric_rows(path) -> list[list[float]]:
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise ParseError(str(path), str(exc)) from exc
    rows = []
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            rows.append([float(tok) for tok in stripped.split()])
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}", str(exc)) from exc
    return rows


# --------------------------------------------------------------------------- #
# runtime construction


@dataclass
class RuntimeBundle:
    """Everything run() needs: the chain to analyze plus model context."""

    s: int
    horizon: int
    chain: Chain | None = None
    scalar_x0: np.ndarray | None = None
    cs_spec: CSSpec | None = None
    cs_state0: CSState | None = None
    model_info: dict = field(default_factory=dict)


def _scalar_states(sc: Scenario) -> np.ndarray | None:
    states = sc.initial_states
    if states is None:
        return None
    if isinstance(states, dict) and "file" in states:
        rows = _read_numeric_rows(sc.base_dir / states["file"])
        flat = [v for row in rows for v in row]
        return np.array(flat, dtype=float)
    if isinstance(states, list):
        arr = np.array(states, dtype=float)
        if arr.ndim != 1:
            raise ValidationError("initial_states", "expected a flat list of reals")
        return arr
    raise ValidationError("initial_states", "expected a list or {'file': path}")


def _cs_states(sc: Scenario, dim: int) -> CSState:
    states = sc.initial_states
    if states is None:
        raise ValidationError("initial_states", "cucker-smale needs initial states")
    if isinstance(states, dict) and "file" in states:
        rows = _read_numeric_rows(sc.base_dir / states["file"])
        arr = np.array(rows, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2 * dim:
            raise ValidationError(
                "initial_states",
                f"state file rows must hold {2 * dim} numbers (position then velocity)",
            )
        return CSState(arr[:, :dim], arr[:, dim:])
    if isinstance(states, dict) and "positions" in states and "velocities" in states:
        return CSState(np.array(states["positions"], dtype=float),
                       np.array(states["velocities"], dtype=float))
    raise ValidationError(
        "initial_states",
        "expected {'positions': ..., 'velocities': ...} or {'file': path}",
    )


def _kernel_from(params: dict, field_name: str):
    kind = params.get("kind")
    if kind == "power-law":
        try:
            return power_law_kernel(params["K"], params["sigma"], params["beta"])
        except KeyError as exc:
            raise ValidationError(field_name, f"power-law kernel needs {exc}") from exc
    raise ValidationError(field_name, f"unknown kernel kind {kind!r}")


def build_runtime(sc: Scenario) -> RuntimeBundle:
    tau_row = sc.tolerances["tau_row"]

    if sc.model == "jlm":
        params = sc.model_params
        s = params.get("s")
        if not isinstance(s, int) or s < 1:
            raise ValidationError("jlm.s", "must be a positive integer")
        sched = params.get("schedule", {})
        kind = sched.get("kind")
        if kind == "complete":
            schedule = JLMSchedule.complete(s)
        elif kind == "empty":
            schedule = JLMSchedule.empty(s)
        elif kind == "random":
            schedule = JLMSchedule.random(
                s, float(sched.get("p", 0.5)),
                int(sched.get("seed", sc.seed)), sc.horizon,
            )
        elif kind == "periodic":
            schedule = JLMSchedule.periodic(s, sched.get("patterns", []))
        elif kind == "explicit":
            schedule = JLMSchedule.from_edges(s, sched.get("edges_per_step", []))
        else:
            raise ValidationError("jlm.schedule.kind",
                                  f"unknown schedule kind {kind!r}")
        if schedule.length is not None and schedule.length < sc.horizon:
            raise ValidationError(
                "horizon", f"schedule defines {schedule.length} steps "
                f"but horizon is {sc.horizon}"
            )
        x0 = _scalar_states(sc)
        if x0 is None:
            x0 = np.linspace(0.0, 1.0, s)
        elif x0.shape[0] != s:
            raise ValidationError(
                "initial_states", f"{x0.shape[0]} states for s={s} agents"
            )
        return RuntimeBundle(
            s=s, horizon=sc.horizon, chain=jlm_chain(schedule, sc.horizon),
            scalar_x0=x0, model_info={"schedule": schedule.description},
        )

    if sc.model == "finite-range":
        params = sc.model_params
        radius = params.get("radius")
        if radius is None:
            raise ValidationError("finite_range.radius", "required")
        kernel_cfg = params.get("kernel", {"kind": "krause"})
        if kernel_cfg.get("kind") == "krause":
            if isinstance(radius, list):
                from .models import krause_kernel
                spec = FiniteRangeSpec([krause_kernel(r) for r in radius], radius)
            else:
                spec = FiniteRangeSpec.krause(float(radius))
        else:
            kernel = _kernel_from(kernel_cfg, "finite_range.kernel")
            spec = FiniteRangeSpec(kernel, float(radius))
        x0 = _scalar_states(sc)
        if x0 is None:
            raise ValidationError("initial_states", "finite-range needs initial states")
        if spec.per_agent and len(spec.kernels) != x0.shape[0]:
            raise ValidationError(
                "finite_range.radius",
                f"{len(spec.kernels)} per-agent kernels for {x0.shape[0]} agents",
            )
        return RuntimeBundle(
            s=int(x0.shape[0]), horizon=sc.horizon,
            chain=finite_range_chain(spec, x0, sc.horizon),
            scalar_x0=x0, model_info={"radius": radius},
        )

    if sc.model == "cucker-smale":
        params = sc.model_params
        kernel = _kernel_from(params.get("kernel", {}), "cucker_smale.kernel")
        h = params.get("h")
        if not isinstance(h, (int, float)) or h <= 0:
            raise ValidationError("cucker_smale.h", "must be a positive number")
        dim = int(params.get("dim", 3))
        spec = CSSpec(kernel=kernel, h=float(h), dim=dim)
        state0 = _cs_states(sc, dim)
        return RuntimeBundle(
            s=state0.size, horizon=sc.horizon, cs_spec=spec, cs_state0=state0,
            model_info={"kernel": kernel.params, "h": float(h), "dim": dim},
        )

    # explicit-chain
    params = sc.model_params
    if "file" in params:
        matrices = parse_matrix_file(sc.base_dir / params["file"], tau_row)
    elif "matrices" in params:
        matrices = [validate_matrix(m, tau_row) for m in params["matrices"]]
    else:
        raise ValidationError("explicit_chain",
                              "needs a 'file' or inline 'matrices'")
    s = matrices[0].size
    horizon = min(sc.horizon, len(matrices))
    x0 = _scalar_states(sc)
    if x0 is not None and x0.shape[0] != s:
        raise ValidationError(
            "initial_states", f"{x0.shape[0]} states for s={s} agents"
        )
    return RuntimeBundle(
        s=s, horizon=horizon, chain=Chain.from_matrices(matrices, tau_row=tau_row),
        scalar_x0=x0, model_info={"matrices": len(matrices)},
    )
