"""Experiment configuration: parsing, validation and presets."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping

from ..errors import ConfigError

EXPERIMENTS = ("coherence_decay", "lightcone", "variance_crossover", "transport_exact", "verify_oracle", "custom")
SCHEDULE_MODES = ("spatial_only", "spacetime", "custom")
INITIAL_KINDS = ("centered_superposition", "single_excitation", "population_profile")


@dataclass
class ExperimentConfig:
    experiment: str
    num_cells: int = 512
    theta: float = 0.0
    steps: int = 0
    levels: list[int] = field(default_factory=lambda: [0])
    schedule_mode: str = "spatial_only"
    initial_state: dict[str, Any] = field(default_factory=lambda: {"kind": "centered_superposition"})
    seed: int = 0
    output_dir: str = "out"
    h_per_jump: int | None = None
    boundary: str = "periodic"

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


FIELDS = tuple(ExperimentConfig.__dataclass_fields__)

PRESETS: dict[str, dict[str, Any]] = {
    "coherence_decay": {
        "experiment": "coherence_decay",
        "num_cells": 512,
        "theta": math.pi / 4,
        "steps": 200,
        "levels": [0, 1, 2, 3, 4, 5, 6],
        "schedule_mode": "spatial_only",
        "initial_state": {"kind": "centered_superposition"},
        "boundary": "strict",
    },
    "lightcone": {
        "experiment": "lightcone",
        "num_cells": 512,
        "theta": 0.0,
        "steps": 200,
        "levels": [0, 2],
        "schedule_mode": "spatial_only",
        "initial_state": {"kind": "centered_superposition"},
        "boundary": "strict",
    },
    "lightcone_spacetime": {
        "experiment": "lightcone",
        "num_cells": 512,
        "theta": 0.0,
        "steps": 200,
        "levels": [0, 2],
        "schedule_mode": "spacetime",
        "initial_state": {"kind": "centered_superposition"},
        "boundary": "strict",
    },
    "variance_crossover": {
        "experiment": "variance_crossover",
        "num_cells": 1024,
        "theta": 0.2,
        "steps": 400,
        "levels": [0, 3],
        "schedule_mode": "spacetime",
        "initial_state": {"kind": "centered_superposition"},
        "boundary": "strict",
    },
    "transport_exact": {
        "experiment": "transport_exact",
        "num_cells": 256,
        "theta": 0.0,
        "steps": 96,
        "levels": [1, 2, 3],
        "schedule_mode": "spacetime",
        "initial_state": {"kind": "centered_superposition"},
        "boundary": "strict",
    },
    "verify_oracle": {
        "experiment": "verify_oracle",
        "num_cells": 4,
        "theta": 0.7,
        "steps": 8,
        "levels": [0, 1],
        "schedule_mode": "spatial_only",
    },
}


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _parse_site_key(key) -> tuple[int, int]:
    if isinstance(key, str):
        cell, subcell = (int(v) for v in key.split(","))
        return cell, subcell
    cell, subcell = key
    return int(cell), int(subcell)


def profile_weights(initial_state: Mapping[str, Any]) -> dict[tuple[int, int], float]:
    """Site weights of a ``population_profile`` initial state (keys ``"cell,subcell"``)."""
    return {_parse_site_key(k): float(v) for k, v in initial_state["weights"].items()}


def initial_support(initial_state: Mapping[str, Any], num_cells: int) -> tuple[int, int] | None:
    kind = initial_state.get("kind")
    if kind == "centered_superposition":
        return num_cells // 2, num_cells // 2
    if kind == "single_excitation":
        return int(initial_state["cell"]), int(initial_state["cell"])
    if kind == "population_profile":
        cells = [c for (c, _), w in profile_weights(initial_state).items() if w != 0]
        return (min(cells), max(cells)) if cells else None
    return None


def _check_initial_state(raw, num_cells, violations: list[str]) -> dict[str, Any] | None:
    if isinstance(raw, str):
        raw = {"kind": raw}
    if not isinstance(raw, Mapping):
        violations.append("initial_state: must be an object with a 'kind' field")
        return None
    state = dict(raw)
    kind = state.get("kind")
    if kind not in INITIAL_KINDS:
        violations.append(f"initial_state.kind: must be one of {INITIAL_KINDS}, got {kind!r}")
        return None
    if kind == "single_excitation":
        cell, subcell = state.get("cell"), state.get("subcell", 0)
        if not _is_int(cell) or not _is_int(subcell):
            violations.append("initial_state: single_excitation needs integer 'cell' and 'subcell'")
        elif _is_int(num_cells) and not (0 <= cell < num_cells and subcell in (0, 1)):
            violations.append(f"initial_state: site ({cell}, {subcell}) out of range")
        state["subcell"] = subcell
    elif kind == "population_profile":
        weights = state.get("weights")
        if not isinstance(weights, Mapping) or not weights:
            violations.append("initial_state: population_profile needs a nonempty 'weights' map")
            return None
        try:
            parsed = profile_weights(state)
        except (ValueError, TypeError):
            violations.append("initial_state.weights: keys must be 'cell,subcell'")
            return None
        if any(w < 0 for w in parsed.values()):
            violations.append("initial_state.weights: negative weight")
        if abs(sum(parsed.values()) - 1.0) > 1e-12:
            violations.append(f"initial_state.weights: sum to {sum(parsed.values())!r}, expected 1")
        if _is_int(num_cells) and any(not (0 <= c < num_cells and a in (0, 1)) for c, a in parsed):
            violations.append("initial_state.weights: site out of range")
    return state


def validate_config(raw: Mapping[str, Any]) -> ExperimentConfig:
    """Normalize a parsed config, filling defaults; raise ``ConfigError`` listing every violation."""
    violations: list[str] = []
    if not isinstance(raw, Mapping):
        raise ConfigError(["config must be a JSON object"])
    unknown = sorted(set(raw) - set(FIELDS))
    if unknown:
        violations.append(f"unknown fields: {', '.join(unknown)}")
    values = {k: v for k, v in raw.items() if k in FIELDS}
    if "experiment" not in values:
        violations.append("experiment: required")
    elif values["experiment"] not in EXPERIMENTS:
        violations.append(f"experiment: must be one of {EXPERIMENTS}, got {values['experiment']!r}")
    cfg = ExperimentConfig(experiment=values.pop("experiment", "custom"))
    for k, v in values.items():
        setattr(cfg, k, v)

    if not _is_int(cfg.num_cells) or cfg.num_cells < 2:
        violations.append(f"num_cells: must be an integer >= 2, got {cfg.num_cells!r}")
    if isinstance(cfg.theta, bool) or not isinstance(cfg.theta, (int, float)) or not math.isfinite(cfg.theta):
        violations.append(f"theta: must be a finite number, got {cfg.theta!r}")
    else:
        cfg.theta = float(cfg.theta)
    if not _is_int(cfg.steps) or cfg.steps < 0:
        violations.append(f"steps: must be a nonnegative integer, got {cfg.steps!r}")
    if not _is_int(cfg.seed):
        violations.append(f"seed: must be an integer, got {cfg.seed!r}")
    if not isinstance(cfg.output_dir, str) or not cfg.output_dir:
        violations.append("output_dir: must be a nonempty path string")
    if cfg.boundary not in ("periodic", "strict"):
        violations.append(f"boundary: must be 'periodic' or 'strict', got {cfg.boundary!r}")
    if cfg.schedule_mode not in SCHEDULE_MODES:
        violations.append(f"schedule_mode: must be one of {SCHEDULE_MODES}, got {cfg.schedule_mode!r}")

    levels_ok = (
        isinstance(cfg.levels, list) and cfg.levels and all(_is_int(l) and l >= 0 for l in cfg.levels)
    )
    if not levels_ok:
        violations.append(f"levels: must be a nonempty list of nonnegative integers, got {cfg.levels!r}")
    else:
        cfg.levels = sorted(set(cfg.levels))
        top = max(cfg.levels)
        if _is_int(cfg.num_cells) and cfg.num_cells % 2**top:
            violations.append(
                f"divisibility: num_cells={cfg.num_cells} is not divisible by 2^{top}={2**top}"
            )
        if cfg.h_per_jump is not None:
            if cfg.schedule_mode != "custom":
                violations.append("h_per_jump: only allowed with schedule_mode 'custom'")
            if not _is_int(cfg.h_per_jump) or cfg.h_per_jump < 1:
                violations.append(f"h_per_jump: must be a positive integer, got {cfg.h_per_jump!r}")
            else:
                for level in cfg.levels:
                    if cfg.h_per_jump > 2**level:
                        violations.append(
                            f"schedule: h={cfg.h_per_jump} exceeds 2^L={2**level} at level {level}"
                        )

    state = _check_initial_state(cfg.initial_state, cfg.num_cells, violations)
    if state is not None:
        cfg.initial_state = state
        support = initial_support(state, cfg.num_cells) if _is_int(cfg.num_cells) else None
        if cfg.boundary == "strict" and support and _is_int(cfg.steps) and _is_int(cfg.num_cells):
            lo, hi = support
            # the runtime guard fires before a step whose input touches cell 0 or N-1
            if lo - cfg.steps < 0 or hi + cfg.steps > cfg.num_cells - 1:
                violations.append(
                    f"boundary: {cfg.steps} steps from cells {lo}..{hi} reach the edge of a "
                    f"{cfg.num_cells}-cell lattice in strict mode"
                )
    if violations:
        raise ConfigError(violations)
    return cfg


def load_config(path) -> dict[str, Any]:
    return json.loads(Path(path).read_text())


def preset(name: str) -> dict[str, Any]:
    if name not in PRESETS:
        raise ConfigError([f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}"])
    return json.loads(json.dumps(PRESETS[name]))
