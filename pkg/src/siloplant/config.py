"""Configuration loading and validation.

The config file is one JSON document with four sections: ``plant`` (one entry
per silo plus the global supply/drain parameters), ``cycle`` (scan period and
pacing), ``recipes`` (per-recipe setpoints and durations) and ``log``.  The
schema shipped in ``data/plant_config.schema.json`` rejects unknown keys;
semantic rules (threshold ordering, rate positivity, cooling stability) are
enforced on top of it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema

from .errors import ConfigError
from .plant import Plant, SiloSpec

DEFAULT_PERIOD_MS = 500.0


def _load_schema() -> dict:
    text = resources.files("siloplant.data").joinpath("plant_config.schema.json").read_text()
    return json.loads(text)


@dataclass(frozen=True)
class CycleSettings:
    period_ms: float = DEFAULT_PERIOD_MS
    time_scale: float = 0.0        # 0 = headless, 1 = real time, n = n-times faster
    max_cycles: int | None = None

    @property
    def period_s(self) -> float:
        return self.period_ms / 1000.0


@dataclass(frozen=True)
class RecipeSettings:
    setpoint: float
    mix_duration: float
    dwell_s1: float = 10.0


@dataclass(frozen=True)
class LogSettings:
    path: str | None = None
    rotate_bytes: int = 50 * 1024 * 1024


@dataclass(frozen=True)
class AppConfig:
    plant: Plant
    cycle: CycleSettings
    recipes: dict[str, RecipeSettings]
    log: LogSettings
    raw: dict = field(repr=False, default_factory=dict)


def default_config_document() -> dict:
    text = resources.files("siloplant.data").joinpath("default_plant.json").read_text()
    return json.loads(text)


def load_config(source: str | Path | dict) -> AppConfig:
    """Build an :class:`AppConfig` from a path, JSON text, or parsed document."""
    if isinstance(source, dict):
        document = source
    else:
        path = Path(source)
        try:
            document = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    return parse_config(document)


def parse_config(document: dict) -> AppConfig:
    validator = jsonschema.Draft202012Validator(_load_schema())
    errors = sorted(validator.iter_errors(document), key=lambda e: list(e.absolute_path))
    if errors:
        first = errors[0]
        where = "/".join(str(p) for p in first.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {first.message}")

    plant_doc = document["plant"]
    specs = [SiloSpec(**entry) for entry in plant_doc["silos"]]
    plant = Plant(
        specs,
        supply_temp=plant_doc.get("supply_temp", 20.0),
        dry_level=plant_doc.get("dry_level", 1.0),
        mix_time_constant=plant_doc.get("mix_time_constant", 30.0),
    )

    cycle = CycleSettings(**document.get("cycle", {}))
    period_s = cycle.period_s
    for spec in specs:
        # Explicit Euler cooling is kept well inside its stability region.
        if period_s >= spec.cooling_time_constant / 10.0:
            raise ConfigError(
                f"scan period {period_s} s too coarse for silo {spec.id}: "
                f"must be < cooling_time_constant/10 = {spec.cooling_time_constant / 10.0} s"
            )

    recipes = {
        name: RecipeSettings(
            setpoint=entry.get("setpoint", 60.0),
            mix_duration=entry.get("mix_duration", 30.0),
            dwell_s1=entry.get("dwell_s1", 10.0),
        )
        for name, entry in document.get("recipes", {}).items()
    }

    log_doc = document.get("log", {})
    log = LogSettings(
        path=log_doc.get("path"),
        rotate_bytes=log_doc.get("rotate_bytes", LogSettings.rotate_bytes),
    )
    return AppConfig(plant=plant, cycle=cycle, recipes=recipes, log=log, raw=document)


def default_config() -> AppConfig:
    return parse_config(default_config_document())
