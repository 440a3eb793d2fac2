# isokernel/settings.py
"""Settings loaded from config/app.yaml with environment overrides."""
from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import yaml
from dotenv import load_dotenv

ROOT = Path(__file__).resolve().parents[1]  # repo root: isokernel/ -> parents[1]
APP_YAML = ROOT / "config" / "app.yaml"     # optional (defaults below match it)


@dataclass(frozen=True)
class Numerics:
    quadrature_order: int = 256
    eps: float = 1e-10
    theta_grid: int = 2048
    max_degree: int = 20000
    adaptive_run: int = 50
    stagnation_probe: int = 4000


@dataclass(frozen=True)
class Simulation:
    block_size: int = 4096
    workers: int = 1
    small_time: float = 1e-3


@dataclass(frozen=True)
class Testbed:
    zero_threshold: float = 1e-13
    identity_tol: float = 1e-12


@dataclass(frozen=True)
class Settings:
    numerics: Numerics = field(default_factory=Numerics)
    simulation: Simulation = field(default_factory=Simulation)
    testbed: Testbed = field(default_factory=Testbed)
    log_level: str = "INFO"
    models_dir: Path = ROOT / "models"
    tables_dir: Path = ROOT / "tables"
    seed: int | None = None

    def with_numerics(self, **overrides: Any) -> "Settings":
        """Copy with selected numerics replaced; None values are ignored."""
        clean = {k: v for k, v in overrides.items() if v is not None}
        if not clean:
            return self
        return replace(self, numerics=replace(self.numerics, **clean))


def _section(cfg: dict, name: str, cls):
    raw = cfg.get(name) or {}
    known = {f for f in cls.__dataclass_fields__}
    kwargs = {}
    for key, value in raw.items():
        if key not in known:
            continue
        kind = type(getattr(cls(), key))
        kwargs[key] = kind(value)
    return cls(**kwargs)


def load_settings(path: str | Path | None = None) -> Settings:
    """
    Read the YAML config, then overlay ISOKERNEL_* environment variables.
    A missing file yields the built-in defaults.
    """
    load_dotenv()
    cfg_path = Path(path or os.getenv("ISOKERNEL_CONFIG", str(APP_YAML)))
    cfg: dict = {}
    if cfg_path.exists():
        cfg = yaml.safe_load(cfg_path.read_text(encoding="utf-8")) or {}

    paths = cfg.get("paths") or {}
    settings = Settings(
        numerics=_section(cfg, "numerics", Numerics),
        simulation=_section(cfg, "simulation", Simulation),
        testbed=_section(cfg, "testbed", Testbed),
        log_level=str((cfg.get("logging") or {}).get("level", "INFO")),
        models_dir=ROOT / paths.get("models_dir", "models"),
        tables_dir=ROOT / paths.get("tables_dir", "tables"),
    )

    level = os.getenv("ISOKERNEL_LOG_LEVEL")
    if level:
        settings = replace(settings, log_level=level.upper())
    workers = os.getenv("ISOKERNEL_WORKERS")
    if workers:
        settings = replace(settings, simulation=replace(settings.simulation, workers=int(workers)))
    seed = os.getenv("ISOKERNEL_SEED")
    if seed:
        settings = replace(settings, seed=int(seed))
    return settings
