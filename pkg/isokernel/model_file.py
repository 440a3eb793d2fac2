# isokernel/model_file.py
"""
Model JSON:

    {"dimension": 3, "diffusion": 1.0,
     "levy_measure": {"atoms": [{"theta": 1.57, "mass": 1.0}],
                      "family": {"type": "none" | "uniform" | "power", "c": 1.0, "beta": 1.5}},
     "subordinator": {"type": "identity" | "stable" | "drift_cp", "alpha": 0.5, "b": 0.0,
                      "tau_atoms": [{"y": 1.0, "mass": 2.0}]},
     "numerics": {"quadrature_order": 256, "eps": 1e-10, "theta_grid": 2048}}

Errors name the offending field, e.g. "levy_measure.atoms[1].mass".
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

from .errors import DomainError, ModelFileError
from .settings import Numerics, Settings
from .special_fn import SphereGeometry
from .spectrum import BernsteinFunction, DensityFamily, LevyMeasureSpec, LevyModel


@dataclass(frozen=True)
class ModelFile:
    model: LevyModel
    psi: BernsteinFunction | None
    numerics: dict[str, Any] = field(default_factory=dict)
    raw: dict[str, Any] = field(default_factory=dict)
    name: str = "model"

    def canonical_json(self) -> str:
        return json.dumps(self.raw, sort_keys=True, separators=(",", ":"))

    @property
    def model_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()

    def settings(self, base: Settings) -> Settings:
        """Model numerics override config/env values."""
        return base.with_numerics(**self.numerics)


def _obj(value: Any, where: str) -> dict:
    if not isinstance(value, dict):
        raise ModelFileError(where, f"expected an object, got {type(value).__name__}")
    return value


def _list(value: Any, where: str) -> list:
    if not isinstance(value, list):
        raise ModelFileError(where, f"expected a list, got {type(value).__name__}")
    return value


def _number(obj: dict, key: str, where: str, default: float | None = None) -> float:
    path = f"{where}.{key}" if where else key
    if key not in obj:
        if default is None:
            raise ModelFileError(path, "missing required field")
        return default
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ModelFileError(path, f"expected a finite number, got {value!r}")
    return float(value)


def _pairs(items: list, where: str, keys: tuple[str, str]) -> tuple[tuple[float, float], ...]:
    out = []
    for i, item in enumerate(_list(items, where)):
        here = f"{where}[{i}]"
        item = _obj(item, here)
        out.append((_number(item, keys[0], here), _number(item, keys[1], here)))
    return tuple(out)


def _levy_measure(raw: Any) -> LevyMeasureSpec:
    where = "levy_measure"
    obj = _obj(raw, where)
    atoms = _pairs(obj.get("atoms", []), f"{where}.atoms", ("theta", "mass"))
    for i, (theta, mass) in enumerate(atoms):
        if not 0.0 < theta <= math.pi:
            raise ModelFileError(f"{where}.atoms[{i}].theta", f"must lie in (0, pi], got {theta}")
        if not mass > 0.0:
            raise ModelFileError(f"{where}.atoms[{i}].mass", f"must be > 0, got {mass}")
    fam = _obj(obj.get("family", {"type": "none"}), f"{where}.family")
    kind = fam.get("type", "none")
    if kind == "none":
        family = DensityFamily.none()
    elif kind == "uniform":
        family = DensityFamily.uniform(_number(fam, "c", f"{where}.family"))
    elif kind == "power":
        family = DensityFamily.power(_number(fam, "c", f"{where}.family"),
                                     _number(fam, "beta", f"{where}.family"))
    else:
        raise ModelFileError(f"{where}.family.type", f"expected none|uniform|power, got {kind!r}")
    return LevyMeasureSpec(atoms=atoms, family=family)


def _subordinator(raw: Any) -> BernsteinFunction | None:
    where = "subordinator"
    obj = _obj(raw, where)
    kind = obj.get("type")
    try:
        if kind == "identity":
            return BernsteinFunction.identity()
        if kind == "stable":
            return BernsteinFunction.stable(_number(obj, "alpha", where))
        if kind == "drift_cp":
            atoms = _pairs(obj.get("tau_atoms", []), f"{where}.tau_atoms", ("y", "mass"))
            return BernsteinFunction.drift_cp(_number(obj, "b", where, 0.0), atoms)
    except DomainError as exc:
        raise ModelFileError(where, str(exc)) from exc
    raise ModelFileError(f"{where}.type", f"expected identity|stable|drift_cp, got {kind!r}")


def _numerics(raw: Any) -> dict[str, Any]:
    obj = _obj(raw, "numerics")
    known = {f.name: f.type for f in fields(Numerics)}
    out: dict[str, Any] = {}
    for key, value in obj.items():
        if key not in known:
            raise ModelFileError(f"numerics.{key}", "unknown setting")
        number = _number(obj, key, "numerics")
        if known[key] in (int, "int"):
            if number != int(number) or number < 1:
                raise ModelFileError(f"numerics.{key}", f"expected a positive integer, got {value!r}")
            number = int(number)
        elif not number > 0.0:
            raise ModelFileError(f"numerics.{key}", f"must be > 0, got {value!r}")
        out[key] = number
    return out


def parse_model(raw: Any, name: str = "model") -> ModelFile:
    obj = _obj(raw, "<root>")
    dim = obj.get("dimension")
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 3:
        raise ModelFileError("dimension", f"expected an integer >= 3, got {dim!r}")
    a = _number(obj, "diffusion", "", 0.0)
    if a < 0.0:
        raise ModelFileError("diffusion", f"must be >= 0, got {a}")
    nu = _levy_measure(obj.get("levy_measure", {}))
    psi = _subordinator(obj["subordinator"]) if obj.get("subordinator") is not None else None
    numerics = _numerics(obj.get("numerics", {}))
    try:
        model = LevyModel(geom=SphereGeometry(dim), a=a, nu=nu)
    except DomainError as exc:
        raise ModelFileError("levy_measure", str(exc)) from exc
    return ModelFile(model=model, psi=psi, numerics=numerics, raw=obj, name=name)


def load_model_file(path: str | Path) -> ModelFile:
    p = Path(path)
    try:
        raw = json.loads(p.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ModelFileError(str(p), "file not found") from exc
    except json.JSONDecodeError as exc:
        raise ModelFileError(str(p), f"invalid JSON: {exc}") from exc
    return parse_model(raw, name=p.stem)
