"""Line-oriented key = value configuration files.

Keys use dotted section prefixes (diffusion.dt = 0.1); '#' starts a
comment.  Unknown keys are hard errors so typos surface immediately.
"""

from __future__ import annotations

import dataclasses

from .diffusion import DiffusionParams
from .fracgrad import FracParams
from .homomorphic import HomomorphicParams
from .ncut import NcutParams
from .phantom import PhantomSpec
from .pipeline import PipelineParams


class ConfigError(ValueError):
    pass


def _parse_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _coerce(value: str, annot, key: str):
    if annot is bool:
        return _parse_bool(value)
    if annot is int:
        return int(value)
    if annot is float:
        return float(value)
    if annot is tuple:
        return tuple(float(part) for part in value.split(","))
    raise ConfigError(f"unsupported value type for key {key!r}")


def parse_kv_file(path) -> dict:
    entries = {}
    with open(path, "r") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if not key or not value:
                raise ConfigError(f"{path}:{lineno}: empty key or value")
            if key in entries:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            entries[key] = value
    return entries


_PIPELINE_SECTIONS = {
    "homomorphic": HomomorphicParams,
    "diffusion": DiffusionParams,
    "frac": FracParams,
    "ncut": NcutParams,
}

_TOGGLE_KEYS = {
    "pipeline.enable_homomorphic",
    "pipeline.enable_diffusion",
    "pipeline.enable_frac",
}


def _apply_section(cls, prefix: str, entries: dict):
    fields = {f.name: f.type for f in dataclasses.fields(cls)}
    overrides = {}
    for key in list(entries):
        if not key.startswith(prefix + "."):
            continue
        name = key[len(prefix) + 1 :]
        if name not in fields:
            raise ConfigError(f"unknown key {key!r}")
        annot = fields[name]
        if isinstance(annot, str):
            annot = {"int": int, "float": float, "bool": bool, "tuple": tuple}.get(
                annot.split("|")[0].strip(), None
            )
        overrides[name] = _coerce(entries.pop(key), annot, key)
    return cls(**overrides)


def load_pipeline_config(path) -> PipelineParams:
    entries = parse_kv_file(path)
    sections = {
        name: _apply_section(cls, name, entries)
        for name, cls in _PIPELINE_SECTIONS.items()
    }
    toggles = {}
    for key in list(entries):
        if key in _TOGGLE_KEYS:
            toggles[key.split(".", 1)[1]] = _parse_bool(entries.pop(key))
    crop = None
    if "pipeline.crop" in entries:
        parts = entries.pop("pipeline.crop").split(",")
        if len(parts) != 4:
            raise ConfigError("pipeline.crop needs X,Y,W,H")
        crop = tuple(int(part) for part in parts)
    if entries:
        raise ConfigError(f"unknown key {sorted(entries)[0]!r}")
    return PipelineParams(
        homomorphic=sections["homomorphic"],
        diffusion=sections["diffusion"],
        frac=sections["frac"],
        ncut=sections["ncut"],
        crop=crop,
        **toggles,
    )


def load_phantom_spec(path, seed=None) -> PhantomSpec:
    entries = parse_kv_file(path)
    spec = _apply_section(PhantomSpec, "phantom", entries)
    if entries:
        raise ConfigError(f"unknown key {sorted(entries)[0]!r}")
    if seed is not None:
        spec = dataclasses.replace(spec, seed=int(seed))
    return spec
