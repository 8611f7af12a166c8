"""
Experiment configuration files.

Configs are TOML documents::

    name = "example2"          # optional
    n_samples = 15000
    n_runs = 1000
    base_seed = 2
    share_feature_map_across_runs = false   # optional
    mse_window = 1500                       # optional, default n_samples // 10

    [model]
    kind = "quadratic"   # kernel_expansion | quadratic | chaotic_a | chaotic_b
    sigma_eta = 0.05     # any other field of the model dataclass

    [[filter]]
    algorithm = "rffklms"   # rffklms | qklms | rffrls
    sigma = 5.0
    mu = 1.0
    feature_dim = 300       # rffklms, rffrls
    # epsilon = 5.0         # qklms (squared-distance threshold)
    # reg_lambda = 1e-4     # rffrls
    # beta = 0.9995         # rffrls
    # label = "..."         # optional, unique per config

Unknown keys are errors.
"""
from __future__ import annotations

import dataclasses
from importlib import resources
from os import PathLike
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .datagen import model_from_dict
from .harness import ExperimentConfig, FilterConfig

_TOP_KEYS = {"name", "n_samples", "n_runs", "base_seed", "share_feature_map_across_runs",
             "mse_window", "model", "filter"}
_FILTER_KEYS = {f.name for f in dataclasses.fields(FilterConfig)}


class ConfigError(ValueError):
    pass


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        # the decoder message carries "(at line L, column C)"
        raise ConfigError(f"{source}: {exc}") from exc
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"{source}: unknown keys {sorted(unknown)}")
    for key in ("n_samples", "model", "filter"):
        if key not in doc:
            raise ConfigError(f"{source}: missing required key {key!r}")
    try:
        model = model_from_dict(doc["model"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{source}: [model]: {exc}") from exc
    filters = []
    for i, f in enumerate(doc["filter"]):
        bad = set(f) - _FILTER_KEYS
        if bad:
            raise ConfigError(f"{source}: [[filter]] #{i + 1}: unknown keys {sorted(bad)}")
        try:
            filters.append(FilterConfig(**f))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{source}: [[filter]] #{i + 1}: {exc}") from exc
    top = {k: v for k, v in doc.items() if k not in ("model", "filter")}
    top.setdefault("name", Path(source).stem)
    try:
        return ExperimentConfig(model=model, filters=tuple(filters), **top)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def load_config(path: str | PathLike) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path))


def preset_names() -> list[str]:
    files = resources.files("rffklms").joinpath("presets").iterdir()
    return sorted(p.name[:-5] for p in files if p.name.endswith(".toml"))


def load_preset(name: str) -> ExperimentConfig:
    if name not in preset_names():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    text = resources.files("rffklms").joinpath("presets", f"{name}.toml").read_text()
    return parse_config(text, f"{name}.toml")
