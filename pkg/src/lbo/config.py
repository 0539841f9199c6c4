"""YAML configuration files and command-line overrides -> SimConfig."""
from __future__ import annotations

from dataclasses import fields, replace
from pathlib import Path
from typing import Any, Optional

import yaml

from .evaluation import EvalConfig
from .harness import ConfigError, HandConfig, MountainConfig, SimConfig
from .learners import KStarParams
from .scenarios.mountain import PhysicsParams
from .scenarios.qlearning import QParams

EVAL_KEYS = {
    "upper": "upper_threshold",
    "upper_threshold": "upper_threshold",
    "lower": "lower_threshold",
    "lower_threshold": "lower_threshold",
    "unfamiliar_reference": "unfamiliar_reference",
    "unfamiliar_limit": "unfamiliar_limit",
}


def load_file(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror or exc}") from exc
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path} is not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a mapping at top level")
    return data


def _section(data: dict, name: str) -> dict:
    sec = data.get(name) or {}
    if not isinstance(sec, dict):
        raise ConfigError(f"config section {name!r} must be a mapping")
    return sec


def _build(cls, values: dict, section: str, aliases: Optional[dict] = None):
    names = {f.name for f in fields(cls)}
    kwargs = {}
    for key, val in values.items():
        key = (aliases or {}).get(key, key)
        if key not in names:
            raise ConfigError(f"unknown key {key!r} in config section {section!r}")
        kwargs[key] = val
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {section} settings: {exc}") from exc


def sim_config(data: Optional[dict] = None, **overrides: Any) -> SimConfig:
    """Merge file data with flag overrides (flags win; None means unset)."""
    data = dict(data or {})
    o = {k: v for k, v in overrides.items() if v is not None}

    ev = dict(_section(data, "eval"))
    for flag, key in (("upper", "upper_threshold"), ("lower", "lower_threshold"),
                      ("unfamiliar_reference", "unfamiliar_reference"), ("unfamiliar_limit", "unfamiliar_limit")):
        if flag in o:
            ev[key] = o[flag]
    ev = {EVAL_KEYS.get(k, k): v for k, v in ev.items()}
    if "unfamiliar_reference" not in ev and "lower_threshold" in ev:
        # keep the reference legal when only the lower threshold moves
        ev["unfamiliar_reference"] = min(0.0, ev["lower_threshold"] - 10.0)
    eval_cfg = _build(EvalConfig, ev, "eval")

    ks = dict(_section(data, "kstar"))
    if "blend" in o:
        ks["blend"] = o["blend"]
    kstar = _build(KStarParams, ks, "kstar")

    hs = dict(_section(data, "hand"))
    for key in ("setting", "steps", "experts"):
        if key in o:
            hs[key] = o[key]
    hand = _build(HandConfig, hs, "hand")

    ms = dict(_section(data, "mountain"))
    for key in ("agent", "attempts", "max_steps"):
        if key in o:
            ms[key] = o[key]
    physics = _build(PhysicsParams, _section(ms, "physics"), "mountain.physics")
    q_values = dict(_section(ms, "q"))
    if "bins" in q_values:
        q_values["bins"] = tuple(q_values["bins"])
    q = _build(QParams, q_values, "mountain.q")
    ms.pop("physics", None)
    ms.pop("q", None)
    mountain = replace(_build(MountainConfig, ms, "mountain"), physics=physics, q=q)

    seed = o.get("seed", data.get("seed", 0))
    out = o.get("out", data.get("out"))
    scenario = o.get("scenario", data.get("scenario", "hand"))
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError(f"seed must be an integer, got {seed!r}")
    cfg = SimConfig(scenario, hand, mountain, eval_cfg, kstar, seed, out)
    return cfg.validate()


def parse_values(text: str) -> list[float]:
    """'A..B', 'A..B:S' (inclusive, step S, default 1), 'a,b,c' or a single value."""
    text = str(text).strip()
    try:
        if ".." in text:
            span, _, step = text.partition(":")
            lo, hi = (float(x) for x in span.split(".."))
            step = float(step) if step else 1.0
            if step <= 0:
                raise ConfigError(f"range step must be positive in {text!r}")
            vals, k = [], 0
            while lo + k * step <= hi + 1e-9:
                vals.append(lo + k * step)
                k += 1
        else:
            vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse range {text!r}") from exc
    if not vals:
        raise ConfigError(f"range {text!r} is empty")
    return [int(v) if float(v).is_integer() else v for v in vals]
