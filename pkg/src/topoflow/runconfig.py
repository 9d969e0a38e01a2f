"""Declarative run configuration: a flat, versioned JSON key-value file.

Unknown keys are rejected; CLI flags override file values. Defaults are the
standard setup: mode=diffeo, lr=0.1, sigma=0.1.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional, Union

from .losses import FAMILIES, LossSpec
from .optimizer import MODES, STOP_RULES, OptimConfig

CONFIG_VERSION = 1


@dataclass
class RunConfig:
    version: int = CONFIG_VERSION
    # optimizer
    mode: str = "diffeo"
    lr: float = 0.1
    sigma: float = 0.1
    subsample: Optional[int] = None
    epochs: int = 250
    stop_rule: str = "threshold"
    stop_eps: float = 0.0
    ema_decay: float = 0.9
    stop_delta: float = 3.0
    val_reps: Optional[int] = None
    val_every: int = 1
    seed: int = 0
    auto_radius: bool = True
    simplex_budget: Optional[int] = None
    # loss
    loss_family: str = "simplify"
    hom_dims: tuple = (1,)
    select_k: Union[int, str, None] = None   # None -> family default, "all", or k
    target_diagram: Optional[str] = None     # path, register only
    box_lo: Optional[tuple] = None
    box_hi: Optional[tuple] = None
    box_weight: float = 1.0
    # input: either a points file or a generator spec
    input: Optional[str] = None
    shape: Optional[str] = None
    n: Optional[int] = None
    noise_std: float = 0.0
    dim: Optional[int] = None
    # outputs
    output: str = "final_points.csv"
    flow_out: str = "flow.txt"
    trace_out: str = "trace.csv"


_FIELD_NAMES = {f.name for f in fields(RunConfig)}
_LIST_FIELDS = {"hom_dims", "box_lo", "box_hi"}


def load_config(path) -> RunConfig:
    """Parse and validate a config file; unknown keys are an error."""
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    for key in raw:
        if key not in _FIELD_NAMES:
            raise ValueError(f"{path}: unknown config key {key!r}")
    version = raw.get("version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ValueError(f"{path}: unsupported config version {version}")
    cfg = RunConfig()
    for key, value in raw.items():
        if key in _LIST_FIELDS and value is not None:
            value = tuple(value)
        setattr(cfg, key, value)
    validate_config(cfg)
    return cfg


def validate_config(cfg: RunConfig) -> None:
    if cfg.mode not in MODES:
        raise ValueError(f"invalid config value mode={cfg.mode!r}")
    if cfg.stop_rule not in STOP_RULES:
        raise ValueError(f"invalid config value stop_rule={cfg.stop_rule!r}")
    if cfg.loss_family not in FAMILIES:
        raise ValueError(f"invalid config value loss_family={cfg.loss_family!r}")
    if isinstance(cfg.select_k, str) and cfg.select_k != "all":
        raise ValueError("select_k must be an integer or 'all'")
    if (cfg.box_lo is None) != (cfg.box_hi is None):
        raise ValueError("box_lo and box_hi must be given together")
    if cfg.input is None and cfg.shape is None:
        raise ValueError("config needs either 'input' or a generator 'shape'")
    if cfg.shape is not None and cfg.n is None:
        raise ValueError("generator spec needs 'n'")


def resolve_top_k(cfg: RunConfig) -> Optional[int]:
    """Family default: augmentation targets the single most persistent point."""
    if cfg.select_k is None:
        return 1 if cfg.loss_family.startswith("augment") else None
    if cfg.select_k == "all":
        return None
    return int(cfg.select_k)


def to_loss_spec(cfg: RunConfig, target=None) -> LossSpec:
    box = None
    if cfg.box_lo is not None:
        box = (cfg.box_lo, cfg.box_hi)
    return LossSpec(family=cfg.loss_family,
                    hom_dims=tuple(int(p) for p in cfg.hom_dims),
                    top_k=resolve_top_k(cfg),
                    target=target,
                    box=box,
                    box_weight=cfg.box_weight)


def to_optim_config(cfg: RunConfig) -> OptimConfig:
    return OptimConfig(mode=cfg.mode, lr=cfg.lr, sigma=cfg.sigma,
                       subsample=cfg.subsample, epochs=cfg.epochs,
                       stop_rule=cfg.stop_rule, stop_eps=cfg.stop_eps,
                       ema_decay=cfg.ema_decay, stop_delta=cfg.stop_delta,
                       val_reps=cfg.val_reps, val_every=cfg.val_every,
                       seed=cfg.seed, auto_radius=cfg.auto_radius,
                       simplex_budget=cfg.simplex_budget)
