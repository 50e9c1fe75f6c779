"""Run configuration: INI file, environment overrides and command-line flags.

Precedence is flag > environment variable > file > default.  Every key may
be overridden by ``POLICY_EMBED_<KEY>`` (upper case), e.g.
``POLICY_EMBED_B_S=20``.  Keys live in the ``[run]`` section of the file.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

ENV_PREFIX = "POLICY_EMBED_"
SECTION = "run"
ENVIRONMENTS = ("pendulum", "cmc", "turntable", "chain", "random")
BASES = ("dft", "haar", "db4", "svd", "gmm")
# (bins per state coordinate, action bins) when the file leaves them unset
ENV_BINS = {"pendulum": (35, 15), "cmc": (35, 10), "turntable": (1, 100)}


class ConfigError(ValueError):
    """Invalid or inconsistent configuration (exit code 1)."""


def parse_int_list(text: str) -> tuple:
    """``"1,2,5"`` or ranges such as ``"0-9"``."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return tuple(out)


def _parse_bool(text) -> bool:
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    env: str = "pendulum"
    sigma: float = 0.3
    b_s: Optional[int] = None
    b_a: Optional[int] = None
    basis: str = "dft"
    k: tuple = (10,)
    n_trajectories: int = 100
    max_steps: Optional[int] = None
    seeds: tuple = (0,)
    binning: str = "quantile"
    jitter: bool = True
    gamma: float = 0.9
    delta: float = 0.1
    threshold: float = 0.0
    n_mdps: int = 200
    chain_states: tuple = (5, 10, 20, 50)
    alpha: float = 0.7
    mle_samples: int = 100
    lattice: Optional[str] = None
    visitation: Optional[str] = None
    out: str = "out"

    def validate(self) -> "ExperimentConfig":
        if self.env not in ENVIRONMENTS:
            raise ConfigError(f"env must be one of {ENVIRONMENTS}, got {self.env!r}")
        if self.basis not in BASES:
            raise ConfigError(f"basis must be one of {BASES}, got {self.basis!r}")
        if self.binning not in ("quantile", "uniform"):
            raise ConfigError(f"binning must be 'quantile' or 'uniform', got {self.binning!r}")
        for name in ("b_s", "b_a", "n_trajectories", "n_mdps", "mle_samples"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ConfigError(f"{name} must be positive")
        if self.max_steps is not None and self.max_steps < 1:
            raise ConfigError("max_steps must be positive")
        if not self.seeds:
            raise ConfigError("seeds must not be empty")
        if any(s < 0 for s in self.seeds):
            raise ConfigError("seeds must be nonnegative")
        if not self.k or any(k < 1 for k in self.k):
            raise ConfigError("k must list positive integers")
        if not self.chain_states or any(n < 2 for n in self.chain_states):
            raise ConfigError("chain_states must list integers >= 2")
        if self.sigma < 0:
            raise ConfigError("sigma must be nonnegative")
        if not 0 <= self.gamma < 1:
            raise ConfigError("gamma must lie in [0, 1)")
        if not 0 < self.delta < 0.5:
            raise ConfigError("delta must lie in (0, 0.5)")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        for name in ("lattice", "visitation"):
            path = getattr(self, name)
            if path is not None and not Path(path).is_file():
                raise ConfigError(f"{name} file not found: {path}")
        return self

    @property
    def state_bins(self) -> int:
        """Bins per state coordinate; the turntable has a single state."""
        if self.env == "turntable":
            return 1
        return self.b_s if self.b_s is not None else ENV_BINS.get(self.env, (35, 15))[0]

    @property
    def action_bins(self) -> int:
        return self.b_a if self.b_a is not None else ENV_BINS.get(self.env, (35, 15))[1]

    def digest(self) -> str:
        """Hash of every setting except the output directory."""
        payload = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "out"}
        text = json.dumps(payload, sort_keys=True, default=list)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


_PARSERS = {
    "env": str.lower,
    "basis": str.lower,
    "binning": str.lower,
    "sigma": float,
    "gamma": float,
    "delta": float,
    "threshold": float,
    "alpha": float,
    "b_s": lambda v: None if str(v).strip().lower() in ("", "none") else int(v),
    "b_a": lambda v: None if str(v).strip().lower() in ("", "none") else int(v),
    "n_trajectories": int,
    "n_mdps": int,
    "mle_samples": int,
    "max_steps": lambda v: None if str(v).strip().lower() in ("", "none") else int(v),
    "k": parse_int_list,
    "seeds": parse_int_list,
    "chain_states": parse_int_list,
    "jitter": _parse_bool,
    "lattice": lambda v: str(v) or None,
    "visitation": lambda v: str(v) or None,
    "out": str,
}


def _coerce(key: str, value, origin: str):
    try:
        return _PARSERS[key](value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{origin}: bad value for {key!r}: {value!r} ({exc})") from None


def load_config(path: Optional[str] = None, overrides: Optional[dict] = None, environ=None) -> ExperimentConfig:
    """Resolve the configuration from defaults, file, environment and flags."""
    environ = os.environ if environ is None else environ
    values = {}
    if path is not None:
        parser = configparser.ConfigParser()
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        if parser.sections() and SECTION not in parser:
            raise ConfigError(f"{path}: missing [{SECTION}] section")
        if SECTION in parser:
            for key, raw in parser[SECTION].items():
                if key not in _PARSERS:
                    raise ConfigError(f"{path}: unknown key {key!r}")
                values[key] = _coerce(key, raw, path)
    for key in _PARSERS:
        name = ENV_PREFIX + key.upper()
        if name in environ:
            values[key] = _coerce(key, environ[name], name)
    for key, raw in (overrides or {}).items():
        if raw is not None:
            values[key] = _coerce(key, raw, f"--{key}") if isinstance(raw, str) else raw
    try:
        cfg = ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return cfg.validate()


def replace(cfg: ExperimentConfig, **changes) -> ExperimentConfig:
    return dataclasses.replace(cfg, **changes).validate()
