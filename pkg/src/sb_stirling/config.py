"""Run configuration: defaults, optional JSON file, environment, command-line flags."""

import json
import logging
import os
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

from dotenv import load_dotenv

from .dyadic import DEFAULT_PREC, ESCALATION_CAP
from .errors import ConfigError
from .zeros import ZeroLimits

logger = logging.getLogger("sb_stirling.config")

WORKERS_ENV = "SB_STIRLING_WORKERS"
CACHE_DIR_ENV = "SB_STIRLING_CACHE_DIR"


@dataclass(slots=True)
class RunConfig:
    prec: int = DEFAULT_PREC
    cap: int = ESCALATION_CAP
    depth: int = 48
    max_log_modulus: int = 12
    sample_log: int = 5
    d_max: int = 6
    certify_span: int = 10
    workers: int = 1
    cache_dir: Optional[str] = None
    atlas: Optional[str] = None
    report: Optional[str] = None
    golden: str = "all"
    seed: int = 0

    def validate(self) -> "RunConfig":
        """Raise ConfigError unless prec <= cap, depth <= cap and counts are positive."""
        if self.prec < 1:
            raise ConfigError(f"prec must be positive, got {self.prec}")
        if self.cap < self.prec:
            raise ConfigError(f"cap ({self.cap}) must be at least the default precision ({self.prec})")
        if not 1 <= self.depth <= self.cap:
            raise ConfigError(f"depth ({self.depth}) must lie in [1, cap={self.cap}]")
        if self.workers < 1:
            raise ConfigError(f"workers must be at least 1, got {self.workers}")
        if self.max_log_modulus < 0 or self.sample_log < 0 or self.d_max < 0 or self.certify_span < 0:
            raise ConfigError("search limits must be non-negative")
        return self

    def limits(self) -> ZeroLimits:
        return ZeroLimits(
            start_prec=self.prec,
            cap=self.cap,
            depth=self.depth,
            max_log_modulus=self.max_log_modulus,
            sample_log=self.sample_log,
            d_max=self.d_max,
            certify_span=self.certify_span,
        )

    def updated(self, values: Mapping[str, Any]) -> "RunConfig":
        """Copy with the non-None entries of ``values`` applied; keys may use dashes."""
        known = {f.name for f in fields(self)}
        data = asdict(self)
        for key, value in values.items():
            name = key.replace("-", "_")
            if name not in known:
                raise ConfigError(f"Unknown configuration key '{key}'")
            if value is not None:
                data[name] = value
        return RunConfig(**data)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    try:
        with Path(path).open(encoding="utf-8") as f:
            data = json.load(f)
    except OSError as e:
        raise ConfigError(f"Cannot read config file {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"Malformed config file {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must hold a JSON object")
    return data


def env_overrides() -> Dict[str, Any]:
    """Worker count and cache directory from the environment (after load_dotenv)."""
    load_dotenv()
    values: Dict[str, Any] = {}
    workers = os.getenv(WORKERS_ENV)
    if workers:
        try:
            values["workers"] = int(workers)
        except ValueError as e:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got '{workers}'") from e
    cache_dir = os.getenv(CACHE_DIR_ENV)
    if cache_dir:
        values["cache_dir"] = cache_dir
    return values


def resolve_config(config_file: Optional[Union[str, Path]] = None, flags: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """Defaults, then the config file, then the environment, then flags.

    Raises:
        ConfigError: unreadable file, unknown key or a violated invariant
    """
    config = RunConfig()
    if config_file:
        config = config.updated(load_config_file(config_file))
        logger.debug(f"Loaded config file {config_file}")
    config = config.updated(env_overrides())
    if flags:
        config = config.updated(flags)
    return config.validate()
