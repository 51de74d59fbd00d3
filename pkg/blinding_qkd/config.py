"""Configuration loader and validator."""
import os
import logging
from typing import Dict, Mapping, Optional

import yaml
from pydantic import ValidationError

from blinding_qkd.errors import ConfigError
from blinding_qkd.models import AnalysisConfig

logger = logging.getLogger(__name__)

CONFIG_ENV_VAR = 'BLINDING_QKD_CONFIG'
CONFIG_KEYS = tuple(AnalysisConfig.model_fields)


def load_config(config_path: Optional[str] = None, use_env: bool = True) -> AnalysisConfig:
    """
    Load and validate configuration from a YAML or JSON file.

    Missing keys fall back to defaults; unknown keys are rejected.

    Args:
        config_path: Path to config file. If None, uses BLINDING_QKD_CONFIG
            env var (unless use_env is False), and built-in defaults when
            that is unset too.

    Returns:
        Validated AnalysisConfig object.

    Raises:
        ConfigError: If the file is missing, malformed or invalid.
    """
    if config_path is None and use_env:
        config_path = os.environ.get(CONFIG_ENV_VAR)
    if config_path is None:
        logger.info("No configuration file given, using built-in defaults")
        return AnalysisConfig()

    logger.info(f"Loading configuration from {config_path}")

    if not os.path.exists(config_path):
        raise ConfigError(f"Config file not found: {config_path}")

    with open(config_path, 'r') as f:
        try:
            data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigError(f"Config file is not valid YAML/JSON: {e}") from e

    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("Config file must contain a flat key-value mapping")

    try:
        config = AnalysisConfig(**data)
    except ValidationError as e:
        logger.error(f"Configuration validation failed: {e}")
        raise ConfigError(str(e)) from e

    logger.info("Configuration loaded and validated successfully")
    return config


def parse_overrides(pairs) -> Dict[str, object]:
    """
    Parse repeated KEY=VALUE strings into typed values.

    Values are parsed as YAML scalars so `mu=0.5` yields a float and
    `cycle_count=400` an int.
    """
    overrides: Dict[str, object] = {}
    for pair in pairs or []:
        if '=' not in pair:
            raise ConfigError(f"Override must look like KEY=VALUE: {pair!r}")
        key, raw = pair.split('=', 1)
        key = key.strip()
        try:
            overrides[key] = yaml.safe_load(raw)
        except yaml.YAMLError as e:
            raise ConfigError(f"Cannot parse override value for {key}: {e}") from e
    return overrides


def apply_overrides(config: AnalysisConfig, overrides: Mapping[str, object]) -> AnalysisConfig:
    """Return a re-validated copy of `config` with `overrides` applied."""
    unknown = sorted(set(overrides) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"Unknown configuration key(s): {', '.join(unknown)}")
    if not overrides:
        return config

    data = config.model_dump()
    data.update(overrides)
    try:
        return AnalysisConfig(**data)
    except ValidationError as e:
        raise ConfigError(str(e)) from e
