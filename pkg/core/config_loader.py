"""
Run configuration loader
Reads a JSON run file, applies --key=value overrides and tracks where every value came from

Order of precedence (highest to lowest):
1. Overrides (--key=value, dotted keys reach nested sections, e.g. --generator.model=x)
2. The JSON run file
3. RunConfig defaults
"""

import json
import logging
import os
import typing
from dataclasses import fields, is_dataclass
from typing import Any, Dict, List, Optional, Tuple

from .errors import ConfigError
from .run_config import RunConfig

logger = logging.getLogger(__name__)

_TRUE_VALUES = ('true', 'yes', 'on', '1', 'y', 't')
_FALSE_VALUES = ('false', 'no', 'off', '0', 'n', 'f')


def parse_override_args(args: List[str]) -> Dict[str, str]:
    """
    Parse arguments in --key=value format

    Args:
        args: Raw argument strings; anything not shaped like --key=value is ignored

    Returns:
        Dictionary of key -> raw string value
    """
    overrides: Dict[str, str] = {}
    for arg in args:
        if arg.startswith('--') and '=' in arg:
            key, value = arg[2:].split('=', 1)
            key = key.strip()
            if key:
                overrides[key] = value.strip()
    return overrides


def _coerce_text(raw: str, target: Any, key_path: str) -> Any:
    """Convert an override string to the declared field type"""
    origin = typing.get_origin(target)
    if origin in (list, List):
        item_type = typing.get_args(target)[0] if typing.get_args(target) else str
        items = [item.strip() for item in raw.split(',') if item.strip()]
        return [_coerce_text(item, item_type, key_path) for item in items]
    if target is bool:
        lowered = raw.lower()
        if lowered in _TRUE_VALUES:
            return True
        if lowered in _FALSE_VALUES:
            return False
        raise ConfigError(f"expected a boolean, got '{raw}'", key_path)
    if target is int:
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"expected an integer, got '{raw}'", key_path)
    if target is float:
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"expected a number, got '{raw}'", key_path)
    return raw


def _check_json_value(value: Any, target: Any, key_path: str) -> Any:
    """Validate a value decoded from JSON against the declared field type"""
    origin = typing.get_origin(target)
    if origin in (list, List):
        if not isinstance(value, list):
            raise ConfigError(f"expected a list, got {type(value).__name__}", key_path)
        item_type = typing.get_args(target)[0] if typing.get_args(target) else str
        return [_check_json_value(item, item_type, key_path) for item in value]
    if target is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"expected a boolean, got {value!r}", key_path)
        return value
    if target is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"expected an integer, got {value!r}", key_path)
        return value
    if target is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {value!r}", key_path)
        return float(value)
    if target is str:
        if not isinstance(value, str):
            raise ConfigError(f"expected a string, got {value!r}", key_path)
        return value
    return value


class ConfigLoader:
    """
    Builds a validated RunConfig from a JSON file plus overrides.

    Unknown keys are rejected with their dotted key path so a typo never
    silently falls back to a default.
    """

    def __init__(self):
        # "default", "file", "override" or "clamped" per dotted key
        self._sources: Dict[str, str] = {}

    def load(self, config_path: Optional[str], overrides: Optional[Dict[str, str]] = None) -> RunConfig:
        """
        Load and validate a run configuration

        Args:
            config_path: Path of the JSON run file, or None for pure defaults
            overrides: Dotted key -> raw string value

        Returns:
            Validated RunConfig

        Raises:
            ConfigError: Missing file, malformed JSON, unknown key, bad type or range
        """
        data: Dict[str, Any] = {}
        if config_path is not None:
            if not os.path.exists(config_path):
                raise ConfigError(f"config file not found: {config_path}", 'config')
            try:
                with open(config_path, 'r', encoding='utf-8') as f:
                    data = json.load(f)
            except json.JSONDecodeError as e:
                raise ConfigError(f"invalid JSON in {config_path}: {e}", 'config')
            if not isinstance(data, dict):
                raise ConfigError("top level must be a JSON object", 'config')

        config = RunConfig()
        self._sources = {}
        self._mark_defaults(config, '')
        self._apply_file(config, data, '')
        for key, raw in (overrides or {}).items():
            self._apply_override(config, key, raw)
        self._clamp_horizon(config)

        config.validate()
        logger.info(f"Loaded run configuration from {config_path or '<defaults>'} "
                    f"with {len(overrides or {})} override(s)")
        return config

    def get_source(self, key: str) -> Optional[str]:
        return self._sources.get(key)

    def _mark_defaults(self, section: Any, prefix: str):
        for f in fields(section):
            value = getattr(section, f.name)
            if is_dataclass(value):
                self._mark_defaults(value, f"{prefix}{f.name}.")
            else:
                self._sources[f"{prefix}{f.name}"] = 'default'

    def _apply_file(self, section: Any, data: Dict[str, Any], prefix: str):
        hints = typing.get_type_hints(type(section))
        known = {f.name for f in fields(section)}
        for key, value in data.items():
            key_path = f"{prefix}{key}"
            if key not in known:
                raise ConfigError("unknown configuration key", key_path)
            current = getattr(section, key)
            if is_dataclass(current):
                if not isinstance(value, dict):
                    raise ConfigError("expected an object", key_path)
                self._apply_file(current, value, f"{key_path}.")
                continue
            setattr(section, key, _check_json_value(value, hints[key], key_path))
            self._sources[key_path] = 'file'

    def _resolve(self, config: RunConfig, key: str) -> Tuple[Any, str]:
        parts = key.split('.')
        section: Any = config
        for part in parts[:-1]:
            child = getattr(section, part, None)
            if not is_dataclass(child):
                raise ConfigError("unknown configuration key", key)
            section = child
        if parts[-1] not in {f.name for f in fields(section)} or is_dataclass(getattr(section, parts[-1])):
            raise ConfigError("unknown configuration key", key)
        return section, parts[-1]

    def _apply_override(self, config: RunConfig, key: str, raw: str):
        section, name = self._resolve(config, key)
        hints = typing.get_type_hints(type(section))
        setattr(section, name, _coerce_text(raw, hints[name], key))
        self._sources[key] = 'override'
        logger.debug(f"Override {key}={raw}")

    def _clamp_horizon(self, config: RunConfig):
        """A steps override shortens an evolve_horizon that was not overridden itself"""
        if self.get_source('steps') != 'override' or self.get_source('evolve_horizon') == 'override':
            return
        if config.evolve_horizon > config.steps >= 0:
            logger.info(f"evolve_horizon {config.evolve_horizon} clamped to steps={config.steps}")
            config.evolve_horizon = config.steps
            self._sources['evolve_horizon'] = 'clamped'
