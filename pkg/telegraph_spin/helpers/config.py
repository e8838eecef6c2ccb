"""Run configuration resolution: defaults < config file < command-line flags."""

import logging
from collections.abc import Mapping
from typing import Any

import voluptuous as vol

from ..classes.config import RunConfig
from ..const import (
    CONF_ENGINE,
    CONF_INIT,
    CONF_LEVELS,
    CONF_MODEL,
    CONF_SEED,
    CONF_STOCHASTIC,
    ERROR_CONFIG,
    ERROR_INIT_STATE,
    Engine,
)
from ..exceptions import ConfigValidationError
from ..schema import RUN_CONFIG_SCHEMA
from .filemgmt import read_config_file

_LOGGER = logging.getLogger(__name__)


def merge_sections(base: Mapping[str, Any], overrides: Mapping[str, Any]) -> dict[str, Any]:
    """Return base updated with overrides, section by section; None values are ignored."""
    merged = dict(base)
    for key, value in overrides.items():
        if value is None:
            continue
        if not isinstance(value, Mapping):
            merged[key] = value
            continue
        updates = {name: item for name, item in value.items() if item is not None}
        if not updates:
            continue
        section = merged.get(key)
        section = dict(section) if isinstance(section, Mapping) else {}
        section.update(updates)
        merged[key] = section
    return merged


def _path(error: vol.Invalid) -> str:
    return ".".join(str(part) for part in error.path) or "<root>"


def validate_config(data: Mapping[str, Any]) -> RunConfig:
    """Validate a merged configuration dict."""
    try:
        validated = RUN_CONFIG_SCHEMA(dict(data))
    except vol.MultipleInvalid as err:
        first = err.errors[0]
        _LOGGER.debug(ERROR_CONFIG, _path(first), first.msg)
        raise ConfigValidationError(_path(first), first.msg) from err
    model = validated[CONF_MODEL]
    if model[CONF_LEVELS] == 2 and model[CONF_INIT] == 0:
        raise ConfigValidationError(
            f"{CONF_MODEL}.{CONF_INIT}", ERROR_INIT_STATE % (0, model[CONF_LEVELS])
        )
    engine = Engine(validated[CONF_ENGINE])
    if engine in (Engine.MC, Engine.ALL) and validated[CONF_STOCHASTIC][CONF_SEED] is None:
        raise ConfigValidationError(
            f"{CONF_STOCHASTIC}.{CONF_SEED}", "a seed is required for the mc engine"
        )
    return RunConfig(validated)


def resolve_config(path=None, overrides: Mapping[str, Any] | None = None) -> RunConfig:
    """Return the configuration from an optional file with flag overrides applied.

    path may be a YAML file or a previous output whose embedded
    configuration is reused.
    """
    data = read_config_file(path) if path is not None else {}
    merged = merge_sections(data, overrides or {})
    config = validate_config(merged)
    _LOGGER.debug("Resolved configuration: %s", config.data)
    return config
