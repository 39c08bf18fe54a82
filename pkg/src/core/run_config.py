import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional

from pydantic import ValidationError

from src.core.errors import ConfigError
from src.models.schemas import RunConfig

logger = logging.getLogger(__name__)


def load_run_config(path: Optional[Path], overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Builds a RunConfig from an optional JSON file and command-line overrides.

    Args:
        path: JSON file with RunConfig keys, or None for defaults only.
        overrides: Values taken from flags. Entries that are None are ignored,
            everything else replaces the file's value.

    Returns:
        A validated RunConfig.

    Raises:
        ConfigError: if the file cannot be read, is not JSON, or holds
            unknown keys or invalid values.
    """
    data: Dict[str, Any] = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as e:
            raise ConfigError(f"cannot read config file {path}: {e}")
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file {path} is not valid JSON: {e}")
        if not isinstance(data, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
        logger.debug("loaded run config from %s: %s", path, sorted(data))

    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value

    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid run configuration: {e}")
