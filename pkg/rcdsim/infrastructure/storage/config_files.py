"""
Flat key=value experiment config files.

The same dotenv format is used for hand-written configs and for the
manifests written next to every output, so a manifest can be fed back
with ``--config`` to reproduce a run.
"""

from pathlib import Path
from typing import Any

from dotenv import dotenv_values

from rcdsim.core.exceptions import ConfigError
from rcdsim.core.logging import get_logger

logger = get_logger(__name__)

# Keys a manifest carries that are not experiment parameters
PROVENANCE_KEYS = frozenset({"code_version", "command"})


def normalize_key(key: str) -> str:
    """``--Rho-R`` / ``RHO_R`` / ``rho-r`` all map to ``rho_r``."""
    return key.strip().lstrip("-").lower().replace("-", "_")


def load_config_file(path: str | Path) -> dict[str, Any]:
    """
    Read a config file into normalized keys.

    Provenance keys are dropped; empty values are treated as absent.

    Raises:
        ConfigError: The file is missing or unreadable, or a key repeats
            under different spellings.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError("config", f"cannot read config file '{path}'")
    try:
        raw = dotenv_values(path)
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError("config", f"cannot read config file '{path}': {exc}") from exc

    values: dict[str, Any] = {}
    for key, value in raw.items():
        name = normalize_key(key)
        if name in PROVENANCE_KEYS or value is None or value == "":
            continue
        if name in values:
            raise ConfigError(name, f"key given twice in '{path}'")
        values[name] = value

    logger.debug("Loaded %d keys from %s", len(values), path)
    return values
