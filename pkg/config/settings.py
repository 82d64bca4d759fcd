"""
Settings loader
Reads defaults.yaml (or the file named by COMPACTA_CONFIG) with a built-in fallback
"""

import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from pydantic import BaseModel, Field

from models.exceptions import ConfigError

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_FILE = Path(__file__).resolve().parent.parent / "defaults.yaml"


class Settings(BaseModel):
    """Tunable defaults; every field can be overridden by a CLI flag"""
    enumeration_cap: int = Field(default=100000, ge=1)
    limit_tolerance: float = Field(default=1e-3, gt=0)
    ergodicity_threshold: float = Field(default=1e-3, gt=0)
    stabilization_sigmas: float = Field(default=3.0, gt=0)
    central_check_depth: int = Field(default=4, ge=1)
    samples: int = Field(default=100000, ge=1)
    row_cap: int = Field(default=10, ge=1)
    csv_significant_digits: int = Field(default=12, ge=1, le=17)
    output_dir: Optional[str] = None


def load_settings(config_file: Optional[str] = None) -> Settings:
    """
    Load settings

    Args:
        config_file: YAML path; defaults to $COMPACTA_CONFIG, then defaults.yaml

    Returns:
        Settings with the output directory taken from $COMPACTA_OUTPUT_DIR
    """
    path = Path(config_file or os.getenv("COMPACTA_CONFIG") or DEFAULT_CONFIG_FILE)
    try:
        with open(path, "r") as f:
            raw = yaml.safe_load(f) or {}
    except FileNotFoundError:
        # Fallback to built-in defaults if file not found
        logger.warning("config file %s not found, using built-in defaults", path)
        values = {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: malformed YAML ({exc})")
    else:
        values = _flatten(raw, path)

    values["output_dir"] = os.getenv("COMPACTA_OUTPUT_DIR") or None
    return Settings(**values)


def _flatten(raw: Any, path: Path) -> Dict[str, Any]:
    """Map the sectioned YAML layout onto flat Settings fields"""
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a mapping of sections, got {type(raw).__name__}")
    sections = {
        ("enumeration", "cap"): "enumeration_cap",
        ("absolute", "limit_tolerance"): "limit_tolerance",
        ("absolute", "ergodicity_threshold"): "ergodicity_threshold",
        ("absolute", "stabilization_sigmas"): "stabilization_sigmas",
        ("absolute", "central_check_depth"): "central_check_depth",
        ("sampling", "samples"): "samples",
        ("rsk", "row_cap"): "row_cap",
        ("output", "csv_significant_digits"): "csv_significant_digits",
    }
    values = {}
    for (section, key), field in sections.items():
        block = raw.get(section) or {}
        if not isinstance(block, dict):
            raise ConfigError(f"{path}: section {section!r} must be a mapping")
        if key in block:
            values[field] = block[key]
    return values
