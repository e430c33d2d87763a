"""
Common utilities for the dichotomy checker.
"""

import json
import logging
import math
from pathlib import Path

import numpy as np

from ..config import get_config


def setup_logging(level=logging.INFO):
    """Set up logging configuration.

    Args:
        level: Logging level (default: INFO)

    Returns:
        Logger object
    """
    log_format = get_config().get('logging.format', '%(asctime)s - %(levelname)s - %(message)s')
    logging.basicConfig(level=level, format=log_format)
    return logging.getLogger(__name__)


def level_for(verbose: bool) -> int:
    """Logging level named in the config for normal or verbose runs."""
    key = 'logging.verbose_level' if verbose else 'logging.default_level'
    name = get_config().get(key, 'DEBUG' if verbose else 'INFO')
    return getattr(logging, str(name).upper(), logging.INFO)


def ensure_directory(directory_path):
    """Ensure that a directory exists, creating it if necessary.

    Args:
        directory_path: Path to the directory

    Returns:
        Path object for the directory
    """
    path = Path(directory_path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def to_jsonable(value):
    """Convert numpy values, tuples and non-finite floats into plain JSON types.

    Infinite and NaN floats become the strings "inf", "-inf" and "nan" so the
    output stays valid JSON.
    """
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return value


def dumps_report(data) -> str:
    """Serialize a report deterministically (sorted keys, fixed indentation)."""
    return json.dumps(to_jsonable(data), indent=2, sort_keys=True)


def save_json_data(data, output_path, filename):
    """Save data to a JSON file.

    Args:
        data: Data to save
        output_path: Output directory
        filename: Output filename

    Returns:
        str: Path to the saved file, or None when writing failed
    """
    file_path = ensure_directory(output_path) / filename
    try:
        with open(file_path, 'w', encoding='utf-8') as f:
            f.write(dumps_report(data))
            f.write('\n')
        return str(file_path)
    except OSError as e:
        logging.error(f"Failed to save data to {file_path}: {e}")
        return None
