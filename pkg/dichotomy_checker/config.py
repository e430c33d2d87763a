"""
Configuration management for the dichotomy checker.
"""

import json
import logging
import os
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, Any, Iterator, Optional

from .errors import ConfigurationError

logger = logging.getLogger(__name__)

TOLERANCE_ENV_VAR = "DICHOTOMY_TOL"


@dataclass(frozen=True)
class ToleranceConfig:
    """Numerical thresholds every decision in the package is judged against.

    tol_rank is relative to the largest singular value, tol_orth bounds the
    orthonormality defect of stored bases and tol_residual bounds equation
    residuals (idempotence, invariance, inequality margins).
    """
    tol_rank: float = 1e-9
    tol_orth: float = 1e-10
    tol_residual: float = 1e-8

    def __post_init__(self):
        for name in ("tol_rank", "tol_orth", "tol_residual"):
            value = getattr(self, name)
            if not value > 0:
                raise ConfigurationError(f"{name} must be strictly positive, got {value}")
        if self.tol_rank >= 1:
            raise ConfigurationError(f"tol_rank must be < 1, got {self.tol_rank}")

    def as_dict(self) -> Dict[str, float]:
        return {
            "tol_rank": self.tol_rank,
            "tol_orth": self.tol_orth,
            "tol_residual": self.tol_residual,
        }


def parse_tolerance_override(text: str, base: ToleranceConfig) -> ToleranceConfig:
    """
    Apply a tolerance override string to a ToleranceConfig.

    Accepts either a bare float (taken as tol_residual) or comma separated
    ``key=value`` pairs, e.g. ``tol_rank=1e-10,tol_residual=1e-9``.
    """
    text = text.strip()
    if not text:
        return base
    try:
        return replace(base, tol_residual=float(text))
    except ValueError:
        pass

    updates = {}
    for item in text.split(','):
        if '=' not in item:
            raise ConfigurationError(f"Cannot parse tolerance override '{item}'")
        key, value = (part.strip() for part in item.split('=', 1))
        if key not in ("tol_rank", "tol_orth", "tol_residual"):
            raise ConfigurationError(f"Unknown tolerance '{key}'")
        try:
            updates[key] = float(value)
        except ValueError:
            raise ConfigurationError(f"Tolerance '{key}' is not a number: '{value}'")
    return replace(base, **updates)


class Config:
    """Configuration manager for the dichotomy checker."""

    def __init__(self, config_path: Optional[str] = None):
        """
        Initialize configuration.

        Args:
            config_path: Path to configuration file. If None, uses default location.
        """
        self._config = {}
        self._config_path = self._find_config_path(config_path)
        self._load_config()

    def _find_config_path(self, config_path: Optional[str]) -> Path:
        """Find the configuration file path."""
        if config_path:
            return Path(config_path)

        possible_paths = [
            Path("config.json"),  # Current directory
            Path(__file__).parent.parent / "config.json",  # Project root
            Path.home() / ".dichotomy_checker" / "config.json",  # User home
        ]

        for path in possible_paths:
            if path.exists():
                return path

        return Path(__file__).parent.parent / "config.json"

    def _load_config(self):
        """Load configuration from file."""
        try:
            if self._config_path.exists():
                with open(self._config_path, 'r', encoding='utf-8') as f:
                    self._config = json.load(f)
                logger.info(f"Loaded configuration from {self._config_path}")
            else:
                logger.warning(f"Configuration file not found at {self._config_path}, using defaults")
                self._config = self._get_default_config()
        except Exception as e:
            logger.error(f"Error loading configuration: {e}")
            self._config = self._get_default_config()

    def _get_default_config(self) -> Dict[str, Any]:
        """Get default configuration when file is not available."""
        return {
            "cli_defaults": {
                "window": "0:50",
                "output": None,
                "seed": 0,
                "verbose": False
            },
            "tolerances": {
                "tol_rank": 1e-9,
                "tol_orth": 1e-10,
                "tol_residual": 1e-8
            },
            "estimation": {
                "L_cap": 1e6,
                "tol_slope": 1e-3,
                "bisection_iterations": 200,
                "default_ladder": [10, 20, 30]
            },
            "oracle": {
                "envelope_factor": 1e4
            },
            "roughness": {
                "tol_fixedpoint": 1e-12,
                "max_iterations": 500,
                "min_margin": 10
            },
            "logging": {
                "default_level": "INFO",
                "verbose_level": "DEBUG",
                "format": "%(asctime)s - %(levelname)s - %(message)s"
            },
            "report": {
                "schema_version": 1
            }
        }

    def get(self, key_path: str, default: Any = None) -> Any:
        """
        Get configuration value using dot notation.

        Args:
            key_path: Dot-separated path to the configuration value (e.g., 'estimation.L_cap')
            default: Default value if key is not found

        Returns:
            Configuration value or default
        """
        keys = key_path.split('.')
        value = self._config

        try:
            for key in keys:
                value = value[key]
            return value
        except (KeyError, TypeError):
            return default

    def set(self, key_path: str, value: Any):
        """
        Set configuration value using dot notation.

        Args:
            key_path: Dot-separated path to the configuration value
            value: Value to set
        """
        keys = key_path.split('.')
        config = self._config

        for key in keys[:-1]:
            if key not in config:
                config[key] = {}
            config = config[key]

        config[keys[-1]] = value

    def save(self, config_path: Optional[str] = None):
        """
        Save configuration to file.

        Args:
            config_path: Path to save configuration. If None, uses current config path.
        """
        save_path = Path(config_path) if config_path else self._config_path

        try:
            save_path.parent.mkdir(parents=True, exist_ok=True)

            with open(save_path, 'w', encoding='utf-8') as f:
                json.dump(self._config, f, indent=2)

            logger.info(f"Configuration saved to {save_path}")
        except Exception as e:
            logger.error(f"Error saving configuration: {e}")

    def get_cli_defaults(self) -> Dict[str, Any]:
        """Get CLI argument defaults."""
        return self.get('cli_defaults', {})

    def get_tolerances(self) -> ToleranceConfig:
        """
        Build the tolerance set from the config file and the DICHOTOMY_TOL override.

        Returns:
            ToleranceConfig
        """
        section = self.get('tolerances', {}) or {}
        tol = ToleranceConfig(
            tol_rank=float(section.get('tol_rank', 1e-9)),
            tol_orth=float(section.get('tol_orth', 1e-10)),
            tol_residual=float(section.get('tol_residual', 1e-8)),
        )
        override = os.environ.get(TOLERANCE_ENV_VAR)
        if override:
            tol = parse_tolerance_override(override, tol)
            logger.debug(f"Applied {TOLERANCE_ENV_VAR} override: {tol}")
        return tol

    def get_estimation_config(self) -> Dict[str, Any]:
        """Get constant and subspace estimation settings."""
        return self.get('estimation', {})

    def get_roughness_config(self) -> Dict[str, Any]:
        """Get fixed-point solver settings."""
        return self.get('roughness', {})

    @property
    def schema_version(self) -> int:
        return int(self.get('report.schema_version', 1))


# Global configuration instance
_config_instance = None


def get_config(config_path: Optional[str] = None) -> Config:
    """
    Get the global configuration instance.

    Args:
        config_path: Path to configuration file (only used on first call)

    Returns:
        Configuration instance
    """
    global _config_instance

    if _config_instance is None:
        _config_instance = Config(config_path)

    return _config_instance


def reload_config(config_path: Optional[str] = None):
    """
    Reload the global configuration.

    Args:
        config_path: Path to configuration file
    """
    global _config_instance
    _config_instance = Config(config_path)


_active_tolerances: ContextVar[Optional[ToleranceConfig]] = ContextVar("active_tolerances", default=None)


@contextmanager
def using_tolerances(tol: Optional[ToleranceConfig]) -> Iterator[ToleranceConfig]:
    """
    Make ``tol`` what get_tolerances() returns inside the block, leaving the
    global configuration untouched. ``None`` keeps the current tolerances.
    """
    if tol is None:
        yield get_tolerances()
        return
    token = _active_tolerances.set(tol)
    try:
        yield tol
    finally:
        _active_tolerances.reset(token)


def get_tolerances() -> ToleranceConfig:
    """The tolerances of the active scope, else those of the global configuration."""
    active = _active_tolerances.get()
    return active if active is not None else get_config().get_tolerances()
