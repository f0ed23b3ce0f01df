import logging
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import yaml

from .curve_families import FAMILY_REGISTRY, Family, FitFixture
from .trace_cache import TraceCache
from .workbench_errors import ConfigError

logger = logging.getLogger(__name__)

DEFAULTS: Dict[str, Any] = {
    "cache_dir": ".cy_cache",
    "log_level": "WARNING",
    "diagnostic_limit": 31,
    "todd_bound": 8,
    "hecke_prec": 1000,
    "shimura_bound": 500,
    "torsion_bound": 50,
    "hasse_bound": 31,
    "kummer_bound": 31,
    "detcy_trials": 100,
    "detcy_fibres": 10,
    "detcy_seed": 11,
}

_FAMILY_PREFIXES: Tuple[str, ...] = ("fit_basis_", "fit_primes_", "validate_max_")
_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class WorkbenchConfig:
    """
    Flat key-value settings with documented defaults. No environment variable is read.
    """

    def __init__(self, values: Optional[Dict[str, Any]] = None):
        """
        :param values: Overrides of the defaults; validated here.
        """
        self.values: Dict[str, Any] = dict(DEFAULTS)
        for key, value in (values or {}).items():
            self.values[key] = self._check(key, value)

    @classmethod
    def load(cls, path: Optional[str]) -> 'WorkbenchConfig':
        """
        Read a YAML mapping of scalar values.

        :param path: The file, or None for the defaults.
        :return: The config; ConfigError for unreadable, nested or unknown entries.
        """
        if path is None:
            return cls()
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as error:
            raise ConfigError(f"cannot read config {path}: {error}")
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as error:
            raise ConfigError(f"config {path} is not valid YAML: {error}")
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must be a mapping of keys to values")
        logger.debug("loaded %d config keys from %s", len(data), path)
        return cls(data)

    def _check(self, key: Any, value: Any) -> Any:
        if not isinstance(key, str):
            raise ConfigError(f"config key {key!r} is not a string")
        if isinstance(value, (dict, list)):
            raise ConfigError(f"config key '{key}' must have a scalar value")
        if key in DEFAULTS:
            expected = type(DEFAULTS[key])
            if expected is int and (not isinstance(value, int) or isinstance(value, bool) or value < 1):
                raise ConfigError(f"config key '{key}' must be a positive integer")
            if expected is str and not isinstance(value, str):
                raise ConfigError(f"config key '{key}' must be a string")
            if key == "log_level" and value.upper() not in _LOG_LEVELS:
                raise ConfigError(f"log_level must be one of {', '.join(_LOG_LEVELS)}")
            return value
        for prefix in _FAMILY_PREFIXES:
            if key.startswith(prefix):
                family_id = key[len(prefix):]
                if family_id not in FAMILY_REGISTRY:
                    raise ConfigError(f"config key '{key}' names unknown family '{family_id}'")
                if prefix == "validate_max_" and (not isinstance(value, int) or isinstance(value, bool)):
                    raise ConfigError(f"config key '{key}' must be an integer")
                if prefix != "validate_max_" and not isinstance(value, (str, int)):
                    raise ConfigError(f"config key '{key}' must be a comma-separated list")
                return value
        if key.startswith("conditions_"):
            if not isinstance(value, str):
                raise ConfigError(f"config key '{key}' must be a condition string")
            return value
        raise ConfigError(f"unknown config key '{key}'")

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    def get(self, key: str, default: Any = None) -> Any:
        return self.values.get(key, default)

    @property
    def log_level(self) -> str:
        return self.values["log_level"].upper()

    def cache(self) -> Optional[TraceCache]:
        directory = self.values["cache_dir"]
        if str(directory).lower() == "none":
            return None
        return TraceCache(directory)

    def fit_fixture(self, family: Family) -> FitFixture:
        """
        The family's pinned fit with any configured overrides applied.
        """
        pinned = family.fixture
        basis = self.values.get(f"fit_basis_{family.family_id}")
        primes = self.values.get(f"fit_primes_{family.family_id}")
        validate_max = self.values.get(f"validate_max_{family.family_id}")
        if pinned is None and (basis is None or primes is None or validate_max is None):
            raise ConfigError(f"{family.family_id} has no pinned fit; configure its basis, primes and range")
        if basis is not None or primes is not None:
            logger.warning("using configured fit overrides for %s", family.family_id)
        return FitFixture(
            split_names(basis) if basis is not None else pinned.basis,
            split_integers(primes) if primes is not None else pinned.fit_primes,
            validate_max if validate_max is not None else pinned.validate_max,
        )

    def conditions(self, name: str) -> str:
        key = f"conditions_{name}"
        if key not in self.values:
            raise ConfigError(f"no config key '{key}'")
        return self.values[key]


def split_names(value: Any) -> Tuple[str, ...]:
    names = tuple(part.strip() for part in str(value).split(",") if part.strip())
    if not names:
        raise ConfigError(f"empty list '{value}'")
    return names


def split_integers(value: Any) -> Tuple[int, ...]:
    try:
        return tuple(int(part) for part in split_names(value))
    except ValueError:
        raise ConfigError(f"'{value}' is not a comma-separated list of integers")