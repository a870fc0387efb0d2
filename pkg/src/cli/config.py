from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Set

from dotenv import dotenv_values
from pydantic import BaseModel, Field, field_validator

from deform.cache import CACHE_DIR_ENV, DEFAULT_CACHE_DIR
from shared.errors import UsageError
from shared.logging_config import DEFAULT_LOG_LEVEL, LOG_LEVELS
from shared.workers import default_workers

WORKERS_ENV = "TODAKDV_WORKERS"
LOG_LEVEL_ENV = "TODAKDV_LOG_LEVEL"

DEFAULT_SEED = 20240517
DEFAULT_FORMAT = "tsv"

# options an environment variable may supply when neither a flag nor the file does
ENV_KEYS = {
    "cache_dir": CACHE_DIR_ENV,
    "workers": WORKERS_ENV,
    "log_level": LOG_LEVEL_ENV,
}

SHARED_KEYS = ("seed", "cache_dir", "workers", "format", "out", "manifest", "log_level")


def _str_to_bool(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _normalize_key(key: str) -> str:
    return key.strip().lstrip("-").replace("-", "_")


def read_config_file(path: Optional[str]) -> Dict[str, str]:
    """key=value pairs from a dotenv-style file; keys may use dashes or underscores."""
    if not path:
        return {}
    if not Path(path).is_file():
        raise UsageError(f"config file not found: {path}")
    values = dotenv_values(path)
    return {_normalize_key(k): v for k, v in values.items() if v is not None}


def explicit_flags(argv: Iterable[str], aliases: Optional[Mapping[str, str]] = None) -> Set[str]:
    """Destinations of the long options actually typed on the command line."""
    aliases = aliases or {}
    found = set()
    for token in argv:
        if token == "--":
            break
        if token.startswith("--") and len(token) > 2:
            key = _normalize_key(token.split("=", 1)[0])
            found.add(aliases.get(key, key))
    return found


def _coerce(text: str, current: Any) -> Any:
    """Convert a config-file string to the type of the parsed default."""
    try:
        if isinstance(current, bool):
            return _str_to_bool(text)
        if isinstance(current, int):
            return int(text)
        if isinstance(current, float):
            return float(text)
    except ValueError as exc:
        raise UsageError(f"bad config value {text!r}: {exc}") from exc
    return text


class RunConfig(BaseModel):
    """One invocation after flags, config file and environment are merged"""
    command: str = Field(..., description="Top-level command")
    subcommand: str = Field(..., description="Subcommand")
    seed: int = Field(DEFAULT_SEED, description="Seed handed to every randomized operation")
    cache_dir: str = Field(DEFAULT_CACHE_DIR, description="Directory of cached deformation states")
    workers: int = Field(1, description="Worker pool size")
    format: str = Field(DEFAULT_FORMAT, description="Report format, tsv or json")
    out: Optional[str] = Field(None, description="Report file; stdout when unset")
    manifest: Optional[str] = Field(None, description="Manifest file; under the cache dir when unset")
    log_level: str = Field(DEFAULT_LOG_LEVEL, description="Minimum level of diagnostic events")
    config_file: Optional[str] = Field(None, description="key=value file the defaults were read from")
    options: Dict[str, Any] = Field(default_factory=dict, description="Subcommand flags")

    @field_validator("format")
    @classmethod
    def validate_format(cls, v: str) -> str:
        v = v.lower()
        if v not in ("tsv", "json"):
            raise ValueError("format must be tsv or json")
        return v

    @field_validator("workers")
    @classmethod
    def validate_workers(cls, v: int) -> int:
        if v < 1:
            raise ValueError("workers must be >= 1")
        return v

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        v = v.upper()
        if v not in LOG_LEVELS:
            raise ValueError(f"unknown log level {v}")
        return v

    @property
    def name(self) -> str:
        return f"{self.command} {self.subcommand}"

    def option(self, key: str, default: Any = None) -> Any:
        return self.options.get(key, default)

    def echo(self) -> Dict[str, Any]:
        """The fields that determine the primary report; output locations are left out."""
        return self.model_dump(mode="json", exclude={"out", "manifest", "log_level", "config_file"})


def build_config(
    parsed: Mapping[str, Any],
    explicit: Set[str],
    file_values: Mapping[str, str],
    env: Mapping[str, str],
) -> RunConfig:
    """
    Merge the layers: explicit flags, then the config file, then the
    environment, then the parser defaults (the DEFAULT_* constants).

    Raises:
        UsageError: an unknown config key or a value that fails validation
    """
    parsed = dict(parsed)
    command = parsed.pop("command")
    subcommand = parsed.pop("subcommand")
    config_file = parsed.pop("config", None)

    unknown = sorted(set(file_values) - set(parsed))
    if unknown:
        raise UsageError(f"unknown config keys for '{command} {subcommand}': {', '.join(unknown)}")

    merged: Dict[str, Any] = {}
    for key, value in parsed.items():
        if key in explicit:
            merged[key] = value
        elif key in file_values:
            merged[key] = _coerce(file_values[key], value)
        elif key in ENV_KEYS and env.get(ENV_KEYS[key]):
            merged[key] = env[ENV_KEYS[key]]
        else:
            merged[key] = value

    if merged.get("workers") is None:
        merged["workers"] = default_workers()
    shared = {key: merged.pop(key) for key in SHARED_KEYS if key in merged}
    try:
        return RunConfig(
            command=command,
            subcommand=subcommand,
            config_file=config_file,
            options=merged,
            **shared,
        )
    except ValueError as exc:
        raise UsageError(f"invalid configuration: {exc}") from exc


def int_list(text: str) -> List[int]:
    """'1,2,3' -> [1, 2, 3]"""
    try:
        return [int(item) for item in str(text).split(",") if item.strip()]
    except ValueError as exc:
        raise UsageError(f"expected a comma separated list of integers, got {text!r}") from exc


def float_list(text: str) -> List[float]:
    """'1/32,1/64' or '0.1,0.05' -> floats"""
    values = []
    for item in str(text).split(","):
        item = item.strip()
        if not item:
            continue
        try:
            if "/" in item:
                num, den = item.split("/", 1)
                values.append(float(num) / float(den))
            else:
                values.append(float(item))
        except (ValueError, ZeroDivisionError) as exc:
            raise UsageError(f"bad number {item!r} in {text!r}") from exc
    return values


def str_list(text: str) -> List[str]:
    return [item.strip() for item in str(text).split(",") if item.strip()]
