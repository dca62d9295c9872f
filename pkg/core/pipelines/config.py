import hashlib
import json
import logging
import os
from typing import Any, Dict, Iterable, Mapping, Optional

from pydantic import ValidationError

from schema import ExperimentConfig

logger = logging.getLogger("config")

# blocks whose ``path`` key names a field file
_PATH_BLOCKS = ("exponent", "data", "obstacle")


class ConfigError(ValueError):
    """Raised for an unreadable or invalid experiment config; ``key`` is the dotted key path"""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key
        self.message = message


def _assign(tree: Dict[str, Any], key: str, value: Any, origin: str):
    parts = [part.strip() for part in key.split(".")]
    if not all(parts):
        raise ConfigError(key, f"malformed key ({origin})")
    node = tree
    for depth, part in enumerate(parts[:-1]):
        child = node.setdefault(part, {})
        if not isinstance(child, dict):
            raise ConfigError(".".join(parts[:depth + 1]), f"is a value and cannot hold sub-keys ({origin})")
        node = child
    leaf = parts[-1]
    if leaf in node:
        kind = "sub-keys" if isinstance(node[leaf], dict) else "a value"
        raise ConfigError(key, f"already holds {kind} ({origin})")
    node[leaf] = value


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, Any]:
    """
    Parse ``key = value`` lines into a nested dict; ``#`` starts a comment.
    Values stay strings and are coerced by the pydantic models.
    """
    tree: Dict[str, Any] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("", f"{source}:{number}: expected 'key = value', got {line!r}")
        key, value = (token.strip() for token in line.split("=", 1))
        _assign(tree, key, value, f"{source}:{number}")
    return tree


def apply_overrides(tree: Dict[str, Any], overrides: Mapping[str, Any]) -> Dict[str, Any]:
    """Set dotted keys, replacing values already present"""
    for key, value in overrides.items():
        if value is None:
            continue
        parts = key.split(".")
        node = tree
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return tree


def _location(loc: Iterable[Any]) -> str:
    return ".".join(str(part) for part in loc)


def validate_config(tree: Dict[str, Any], base_dir: Optional[str] = None) -> ExperimentConfig:
    """Validate a nested dict; relative field-file paths resolve against ``base_dir``"""
    try:
        config = ExperimentConfig.model_validate(tree)
    except ValidationError as e:
        first = e.errors()[0]
        raise ConfigError(_location(first["loc"]), first["msg"]) from e

    for block_name in _PATH_BLOCKS:
        block = getattr(config, block_name)
        if block.path is None:
            continue
        path = block.path
        if base_dir and not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        if not os.path.exists(path):
            raise ConfigError(f"{block_name}.path", f"file not found: {path}")
        block.path = path
    return config


def load_config(path: str, overrides: Optional[Mapping[str, Any]] = None) -> ExperimentConfig:
    """Read, override and validate an experiment config file"""
    if not os.path.exists(path):
        raise ConfigError("", f"config file not found: {path}")
    with open(path, "r", encoding="utf-8") as handle:
        tree = parse_config_text(handle.read(), source=path)
    apply_overrides(tree, overrides or {})
    config = validate_config(tree, base_dir=os.path.dirname(os.path.abspath(path)))
    logger.info(f"Loaded config {path} (preset {config.run.preset.value})")
    return config


def config_digest(config: ExperimentConfig) -> str:
    """sha256 of the canonical JSON form, excluding the output directory"""
    payload = config.model_dump(mode="json")
    payload["run"].pop("out", None)
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
