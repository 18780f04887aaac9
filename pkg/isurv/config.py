"""
CONFIGURATION FILES

Flat `key = value` text. Blank lines and `#` comments are ignored; values are
parsed as bool, int, float or string. `--set key=value` flags use the same
syntax and override file values.
"""

import hashlib
import json
import os
from dataclasses import fields, is_dataclass
from typing import Any, Dict, Iterable, List, Optional, Set, Tuple, Type, TypeVar

from .errors import SchemaError

T = TypeVar("T")

output_dir_env: str = "ISURV_OUTPUT_DIR"
default_output_dir: str = "output"


### PARSING ###


def parse_value(text: str) -> Any:
    s: str = text.strip()
    if len(s) >= 2 and s[0] == s[-1] and s[0] in "\"'":
        return s[1:-1]

    lowered: str = s.lower()
    if lowered in ("true", "yes", "on"):
        return True
    if lowered in ("false", "no", "off"):
        return False
    if lowered in ("none", "null"):
        return None

    for cast in (int, float):
        try:
            return cast(s)
        except ValueError:
            pass

    return s


def _split(line: str, where: str) -> Tuple[str, Any]:
    if "=" not in line:
        raise SchemaError(f"{where}: expected 'key = value', got '{line}'")
    key, value = line.split("=", 1)
    key = key.strip()
    if not key:
        raise SchemaError(f"{where}: empty key")

    return key, parse_value(value)


def parse_settings(text: str, source: str = "<config>") -> Dict[str, Any]:
    settings: Dict[str, Any] = dict()
    for i, raw in enumerate(text.splitlines(), start=1):
        line: str = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, value = _split(line, f"{source}:{i}")
        settings[key] = value

    return settings


def read_config(path: str) -> Dict[str, Any]:
    with open(os.path.expanduser(path), "r", encoding="utf-8") as f:
        return parse_settings(f.read(), path)


def parse_overrides(items: Optional[Iterable[str]]) -> Dict[str, Any]:
    return dict(_split(item, "--set") for item in (items or []))


### APPLYING ###


def field_names(cls: Any) -> Set[str]:
    return {f.name for f in fields(cls)}


def apply_settings(cls: Type[T], settings: Dict[str, Any]) -> T:
    """Construct the dataclass `cls` from the settings that name its fields, defaults elsewhere."""

    assert is_dataclass(cls)
    known: Set[str] = field_names(cls)

    return cls(**{k: v for k, v in settings.items() if k in known})


def check_keys(settings: Dict[str, Any], *targets: Any) -> None:
    """Every key must name a field of one of the targets."""

    known: Set[str] = set().union(*(field_names(t) for t in targets))
    unknown: List[str] = sorted(k for k in settings if k not in known)
    if unknown:
        raise SchemaError(f"Unknown configuration key(s): {', '.join(unknown)}")


### PROVENANCE ###


def config_hash(path: Optional[str], effective: Dict[str, Any]) -> str:
    """SHA-256 of the config file's bytes, else of the effective settings as canonical JSON."""

    if path:
        with open(os.path.expanduser(path), "rb") as f:
            return hashlib.sha256(f.read()).hexdigest()

    canonical: str = json.dumps(effective, sort_keys=True, separators=(",", ":"), default=str)

    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def output_dir(explicit: Optional[str] = None) -> str:
    if explicit:
        return os.path.expanduser(explicit)

    return os.path.expanduser(os.environ.get(output_dir_env, default_output_dir))


### END ###
