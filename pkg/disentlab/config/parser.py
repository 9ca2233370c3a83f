"""Strict parser for flat ``section.key=value`` configuration files.

Example::

    # synthetic data
    gen.n_patients = 500
    gen.confound_rho = 0.9
    gen.sa_marginals.age = 0.2
    train.mode = disentangled
    train.target_sa = age
    train.loss.lambda_d = 5

Dotted keys nest; values are handed to pydantic for coercion. Unknown keys
are rejected by the models (``extra="forbid"``), duplicate keys and
malformed lines are rejected here with their line number.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

from pydantic import BaseModel, ValidationError

from disentlab.config.models import ExperimentConfig
from disentlab.errors import ConfigError


def parse_config_text(text: str, source: str = "<config>") -> dict[str, Any]:
    """Parse config text into a nested dict of raw string values."""
    tree: dict[str, Any] = {}
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(
                f"{source}:{lineno}: expected 'section.key = value', "
                f"got {raw.strip()!r}."
            )
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or any(not part for part in key.split(".")):
            raise ConfigError(f"{source}:{lineno}: malformed key {key!r}.")
        if key in seen:
            raise ConfigError(
                f"{source}:{lineno}: duplicate key '{key}' "
                f"(first set on line {seen[key]})."
            )
        seen[key] = lineno

        node = tree
        *parents, leaf = key.split(".")
        for part in parents:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(
                    f"{source}:{lineno}: '{key}' nests under a key that already "
                    f"holds a value."
                )
            node = child
        if isinstance(node.get(leaf), dict):
            raise ConfigError(
                f"{source}:{lineno}: '{key}' is a section and cannot take a value."
            )
        node[leaf] = value
    return tree


def config_from_text(text: str, source: str = "<config>") -> ExperimentConfig:
    """Parse and validate config text.

    Raises
    ------
    ConfigError
        On syntax errors, unknown keys, or values out of range.
    """
    tree = parse_config_text(text, source)
    try:
        return ExperimentConfig.model_validate(tree)
    except ValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}"
            for err in exc.errors()
        )
        raise ConfigError(f"{source}: invalid configuration: {problems}") from exc


def load_config(path: str | Path) -> ExperimentConfig:
    """Read and validate a config file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Config file not found: {path}")
    return config_from_text(path.read_text(), source=str(path))


def _flatten(prefix: str, value: Any, out: list[str]) -> None:
    if isinstance(value, dict):
        for key in sorted(value):
            _flatten(f"{prefix}.{key}" if prefix else key, value[key], out)
    elif isinstance(value, (list, tuple)):
        out.append(f"{prefix}={','.join(str(v) for v in value)}")
    elif value is None:
        return
    else:
        text = str(value).lower() if isinstance(value, bool) else str(value)
        out.append(f"{prefix}={text}")


def dump_config(config: BaseModel) -> str:
    """Serialize a config model back to sorted ``key=value`` lines.

    ``None`` values are omitted, so the output re-parses to an equal model.
    """
    lines: list[str] = []
    _flatten("", config.model_dump(mode="python"), lines)
    return "\n".join(lines) + "\n"
