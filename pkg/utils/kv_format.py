"""
Flat key-value text format

    # comment
    key = value

Used by model files, bias reports, calibration parameters and synthesis
specs. Writers emit keys in the given order so equal mappings give equal
bytes.
"""
import math
from pathlib import Path
from typing import Dict, Iterable, Mapping, Tuple, Union

import numpy as np

from core.errors import DataError


def format_value(value) -> str:
    """Floats use the shortest repr that reads back to the same double"""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return repr(float(value))
    if isinstance(value, (tuple, list)):
        return ",".join(format_value(v) for v in value)
    return str(value)


def dumps(items: Union[Mapping[str, object], Iterable[Tuple[str, object]]], header: str = "") -> str:
    pairs = items.items() if isinstance(items, Mapping) else items
    lines = [f"# {line}" for line in header.splitlines()]
    for key, value in pairs:
        if "=" in key or key != key.strip():
            raise ValueError(f"invalid key '{key}'")
        lines.append(f"{key} = {format_value(value)}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> Dict[str, str]:
    result: Dict[str, str] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError("expected 'key = value'", row=number)
        key, _, value = line.partition("=")
        key = key.strip()
        if key in result:
            raise DataError(f"duplicate key '{key}'", row=number)
        result[key] = value.strip()
    return result


def write(path: Union[str, Path], items, header: str = "") -> None:
    Path(path).write_text(dumps(items, header=header))


def read(path: Union[str, Path]) -> Dict[str, str]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"file not found: {path}")
    return loads(path.read_text())


def require(mapping: Mapping[str, str], key: str) -> str:
    if key not in mapping:
        raise DataError(f"missing key '{key}'")
    return mapping[key]


def get_float(mapping: Mapping[str, str], key: str, default=None) -> float:
    if key not in mapping:
        if default is None:
            raise DataError(f"missing key '{key}'")
        return float(default)
    try:
        return float(mapping[key])
    except ValueError as e:
        raise DataError(f"key '{key}' is not a number: {mapping[key]}") from e


def get_int(mapping: Mapping[str, str], key: str, default=None) -> int:
    if key not in mapping:
        if default is None:
            raise DataError(f"missing key '{key}'")
        return int(default)
    try:
        return int(mapping[key])
    except ValueError as e:
        raise DataError(f"key '{key}' is not an integer: {mapping[key]}") from e
