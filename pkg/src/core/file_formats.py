"""
Module: file_formats

Versioned JSON documents for networks and PL functions, plus the atomic
writer every output file goes through.

    network: {"format": 1, "units": [[a, b, c], ...]}
    pl:      {"format": 1, "knots": [...], "values": [...],
              "m_left": ..., "m_right": ..., "c0": ...}

Floats are written with Python's shortest round-trip repr, so
read(write(net)) reproduces bit-identical doubles.
"""

import json
import os
import tempfile
from pathlib import Path
from typing import Any, Union

from pydantic import ValidationError

from src.core.core_types import PiecewiseLinear, ReLUNetwork, ReLUUnit
from src.core.errors import InputFileError

FORMAT_VERSION = 1


def atomic_write_text(path: Union[str, Path], text: str) -> None:
    """Write `text` to a temp file next to `path`, then rename over it."""
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=str(path.parent or "."))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps_json(payload: Any) -> str:
    return json.dumps(payload, indent=2, allow_nan=False) + "\n"


def network_to_json(net: ReLUNetwork) -> dict:
    return {"format": FORMAT_VERSION, "units": [list(t) for t in net.triples()]}


def pl_to_json(pl: PiecewiseLinear) -> dict:
    return {
        "format": FORMAT_VERSION,
        "knots": list(pl.knots),
        "values": list(pl.knot_values),
        "m_left": pl.m_left,
        "m_right": pl.m_right,
        "c0": pl.c0,
    }


def load_document(path: Union[str, Path]) -> dict:
    """
    Read a JSON document and check its format version.

    Raises:
        InputFileError: unreadable file, JSON syntax error (with line/column),
            non-object top level, or an unsupported "format" value.
    """
    path = str(path)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputFileError(path, f"cannot read file ({exc.strerror})") from exc
    return parse_document(text, path)


def parse_document(text: str, path: str = "<string>") -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputFileError(path, f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise InputFileError(path, "line 1 column 1: top level must be a JSON object")
    version = doc.get("format", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise InputFileError(path, f"field 'format': unsupported version {version!r}")
    return doc


def _validation_detail(exc: ValidationError) -> str:
    first = exc.errors()[0]
    loc = ".".join(str(p) for p in first.get("loc", ())) or "<root>"
    return f"field '{loc}': {first.get('msg')}"


def network_from_json(doc: dict, path: str = "<string>") -> ReLUNetwork:
    units = doc.get("units")
    if not isinstance(units, list):
        raise InputFileError(path, "field 'units': expected a list of [a, b, c] triples")
    parsed = []
    for i, unit in enumerate(units):
        if not isinstance(unit, list) or len(unit) != 3:
            raise InputFileError(path, f"field 'units.{i}': expected [a, b, c]")
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in unit):
            raise InputFileError(path, f"field 'units.{i}': entries must be numbers")
        try:
            parsed.append(ReLUUnit(a=unit[0], b=unit[1], c=unit[2]))
        except ValidationError as exc:
            raise InputFileError(path, f"field 'units.{i}': {exc.errors()[0].get('msg')}") from exc
    return ReLUNetwork(units=tuple(parsed))


def pl_from_json(doc: dict, path: str = "<string>") -> PiecewiseLinear:
    try:
        return PiecewiseLinear(
            knots=tuple(doc.get("knots", ())),
            knot_values=tuple(doc.get("values", ())),
            m_left=doc.get("m_left", 0.0),
            m_right=doc.get("m_right", 0.0),
            c0=doc.get("c0", 0.0),
        )
    except (ValidationError, TypeError) as exc:
        detail = _validation_detail(exc) if isinstance(exc, ValidationError) else str(exc)
        raise InputFileError(path, detail) from exc


def read_network(path: Union[str, Path]) -> ReLUNetwork:
    return network_from_json(load_document(path), str(path))


def read_pl(path: Union[str, Path]) -> PiecewiseLinear:
    return pl_from_json(load_document(path), str(path))


def read_function(path: Union[str, Path]) -> Union[ReLUNetwork, PiecewiseLinear]:
    """Load either document kind, deciding by the presence of "units"."""
    doc = load_document(path)
    if "units" in doc:
        return network_from_json(doc, str(path))
    if "knots" in doc:
        return pl_from_json(doc, str(path))
    raise InputFileError(str(path), "expected a network ('units') or PL ('knots') document")


def write_network(path: Union[str, Path], net: ReLUNetwork) -> None:
    atomic_write_text(path, dumps_json(network_to_json(net)))


def write_pl(path: Union[str, Path], pl: PiecewiseLinear) -> None:
    atomic_write_text(path, dumps_json(pl_to_json(pl)))
