"""Canonical byte encoding used for hashing, signing and storage.

The encoding is compact JSON with a fixed rendering for every supported
value:

* maps: text keys only, sorted by UTF-8 byte order, no whitespace
* lists and tuples: JSON arrays, order preserved
* unsigned integers: decimal, no leading zeros
* booleans: ``true`` / ``false``
* byte arrays: the string ``"0x"`` followed by lowercase hex
* text: a JSON string; text that itself starts with ``0x`` or ``'`` is
  prefixed with a single ``'`` so it can never be confused with bytes

Floats, ``None`` and negative integers are rejected. :func:`decode` is
strict: it only accepts bytes that :func:`encode` would have produced, so
two different byte strings never decode to the same value.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any

from .errors import ParseError, UnsupportedValue

_BYTES_PREFIX = "0x"
_ESCAPE = "'"
_HEX = frozenset("0123456789abcdef")


def _to_json(value: Any) -> Any:
    # bool first: it is a subclass of int
    if isinstance(value, bool):
        return value
    if isinstance(value, int):
        if value < 0:
            raise UnsupportedValue(f"negative integer {value}")
        return value
    if isinstance(value, str):
        try:
            value.encode("utf-8")
        except UnicodeEncodeError as exc:
            raise UnsupportedValue("text is not valid unicode") from exc
        if value.startswith((_BYTES_PREFIX, _ESCAPE)):
            return _ESCAPE + value
        return value
    if isinstance(value, (bytes, bytearray, memoryview)):
        return _BYTES_PREFIX + bytes(value).hex()
    if isinstance(value, dict):
        out = {}
        for key, item in value.items():
            if not isinstance(key, str):
                raise UnsupportedValue(f"map key {key!r} is not text")
            out[key] = _to_json(item)
        return out
    if isinstance(value, (list, tuple)):
        return [_to_json(item) for item in value]
    raise UnsupportedValue(f"unsupported type {type(value).__name__}")


def encode(value: Any) -> bytes:
    """Return the canonical bytes of ``value``."""
    tree = _to_json(value)
    try:
        text = json.dumps(tree, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False)
    except ValueError as exc:
        raise UnsupportedValue(str(exc)) from exc
    return text.encode("utf-8")


def _from_json(value: Any) -> Any:
    if isinstance(value, str):
        if value.startswith(_BYTES_PREFIX):
            digits = value[2:]
            if len(digits) % 2 or not set(digits) <= _HEX:
                raise ParseError(f"bad byte string {value!r}")
            return bytes.fromhex(digits)
        if value.startswith(_ESCAPE):
            inner = value[1:]
            if not inner.startswith((_BYTES_PREFIX, _ESCAPE)):
                raise ParseError(f"needless escape in {value!r}")
            return inner
        return value
    if isinstance(value, dict):
        return {k: _from_json(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_from_json(v) for v in value]
    if isinstance(value, float):
        raise ParseError("floating point value")
    if value is None:
        raise ParseError("null value")
    return value


def _reject_constant(name: str) -> Any:
    raise ParseError(f"non-finite constant {name}")


def _reject_duplicates(pairs: list[tuple[str, Any]]) -> dict:
    out: dict = {}
    for key, value in pairs:
        if key in out:
            raise ParseError(f"duplicate key {key!r}")
        out[key] = value
    return out


def decode(data: bytes) -> Any:
    """Parse canonical bytes back into a value.

    Lists come back as lists (tuples are not distinguished). Raises
    :class:`ParseError` for anything that is not exactly canonical.
    """
    try:
        text = bytes(data).decode("utf-8")
        tree = json.loads(text, parse_constant=_reject_constant, object_pairs_hook=_reject_duplicates)
    except ParseError:
        raise
    except (UnicodeDecodeError, json.JSONDecodeError, RecursionError) as exc:
        raise ParseError(str(exc)) from exc
    value = _from_json(tree)
    try:
        again = encode(value)
    except UnsupportedValue as exc:
        raise ParseError(str(exc)) from exc
    if again != bytes(data):
        raise ParseError("input is not in canonical form")
    return value


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def digest(value: Any) -> bytes:
    """SHA-256 of the canonical encoding of ``value``."""
    return sha256(encode(value))
