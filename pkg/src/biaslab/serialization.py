"""Shared JSON document plumbing: schema versioning and file round-trips."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

SCHEMA_VERSION = 1


class SchemaVersionError(ValueError):
    """Document carries a schema_version this code does not understand."""


def check_schema_version(doc: dict, source: str = "document") -> None:
    found = doc.get("schema_version")
    if found != SCHEMA_VERSION:
        raise SchemaVersionError(
            f"{source}: unsupported schema_version {found!r} (expected {SCHEMA_VERSION})"
        )


def write_json(doc: Any, path: str | Path) -> None:
    # indent + trailing newline kept fixed so identical inputs give identical bytes
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def read_json(path: str | Path) -> Any:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
