"""CSV output with embedded run metadata.

Floats serialize with 17 significant digits (binary round-trip); metadata
rides along as '#'-prefixed comment lines so outputs stay self-describing.
"""

from __future__ import annotations

import json
import os


def fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def meta_lines(config: dict, version: str) -> list:
    return [
        "config: " + json.dumps(config, sort_keys=True, separators=(",", ":")),
        f"base_seed: {config.get('base_seed', 0)}",
        f"version: {version}",
    ]


def write_csv(path, header, rows, meta=()) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    lines = [f"# {m}" for m in meta]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def write_text(path, text) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path
