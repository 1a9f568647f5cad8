"""Deterministic report serialization.

Reports must be byte-identical across runs with identical inputs, so JSON
is emitted with sorted keys and every float reduced to 9 significant
digits before encoding. Non-finite values are carried as the string
sentinels "inf" / "-inf" (JSON has no literal for them).
"""

from __future__ import annotations

import json
import math
from pathlib import Path


def _normalize(obj):
    if isinstance(obj, float):
        if math.isnan(obj):
            raise ValueError("refusing to serialize NaN into a report")
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return float(f"{obj:.9g}")
    if isinstance(obj, dict):
        return {str(k): _normalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_normalize(v) for v in obj]
    return obj


def dumps_report(obj) -> str:
    return json.dumps(_normalize(obj), sort_keys=True, indent=2) + "\n"


def write_report(obj, path: str | Path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_report(obj))


def markdown_table(header: list[str], rows: list[list[str]]) -> str:
    """Aligned Markdown table used by the human-readable reports."""
    widths = [max(len(str(header[i])), *(len(str(r[i])) for r in rows))
              for i in range(len(header))]
    def fmt(cells):
        return "| " + " | ".join(str(c).ljust(w)
                                 for c, w in zip(cells, widths)) + " |"
    lines = [fmt(header), "|" + "|".join("-" * (w + 2) for w in widths) + "|"]
    lines += [fmt(r) for r in rows]
    return "\n".join(lines) + "\n"
