"""Reader for the utterance JSONL format.

Each line is a JSON object with at least "id" and "text". Other keys
(split, intent, domain, ...) are allowed and ignored; the exporter only
needs something to encode. Order is preserved: row i of the output
embedding file corresponds to line i of the input.
"""

from __future__ import annotations

import json
from pathlib import Path

from embexport.errors import DataError


def read_utterances(path: str | Path) -> tuple[list[str], list[str]]:
    """Return (ids, texts) in file order. Blank lines are skipped."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"utterance file not found: {path}")

    ids: list[str] = []
    texts: list[str] = []
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise DataError(f"line {lineno}: expected a JSON object")
            uid = obj.get("id")
            if not isinstance(uid, str) or not uid:
                raise DataError(f"line {lineno}: missing or empty 'id'")
            if uid in seen:
                raise DataError(f"line {lineno}: duplicate id {uid!r}")
            text = obj.get("text")
            if not isinstance(text, str):
                raise DataError(f"line {lineno}: utterance {uid!r} has no 'text' to encode")
            seen.add(uid)
            ids.append(uid)
            texts.append(text)

    if not ids:
        raise DataError(f"no utterances in {path}: nothing to export")
    return ids, texts
