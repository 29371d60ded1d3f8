"""Map JSON paths to source offsets for already-validated JSON text."""

from __future__ import annotations

import json
import re
from json.decoder import scanstring

_WS = re.compile(r"[ \t\n\r]*")
_DECODER = json.JSONDecoder()

Path = tuple


def index_positions(text: str) -> dict[Path, int]:
    """Offset of every value; for object members, the offset of the member's key."""
    positions: dict[Path, int] = {}

    def skip(pos: int) -> int:
        return _WS.match(text, pos).end()

    def value(pos: int, path: Path) -> int:
        pos = skip(pos)
        positions.setdefault(path, pos)
        ch = text[pos : pos + 1]
        if ch == "{":
            pos = skip(pos + 1)
            if text[pos] == "}":
                return pos + 1
            while True:
                pos = skip(pos)
                key_at = pos
                key, pos = scanstring(text, pos + 1)
                positions[path + (key,)] = key_at
                pos = skip(pos)
                pos = _member(pos + 1, path + (key,))
                pos = skip(pos)
                if text[pos] == ",":
                    pos += 1
                    continue
                return pos + 1
        if ch == "[":
            pos = skip(pos + 1)
            if text[pos] == "]":
                return pos + 1
            i = 0
            while True:
                pos = value(pos, path + (i,))
                pos = skip(pos)
                if text[pos] == ",":
                    pos += 1
                    i += 1
                    continue
                return pos + 1
        _, end = _DECODER.raw_decode(text, pos)
        return end

    def _member(pos: int, path: Path) -> int:
        # keep the key offset already recorded for this path
        pos = skip(pos)
        saved = positions[path]
        end = value(pos, path)
        positions[path] = saved
        return end

    value(0, ())
    return positions


def line_col(text: str, offset: int) -> tuple[int, int]:
    """1-based line and column of ``offset``, clamped into the text."""
    offset = max(0, min(offset, max(len(text) - 1, 0)))
    line = text.count("\n", 0, offset) + 1
    col = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, col


def locate(text: str, positions: dict[Path, int], path: Path) -> tuple[int, int]:
    """Position of the deepest existing prefix of ``path``."""
    for cut in range(len(path), -1, -1):
        if path[:cut] in positions:
            return line_col(text, positions[path[:cut]])
    return 1, 1
