"""ASCII panels: one two-row picture of the formation per trace record.

The leader is not drawn in the grid; its cell is marked by a caret under the
bottom row and its position and state appear in the panel header, so the
grid shows the pebble formation the way the figures draw it.  Pebbles 2..5
print as B, C, D, H; later ids continue through the remaining alphabet.
Co-located pebbles stack into one cell, and every cell of a panel is padded
to the widest stack so columns stay aligned.
"""

from __future__ import annotations

from typing import Iterable, Optional

from pebblewalk.collective import StepRecord

_FIXED = {2: "B", 3: "C", 4: "D", 5: "H"}
_SPARE = [c for c in "EFGIJKLMNOPQRSTUVWXYZ"]


def member_letter(member: int) -> str:
    if member in _FIXED:
        return _FIXED[member]
    index = member - 6
    if 0 <= index < len(_SPARE):
        return _SPARE[index]
    return "?"


def render_panel(record: StepRecord, window: Optional[int] = None) -> str:
    """One panel: header line, row-1 line, row-0 line, caret line."""
    positions = record.positions
    leader = positions[1]
    lo = min(v.x for v in positions.values())
    hi = max(v.x for v in positions.values())
    if window is not None:
        if window < 1:
            raise ValueError("window must be at least 1")
        hi = min(hi, lo + window - 1)

    cells: dict[tuple[int, int], str] = {}
    for m in sorted(positions):
        if m == 1:
            continue
        v = positions[m]
        if lo <= v.x <= hi:
            cells[(v.x, v.y)] = cells.get((v.x, v.y), "") + member_letter(m)
    width = max([len(s) for s in cells.values()] + [1])

    header = f"t={record.t} A1=({leader.x},{leader.y}) state={record.states[1]}"
    if record.choice is not None:
        header += f" choice=({record.choice.x},{record.choice.y})"

    def row(y: int) -> str:
        body = " ".join(cells.get((x, y), "").ljust(width) for x in range(lo, hi + 1))
        return f" {y} | {body}".rstrip()

    lines = [header, row(1), row(0)]
    if lo <= leader.x <= hi:
        offset = 5 + (leader.x - lo) * (width + 1)
        lines.append(" " * offset + "^")
    return "\n".join(lines)


def render_records(records: Iterable[StepRecord], window: Optional[int] = None) -> str:
    """Panels for every record, separated by blank lines."""
    return "\n\n".join(render_panel(r, window) for r in records) + "\n"
