"""Event-wise Labanotation score: conversion to and from dense instances, text rendering.

A score has one column per conceptual group (the two support columns and
the two hand columns of the staff) plus auxiliary columns for detail
attributes, named ``<staff column>:<attribute>``.  A new event starts only
when the symbol changes.  On the support columns a hold that keeps the
previous position, or the rest position before anything happened, is left
blank; densifying fills such gaps with a hold in place, so the omission
loses nothing.

Symbols are strings: ``MF.Mi`` for a dynamic cell, ``MF.Mi+HOLD`` for a held
one, the elbow cell in the same form, and decimal numbers for orientation,
bend and effort.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .core_model import (
    CONCEPTUAL_FIELDS,
    DYNAMIC,
    FIELDS,
    HOLD,
    BodyPartGroup,
    InstanceSequence,
    SymbolKind,
    _parse_header,
    default_value,
    header_int,
)
from .detection import runs
from .errors import EventOutOfRange, OverlapError, ParseError, UnknownColumn, UnmappedValue

G = BodyPartGroup

# Staff columns, left to right.  The standard staff's separate body column
# is folded into "Body (Whole)".
STAFF_COLUMNS: tuple[str, ...] = (
    "Left hand",
    "Left arm",
    "Left leg gesture",
    "Left support",
    "Right support",
    "Right leg gesture",
    "Body (Whole)",
    "Right arm",
    "Right hand",
    "Head",
)

CONCEPTUAL_COLUMNS = {
    "Left hand": G.UPPER_L,
    "Left support": G.SUPPORT_L,
    "Right support": G.SUPPORT_R,
    "Right hand": G.UPPER_R,
}
SUPPORT_COLUMNS = ("Left support", "Right support")
ELBOW_FIELDS = ("elbow_dir_lmr", "elbow_dir_bmf", "elbow_level")
REST_CELL = ("M", "M", "Mi")

SCORE_HEADER = "#labanscore v1"
SCORE_SUFFIX = ".laban.txt"


@dataclass(frozen=True)
class ScoreEvent:
    staff_column: str
    symbol: str
    start: int
    duration: int

    def __post_init__(self):
        if self.duration < 1:
            raise ValueError("event duration must be at least 1 frame")
        if self.start < 0:
            raise EventOutOfRange(f"event in {self.staff_column} starts before frame 0")

    @property
    def end(self) -> int:
        return self.start + self.duration


def _detail_columns() -> tuple[list[str], dict[str, tuple[BodyPartGroup, tuple[str, ...]]]]:
    names: list[str] = []
    spec: dict[str, tuple[BodyPartGroup, tuple[str, ...]]] = {}
    for f in FIELDS:
        if f.is_conceptual:
            continue
        if f.name in ELBOW_FIELDS:
            name, attrs = f"{f.staff_column}:elbow", ELBOW_FIELDS
        else:
            name, attrs = f"{f.staff_column}:{f.name}", (f.name,)
        if name not in spec:
            spec[name] = (f.group, attrs)
            names.append(name)
    return names, spec


_DETAIL_NAMES, DETAIL_COLUMNS = _detail_columns()


def _ordered_columns() -> tuple[str, ...]:
    out = []
    for staff in STAFF_COLUMNS:
        if staff in CONCEPTUAL_COLUMNS:
            out.append(staff)
        out.extend(n for n in _DETAIL_NAMES if n.split(":", 1)[0] == staff)
    return tuple(out)


SCORE_COLUMNS: tuple[str, ...] = _ordered_columns()


@dataclass(frozen=True)
class LabanScore:
    columns: tuple[str, ...]
    events: tuple[ScoreEvent, ...]
    fps: int = 20
    frames: int = 0

    def column_events(self, column: str) -> list[ScoreEvent]:
        return sorted((e for e in self.events if e.staff_column == column), key=lambda e: e.start)


# ------------------------------------------------------------- symbols


def cell_symbol(cell: Sequence[str], hold: str = DYNAMIC) -> str:
    lmr, bmf, level = cell
    sym = f"{lmr}{bmf}.{level}"
    return sym + "+HOLD" if hold == HOLD else sym


def parse_cell_symbol(symbol: str) -> tuple[tuple[str, str, str], str]:
    body, plus, tag = symbol.partition("+")
    if plus and tag != "HOLD":
        raise UnmappedValue(f"bad cell symbol {symbol!r}")
    direction, dot, level = body.partition(".")
    if not dot or len(direction) != 2:
        raise UnmappedValue(f"bad cell symbol {symbol!r}")
    cell = (direction[0], direction[1], level)
    if cell[0] not in SymbolKind.DIRECTION_LMR.domain or cell[1] not in SymbolKind.DIRECTION_BMF.domain:
        raise UnmappedValue(f"bad direction in {symbol!r}")
    if level not in SymbolKind.LEVEL.domain:
        raise UnmappedValue(f"bad level in {symbol!r}")
    return cell, HOLD if plus else DYNAMIC


# --------------------------------------------------------- conversions


def instances_to_score(seq: InstanceSequence) -> LabanScore:
    """Run-length encode every stream into events, applying the omission rules."""
    events: list[ScoreEvent] = []
    for column in SCORE_COLUMNS:
        if column in CONCEPTUAL_COLUMNS:
            group = CONCEPTUAL_COLUMNS[column]
            stream = list(zip(seq.conceptual_tuples(group), seq.column(group, "hold")))
            # a support hold is left out only where densifying restores it: the
            # same cell as before, or the rest cell before any event
            prev_cell = REST_CELL if column in SUPPORT_COLUMNS else None
            for (cell, hold), s, e in runs(stream):
                retained = hold == HOLD and cell == prev_cell
                prev_cell = cell
                if retained and column in SUPPORT_COLUMNS:
                    continue
                events.append(ScoreEvent(column, cell_symbol(cell, hold), s, e - s))
        else:
            group, attrs = DETAIL_COLUMNS[column]
            cols = [seq.column(group, a) for a in attrs]
            stream = list(zip(*cols))
            for value, s, e in runs(stream):
                sym = cell_symbol(value) if len(attrs) == 3 else str(value[0])
                events.append(ScoreEvent(column, sym, s, e - s))
    return LabanScore(SCORE_COLUMNS, tuple(events), seq.fps, seq.T)


def _check_events(score: LabanScore, T: int) -> dict[str, list[ScoreEvent]]:
    by_column: dict[str, list[ScoreEvent]] = {}
    for e in score.events:
        if e.staff_column not in CONCEPTUAL_COLUMNS and e.staff_column not in DETAIL_COLUMNS:
            raise UnknownColumn(f"unknown staff column {e.staff_column!r}")
        if e.end > T:
            raise EventOutOfRange(f"event {e.symbol} in {e.staff_column} ends at {e.end}, past frame {T}")
        by_column.setdefault(e.staff_column, []).append(e)
    for column, evs in by_column.items():
        evs.sort(key=lambda e: e.start)
        for a, b in zip(evs, evs[1:]):
            if b.start < a.end:
                raise OverlapError(f"events overlap in {column} at frame {b.start}")
    return by_column


def _detail_value(field_kind: SymbolKind, raw: str):
    try:
        v = int(raw)
    except ValueError:
        raise UnmappedValue(f"bad {field_kind.value} symbol {raw!r}") from None
    if v not in field_kind.domain:
        raise UnmappedValue(f"{field_kind.value} value {v} out of range")
    return v


def score_to_instances(score: LabanScore, T: int | None = None, fps: int | None = None) -> InstanceSequence:
    """Dense instances; gaps keep the previous symbol, and a silent support column holds."""
    T = score.frames if T is None else T
    fps = score.fps if fps is None else fps
    if T < 1:
        raise ValueError("a score needs at least one frame to densify")
    by_column = _check_events(score, T)
    kinds = {(f.group, f.name): f for f in FIELDS}
    columns: dict[tuple[BodyPartGroup, str], list] = {}

    for column, group in CONCEPTUAL_COLUMNS.items():
        cell = tuple(default_value(kinds[(group, n)]) for n in CONCEPTUAL_FIELDS)
        hold = HOLD
        marks: dict[int, ScoreEvent] = {e.start: e for e in by_column.get(column, [])}
        cells, holds = [], []
        end = -1
        for t in range(T):
            ev = marks.get(t)
            if ev is not None:
                cell, hold = parse_cell_symbol(ev.symbol)
                end = ev.end
            elif t >= end:
                hold = HOLD  # gap: the part stays where it is
            cells.append(cell)
            holds.append(hold)
        for i, name in enumerate(CONCEPTUAL_FIELDS):
            columns[(group, name)] = [c[i] for c in cells]
        columns[(group, "hold")] = holds

    for column, (group, attrs) in DETAIL_COLUMNS.items():
        value = tuple(default_value(kinds[(group, a)]) for a in attrs)
        marks = {e.start: e for e in by_column.get(column, [])}
        track = []
        for t in range(T):
            ev = marks.get(t)
            if ev is not None:
                if len(attrs) == 3:
                    value, hold = parse_cell_symbol(ev.symbol)
                    if hold == HOLD:
                        raise UnmappedValue("elbow symbols carry no hold")
                else:
                    value = (_detail_value(kinds[(group, attrs[0])].kind, ev.symbol),)
            track.append(value)
        for i, a in enumerate(attrs):
            columns[(group, a)] = [v[i] for v in track]

    return InstanceSequence.from_columns(T, columns, fps)


# ------------------------------------------------------------- rendering


def glyph(event: ScoreEvent, previous: ScoreEvent | None = None) -> str:
    """Text tag of one event; empty when the notation has no glyph for it."""
    column, sym = event.staff_column, event.symbol
    if column in CONCEPTUAL_COLUMNS:
        if sym.endswith("+HOLD") and previous is not None and previous.end == event.start:
            if parse_cell_symbol(previous.symbol)[0] == parse_cell_symbol(sym)[0]:
                return "HOLD"
        return sym
    attr = column.split(":", 1)[1]
    if attr == "elbow":
        return sym
    if attr.startswith("effort"):
        # effort 1 is the unmarked default; 4 shares the effort-3 glyph
        return {"0": "E0", "1": "", "2": "E2", "3": "E3", "4": "E3"}[sym]
    if "orient" in attr:
        return f"O{sym}"
    return f"B{sym}"


def render_score_text(score: LabanScore) -> str:
    """Fixed-width staff, latest frame on top, one row per frame.

    A cell shows the event tag at the event's first frame, ``|`` while the
    event lasts and ``.`` where the column is empty.
    """
    T = score.frames
    by_column = _check_events(score, T) if score.events else {}
    grid: dict[str, list[str]] = {}
    for column in score.columns:
        cells = ["."] * T
        prev = None
        for ev in by_column.get(column, []):
            tag = glyph(ev, prev)
            if tag:
                cells[ev.start] = tag
                for t in range(ev.start + 1, ev.end):
                    cells[t] = "|"
            prev = ev
        grid[column] = cells
    widths = [max([len(c)] + [len(x) for x in grid[c]]) for c in score.columns]
    tw = max(len(str(max(T - 1, 0))), 1)
    lines = [f"{SCORE_HEADER} fps={score.fps} frames={T}"]
    lines.append((" " * tw + " | " + " | ".join(c.ljust(w) for c, w in zip(score.columns, widths))).rstrip())
    for t in range(T - 1, -1, -1):
        row = " | ".join(grid[c][t].ljust(w) for c, w in zip(score.columns, widths))
        lines.append(f"{t:>{tw}} | {row}".rstrip())
    return "\n".join(lines) + "\n"


def parse_score_text(text: str) -> LabanScore:
    """Inverse of :func:`render_score_text` for conceptual and numeric columns.

    Event symbols come back from the glyphs, so effort 1 (no glyph) reads as a
    gap and effort 4 reads as 3.
    """
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty score text", 1, 1)
    fields = _parse_header(lines[0], SCORE_HEADER)
    fps, T = header_int(fields, "fps"), header_int(fields, "frames")
    if len(lines) < 2:
        raise ParseError("missing column line", 2, 1)
    columns = tuple(c.strip() for c in lines[1].split(" | ")[1:])
    for c in columns:
        if c not in CONCEPTUAL_COLUMNS and c not in DETAIL_COLUMNS:
            raise UnknownColumn(f"unknown staff column {c!r}")
    body = lines[2:]
    if len(body) != T:
        raise ParseError(f"expected {T} frame rows, found {len(body)}", len(lines), 1)
    cells = [[""] * len(columns) for _ in range(T)]
    for lineno, line in enumerate(body, start=3):
        parts = [p.strip() for p in line.split(" | ")]
        t = T - 1 - (lineno - 3)
        if parts[0] != str(t) or len(parts) - 1 > len(columns):
            raise ParseError(f"bad row for frame {t}", lineno, 1)
        for i, p in enumerate(parts[1:]):
            cells[t][i] = p
    events = []
    for i, column in enumerate(columns):
        t = 0
        prev_sym = None
        while t < T:
            tag = cells[t][i] or "."
            if tag in (".", "|"):
                if tag == "|" and prev_sym is None:
                    raise ParseError(f"continuation without an event in {column}", T - t + 2, 1)
                t += 1
                continue
            s = t
            t += 1
            while t < T and cells[t][i] == "|":
                t += 1
            sym = _glyph_to_symbol(column, tag, prev_sym)
            prev_sym = sym
            events.append(ScoreEvent(column, sym, s, t - s))
    return LabanScore(columns, tuple(events), fps, T)


def _glyph_to_symbol(column: str, tag: str, prev_sym: str | None) -> str:
    if column in CONCEPTUAL_COLUMNS:
        if tag == "HOLD":
            if prev_sym is None:
                raise UnmappedValue(f"HOLD without a preceding position in {column}")
            return cell_symbol(parse_cell_symbol(prev_sym)[0], HOLD)
        parse_cell_symbol(tag)
        return tag
    attr = column.split(":", 1)[1]
    if attr == "elbow":
        parse_cell_symbol(tag)
        return tag
    if tag[:1] not in ("E", "O", "B") or not tag[1:].isdigit():
        raise UnmappedValue(f"bad glyph {tag!r} in {column}")
    return tag[1:]


def scores_equal_on_conceptual(a: LabanScore, b: LabanScore) -> bool:
    keep = set(CONCEPTUAL_COLUMNS)
    ea = sorted((e for e in a.events if e.staff_column in keep), key=lambda e: (e.staff_column, e.start))
    eb = sorted((e for e in b.events if e.staff_column in keep), key=lambda e: (e.staff_column, e.start))
    return ea == eb


def conceptual_events(score: LabanScore, columns: Iterable[str] = tuple(CONCEPTUAL_COLUMNS)) -> list[ScoreEvent]:
    keep = set(columns)
    return [e for e in score.events if e.staff_column in keep]
