"""Conceptual Description (CD) grammar and scripts.

A CD is the fixed sentence ``<group> <moving semantic> in <t> seconds``; the
semantic is one phrase of a closed table (54 support phrases, 81 arm
phrases).  The compact tuple forms are ``(side, index, seconds)`` for support
and ``(index, seconds)`` for a hand.

Phrases map to conceptual symbols through keyword rules, not a lookup table:
direction words set the LMR/BMF axes, level words set the Level and "holds"
sets Hold.  The tables are built so these rules are exhaustive.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .core_model import DYNAMIC, HOLD, BodyPartGroup, InstanceSequence
from .errors import (
    DurationMismatch,
    EmptyScript,
    GrammarError,
    IndexOutOfTable,
    MissingSection,
    TupleError,
    UnknownGroup,
    UnknownSemantic,
)

G = BodyPartGroup

SUPPORT_TABLE: tuple[str, ...] = (
    "steps to rest position",
    "steps forward",
    "steps backward",
    "steps to right",
    "steps to left",
    "steps forward diagonally to right",
    "steps forward diagonally to left",
    "steps backward diagonally to right",
    "steps backward diagonally to left",
    "rises",
    "rises to forward",
    "rises to backward",
    "rises to right",
    "rises to left",
    "rises forward diagonally to right",
    "rises forward diagonally to left",
    "rises backward diagonally to right",
    "rises backward diagonally to left",
    "knee flex",
    "knee flex forward",
    "knee flex backward",
    "knee flex right",
    "knee flex left",
    "knee flex forward diagonally to right",
    "knee flex forward diagonally to left",
    "knee flex backward diagonally to right",
    "knee flex backward diagonally to left",
    "holds in rest position",
    "holds in forward position",
    "holds in backward position",
    "holds in right position",
    "holds in left position",
    "holds in forward diagonally to right position",
    "holds in forward diagonally to left position",
    "holds in backward diagonally to right position",
    "holds in backward diagonally to left position",
    "holds in the raised position",
    "holds in the raised forward position",
    "holds in the raised backward position",
    "holds in the raised right position",
    "holds in the raised left position",
    "holds in the raised forward diagonally to right position",
    "holds in the raised forward diagonally to left position",
    "holds in the raised backward diagonally to right position",
    "holds in the raised backward diagonally to left position",
    "holds in knee-flexed position",
    "holds in knee-flexed forward position",
    "holds in knee-flexed backward position",
    "holds in knee-flexed right position",
    "holds in knee-flexed left position",
    "holds in knee-flexed forward diagonally to right position",
    "holds in knee-flexed forward diagonally to left position",
    "holds in knee-flexed backward diagonally to right position",
    "holds in knee-flexed backward diagonally to left position",
)

ARM_TABLE: tuple[str, ...] = (
    "moves close to shoulder",
    "moves forward",
    "moves backward",
    "moves to right",
    "moves to left",
    "moves forward diagonally to right",
    "moves forward diagonally to left",
    "moves backward diagonally to right",
    "moves backward diagonally to left",
    "rises up",
    "rises to up forward",
    "rises to up backward",
    "rises to up right",
    "rises to up left",
    "rises up forward diagonally to right",
    "rises up forward diagonally to left",
    "rises up backward diagonally to right",
    "rises up backward diagonally to left",
    "lowers down",
    "lowers to down forward",
    "lowers to down backward",
    "lowers to down right",
    "lowers to down left",
    "lowers down forward diagonally to right",
    "lowers down forward diagonally to left",
    "lowers down backward diagonally to right",
    "lowers down backward diagonally to left",
    "holds close to shoulder position",
    "holds forward position",
    "holds backward position",
    "holds right position",
    "holds left position",
    "holds forward diagonally to right position",
    "holds forward diagonally to left position",
    "holds backward diagonally to right position",
    "holds backward diagonally to left position",
    "holds up position",
    "holds up forward position",
    "holds up backward position",
    "holds up right position",
    "holds up left position",
    "holds up forward diagonally to right position",
    "holds up forward diagonally to left position",
    "holds up backward diagonally to right position",
    "holds up backward diagonally to left position",
    "holds low position",
    "holds low forward position",
    "holds low backward position",
    "holds low right position",
    "holds low left position",
    "holds low forward diagonally to right position",
    "holds low forward diagonally to left position",
    "holds low backward diagonally to right position",
    "holds low backward diagonally to left position",
    "moves relatively to previous position",
    "moves relatively forward",
    "moves relatively backward",
    "moves to relatively right",
    "moves to relatively left",
    "moves relatively forward diagonally to right",
    "moves relatively forward diagonally to left",
    "moves relatively backward diagonally to right",
    "moves relatively backward diagonally to left",
    "moves relatively up",
    "moves relatively up forward",
    "moves relatively up backward",
    "moves relatively up right",
    "moves relatively up left",
    "moves relatively up forward diagonally to right",
    "moves relatively up forward diagonally to left",
    "moves relatively up backward diagonally to right",
    "moves relatively up backward diagonally to left",
    "moves relatively low",
    "moves relatively low forward",
    "moves relatively low backward",
    "moves relatively low right",
    "moves relatively low left",
    "moves relatively low forward diagonally to right",
    "moves relatively low forward diagonally to left",
    "moves relatively low backward diagonally to right",
    "moves relatively low backward diagonally to left",
)

SUPPORT_GROUPS = (G.SUPPORT_L, G.SUPPORT_R)
HAND_GROUPS = (G.UPPER_L, G.UPPER_R)
CD_GROUPS = SUPPORT_GROUPS + HAND_GROUPS

GROUP_NAMES = {
    G.SUPPORT_L: "Support Left",
    G.SUPPORT_R: "Support Right",
    G.UPPER_L: "Upper Left",
    G.UPPER_R: "Upper Right",
}
_GROUP_ALIASES = {
    "support left": G.SUPPORT_L,
    "support right": G.SUPPORT_R,
    "upper left": G.UPPER_L,
    "upper right": G.UPPER_R,
    "left foot": G.SUPPORT_L,
    "right foot": G.SUPPORT_R,
    "left hand": G.UPPER_L,
    "right hand": G.UPPER_R,
    "support-l": G.SUPPORT_L,
    "support-r": G.SUPPORT_R,
    "upper-l": G.UPPER_L,
    "upper-r": G.UPPER_R,
    "supportl": G.SUPPORT_L,
    "supportr": G.SUPPORT_R,
    "upperl": G.UPPER_L,
    "upperr": G.UPPER_R,
}
SIDE_GROUP = {"left": G.SUPPORT_L, "right": G.SUPPORT_R}
GROUP_SIDE = {G.SUPPORT_L: "left", G.SUPPORT_R: "right"}


def table_for(group: BodyPartGroup) -> tuple[str, ...]:
    if group in SUPPORT_GROUPS:
        return SUPPORT_TABLE
    if group in HAND_GROUPS:
        return ARM_TABLE
    raise UnknownGroup(f"{group} has no conceptual description table")


def fmt_num(x: float) -> str:
    """Shortest float text without a trailing '.0' (2.0 -> '2', 0.25 -> '0.25')."""
    s = repr(float(x))
    return s[:-2] if s.endswith(".0") else s


def seconds_to_frames(seconds: float, fps: int) -> int:
    """Nearest frame (halves round up), at least one."""
    return max(1, int(math.floor(seconds * fps + 0.5)))


# --------------------------------------------------------------- CDs


@dataclass(frozen=True)
class ConceptualDescription:
    group: BodyPartGroup
    semantic_index: int  # 1-based row of the group's table
    duration_s: float

    def __post_init__(self):
        table = table_for(self.group)
        if not 1 <= self.semantic_index <= len(table):
            raise IndexOutOfTable(f"semantic index {self.semantic_index} outside 1..{len(table)} for {self.group.value}")
        if not (self.duration_s > 0 and math.isfinite(self.duration_s)):
            raise GrammarError(f"duration must be positive, got {self.duration_s}")

    @property
    def phrase(self) -> str:
        return table_for(self.group)[self.semantic_index - 1]


_CD_TAIL = re.compile(r"^(?P<sem>.+?)\s+in\s+(?P<t>[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s+seconds?\s*\.?$")


def _split_group(line: str) -> tuple[BodyPartGroup, str]:
    low = line.strip().lower()
    for alias in sorted(_GROUP_ALIASES, key=len, reverse=True):
        if low.startswith(alias + " "):
            return _GROUP_ALIASES[alias], line.strip()[len(alias) + 1 :]
    head = " ".join(low.split()[:2])
    raise UnknownGroup(f"unknown body-part group at {head!r}")


def parse_cd_text(line: str) -> ConceptualDescription:
    """Parse ``<group> <semantic> in <t> seconds``."""
    group, rest = _split_group(line)
    m = _CD_TAIL.match(rest.strip())
    if not m:
        raise GrammarError(f"expected '<semantic> in <t> seconds', got {rest!r}")
    phrase = " ".join(m.group("sem").lower().split())
    table = table_for(group)
    try:
        idx = table.index(phrase) + 1
    except ValueError:
        raise UnknownSemantic(f"{phrase!r} is not a {group.value} semantic") from None
    return ConceptualDescription(group, idx, float(m.group("t")))


def format_cd(cd: ConceptualDescription) -> str:
    return f"{GROUP_NAMES[cd.group]} {cd.phrase} in {fmt_num(cd.duration_s)} seconds"


def format_tuple(cd: ConceptualDescription) -> str:
    if cd.group in SUPPORT_GROUPS:
        return f"({GROUP_SIDE[cd.group]}, {cd.semantic_index}, {fmt_num(cd.duration_s)})"
    return f"({cd.semantic_index}, {fmt_num(cd.duration_s)})"


def _parse_number(tok: str, what: str, pos: int) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise TupleError(f"{what} {tok!r} is not a number", pos) from None
    if not math.isfinite(v):
        raise TupleError(f"{what} {tok!r} is not finite", pos)
    return v


def _parse_index(tok: str, pos: int, table: Sequence[str], label: str) -> int:
    if not re.fullmatch(r"[0-9]+", tok):
        raise TupleError(f"semantic index {tok!r} is not an integer", pos)
    idx = int(tok)
    if not 1 <= idx <= len(table):
        raise IndexOutOfTable(f"semantic index {idx} outside the {label} table (1..{len(table)})")
    return idx


def _tuple_from_parts(parts: list[tuple[str, int]], hand: BodyPartGroup | None, start: int) -> ConceptualDescription:
    if len(parts) == 3:
        (side, sp), (idx, ip), (secs, tp) = parts
        group = SIDE_GROUP.get(side.lower())
        if group is None:
            raise TupleError(f"support side must be left or right, got {side!r}", sp)
        index = _parse_index(idx, ip, SUPPORT_TABLE, "support")
    elif len(parts) == 2:
        if hand is None:
            raise TupleError("a two-element tuple needs a hand group", start)
        (idx, ip), (secs, tp) = parts
        group = hand
        index = _parse_index(idx, ip, ARM_TABLE, "arm")
    else:
        raise TupleError(f"expected 2 or 3 elements, got {len(parts)}", start)
    duration = _parse_number(secs, "duration", tp)
    if duration <= 0:
        raise TupleError(f"duration must be positive, got {secs}", tp)
    return ConceptualDescription(group, index, duration)


def _split_tuple_body(text: str, open_pos: int, close_pos: int) -> list[tuple[str, int]]:
    parts = []
    pos = open_pos + 1
    for chunk in text[open_pos + 1 : close_pos].split(","):
        lead = len(chunk) - len(chunk.lstrip())
        parts.append((chunk.strip(), pos + lead))
        pos += len(chunk) + 1
    return parts


def parse_tuple(text: str, hand: BodyPartGroup | None = None) -> ConceptualDescription:
    """Parse ``(side, index, seconds)``, or ``(index, seconds)`` for ``hand``."""
    s = text.strip()
    lead = len(text) - len(text.lstrip())
    if not (s.startswith("(") and s.endswith(")")):
        raise TupleError(f"expected a parenthesized tuple, got {text!r}", lead)
    if hand is not None and hand not in HAND_GROUPS:
        raise UnknownGroup(f"{hand} is not a hand group")
    parts = _split_tuple_body(s, 0, len(s) - 1)
    return _tuple_from_parts([(p, lead + q) for p, q in parts], hand, lead)


# ------------------------------------------------------------ symbols


@dataclass(frozen=True)
class SymbolBlock:
    lmr: str
    bmf: str
    level: str
    hold: str
    frames: int

    @property
    def cell(self) -> tuple[str, str, str]:
        return (self.lmr, self.bmf, self.level)


_WORD = re.compile(r"[a-z]+(?:-[a-z]+)*")
CARRY = None  # marks the phrase that keeps the previous position


def phrase_symbols(phrase: str):
    """(cell, hold) for a table phrase, or ``(None, hold)`` when it keeps the previous cell."""
    words = set(_WORD.findall(phrase.lower()))
    hold = HOLD if "holds" in words else DYNAMIC
    if "previous" in words:
        return CARRY, hold
    bmf = "F" if "forward" in words else "B" if "backward" in words else "M"
    lmr = "R" if "right" in words else "L" if "left" in words else "M"
    if words & {"rises", "raised", "up"}:
        level = "Hi"
    elif words & {"knee", "knee-flexed", "lowers", "low", "down"}:
        level = "Lo"
    else:
        level = "Mi"
    return (lmr, bmf, level), hold


REST_CELL = ("M", "M", "Mi")


def cd_to_symbols(cd: ConceptualDescription, fps: int = 20, previous: Sequence[str] = REST_CELL) -> SymbolBlock:
    cell, hold = phrase_symbols(cd.phrase)
    if cell is CARRY:
        cell = tuple(previous)
    return SymbolBlock(*cell, hold, seconds_to_frames(cd.duration_s, fps))


def symbols_to_cd(group: BodyPartGroup, cell: Sequence[str], hold: str, duration_s: float) -> ConceptualDescription:
    """Lowest-index phrase of the group's table that maps to ``(cell, hold)``."""
    target = (tuple(cell), hold)
    for i, phrase in enumerate(table_for(group), start=1):
        if phrase_symbols(phrase) == target:
            return ConceptualDescription(group, i, duration_s)
    raise UnknownSemantic(f"no {group.value} phrase for {cell} {hold}")


# ------------------------------------------------------------ scripts

SupportEntry = tuple  # one CD, or two concurrent CDs (a `while` pair)


@dataclass(frozen=True)
class ConceptScript:
    support: tuple[SupportEntry, ...] = ()
    left_hand: tuple[ConceptualDescription, ...] = ()
    right_hand: tuple[ConceptualDescription, ...] = ()
    caption: str = ""

    def __post_init__(self):
        support = tuple(tuple(e) if isinstance(e, (tuple, list)) else (e,) for e in self.support)
        for entry in support:
            if not 1 <= len(entry) <= 2:
                raise GrammarError("a support entry holds one CD or a `while` pair")
            if any(cd.group not in SUPPORT_GROUPS for cd in entry):
                raise GrammarError("support entries must use Support Left/Right")
            if len(entry) == 2 and entry[0].group == entry[1].group:
                raise GrammarError("a `while` pair needs one CD per foot")
        object.__setattr__(self, "support", support)
        for name, group in (("left_hand", G.UPPER_L), ("right_hand", G.UPPER_R)):
            cds = tuple(getattr(self, name))
            if any(cd.group != group for cd in cds):
                raise GrammarError(f"{name} entries must use {GROUP_NAMES[group]}")
            object.__setattr__(self, name, cds)

    def movement_count(self) -> int:
        return len(self.support)


def format_support_list(entries: Iterable[SupportEntry]) -> str:
    return ", ".join(" while ".join(format_tuple(cd) for cd in entry) for entry in entries)


def format_hand_list(cds: Iterable[ConceptualDescription]) -> str:
    return ", ".join(format_tuple(cd) for cd in cds)


def serialize_script(script: ConceptScript) -> str:
    """Block form: ``[Caption]``, ``[Support]``, ``[Left hand]``, ``[Right hand]`` lines."""
    return (
        f"[Caption] {script.caption}".rstrip()
        + "\n"
        + f"[Support] {format_support_list(script.support)}".rstrip()
        + "\n"
        + f"[Left hand] {format_hand_list(script.left_hand)}".rstrip()
        + "\n"
        + f"[Right hand] {format_hand_list(script.right_hand)}".rstrip()
        + "\n"
    )


SECTIONS = ("Caption", "Support", "Left hand", "Right hand")
_SECTION = re.compile(r"\[(Caption|Support|Left hand|Right hand)\]", re.IGNORECASE)


def _find_sections(text: str) -> dict[str, tuple[int, str]]:
    found: dict[str, tuple[int, str]] = {}
    marks = list(_SECTION.finditer(text))
    for i, m in enumerate(marks):
        name = next(s for s in SECTIONS if s.lower() == m.group(1).lower())
        end = marks[i + 1].start() if i + 1 < len(marks) else len(text)
        if name in found:
            raise GrammarError(f"section [{name}] appears twice")
        found[name] = (m.end(), text[m.end() : end])
    return found


def parse_tuple_list(text: str, hand: BodyPartGroup | None = None, offset: int = 0) -> list[SupportEntry]:
    """Parse ``(a), (b) while (c), ...``; offsets in errors are relative to the full input."""
    entries: list[SupportEntry] = []
    pos = 0
    n = len(text)

    def skip_ws(p):
        while p < n and text[p].isspace():
            p += 1
        return p

    def read_tuple(p):
        if p >= n or text[p] != "(":
            raise TupleError("expected '('", offset + p)
        close = text.find(")", p)
        if close < 0:
            raise TupleError("unclosed tuple", offset + p)
        parts = _split_tuple_body(text, p, close)
        cd = _tuple_from_parts([(s, offset + q) for s, q in parts], hand, offset + p)
        return cd, close + 1

    pos = skip_ws(pos)
    if pos >= n:
        return entries
    while True:
        cd, pos = read_tuple(pos)
        entry = [cd]
        pos = skip_ws(pos)
        if text.startswith("while", pos):
            if hand is not None:
                raise TupleError("`while` is only allowed on the support line", offset + pos)
            pos = skip_ws(pos + len("while"))
            cd2, pos = read_tuple(pos)
            entry.append(cd2)
            if cd2.group == cd.group:
                raise TupleError("a `while` pair needs one tuple per foot", offset + pos)
            pos = skip_ws(pos)
        entries.append(tuple(entry))
        if pos >= n:
            return entries
        if text[pos] != ",":
            raise TupleError(f"expected ',' between tuples, got {text[pos]!r}", offset + pos)
        pos = skip_ws(pos + 1)
        if pos >= n:
            return entries  # tolerate a trailing comma


def parse_script(text: str) -> ConceptScript:
    """Parse the block form; every section but the caption is required."""
    sections = _find_sections(text)
    for name in SECTIONS[1:]:
        if name not in sections:
            raise MissingSection(f"reply has no [{name}] section")
    caption = sections.get("Caption", (0, ""))[1].strip()
    s_off, s_text = sections["Support"]
    support = parse_tuple_list(s_text.strip(), None, s_off + len(s_text) - len(s_text.lstrip()))
    hands = []
    for name, group in (("Left hand", G.UPPER_L), ("Right hand", G.UPPER_R)):
        off, body = sections[name]
        items = parse_tuple_list(body.strip(), group, off + len(body) - len(body.lstrip()))
        hands.append(tuple(e[0] for e in items))
    return ConceptScript(tuple(support), hands[0], hands[1], " ".join(caption.split()))


def script_to_instances(script: ConceptScript, fps: int = 20, tolerance_frames: int = 1) -> InstanceSequence:
    """Conceptual attributes of a script; detail attributes stay at their defaults.

    Support entries run one after another; the foot that is not named holds
    its last position.  In a `while` pair both feet start together and the
    shorter one holds for the rest of the pair.  Parts shorter than the
    longest one are padded by extending their last frame.
    """
    if not (script.support or script.left_hand or script.right_hand):
        raise EmptyScript("script has no movements")

    tracks: dict[BodyPartGroup, list[tuple[tuple, str]]] = {g: [] for g in CD_GROUPS}
    last = {g: (REST_CELL, HOLD) for g in CD_GROUPS}
    for entry in script.support:
        blocks = {cd.group: cd_to_symbols(cd, fps, last[cd.group][0]) for cd in entry}
        n = max(b.frames for b in blocks.values())
        for g in SUPPORT_GROUPS:
            b = blocks.get(g)
            if b is None:
                tracks[g].extend([(last[g][0], HOLD)] * n)
                last[g] = (last[g][0], HOLD)
                continue
            tracks[g].extend([(b.cell, b.hold)] * b.frames)
            tracks[g].extend([(b.cell, HOLD)] * (n - b.frames))
            last[g] = (b.cell, HOLD if n > b.frames else b.hold)
    for group, cds in ((G.UPPER_L, script.left_hand), (G.UPPER_R, script.right_hand)):
        for cd in cds:
            b = cd_to_symbols(cd, fps, last[group][0])
            tracks[group].extend([(b.cell, b.hold)] * b.frames)
            last[group] = (b.cell, b.hold)

    parts = {
        "support": len(tracks[G.SUPPORT_L]),
        "left hand": len(tracks[G.UPPER_L]),
        "right hand": len(tracks[G.UPPER_R]),
    }
    present = {k: v for k, v in parts.items() if v > 0}
    T = max(present.values())
    if T - min(present.values()) > tolerance_frames:
        raise DurationMismatch(f"part lengths differ by more than {tolerance_frames} frame(s): {present}")

    columns = {}
    for g in CD_GROUPS:
        track = tracks[g]
        fill = track[-1] if track else (REST_CELL, HOLD)
        track = track + [fill] * (T - len(track))
        columns[(g, "dir_lmr")] = [c[0] for c, _ in track]
        columns[(g, "dir_bmf")] = [c[1] for c, _ in track]
        columns[(g, "level")] = [c[2] for c, _ in track]
        columns[(g, "hold")] = [h for _, h in track]
    return InstanceSequence.from_columns(T, columns, fps)


def script_duration_frames(script: ConceptScript, fps: int = 20) -> dict[str, int]:
    """Frame count of each part, as :func:`script_to_instances` lays them out."""
    sup = sum(max(seconds_to_frames(cd.duration_s, fps) for cd in e) for e in script.support)
    lh = sum(seconds_to_frames(cd.duration_s, fps) for cd in script.left_hand)
    rh = sum(seconds_to_frames(cd.duration_s, fps) for cd in script.right_hand)
    return {"support": sup, "left hand": lh, "right hand": rh}


def random_script(rng: random.Random, movements: int = 4, unit_s: float = 0.25, min_units: int = 2) -> ConceptScript:
    """Random script whose parts all last the same whole number of ``unit_s`` steps.

    Every CD lasts at least ``min_units`` units; support entries are `while`
    pairs one time in four.  The caller owns the RNG so results are
    reproducible from a seed.
    """
    if movements < 1:
        raise ValueError("movements must be at least 1")
    support = []
    total_units = 0
    for _ in range(movements):
        side = rng.choice(SUPPORT_GROUPS)
        units = rng.randint(min_units, min_units + 2)
        cd = ConceptualDescription(side, rng.randint(1, len(SUPPORT_TABLE)), units * unit_s)
        if rng.random() < 0.25:
            other = G.SUPPORT_R if side == G.SUPPORT_L else G.SUPPORT_L
            units2 = rng.randint(min_units, units)
            cd2 = ConceptualDescription(other, rng.randint(1, len(SUPPORT_TABLE)), units2 * unit_s)
            support.append((cd, cd2))
        else:
            support.append((cd,))
        total_units += units

    def hand_list(group):
        left = total_units
        out = []
        while left > 0:
            units = left if left < 2 * min_units else rng.randint(min_units, min(left - min_units, min_units + 3))
            out.append(ConceptualDescription(group, rng.randint(1, len(ARM_TABLE)), units * unit_s))
            left -= units
        return tuple(out)

    return ConceptScript(tuple(support), hand_list(G.UPPER_L), hand_list(G.UPPER_R), "random script")
