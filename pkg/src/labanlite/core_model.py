"""Symbol taxonomy, body-part groups, dense instance sequences and the codebook.

A frame of an :class:`InstanceSequence` is a flat row holding one value for
every attribute field of every body-part group (37 fields in total).  The
codebook assigns each (group, field, value) triple a unique integer in
``1..158``; a frame encodes to a 158-bit indicator vector with exactly one bit
set per field.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import (
    AmbiguousActivation,
    MissingAttribute,
    OutOfRange,
    ParseError,
    UnmappedValue,
)


class SymbolKind(str, Enum):
    DIRECTION_LMR = "DirectionLMR"
    DIRECTION_BMF = "DirectionBMF"
    LEVEL = "Level"
    HOLD = "Hold"
    ORIENTATION = "Orientation"
    BEND = "Bend"
    MOVING_EFFORT = "MovingEffort"

    @property
    def domain(self) -> tuple:
        """Allowed values in codebook order (position k is code offset k)."""
        return _DOMAINS[self]


_DOMAINS = {
    SymbolKind.DIRECTION_LMR: ("L", "M", "R"),
    SymbolKind.DIRECTION_BMF: ("B", "M", "F"),
    SymbolKind.LEVEL: ("Lo", "Mi", "Hi"),
    SymbolKind.HOLD: ("hold", "dynamic"),
    SymbolKind.ORIENTATION: tuple(range(8)),
    SymbolKind.BEND: tuple(range(6)),
    SymbolKind.MOVING_EFFORT: tuple(range(5)),
}

HOLD = "hold"
DYNAMIC = "dynamic"


class BodyPartGroup(str, Enum):
    SUPPORT_L = "SupportL"
    SUPPORT_R = "SupportR"
    SUPPORT_BOTH = "SupportBoth"
    UPPER_L = "UpperL"
    UPPER_R = "UpperR"
    TORSO = "Torso"


G = BodyPartGroup
K = SymbolKind

# Groups that carry Direction/Level/Hold; the other two only carry details.
CONCEPTUAL_GROUPS = (G.SUPPORT_L, G.SUPPORT_R, G.UPPER_L, G.UPPER_R)
CONCEPTUAL_FIELDS = ("dir_lmr", "dir_bmf", "level")


@dataclass(frozen=True)
class AttributeField:
    group: BodyPartGroup
    name: str
    kind: SymbolKind
    joint: str
    is_conceptual: bool
    staff_column: str
    first_code: int

    @property
    def codes(self) -> range:
        return range(self.first_code, self.first_code + len(self.kind.domain))


# Codebook table rows in code order: (group, field, joint, kind, conceptual, staff column).
_TABLE = (
    (G.SUPPORT_L, "dir_lmr", "Left foot", K.DIRECTION_LMR, True, "Left support"),
    (G.SUPPORT_L, "dir_bmf", "Left foot", K.DIRECTION_BMF, True, "Left support"),
    (G.SUPPORT_L, "level", "Left foot", K.LEVEL, True, "Left support"),
    (G.SUPPORT_L, "knee_bend", "Left knee", K.BEND, False, "Left leg gesture"),
    (G.SUPPORT_L, "hip_bend", "Left hip", K.BEND, False, "Left leg gesture"),
    (G.SUPPORT_L, "hold", "Left foot", K.HOLD, True, "Left support"),
    (G.SUPPORT_R, "dir_lmr", "Right foot", K.DIRECTION_LMR, True, "Right support"),
    (G.SUPPORT_R, "dir_bmf", "Right foot", K.DIRECTION_BMF, True, "Right support"),
    (G.SUPPORT_R, "level", "Right foot", K.LEVEL, True, "Right support"),
    (G.SUPPORT_R, "knee_bend", "Right knee", K.BEND, False, "Right leg gesture"),
    (G.SUPPORT_R, "hip_bend", "Right hip", K.BEND, False, "Right leg gesture"),
    (G.SUPPORT_R, "hold", "Right foot", K.HOLD, True, "Right support"),
    (G.SUPPORT_BOTH, "orient_horiz", "Pelvis", K.ORIENTATION, False, "Body (Whole)"),
    (G.SUPPORT_BOTH, "orient_vert", "Pelvis", K.ORIENTATION, False, "Body (Whole)"),
    (G.SUPPORT_BOTH, "effort_horiz", "Pelvis", K.MOVING_EFFORT, False, "Body (Whole)"),
    (G.SUPPORT_BOTH, "effort_vert", "Pelvis", K.MOVING_EFFORT, False, "Body (Whole)"),
    (G.UPPER_L, "dir_lmr", "Left hand", K.DIRECTION_LMR, True, "Left hand"),
    (G.UPPER_L, "dir_bmf", "Left hand", K.DIRECTION_BMF, True, "Left hand"),
    (G.UPPER_L, "level", "Left hand", K.LEVEL, True, "Left hand"),
    (G.UPPER_L, "elbow_bend", "Left elbow", K.BEND, False, "Left arm"),
    (G.UPPER_L, "shoulder_bend", "Left shoulder", K.BEND, False, "Left arm"),
    (G.UPPER_L, "hold", "Left hand", K.HOLD, True, "Left hand"),
    (G.UPPER_R, "dir_lmr", "Right hand", K.DIRECTION_LMR, True, "Right hand"),
    (G.UPPER_R, "dir_bmf", "Right hand", K.DIRECTION_BMF, True, "Right hand"),
    (G.UPPER_R, "level", "Right hand", K.LEVEL, True, "Right hand"),
    (G.UPPER_R, "elbow_bend", "Right elbow", K.BEND, False, "Right arm"),
    (G.UPPER_R, "shoulder_bend", "Right shoulder", K.BEND, False, "Right arm"),
    (G.UPPER_R, "hold", "Right hand", K.HOLD, True, "Right hand"),
    (G.TORSO, "head_orient_horiz", "Head", K.ORIENTATION, False, "Head"),
    (G.TORSO, "head_orient_vert", "Head", K.ORIENTATION, False, "Head"),
    (G.TORSO, "spine_bend", "Spine2", K.BEND, False, "Body (Whole)"),
    (G.UPPER_L, "elbow_dir_lmr", "Left elbow", K.DIRECTION_LMR, False, "Left arm"),
    (G.UPPER_L, "elbow_dir_bmf", "Left elbow", K.DIRECTION_BMF, False, "Left arm"),
    (G.UPPER_L, "elbow_level", "Left elbow", K.LEVEL, False, "Left arm"),
    (G.UPPER_R, "elbow_dir_lmr", "Right elbow", K.DIRECTION_LMR, False, "Right arm"),
    (G.UPPER_R, "elbow_dir_bmf", "Right elbow", K.DIRECTION_BMF, False, "Right arm"),
    (G.UPPER_R, "elbow_level", "Right elbow", K.LEVEL, False, "Right arm"),
)


def _build_fields() -> tuple[AttributeField, ...]:
    by_table = []
    code = 1
    for group, name, joint, kind, conceptual, staff in _TABLE:
        by_table.append(AttributeField(group, name, kind, joint, conceptual, staff, code))
        code += len(kind.domain)
    # Row layout groups the fields by body-part group, keeping table order inside a group.
    order = {g: i for i, g in enumerate(BodyPartGroup)}
    return tuple(sorted(by_table, key=lambda f: (order[f.group], f.first_code)))


FIELDS: tuple[AttributeField, ...] = _build_fields()
N_FIELDS = len(FIELDS)
FIELD_INDEX: dict[tuple[BodyPartGroup, str], int] = {
    (f.group, f.name): i for i, f in enumerate(FIELDS)
}
GROUP_FIELDS: dict[BodyPartGroup, tuple[AttributeField, ...]] = {
    g: tuple(f for f in FIELDS if f.group is g) for g in BodyPartGroup
}

_DEFAULTS = {
    K.DIRECTION_LMR: "M",
    K.DIRECTION_BMF: "M",
    K.LEVEL: "Mi",
    K.HOLD: HOLD,
    K.ORIENTATION: 0,
    K.BEND: 0,
    K.MOVING_EFFORT: 0,
}


def default_value(field: AttributeField):
    """Rest value: feet together, hands lowered, held, no bend, no effort."""
    return _DEFAULTS[field.kind]


REST_ROW: tuple = tuple(default_value(f) for f in FIELDS)


def field_index(group: BodyPartGroup | str, name: str) -> int:
    try:
        return FIELD_INDEX[(BodyPartGroup(group), name)]
    except (KeyError, ValueError):
        raise KeyError(f"no attribute field {group}.{name}") from None


# ---------------------------------------------------------------- codebook


@dataclass(frozen=True)
class CodebookEntry:
    index: int
    group: BodyPartGroup
    joint: str
    field: str
    kind: SymbolKind
    value: object
    is_conceptual: bool
    staff_column: str


class Codebook:
    def __init__(self, entries: Sequence[CodebookEntry]):
        self.entries = tuple(entries)
        self._lookup = {(e.group, e.field, e.value): e.index for e in self.entries}

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[CodebookEntry]:
        return iter(self.entries)

    def entry(self, index: int) -> CodebookEntry:
        if not 1 <= index <= len(self.entries):
            raise OutOfRange(f"code {index} outside 1..{len(self.entries)}")
        return self.entries[index - 1]

    def index_of(self, group: BodyPartGroup | str, field: str, value) -> int:
        try:
            return self._lookup[(BodyPartGroup(group), field, value)]
        except (KeyError, ValueError):
            raise UnmappedValue(f"{group}.{field}={value!r} has no code") from None

    def conceptual(self) -> tuple[CodebookEntry, ...]:
        return tuple(e for e in self.entries if e.is_conceptual)


@lru_cache(maxsize=None)
def build_codebook() -> Codebook:
    entries = []
    for f in sorted(FIELDS, key=lambda f: f.first_code):
        for offset, value in enumerate(f.kind.domain):
            entries.append(
                CodebookEntry(
                    index=f.first_code + offset,
                    group=f.group,
                    joint=f.joint,
                    field=f.name,
                    kind=f.kind,
                    value=value,
                    is_conceptual=f.is_conceptual,
                    staff_column=f.staff_column,
                )
            )
    return Codebook(entries)


N_CODES = sum(len(f.kind.domain) for f in FIELDS)


# ------------------------------------------------------------ instances


@dataclass(frozen=True)
class LabanInstance:
    t: int
    group: BodyPartGroup
    attribute: int  # 1-based position inside the group's field list
    value: object


@dataclass(frozen=True)
class InstanceSequence:
    """Dense T x 37 grid of symbol values; row layout follows ``FIELDS``."""

    rows: tuple[tuple, ...]
    fps: int = 20

    def __post_init__(self):
        rows = tuple(tuple(r) for r in self.rows)
        if not rows:
            raise MissingAttribute("an instance sequence needs at least one frame")
        for t, r in enumerate(rows):
            if len(r) != N_FIELDS:
                raise MissingAttribute(f"frame {t} has {len(r)} fields, expected {N_FIELDS}")
        object.__setattr__(self, "rows", rows)
        if self.fps <= 0:
            raise ValueError("fps must be positive")

    @property
    def T(self) -> int:
        return len(self.rows)

    def __len__(self) -> int:
        return len(self.rows)

    def value(self, t: int, group: BodyPartGroup | str, name: str):
        return self.rows[t][field_index(group, name)]

    def column(self, group: BodyPartGroup | str, name: str) -> tuple:
        i = field_index(group, name)
        return tuple(r[i] for r in self.rows)

    def conceptual_tuples(self, group: BodyPartGroup | str) -> list[tuple[str, str, str]]:
        """Per-frame (DirectionLMR, DirectionBMF, Level) of one group."""
        i, j, k = (field_index(group, n) for n in CONCEPTUAL_FIELDS)
        return [(r[i], r[j], r[k]) for r in self.rows]

    def instances(self) -> Iterator[LabanInstance]:
        positions = {f: GROUP_FIELDS[f.group].index(f) + 1 for f in FIELDS}
        for t, r in enumerate(self.rows):
            for f, v in zip(FIELDS, r):
                yield LabanInstance(t, f.group, positions[f], v)

    def with_columns(self, columns: Mapping[tuple[BodyPartGroup, str], Sequence]) -> "InstanceSequence":
        rows = [list(r) for r in self.rows]
        for (group, name), values in columns.items():
            i = field_index(group, name)
            if len(values) != len(rows):
                raise ValueError(f"column {group}.{name} has {len(values)} frames, expected {len(rows)}")
            for r, v in zip(rows, values):
                r[i] = v
        return InstanceSequence(tuple(map(tuple, rows)), self.fps)

    @classmethod
    def rest(cls, T: int, fps: int = 20) -> "InstanceSequence":
        return cls((REST_ROW,) * T, fps)

    @classmethod
    def from_columns(
        cls, T: int, columns: Mapping[tuple[BodyPartGroup, str], Sequence], fps: int = 20
    ) -> "InstanceSequence":
        """Start from rest defaults and overwrite the given columns."""
        return cls.rest(T, fps).with_columns(columns)


def _value_codes() -> list[dict]:
    cb = build_codebook()
    return [{v: cb.index_of(f.group, f.name, v) for v in f.kind.domain} for f in FIELDS]


def instances_to_indicators(seq: InstanceSequence | Iterable[Sequence]) -> list[np.ndarray]:
    """One boolean vector of length 158 per frame; bit ``n-1`` is code ``n``."""
    rows = seq.rows if isinstance(seq, InstanceSequence) else list(seq)
    lookups = _value_codes()
    out = []
    for t, r in enumerate(rows):
        if len(r) != N_FIELDS:
            raise UnmappedValue(f"frame {t} has {len(r)} fields, expected {N_FIELDS}")
        v = np.zeros(N_CODES, dtype=bool)
        for f, lookup, value in zip(FIELDS, lookups, r):
            code = lookup.get(value)
            if code is None or type(value) is bool:
                raise UnmappedValue(f"frame {t}: {f.group.value}.{f.name}={value!r} has no code")
            v[code - 1] = True
        out.append(v)
    return out


def indicators_to_instances(vs: Iterable[Sequence[bool]], fps: int = 20) -> InstanceSequence:
    rows = []
    for t, v in enumerate(vs):
        bits = np.asarray(v, dtype=bool)
        if bits.shape != (N_CODES,):
            raise MissingAttribute(f"frame {t}: indicator has shape {bits.shape}, expected ({N_CODES},)")
        row = []
        for f in FIELDS:
            on = np.flatnonzero(bits[f.first_code - 1 : f.first_code - 1 + len(f.kind.domain)])
            if len(on) == 0:
                raise MissingAttribute(f"frame {t}: no code active for {f.group.value}.{f.name}")
            if len(on) > 1:
                codes = ", ".join(str(f.first_code + int(k)) for k in on)
                raise AmbiguousActivation(f"frame {t}: codes {codes} all active for {f.group.value}.{f.name}")
            row.append(f.kind.domain[int(on[0])])
        rows.append(tuple(row))
    return InstanceSequence(tuple(rows), fps)


# --------------------------------------------------------- serialization

INSTANCE_HEADER = "#labanlite-instances v1"


def dump_instances(seq: InstanceSequence) -> str:
    lines = [f"{INSTANCE_HEADER} fps={seq.fps} frames={seq.T}"]
    keys = [f"{f.group.value}.{f.name}" for f in FIELDS]
    for t, r in enumerate(seq.rows):
        lines.append(f"{t}|" + ";".join(f"{k}={v}" for k, v in zip(keys, r)))
    return "\n".join(lines) + "\n"


def _parse_header(line: str, magic: str) -> dict[str, str]:
    if not line.startswith(magic):
        raise ParseError(f"expected header starting with {magic!r}", 1, 1)
    fields = {}
    col = len(magic) + 2
    for token in line[len(magic):].split():
        key, sep, val = token.partition("=")
        if not sep:
            raise ParseError(f"malformed header token {token!r}", 1, col)
        fields[key] = val
        col += len(token) + 1
    return fields


def header_int(fields: dict[str, str], key: str) -> int:
    try:
        value = int(fields[key])
    except (KeyError, ValueError):
        raise ParseError(f"header needs integer {key}=", 1, 1) from None
    if value < 0:
        raise ParseError(f"header {key} must be non-negative", 1, 1)
    return value


def load_instances(text: str) -> InstanceSequence:
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty input", 1, 1)
    head = _parse_header(lines[0], INSTANCE_HEADER)
    fps = header_int(head, "fps")
    frames = header_int(head, "frames")
    keyed = {f"{f.group.value}.{f.name}": (i, f) for i, f in enumerate(FIELDS)}
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        stamp, bar, body = line.partition("|")
        if not bar or stamp.strip() != str(len(rows)):
            raise ParseError(f"expected frame index {len(rows)}", lineno, 1)
        row: list = [None] * N_FIELDS
        col = len(stamp) + 2
        for item in body.split(";"):
            key, eq, raw = item.partition("=")
            if not eq or key not in keyed:
                raise ParseError(f"unknown or malformed field {item!r}", lineno, col)
            i, f = keyed[key]
            if row[i] is not None:
                raise ParseError(f"duplicate field {key}", lineno, col)
            value = _decode_value(f, raw)
            if value not in f.kind.domain:
                raise ParseError(f"value {raw!r} not allowed for {key}", lineno, col + len(key) + 1)
            row[i] = value
            col += len(item) + 1
        missing = [FIELDS[i] for i, v in enumerate(row) if v is None]
        if missing:
            f = missing[0]
            raise ParseError(f"missing field {f.group.value}.{f.name}", lineno, col)
        rows.append(tuple(row))
    if len(rows) != frames:
        raise ParseError(f"header says {frames} frames, found {len(rows)}", len(lines), 1)
    return InstanceSequence(tuple(rows), fps)


def _decode_value(f: AttributeField, raw: str):
    if isinstance(f.kind.domain[0], int):
        try:
            return int(raw)
        except ValueError:
            return raw
    return raw
