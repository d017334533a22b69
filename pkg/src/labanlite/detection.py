"""Motion -> LabanLite instances: segmentation, frame-wise extraction, aggregation.

All geometry is read in canonical space.  (a, b, c) are the x, y, z offsets
of a joint from the pelvis; x points to the body's left, -y is forward and
z is up.  Right-side joints are classified on the mirrored offset (-a) and
their left/right labels swapped, so both sides share one set of cutoffs.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core_model import (
    DYNAMIC,
    FIELDS,
    GROUP_FIELDS,
    HOLD,
    BodyPartGroup,
    InstanceSequence,
)
from .errors import EmptyInterval, ParseError, TooShort
from .motion_io import J, CanonicalPose, MotionSequence, canonical_frames

G = BodyPartGroup


@dataclass(frozen=True)
class ThresholdConfig:
    # lower body (feet, knees)
    lower_a_right: float = -0.1  # a < this -> R
    lower_a_left: float = 0.3  # a > this -> L
    lower_b_forward: float = -0.15  # b < this -> F
    lower_b_backward: float = -0.05  # b > this -> B
    lower_c_low: float = -0.8  # lower_c_low < c < lower_c_high -> Lo
    lower_c_high: float = 0.0  # c > this -> Hi; anything else Mi
    # upper body (hands, elbows)
    upper_a_right: float = -0.1
    upper_a_left: float = 0.3
    upper_b_forward: float = -0.2
    upper_b_backward: float = 0.1
    upper_c_low: float = -0.2  # c < this -> Lo
    upper_c_high: float = 0.1  # c > this -> Hi
    # hold: end-effector speed (m/frame) strictly below these is hold
    hold_feet: float = 0.015
    hold_hands: float = 0.0005
    bend_bin_deg: float = 30.0
    orientation_bin_deg: float = 45.0
    # pelvis speed (m/s) upper edges of effort labels 0..3; above the last is 4
    effort_bins: tuple[float, ...] = (0.1, 0.5, 1.0, 2.0)
    min_run: int = 2

    @classmethod
    def from_text(cls, text: str) -> "ThresholdConfig":
        """Parse ``key = value`` lines; ``#`` starts a comment."""
        known = {f.name: f for f in fields(cls)}
        updates = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, eq, val = (s.strip() for s in line.partition("="))
            if not eq or key not in known:
                raise ParseError(f"unknown threshold {key!r}", lineno, 1)
            try:
                if key == "effort_bins":
                    updates[key] = tuple(float(v) for v in val.split(","))
                elif key == "min_run":
                    updates[key] = int(val)
                else:
                    updates[key] = float(val)
            except ValueError:
                raise ParseError(f"bad value for {key}: {val!r}", lineno, raw.index("=") + 2) from None
        cfg = replace(cls(), **updates)
        if len(cfg.effort_bins) != 4 or list(cfg.effort_bins) != sorted(cfg.effort_bins):
            raise ParseError("effort_bins needs 4 increasing values", 1, 1)
        if cfg.min_run < 1:
            raise ParseError("min_run must be at least 1", 1, 1)
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "ThresholdConfig":
        return cls.from_text(Path(path).read_text())


DEFAULT_THRESHOLDS = ThresholdConfig()


# ------------------------------------------------------- scalar cutoffs

_LMR = ("L", "M", "R")
_BMF = ("B", "M", "F")
_LEVEL = ("Lo", "Mi", "Hi")


def lower_level_index(c: np.ndarray, cfg: ThresholdConfig) -> np.ndarray:
    """Lower-body level, applied exactly as published.

    ``lower_c_low < c < lower_c_high`` is Lo, ``c > lower_c_high`` is Hi and
    everything else (including c <= lower_c_low and c == 0) is Mi.  Kept in
    one place so the rule can be patched if the cutoffs turn out to be a typo.
    """
    c = np.asarray(c, dtype=float)
    lo = (c < cfg.lower_c_high) & (c > cfg.lower_c_low)
    return np.where(lo, 0, np.where(c > cfg.lower_c_high, 2, 1))


def upper_level_index(c: np.ndarray, cfg: ThresholdConfig) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    return np.where(c < cfg.upper_c_low, 0, np.where(c > cfg.upper_c_high, 2, 1))


def lmr_index(a: np.ndarray, right_side: bool, cut_right: float, cut_left: float) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if right_side:
        a = -a
    idx = np.where(a < cut_right, 2, np.where(a > cut_left, 0, 1))
    return 2 - idx if right_side else idx


def bmf_index(b: np.ndarray, cut_forward: float, cut_backward: float) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    return np.where(b < cut_forward, 2, np.where(b > cut_backward, 0, 1))


def cell_indices(offsets: np.ndarray, right_side: bool, upper: bool, cfg: ThresholdConfig = DEFAULT_THRESHOLDS):
    """(lmr, bmf, level) index arrays for pelvis-relative offsets of shape (..., 3)."""
    o = np.asarray(offsets, dtype=float)
    a, b, c = o[..., 0], o[..., 1], o[..., 2]
    if upper:
        return (
            lmr_index(a, right_side, cfg.upper_a_right, cfg.upper_a_left),
            bmf_index(b, cfg.upper_b_forward, cfg.upper_b_backward),
            upper_level_index(c, cfg),
        )
    return (
        lmr_index(a, right_side, cfg.lower_a_right, cfg.lower_a_left),
        bmf_index(b, cfg.lower_b_forward, cfg.lower_b_backward),
        lower_level_index(c, cfg),
    )


def classify_offset(offset: Sequence[float], right_side: bool, upper: bool, cfg: ThresholdConfig = DEFAULT_THRESHOLDS):
    """Conceptual cell (DirectionLMR, DirectionBMF, Level) of one offset."""
    i, j, k = cell_indices(np.asarray(offset, dtype=float), right_side, upper, cfg)
    return _LMR[int(i)], _BMF[int(j)], _LEVEL[int(k)]


def bend_bin(angle_deg, cfg: ThresholdConfig = DEFAULT_THRESHOLDS):
    """floor(angle / 30 deg), clamped to 0..5."""
    return np.clip(np.floor(np.asarray(angle_deg, dtype=float) / cfg.bend_bin_deg), 0, 5).astype(int)


def orientation_bin(angle_deg, cfg: ThresholdConfig = DEFAULT_THRESHOLDS):
    """Nearest multiple of 45 deg, modulo 8; exact half-bin angles round up."""
    k = np.floor(np.asarray(angle_deg, dtype=float) / cfg.orientation_bin_deg + 0.5)
    return np.mod(k, 8).astype(int)


def effort_label(speed, cfg: ThresholdConfig = DEFAULT_THRESHOLDS):
    """v <= 0.1 -> 0, <= 0.5 -> 1, <= 1.0 -> 2, <= 2.0 -> 3, else 4."""
    return np.searchsorted(np.asarray(cfg.effort_bins), np.asarray(speed, dtype=float), side="left")


# -------------------------------------------------- frame-wise symbols


def _angle_deg(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    nu = np.linalg.norm(u, axis=-1)
    nv = np.linalg.norm(v, axis=-1)
    denom = np.where((nu > 0) & (nv > 0), nu * nv, 1.0)
    cos = np.clip(np.sum(u * v, axis=-1) / denom, -1.0, 1.0)
    return np.degrees(np.arccos(cos))


def _signed_deg(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.mod(np.degrees(np.arctan2(y, x)), 360.0)


_SIDES = (("l", G.SUPPORT_L, G.UPPER_L, False), ("r", G.SUPPORT_R, G.UPPER_R, True))


def _symbol_arrays(
    offsets: np.ndarray,
    origins: np.ndarray,
    rots: np.ndarray,
    cfg: ThresholdConfig,
    fps: int,
    heading_ref: float | None,
    prev_origin: np.ndarray | None = None,
) -> dict[tuple[BodyPartGroup, str], np.ndarray]:
    """Every non-hold field for a batch of canonical frames, as value arrays."""
    out: dict[tuple[BodyPartGroup, str], np.ndarray] = {}
    down = np.array([0.0, 0.0, -1.0])

    def put(group, name, domain, idx):
        out[(group, name)] = np.asarray(domain, dtype=object)[np.asarray(idx, dtype=int)]

    for s, sup, upp, right in _SIDES:
        foot, knee, hip = offsets[:, J[f"{s}_foot"]], offsets[:, J[f"{s}_knee"]], offsets[:, J[f"{s}_hip"]]
        hand, elbow, shoulder = offsets[:, J[f"{s}_hand"]], offsets[:, J[f"{s}_elbow"]], offsets[:, J[f"{s}_shoulder"]]
        for group, eff, upper in ((sup, foot, False), (upp, hand, True)):
            i, j, k = cell_indices(eff, right, upper, cfg)
            put(group, "dir_lmr", _LMR, i)
            put(group, "dir_bmf", _BMF, j)
            put(group, "level", _LEVEL, k)
        i, j, k = cell_indices(elbow, right, True, cfg)
        put(upp, "elbow_dir_lmr", _LMR, i)
        put(upp, "elbow_dir_bmf", _BMF, j)
        put(upp, "elbow_level", _LEVEL, k)
        put(sup, "knee_bend", range(6), bend_bin(_angle_deg(knee - hip, foot - knee), cfg))
        put(sup, "hip_bend", range(6), bend_bin(_angle_deg(knee - hip, down), cfg))
        put(upp, "elbow_bend", range(6), bend_bin(_angle_deg(elbow - shoulder, hand - elbow), cfg))
        put(upp, "shoulder_bend", range(6), bend_bin(_angle_deg(elbow - shoulder, down), cfg))

    # Heading of the hip line in the world horizontal plane, relative to a reference.
    heading = np.degrees(np.arctan2(rots[:, 0, 1], rots[:, 0, 0]))
    ref = heading[0] if heading_ref is None else heading_ref
    put(G.SUPPORT_BOTH, "orient_horiz", range(8), orientation_bin(np.mod(heading - ref, 360.0), cfg))
    # Pelvis tilt: the canonical up axis leaning toward the facing direction.
    up_w = rots[:, 2, :]
    facing = -rots[:, 1, :].copy()
    facing[:, 2] = 0.0
    fn = np.linalg.norm(facing, axis=1)
    facing = facing / np.where(fn > 0, fn, 1.0)[:, None]
    lean = np.sum(up_w * facing, axis=1)
    put(G.SUPPORT_BOTH, "orient_vert", range(8), orientation_bin(_signed_deg(lean, up_w[:, 2]), cfg))

    if prev_origin is None:
        disp = np.zeros_like(origins)
        disp[1:] = origins[1:] - origins[:-1]
        if len(origins) > 1:
            disp[0] = disp[1]
    else:
        disp = origins - np.vstack([prev_origin[None], origins[:-1]])
    v = np.einsum("tij,tj->ti", rots, disp) * fps
    put(G.SUPPORT_BOTH, "effort_horiz", range(5), effort_label(np.hypot(v[:, 0], v[:, 1]), cfg))
    put(G.SUPPORT_BOTH, "effort_vert", range(5), effort_label(np.hypot(v[:, 1], v[:, 2]), cfg))

    sh = offsets[:, J["l_shoulder"]] - offsets[:, J["r_shoulder"]]
    put(G.TORSO, "head_orient_horiz", range(8), orientation_bin(_signed_deg(sh[:, 1], sh[:, 0]), cfg))
    neck_head = offsets[:, J["head"]] - offsets[:, J["neck"]]
    put(G.TORSO, "head_orient_vert", range(8), orientation_bin(_signed_deg(-neck_head[:, 1], neck_head[:, 2]), cfg))
    low = offsets[:, J["spine2"]] - offsets[:, J["pelvis"]]
    high = offsets[:, J["neck"]] - offsets[:, J["spine2"]]
    put(G.TORSO, "spine_bend", range(6), bend_bin(_angle_deg(low, high), cfg))
    return out


def extract_frame_symbols(
    pose: CanonicalPose,
    prev: CanonicalPose | None = None,
    cfg: ThresholdConfig = DEFAULT_THRESHOLDS,
    *,
    fps: int = 20,
    heading_ref: float | None = None,
) -> dict[BodyPartGroup, dict[str, object]]:
    """Symbol values of one frame for every field except Hold.

    ``prev`` supplies the pelvis displacement for the effort labels (zero when
    absent).  ``heading_ref`` is the hip-line heading in degrees that counts as
    orientation 0; by default the pose's own heading.
    """
    arrays = _symbol_arrays(
        pose.offsets[None],
        np.asarray(pose.origin, dtype=float)[None],
        np.asarray(pose.rotation, dtype=float)[None],
        cfg,
        fps,
        heading_ref,
        prev_origin=np.asarray(pose.origin if prev is None else prev.origin, dtype=float),
    )
    out: dict[BodyPartGroup, dict[str, object]] = {g: {} for g in BodyPartGroup}
    for (group, name), values in arrays.items():
        out[group][name] = values[0]
    return out


# -------------------------------------------------------- segmentation


@dataclass(frozen=True)
class Interval:
    start: int
    end: int  # exclusive
    label: str  # "hold" or "dynamic"

    def __len__(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class IntervalSegmentation:
    T: int
    intervals: Mapping[BodyPartGroup, tuple[Interval, ...]]

    def labels(self, group: BodyPartGroup) -> list[str]:
        out = []
        for iv in self.intervals[group]:
            out.extend([iv.label] * len(iv))
        return out


EFFECTORS = {
    G.SUPPORT_L: ("l_foot", False),
    G.SUPPORT_R: ("r_foot", False),
    G.UPPER_L: ("l_hand", True),
    G.UPPER_R: ("r_hand", True),
}


def runs(labels: Sequence) -> list[tuple[object, int, int]]:
    """Run-length encode into (value, start, end) triples."""
    out: list[tuple[object, int, int]] = []
    start = 0
    for t in range(1, len(labels) + 1):
        if t == len(labels) or labels[t] != labels[start]:
            out.append((labels[start], start, t))
            start = t
    return out


def deflicker(labels: Sequence[str], min_run: int) -> list[str]:
    """Flip the leftmost shortest run below ``min_run`` until none remain."""
    labels = list(labels)
    while True:
        rs = runs(labels)
        if len(rs) < 2:
            return labels
        short = [r for r in rs if r[2] - r[1] < min_run]
        if not short:
            return labels
        value, s, e = min(short, key=lambda r: (r[2] - r[1], r[1]))
        flipped = HOLD if value == DYNAMIC else DYNAMIC
        labels[s:e] = [flipped] * (e - s)


def hold_label(speed: float, upper: bool, cfg: ThresholdConfig = DEFAULT_THRESHOLDS) -> str:
    """Per-frame hold rule before de-flicker: strictly below the threshold holds."""
    return HOLD if speed < (cfg.hold_hands if upper else cfg.hold_feet) else DYNAMIC


def _hold_labels(speed: np.ndarray, threshold: float, min_run: int) -> list[str]:
    raw = [HOLD if v < threshold else DYNAMIC for v in speed.tolist()]
    return deflicker(raw, min_run)


def _effector_speeds(offsets: np.ndarray) -> dict[BodyPartGroup, np.ndarray]:
    if offsets.shape[0] < 2:
        raise TooShort(f"segmentation needs at least 2 frames, got {offsets.shape[0]}")
    out = {}
    for group, (joint, _) in EFFECTORS.items():
        p = offsets[:, J[joint]]
        d = np.empty(len(p))
        d[1:] = np.linalg.norm(p[1:] - p[:-1], axis=1)
        d[0] = d[1]
        out[group] = d
    return out


def _segment_offsets(offsets: np.ndarray, cfg: ThresholdConfig) -> IntervalSegmentation:
    speeds = _effector_speeds(offsets)
    intervals = {}
    for group, (joint, upper) in EFFECTORS.items():
        thr = cfg.hold_hands if upper else cfg.hold_feet
        labels = _hold_labels(speeds[group], thr, cfg.min_run)
        intervals[group] = tuple(Interval(s, e, v) for v, s, e in runs(labels))
    return IntervalSegmentation(offsets.shape[0], intervals)


def segment_intervals(seq: MotionSequence, cfg: ThresholdConfig = DEFAULT_THRESHOLDS) -> IntervalSegmentation:
    """Hold/dynamic intervals per conceptual group from end-effector speed."""
    if seq.T < 2:
        raise TooShort(f"segmentation needs at least 2 frames, got {seq.T}")
    offsets, _, _ = canonical_frames(seq.frames)
    return _segment_offsets(offsets, cfg)


# --------------------------------------------------------- aggregation


def modal_value(values: Sequence):
    """Most frequent value; ties go to the value that occurs first."""
    if len(values) == 0:
        raise EmptyInterval("cannot aggregate an empty interval")
    counts = Counter(values)
    return max(counts, key=counts.__getitem__)


def aggregate_interval(symbols: Sequence):
    """Representative symbol of an interval.

    ``symbols`` is either a sequence of plain values or a sequence of
    ``{attribute: value}`` mappings; mappings aggregate per attribute.
    """
    if len(symbols) == 0:
        raise EmptyInterval("cannot aggregate an empty interval")
    if isinstance(symbols[0], Mapping):
        return {k: modal_value([s[k] for s in symbols]) for k in symbols[0]}
    return modal_value(symbols)


def _refine(*segs: Iterable[Interval]) -> list[tuple[int, int]]:
    cuts = sorted({iv.start for seg in segs for iv in seg} | {iv.end for seg in segs for iv in seg})
    return list(zip(cuts[:-1], cuts[1:]))


def detect(seq: MotionSequence, cfg: ThresholdConfig = DEFAULT_THRESHOLDS) -> InstanceSequence:
    """Dense instance sequence for a motion of at least two frames."""
    return detect_with_segmentation(seq, cfg)[0]


def detect_with_segmentation(
    seq: MotionSequence, cfg: ThresholdConfig = DEFAULT_THRESHOLDS
) -> tuple[InstanceSequence, IntervalSegmentation]:
    if seq.T < 2:
        raise TooShort(f"detection needs at least 2 frames, got {seq.T}")
    offsets, origins, rots = canonical_frames(seq.frames)
    seg = _segment_offsets(offsets, cfg)
    frame_values = _symbol_arrays(offsets, origins, rots, cfg, seq.fps, None)

    spans: dict[BodyPartGroup, list[tuple[int, int]]] = {
        g: [(iv.start, iv.end) for iv in seg.intervals[g]] for g in EFFECTORS
    }
    spans[G.SUPPORT_BOTH] = _refine(seg.intervals[G.SUPPORT_L], seg.intervals[G.SUPPORT_R])
    spans[G.TORSO] = _refine(seg.intervals[G.UPPER_L], seg.intervals[G.UPPER_R])

    columns: dict[tuple[BodyPartGroup, str], list] = {}
    for group in BodyPartGroup:
        for f in GROUP_FIELDS[group]:
            if f.name == "hold":
                columns[(group, "hold")] = seg.labels(group)
                continue
            values = frame_values[(group, f.name)].tolist()
            col: list = []
            for s, e in spans[group]:
                col.extend([modal_value(values[s:e])] * (e - s))
            columns[(group, f.name)] = col
    rows = tuple(zip(*(columns[(f.group, f.name)] for f in FIELDS)))
    return InstanceSequence(rows, seq.fps), seg
