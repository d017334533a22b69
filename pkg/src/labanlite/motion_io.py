"""Skeleton and motion data model, canonical-space transform, motion files.

World frames are z-up.  The canonical frame puts the pelvis at the origin,
the hip line on +x (the body's left), z up inside the pelvis/hips plane, and
the body facing -y.

Velocities are in meters per *frame*, not per second: the hold thresholds
used by detection are per-frame constants for 20 fps data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DegeneratePose, JointCountMismatch, ParseError, TooShort

JOINTS: tuple[str, ...] = (
    "pelvis",
    "spine2",
    "neck",
    "head",
    "l_shoulder",
    "r_shoulder",
    "l_elbow",
    "r_elbow",
    "l_hand",
    "r_hand",
    "l_hip",
    "r_hip",
    "l_knee",
    "r_knee",
    "l_foot",
    "r_foot",
)
J = {name: i for i, name in enumerate(JOINTS)}

PARENT: dict[str, str] = {
    "spine2": "pelvis",
    "neck": "spine2",
    "head": "neck",
    "l_shoulder": "neck",
    "r_shoulder": "neck",
    "l_elbow": "l_shoulder",
    "r_elbow": "r_shoulder",
    "l_hand": "l_elbow",
    "r_hand": "r_elbow",
    "l_hip": "pelvis",
    "r_hip": "pelvis",
    "l_knee": "l_hip",
    "r_knee": "r_hip",
    "l_foot": "l_knee",
    "r_foot": "r_knee",
}

MOTION_HEADER = "#motion v1"
MOTION_SUFFIX = ".mo.txt"


def _mirror(p: Sequence[float]) -> tuple[float, float, float]:
    return (-p[0], p[1], p[2])


@dataclass(frozen=True)
class Skeleton:
    """Left-side attachment points (pelvis-relative, canonical) and limb lengths.

    The right side is the mirror image across x = 0.
    """

    spine2: tuple[float, float, float] = (0.0, 0.0, 0.25)
    neck: tuple[float, float, float] = (0.0, 0.0, 0.45)
    head: tuple[float, float, float] = (0.0, 0.0, 0.62)
    shoulder: tuple[float, float, float] = (0.18, 0.0, 0.45)
    hip: tuple[float, float, float] = (0.1, 0.0, -0.05)
    upper_arm: float = 0.42
    forearm: float = 0.40
    thigh: float = 0.45
    shin: float = 0.45
    rest_hand: tuple[float, float, float] = (0.18, -0.02, -0.08)
    rest_foot: tuple[float, float, float] = (0.1, -0.1, -0.88)

    def __post_init__(self):
        for name in ("upper_arm", "forearm", "thigh", "shin"):
            if not getattr(self, name) > 0:
                raise ValueError(f"segment length {name} must be positive")
        if self.hip[0] <= 0:
            raise ValueError("left hip must sit on the +x side of the pelvis")

    def root(self, joint: str) -> np.ndarray:
        """Fixed pelvis-relative position of a trunk joint."""
        left = {
            "pelvis": (0.0, 0.0, 0.0),
            "spine2": self.spine2,
            "neck": self.neck,
            "head": self.head,
            "l_shoulder": self.shoulder,
            "r_shoulder": _mirror(self.shoulder),
            "l_hip": self.hip,
            "r_hip": _mirror(self.hip),
        }
        return np.array(left[joint], dtype=float)

    def limb(self, side: str, upper: bool) -> tuple[str, str, str, float, float]:
        """(root joint, middle joint, end effector, proximal length, distal length)."""
        s = side.lower()[0]
        if upper:
            return f"{s}_shoulder", f"{s}_elbow", f"{s}_hand", self.upper_arm, self.forearm
        return f"{s}_hip", f"{s}_knee", f"{s}_foot", self.thigh, self.shin

    def reach(self, upper: bool) -> float:
        return self.upper_arm + self.forearm if upper else self.thigh + self.shin

    def segment_lengths(self, pose: np.ndarray) -> dict[tuple[str, str], float]:
        return {
            (p, c): float(np.linalg.norm(pose[J[c]] - pose[J[p]])) for c, p in PARENT.items()
        }


@dataclass(frozen=True)
class MotionSequence:
    frames: np.ndarray  # (T, 16, 3) meters, world frame
    fps: int = 20

    def __post_init__(self):
        arr = np.array(self.frames, dtype=float)
        if arr.ndim != 3 or arr.shape[1:] != (len(JOINTS), 3):
            raise JointCountMismatch(f"expected (T, {len(JOINTS)}, 3), got {arr.shape}")
        if arr.shape[0] < 1:
            raise TooShort("a motion needs at least one frame")
        if not np.all(np.isfinite(arr)):
            raise ValueError("motion contains non-finite coordinates")
        if self.fps <= 0:
            raise ValueError("fps must be positive")
        arr.setflags(write=False)
        object.__setattr__(self, "frames", arr)

    @property
    def T(self) -> int:
        return self.frames.shape[0]

    def __len__(self) -> int:
        return self.T

    def joint(self, name: str) -> np.ndarray:
        return self.frames[:, J[name], :]

    def __eq__(self, other) -> bool:
        if not isinstance(other, MotionSequence):
            return NotImplemented
        return self.fps == other.fps and np.array_equal(self.frames, other.frames)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class CanonicalPose:
    offsets: np.ndarray  # (16, 3), pelvis at origin
    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))  # world pelvis
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))  # world -> canonical

    def __getitem__(self, joint: str) -> np.ndarray:
        return self.offsets[J[joint]]


_EPS = 1e-9


def canonical_frames(frames: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batched canonicalization of a (T, 16, 3) array.

    Returns (offsets, origins, rotations) with shapes (T,16,3), (T,3), (T,3,3).
    """
    frames = np.asarray(frames, dtype=float)
    origin = frames[:, J["pelvis"], :]
    rel = frames - origin[:, None, :]
    lh, rh = rel[:, J["l_hip"]], rel[:, J["r_hip"]]
    x = lh - rh
    xn = np.linalg.norm(x, axis=1)
    if np.any(xn < _EPS):
        raise DegeneratePose("hips coincide; no hip line to align")
    x = x / xn[:, None]
    m = 0.5 * (lh + rh)
    m_perp = m - np.sum(m * x, axis=1)[:, None] * x
    mn = np.linalg.norm(m_perp, axis=1)
    if np.any(mn < _EPS):
        raise DegeneratePose("pelvis lies on the hip line; no facing direction")
    z = -m_perp / mn[:, None]
    y = np.cross(z, x)
    rot = np.stack([x, y, z], axis=1)
    offsets = np.einsum("tij,tkj->tki", rot, rel)
    return offsets, origin, rot


def canonicalize(frame: np.ndarray) -> CanonicalPose:
    """Rigidly move one (16, 3) world pose into canonical space."""
    frame = np.asarray(frame, dtype=float)
    if frame.shape != (len(JOINTS), 3):
        raise JointCountMismatch(f"expected ({len(JOINTS)}, 3), got {frame.shape}")
    offsets, origin, rot = canonical_frames(frame[None])
    return CanonicalPose(offsets[0], origin[0], rot[0])


def velocity(seq: MotionSequence | np.ndarray) -> np.ndarray:
    """Per-frame displacement; frame 0 repeats frame 1."""
    x = seq.frames if isinstance(seq, MotionSequence) else np.asarray(seq, dtype=float)
    if x.shape[0] < 2:
        raise TooShort(f"velocity needs at least 2 frames, got {x.shape[0]}")
    v = np.empty_like(x)
    v[1:] = x[1:] - x[:-1]
    v[0] = v[1]
    return v


def yaw_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def transform(seq: MotionSequence, rotation: np.ndarray, translation: Sequence[float]) -> MotionSequence:
    """Apply x -> R x + t to every joint of every frame."""
    frames = seq.frames @ np.asarray(rotation, dtype=float).T + np.asarray(translation, dtype=float)
    return MotionSequence(frames, seq.fps)


def concat(seqs: Iterable[MotionSequence]) -> MotionSequence:
    """Join motions end to end, shifting each so its pelvis starts where the last ended."""
    seqs = list(seqs)
    if not seqs:
        raise TooShort("nothing to concatenate")
    fps = seqs[0].fps
    parts = [seqs[0].frames]
    for s in seqs[1:]:
        if s.fps != fps:
            raise ValueError("cannot concatenate motions with different fps")
        shift = parts[-1][-1, J["pelvis"]] - s.frames[0, J["pelvis"]]
        shift[2] = 0.0
        parts.append(s.frames + shift)
    return MotionSequence(np.concatenate(parts), fps)


# ---------------------------------------------------------------- files


def save_motion(seq: MotionSequence) -> bytes:
    lines = [f"{MOTION_HEADER} fps={seq.fps} joints={','.join(JOINTS)}"]
    for frame in seq.frames:
        lines.append(" ".join(repr(v) for v in frame.reshape(-1).tolist()))
    return ("\n".join(lines) + "\n").encode("ascii")


def load_motion(data: bytes | str) -> MotionSequence:
    text = data.decode("ascii", errors="replace") if isinstance(data, bytes) else data
    lines = text.splitlines()
    if not lines or not lines[0].startswith(MOTION_HEADER):
        raise ParseError(f"expected header starting with {MOTION_HEADER!r}", 1, 1)
    fps, joints = None, None
    col = len(MOTION_HEADER) + 2
    for token in lines[0][len(MOTION_HEADER):].split():
        key, sep, val = token.partition("=")
        if key == "fps" and sep:
            try:
                fps = int(val)
            except ValueError:
                raise ParseError(f"bad fps {val!r}", 1, col + 4) from None
        elif key == "joints" and sep:
            joints = val.split(",") if val else []
        else:
            raise ParseError(f"unknown header token {token!r}", 1, col)
        col += len(token) + 1
    if fps is None or fps <= 0:
        raise ParseError("header needs a positive fps=", 1, 1)
    if joints is None:
        raise ParseError("header needs joints=", 1, 1)
    if len(set(joints)) != len(joints) or set(joints) != set(JOINTS):
        missing = sorted(set(JOINTS) - set(joints))
        extra = sorted(set(joints) - set(JOINTS))
        raise JointCountMismatch(
            f"file lists {len(joints)} joints; missing {missing or 'none'}, unexpected {extra or 'none'}"
        )
    order = [joints.index(name) for name in JOINTS]
    width = 3 * len(joints)
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        values = []
        pos = 0
        for token in line.split():
            pos = line.index(token, pos)
            try:
                v = float(token)
            except ValueError:
                raise ParseError(f"not a number: {token!r}", lineno, pos + 1) from None
            if not np.isfinite(v):
                raise ParseError(f"non-finite value {token!r}", lineno, pos + 1)
            values.append(v)
            pos += len(token)
        if len(values) != width:
            raise ParseError(f"expected {width} values, found {len(values)}", lineno, len(line) + 1)
        rows.append(np.array(values).reshape(len(joints), 3)[order])
    if not rows:
        raise ParseError("no frames", len(lines) + 1, 1)
    return MotionSequence(np.stack(rows), fps)
