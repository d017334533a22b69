"""Kinematic stand-in decoder and parametric motion generators.

``decode`` turns a dense instance sequence into a stick-figure motion whose
detected conceptual tuples reproduce the input.  Each end effector is driven
to a per-cell target (the centroid of the reachable part of the threshold
cell) and the knees and elbows follow by two-bone IK.  Dynamic runs carry an
alternating wiggle so the effector speed clears the hold threshold on every
frame; hold runs freeze.

The generated motions are built in canonical orientation (facing -y, hip line
on +x), so world coordinates are offsets plus the pelvis position.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .core_model import CONCEPTUAL_GROUPS, DYNAMIC, HOLD, BodyPartGroup, InstanceSequence
from .detection import DEFAULT_THRESHOLDS, ThresholdConfig, cell_indices, classify_offset, runs
from .errors import UnreachableTarget, UnreachableWarning
from .motion_io import JOINTS, J, MotionSequence, Skeleton

G = BodyPartGroup

STEP_LENGTH = 0.6  # pelvis travel per support step, meters
SWING_HEIGHT = 0.05  # foot lift during a synthetic step
WIGGLE = 0.03  # alternating offset that keeps dynamic effectors moving
REACH_FRACTION = 0.95
GRID_STEP = 0.02
PELVIS_HEIGHT = 0.93
# a separator hold and a jump frame each need room inside the run
MIN_SEPARATED_RUN = 4

KNEE_POLE = np.array([0.0, -1.0, 0.0])  # knees bend forward
ELBOW_POLE = np.array([0.0, 1.0, 0.0])  # elbows bend backward

_LMR = ("L", "M", "R")
_BMF = ("B", "M", "F")
_LEVEL = ("Lo", "Mi", "Hi")

GROUP_LIMB = {
    G.SUPPORT_L: ("L", False),
    G.SUPPORT_R: ("R", False),
    G.UPPER_L: ("L", True),
    G.UPPER_R: ("R", True),
}


# ------------------------------------------------------------------ IK


def two_bone_ik(root, target, l1: float, l2: float, pole) -> tuple[np.ndarray, np.ndarray]:
    """Analytic two-segment IK.

    Returns (middle joint, end effector).  Targets beyond reach are pulled
    onto the reach sphere; the middle joint bends toward ``pole``.  Works on
    single points or stacked (N, 3) arrays.
    """
    root = np.asarray(root, dtype=float)
    target = np.asarray(target, dtype=float)
    root, target = np.broadcast_arrays(root, target)
    d = target - root
    dist = np.linalg.norm(d, axis=-1, keepdims=True)
    # a target on the root has no direction; fold the limb straight down
    u = np.where(dist > 1e-12, d / np.where(dist > 1e-12, dist, 1.0), np.array([0.0, 0.0, -1.0]))
    lo = abs(l1 - l2) + 1e-9
    hi = l1 + l2
    dist_c = np.clip(dist, lo, hi)
    a = (l1 * l1 - l2 * l2 + dist_c * dist_c) / (2.0 * dist_c)
    h = np.sqrt(np.maximum(l1 * l1 - a * a, 0.0))
    pole = np.broadcast_to(np.asarray(pole, dtype=float), u.shape)
    p = pole - np.sum(pole * u, axis=-1, keepdims=True) * u
    pn = np.linalg.norm(p, axis=-1, keepdims=True)
    # pole parallel to the limb: fall back to the world x axis
    alt = np.broadcast_to(np.array([1.0, 0.0, 0.0]), u.shape)
    alt = alt - np.sum(alt * u, axis=-1, keepdims=True) * u
    p = np.where(pn > 1e-9, p, alt)
    p = p / np.linalg.norm(p, axis=-1, keepdims=True)
    mid = root + a * u + h * p
    end = root + u * dist_c
    return mid, end


def _limb_joints(skeleton: Skeleton, side: str, upper: bool):
    root_name, mid_name, end_name, l1, l2 = skeleton.limb(side, upper)
    return skeleton.root(root_name), J[mid_name], J[end_name], l1, l2, ELBOW_POLE if upper else KNEE_POLE


def rest_effector(skeleton: Skeleton, side: str, upper: bool) -> np.ndarray:
    p = np.array(skeleton.rest_hand if upper else skeleton.rest_foot, dtype=float)
    if side.upper().startswith("R"):
        p[0] = -p[0]
    return p


def pose_from_effectors(skeleton: Skeleton, effectors: dict[tuple[str, bool], np.ndarray]) -> np.ndarray:
    """Canonical (T, 16, 3) offsets from per-limb effector tracks of shape (T, 3).

    Limbs without a track stay at rest; with no tracks at all T is 1.
    """
    T = next(iter(effectors.values())).shape[0] if effectors else 1
    out = np.zeros((T, len(JOINTS), 3))
    for name in ("pelvis", "spine2", "neck", "head", "l_shoulder", "r_shoulder", "l_hip", "r_hip"):
        out[:, J[name]] = skeleton.root(name)
    for side in ("L", "R"):
        for upper in (False, True):
            track = effectors.get((side, upper))
            if track is None:
                track = np.broadcast_to(rest_effector(skeleton, side, upper), (T, 3))
            root, mid_j, end_j, l1, l2, pole = _limb_joints(skeleton, side, upper)
            mid, end = two_bone_ik(root, track, l1, l2, pole)
            out[:, mid_j] = mid
            out[:, end_j] = end
    return out


def rest_pose(skeleton: Skeleton = Skeleton()) -> np.ndarray:
    """Canonical (16, 3) rest pose: every limb at its rest effector."""
    return pose_from_effectors(skeleton, {})[0]


def _world(offsets: np.ndarray, pelvis: np.ndarray, fps: int) -> MotionSequence:
    return MotionSequence(offsets + pelvis[:, None, :], fps)


# ------------------------------------------------------------ cell targets


_DIRECTIONS = np.array(
    [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 0), (1, -1, 0), (1, 0, 1), (1, 0, -1), (0, 1, 1), (0, 1, -1),
     (1, 1, 1), (1, 1, -1), (1, -1, 1), (1, -1, -1)],
    dtype=float,
)
_DIRECTIONS /= np.linalg.norm(_DIRECTIONS, axis=1, keepdims=True)


@dataclass(frozen=True)
class CellTarget:
    side: str  # "L" or "R"
    upper: bool
    cell: tuple[str, str, str]
    offset: tuple[float, float, float]  # pelvis-relative effector position
    wiggles: tuple[tuple[float, float, float], ...]  # usable alternating offsets, best first
    clamped: bool = False  # region unreachable; offset pulled to the reach sphere


class _Limb:
    def __init__(self, skeleton: Skeleton, side: str, upper: bool, cfg: ThresholdConfig):
        self.side, self.upper, self.cfg = side, upper, cfg
        self.right = side == "R"
        root_name = skeleton.limb(side, upper)[0]
        self.root = skeleton.root(root_name)
        self.reach = skeleton.reach(upper)

    def cell_of(self, p: np.ndarray) -> tuple[str, str, str]:
        return classify_offset(p, self.right, self.upper, self.cfg)

    def inside(self, p: np.ndarray, cell) -> bool:
        if np.linalg.norm(p - self.root) > self.reach:
            return False
        if not self.upper and cell[2] == "Mi" and p[2] == 0.0:
            return False
        return self.cell_of(p) == tuple(cell)


def _box(cell, right: bool, upper: bool, cfg: ThresholdConfig, big: float):
    lmr, bmf, level = cell
    if upper:
        ar, al, bf, bb = cfg.upper_a_right, cfg.upper_a_left, cfg.upper_b_forward, cfg.upper_b_backward
        cz = {"Lo": (-big, cfg.upper_c_low), "Mi": (cfg.upper_c_low, cfg.upper_c_high), "Hi": (cfg.upper_c_high, big)}
    else:
        ar, al, bf, bb = cfg.lower_a_right, cfg.lower_a_left, cfg.lower_b_forward, cfg.lower_b_backward
        cz = {"Lo": (cfg.lower_c_low, cfg.lower_c_high), "Mi": (-big, cfg.lower_c_low), "Hi": (cfg.lower_c_high, big)}
    mirrored = {"L": "R", "M": "M", "R": "L"}[lmr] if right else lmr
    ax = {"R": (-big, ar), "M": (ar, al), "L": (al, big)}[mirrored]
    if right:
        ax = (-ax[1], -ax[0])
    by = {"F": (-big, bf), "M": (bf, bb), "B": (bb, big)}[bmf]
    return np.array([ax[0], by[0], cz[level][0]]), np.array([ax[1], by[1], cz[level][1]])


def cell_targets(skeleton: Skeleton = Skeleton(), cfg: ThresholdConfig = DEFAULT_THRESHOLDS) -> dict:
    """All 27 cells x 2 sides x upper/lower, keyed by (side, upper, cell)."""
    return _cell_targets(skeleton, cfg)


@lru_cache(maxsize=16)
def _cell_targets(skeleton: Skeleton, cfg: ThresholdConfig) -> dict:
    out = {}
    for side in ("L", "R"):
        for upper in (False, True):
            limb = _Limb(skeleton, side, upper, cfg)
            r = REACH_FRACTION * limb.reach
            ticks = np.arange(-r, r + 1e-12, GRID_STEP)
            g = np.stack(np.meshgrid(ticks, ticks, ticks, indexing="ij"), axis=-1).reshape(-1, 3)
            g = g[np.linalg.norm(g, axis=1) <= r] + limb.root
            if not upper:
                g = g[g[:, 2] != 0.0]
            i, j, k = cell_indices(g, limb.right, upper, cfg)
            code = (i * 3 + j) * 3 + k
            counts = np.bincount(code, minlength=27)
            sums = np.stack([np.bincount(code, weights=g[:, d], minlength=27) for d in range(3)], axis=1)
            for ci in range(27):
                cell = (_LMR[ci // 9], _BMF[(ci // 3) % 3], _LEVEL[ci % 3])
                clamped = counts[ci] == 0
                if clamped:
                    lo, hi = _box(cell, limb.right, upper, cfg, 10.0 * limb.reach)
                    nearest = np.clip(limb.root, lo, hi)
                    d = nearest - limb.root
                    point = limb.root + d / np.linalg.norm(d) * r
                else:
                    point = sums[ci] / counts[ci]
                wig = []
                if not clamped:
                    mags = (WIGGLE, 0.02) if not upper else (WIGGLE, 0.02, 0.01, 0.005)
                    for m in mags:
                        for d in _DIRECTIONS:
                            w = m * d
                            if limb.inside(point + w, cell) and limb.inside(point - w, cell):
                                wig.append(tuple(w.tolist()))
                        if wig:
                            break
                out[(side, upper, cell)] = CellTarget(side, upper, cell, tuple(point.tolist()), tuple(wig), bool(clamped))
    return out


# ------------------------------------------------------------------ decode


def _target(targets, side, upper, cell, strict: bool) -> CellTarget:
    t = targets[(side, upper, tuple(cell))]
    if t.clamped:
        msg = f"cell {cell} is out of reach for the {'hand' if upper else 'foot'} on side {side}; clamped"
        if strict:
            raise UnreachableTarget(msg)
        warnings.warn(msg, UnreachableWarning, stacklevel=3)
    return t


def _dynamic_path(limb: _Limb, tgt: CellTarget, prev: np.ndarray, n: int) -> np.ndarray:
    """n in-cell frames from an entry point toward the centroid, alternating a wiggle."""
    C = np.array(tgt.offset)
    if not tgt.wiggles:
        return np.repeat(C[None], n, axis=0)
    wig = [np.array(w) for w in tgt.wiggles]
    choice = None
    for lam in (0.5, 0.75, 1.0):
        E = prev + lam * (C - prev)
        path = C - E
        pn = np.linalg.norm(path)
        order = sorted(wig, key=lambda w: abs(np.dot(w, path)) / (pn * np.linalg.norm(w)) if pn > 0 else 0.0)
        for w in order:
            if limb.inside(E + w, tgt.cell) and limb.inside(E - w, tgt.cell):
                choice = (E, w)
                break
        if choice:
            break
    if choice is None:
        choice = (C, wig[0])
    E, w = choice
    lam = np.linspace(0.0, 1.0, n) if n > 1 else np.ones(1)
    base = E[None] + lam[:, None] * (C - E)[None]
    sign = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)[:, None]
    a = base + sign * w
    b = base - sign * w
    # start on the phase that moves furthest away from the previous position
    return a if np.linalg.norm(a[0] - prev) >= np.linalg.norm(b[0] - prev) else b


def _effector_track(
    limb: _Limb,
    targets,
    tuples: Sequence[tuple],
    holds: Sequence[str],
    rest: np.ndarray,
    strict: bool,
) -> np.ndarray:
    T = len(tuples)
    track = np.zeros((T, 3))
    rs = runs(list(zip(tuples, holds)))
    prev = rest.copy()
    for idx, ((cell, hold), s, e) in enumerate(rs):
        n = e - s
        tgt = _target(targets, limb.side, limb.upper, cell, strict)
        C = np.array(tgt.offset)
        nxt = rs[idx + 1][0] if idx + 1 < len(rs) else None
        if hold == HOLD:
            if limb.inside(prev, cell):
                track[s:e] = prev
            elif s == 0 or not tgt.wiggles:
                track[s:e] = C
            elif n >= MIN_SEPARATED_RUN:
                # two moving frames inside the cell, so the change is seen as its own interval
                track[s] = C + np.array(tgt.wiggles[0])
                track[s + 1 : e] = C
            else:
                track[s:e] = C
        else:
            moving = n
            separator = nxt is not None and nxt[1] == DYNAMIC and n >= MIN_SEPARATED_RUN
            jump = nxt is not None and nxt[1] == HOLD and tuple(nxt[0]) != tuple(cell)
            if separator:
                moving = n - 2
            elif jump and n >= 2:
                moving = n - 1
            track[s : s + moving] = _dynamic_path(limb, tgt, prev, moving)
            if separator:
                track[s + moving : e] = track[s + moving - 1]
            elif jump and n >= 2:
                nt = _target(targets, limb.side, limb.upper, nxt[0], strict)
                track[e - 1] = nt.offset
        prev = track[e - 1].copy()
    return track


_STEP_DIR = {"F": np.array([0.0, -1.0]), "B": np.array([0.0, 1.0]), "M": np.zeros(2)}
_SIDE_DIR = {"L": np.array([1.0, 0.0]), "R": np.array([-1.0, 0.0]), "M": np.zeros(2)}


def _pelvis_track(seq: InstanceSequence, step_length: float) -> np.ndarray:
    T = seq.T
    vel = np.zeros((T, 3))
    for group in (G.SUPPORT_L, G.SUPPORT_R):
        tuples = seq.conceptual_tuples(group)
        holds = seq.column(group, "hold")
        for (cell, hold), s, e in runs(list(zip(tuples, holds))):
            if hold != DYNAMIC:
                continue
            d = _STEP_DIR[cell[1]] + _SIDE_DIR[cell[0]]
            norm = np.linalg.norm(d)
            if norm == 0:
                continue
            vel[s:e, :2] += (step_length / (e - s)) * d / norm
    pelvis = np.cumsum(vel, axis=0)
    pelvis[:, 2] += PELVIS_HEIGHT
    return pelvis


def decode(
    seq: InstanceSequence,
    skeleton: Skeleton = Skeleton(),
    cfg: ThresholdConfig = DEFAULT_THRESHOLDS,
    *,
    strict: bool = False,
    step_length: float = STEP_LENGTH,
) -> MotionSequence:
    """Deterministic stick-figure motion realizing the conceptual attributes of ``seq``.

    Detail attributes are not prescribed; they follow from the kinematics.
    Unreachable cells are clamped with an :class:`UnreachableWarning`, or
    raise :class:`UnreachableTarget` when ``strict``.

    The tuple sequence of each part survives detection as long as each run
    lasts at least four frames; shorter runs can be absorbed by the hold
    de-flicker during detection.
    """
    targets = cell_targets(skeleton, cfg)
    effectors = {}
    for group in CONCEPTUAL_GROUPS:
        side, upper = GROUP_LIMB[group]
        limb = _Limb(skeleton, side, upper, cfg)
        effectors[(side, upper)] = _effector_track(
            limb,
            targets,
            seq.conceptual_tuples(group),
            seq.column(group, "hold"),
            rest_effector(skeleton, side, upper),
            strict,
        )
    offsets = pose_from_effectors(skeleton, effectors)
    return _world(offsets, _pelvis_track(seq, step_length), seq.fps)


# ------------------------------------------------------------- synthesis


def _other(side: str) -> str:
    return "R" if side == "L" else "L"


def _swing_profile(u: np.ndarray) -> np.ndarray:
    """Arm swing amount: ramp to 0.9 by u=0.2, drift up to 1.0 and back, ramp out from u=0.8."""
    u = np.asarray(u, dtype=float)
    return np.interp(u, [0.0, 0.2, 0.5, 0.8, 1.0], [0.0, 0.9, 1.0, 0.9, 0.0])


def synth_walk(
    steps: int,
    side_first: str = "L",
    step_seconds: float = 0.5,
    fps: int = 20,
    *,
    direction: str = "forward",
    skeleton: Skeleton = Skeleton(),
) -> MotionSequence:
    """Parametric walk: alternating foot steps with an opposing arm swing.

    Each step lasts ``round(step_seconds * fps)`` frames.  The stepping foot
    travels 0.22 m forward (or backward) and back under the pelvis, lifted by
    up to ``SWING_HEIGHT``, while the pelvis advances ``STEP_LENGTH``.  The
    hand opposite the stepping foot swings the other way.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    side_first = side_first.upper()[:1]
    if side_first not in ("L", "R"):
        raise ValueError("side_first must be L or R")
    if direction not in ("forward", "backward"):
        raise ValueError("direction must be 'forward' or 'backward'")
    D = max(2, int(round(step_seconds * fps)))
    T = steps * D
    sgn = -1.0 if direction == "forward" else 1.0  # forward is -y
    tracks = {(s, up): np.tile(rest_effector(skeleton, s, up), (T, 1)) for s in ("L", "R") for up in (False, True)}
    k = np.arange(D)
    theta = 2.0 * math.pi * (k + 1) / D
    foot_db = sgn * 0.11 * (1.0 - np.cos(theta))
    foot_dc = SWING_HEIGHT * np.abs(np.sin(theta))
    swing = _swing_profile((k + 1) / D)
    side = side_first
    for i in range(steps):
        sl = slice(i * D, (i + 1) * D)
        tracks[(side, False)][sl, 1] += foot_db
        tracks[(side, False)][sl, 2] += foot_dc
        hand = tracks[(_other(side), True)]
        hand[sl, 1] += -sgn * 0.25 * swing
        hand[sl, 2] += 0.1 * swing
        side = _other(side)
    offsets = pose_from_effectors(skeleton, tracks)
    pelvis = np.zeros((T, 3))
    pelvis[:, 1] = sgn * STEP_LENGTH * (np.arange(T) + 1) / D
    pelvis[:, 2] = PELVIS_HEIGHT
    return _world(offsets, pelvis, fps)


WAVE_TOP = (0.25, -0.1, 0.4)  # left hand; mirrored for the right


def synth_arm_wave(hand: str = "R", cycles: int = 2, fps: int = 20, *, skeleton: Skeleton = Skeleton()) -> MotionSequence:
    """Raise and lower one hand between its rest (Level Mi) and an overhead (Hi) point.

    A quarter-second rest precedes the cycles; each cycle is a 10-frame rise,
    5-frame hold, 10-frame lowering and 5-frame hold.
    """
    if cycles < 1:
        raise ValueError("cycles must be at least 1")
    side = hand.upper()[:1]
    if side not in ("L", "R"):
        raise ValueError("hand must be L or R")
    rest = rest_effector(skeleton, side, True)
    top = np.array(WAVE_TOP)
    if side == "R":
        top[0] = -top[0]
    u = np.arange(1, 11) / 10.0
    ease = 1.0 - (1.0 - u) ** 2
    rise = rest + ease[:, None] * (top - rest)
    lower = top + ease[:, None] * (rest - top)
    parts = [np.tile(rest, (max(1, int(round(0.25 * fps))), 1))]
    for _ in range(cycles):
        parts += [rise, np.tile(top, (5, 1)), lower, np.tile(rest, (5, 1))]
    track = np.concatenate(parts)
    offsets = pose_from_effectors(skeleton, {(side, True): track})
    pelvis = np.tile([0.0, 0.0, PELVIS_HEIGHT], (len(track), 1))
    return _world(offsets, pelvis, fps)


ARM_JOINTS = {"L": ("l_elbow", "l_hand"), "R": ("r_elbow", "r_hand")}


def superimpose(base: MotionSequence, arm: MotionSequence, hand: str = "R") -> MotionSequence:
    """Replace one arm of ``base`` with the pelvis-relative arm motion of ``arm``.

    The arm motion is laid over the start of ``base``; past its end the last
    arm frame is held.
    """
    from .motion_io import canonical_frames

    side = hand.upper()[:1]
    b_off, b_org, b_rot = canonical_frames(base.frames)
    a_off, _, _ = canonical_frames(arm.frames)
    idx = np.minimum(np.arange(base.T), arm.T - 1)
    out = b_off.copy()
    for name in ARM_JOINTS[side]:
        out[:, J[name]] = a_off[idx, J[name]]
    world = np.einsum("tji,tkj->tki", b_rot, out) + b_org[:, None, :]
    return MotionSequence(world, base.fps)
