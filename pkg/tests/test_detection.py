from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from threshold_cases import CASES, classify
from labanlite.core_model import DYNAMIC, HOLD, BodyPartGroup as G
from labanlite.detection import (
    DEFAULT_THRESHOLDS,
    EFFECTORS,
    ThresholdConfig,
    _hold_labels,
    aggregate_interval,
    bmf_index,
    deflicker,
    detect,
    detect_with_segmentation,
    extract_frame_symbols,
    hold_label,
    lower_level_index,
    modal_value,
    runs,
    segment_intervals,
)
from labanlite.errors import EmptyInterval, ParseError, TooShort
from labanlite.motion_io import J, JOINTS, MotionSequence, canonicalize, transform, yaw_matrix
from labanlite.synth_decode import rest_pose, synth_walk


def test_golden_table_size_and_coverage():
    assert len(CASES) >= 40
    kinds = {k.split("_")[0] for k, *_ in CASES}
    assert kinds == {"lmr", "bmf", "level", "hold", "bend", "orientation", "effort"}


@pytest.mark.parametrize("kind, side, value, expected", CASES)
def test_golden_threshold_table(kind, side, value, expected):
    assert classify(kind, side, value) == expected


def test_defaults_are_published_values():
    c = DEFAULT_THRESHOLDS
    assert (c.lower_a_right, c.lower_a_left, c.lower_b_forward, c.lower_b_backward) == (-0.1, 0.3, -0.15, -0.05)
    assert (c.lower_c_low, c.lower_c_high) == (-0.8, 0.0)
    assert (c.upper_a_right, c.upper_a_left, c.upper_b_forward, c.upper_b_backward) == (-0.1, 0.3, -0.2, 0.1)
    assert (c.upper_c_low, c.upper_c_high) == (-0.2, 0.1)
    assert (c.hold_feet, c.hold_hands) == (0.015, 0.0005)
    assert (c.bend_bin_deg, c.orientation_bin_deg) == (30.0, 45.0)
    assert c.effort_bins == (0.1, 0.5, 1.0, 2.0)


def test_threshold_file_overrides():
    cfg = ThresholdConfig.from_text("# feet only\nhold_feet = 0.02\neffort_bins = 0.2,0.6,1.1,2.1\n")
    assert cfg.hold_feet == 0.02 and cfg.hold_hands == 0.0005
    assert cfg.effort_bins == (0.2, 0.6, 1.1, 2.1)


@pytest.mark.parametrize("text, line", [("bogus = 1\n", 1), ("\nhold_feet = fast\n", 2), ("hold_feet\n", 1)])
def test_threshold_file_errors(text, line):
    with pytest.raises(ParseError) as exc:
        ThresholdConfig.from_text(text)
    assert exc.value.line == line


@given(st.lists(st.floats(0, 0.05, allow_nan=False), min_size=1, max_size=30), st.booleans())
def test_segmentation_rule_matches_scalar_rule(speeds, upper):
    thr = DEFAULT_THRESHOLDS.hold_hands if upper else DEFAULT_THRESHOLDS.hold_feet
    raw = _hold_labels(np.array(speeds), thr, 1)
    assert raw == [hold_label(v, upper) for v in speeds]


@given(st.floats(-2, 2, allow_nan=False), st.floats(-2, 2, allow_nan=False))
def test_forward_displacement_never_flips_to_back(b1, b2):
    lo, hi = sorted((b1, b2))
    # more negative b is further forward; F=2 > M=1 > B=0
    for fwd, back in ((-0.15, -0.05), (-0.2, 0.1)):
        assert bmf_index(lo, fwd, back) >= bmf_index(hi, fwd, back)


def test_lower_level_rule_is_verbatim():
    c = np.array([-1.0, -0.8, -0.4, 0.0, 0.4])
    assert lower_level_index(c, DEFAULT_THRESHOLDS).tolist() == [1, 1, 0, 1, 2]


def _bent_elbow_pose(deg: float) -> np.ndarray:
    pose = rest_pose()
    s = pose[J["l_shoulder"]]
    pose[J["l_elbow"]] = s + np.array([0.0, 0.0, -0.42])
    r = np.radians(deg)
    pose[J["l_hand"]] = pose[J["l_elbow"]] + 0.4 * np.array([0.0, -np.sin(r), -np.cos(r)])
    return pose


@pytest.mark.parametrize("deg, expected", [(0.0, 0), (45.0, 1), (100.0, 3)])
def test_elbow_bend_from_pose(deg, expected):
    sym = extract_frame_symbols(canonicalize(_bent_elbow_pose(deg)))
    assert sym[G.UPPER_L]["elbow_bend"] == expected


def test_rest_pose_symbols():
    sym = extract_frame_symbols(canonicalize(rest_pose()))
    for g in (G.SUPPORT_L, G.SUPPORT_R, G.UPPER_L, G.UPPER_R):
        assert (sym[g]["dir_lmr"], sym[g]["dir_bmf"], sym[g]["level"]) == ("M", "M", "Mi")
    assert sym[G.SUPPORT_BOTH]["orient_horiz"] == 0
    assert sym[G.SUPPORT_BOTH]["effort_horiz"] == 0


def test_left_foot_forty_cm_left_is_l():
    pose = rest_pose()
    pose[J["l_foot"], 0] = 0.4
    assert extract_frame_symbols(canonicalize(pose))[G.SUPPORT_L]["dir_lmr"] == "L"


def test_hip_line_yaw_gives_orientation():
    pose = rest_pose()
    turned = transform(MotionSequence(pose[None]), yaw_matrix(np.pi / 2), (0, 0, 0)).frames[0]
    sym = extract_frame_symbols(canonicalize(turned), heading_ref=0.0)
    assert sym[G.SUPPORT_BOTH]["orient_horiz"] == 2


def test_pelvis_speed_effort():
    pose = rest_pose()
    moved = pose + np.array([0.0, -0.035, 0.0])  # 0.7 m/s at 20 fps
    sym = extract_frame_symbols(canonicalize(moved), canonicalize(pose), fps=20)
    assert sym[G.SUPPORT_BOTH]["effort_horiz"] == 2


def test_constant_pose_is_one_hold_interval():
    m = MotionSequence(np.tile(rest_pose(), (30, 1, 1)))
    seg = segment_intervals(m)
    for g in EFFECTORS:
        assert [(iv.start, iv.end, iv.label) for iv in seg.intervals[g]] == [(0, 30, HOLD)]


def test_standing_still_detects_rest():
    seq = detect(MotionSequence(np.tile(rest_pose(), (30, 1, 1))))
    for g in (G.SUPPORT_L, G.SUPPORT_R, G.UPPER_L, G.UPPER_R):
        assert set(seq.conceptual_tuples(g)) == {("M", "M", "Mi")}
        assert set(seq.column(g, "hold")) == {HOLD}


def test_too_short():
    with pytest.raises(TooShort):
        detect(MotionSequence(rest_pose()[None]))
    with pytest.raises(TooShort):
        segment_intervals(MotionSequence(rest_pose()[None]))


def test_three_step_walk_segments(walk3):
    seg = segment_intervals(walk3)
    dyn = {g: [iv for iv in seg.intervals[g] if iv.label == DYNAMIC] for g in (G.SUPPORT_L, G.SUPPORT_R)}
    # steps L, R, L: two left and one right dynamic interval, alternating in time
    assert len(dyn[G.SUPPORT_L]) == 2 and len(dyn[G.SUPPORT_R]) == 1
    order = sorted((iv.start, g) for g in dyn for iv in dyn[g])
    assert [g for _, g in order] == [G.SUPPORT_L, G.SUPPORT_R, G.SUPPORT_L]
    for a, b in zip(seg.intervals[G.SUPPORT_L], seg.intervals[G.SUPPORT_L][1:]):
        assert a.label != b.label


def test_forward_walk_support_symbols(walk3):
    seq = detect(walk3)
    for g in (G.SUPPORT_L, G.SUPPORT_R):
        tuples = seq.conceptual_tuples(g)
        holds = seq.column(g, "hold")
        steps = {t for t, h in zip(tuples, holds) if h == DYNAMIC}
        assert steps == {("M", "F", "Mi")}
        assert {t for t, h in zip(tuples, holds) if h == HOLD} == {("M", "M", "Mi")}


def test_walk_arms_swing_opposite(walk3):
    seq = detect(walk3)
    # left foot steps first, the right hand swings back at the same time
    assert seq.conceptual_tuples(G.UPPER_R)[5][1] == "B"
    assert seq.conceptual_tuples(G.UPPER_L)[15][1] == "B"


def _mirror(m: MotionSequence) -> MotionSequence:
    frames = m.frames.copy()
    frames[..., 0] *= -1
    swapped = frames.copy()
    for j in JOINTS:
        if j.startswith("l_"):
            r = "r_" + j[2:]
            swapped[:, J[j]], swapped[:, J[r]] = frames[:, J[r]], frames[:, J[j]]
    return MotionSequence(swapped, m.fps)


def test_left_right_mirror_symmetry(walk3):
    a = detect(walk3)
    b = detect(_mirror(walk3))
    flip = {"L": "R", "R": "L", "M": "M"}
    for g, h in ((G.SUPPORT_L, G.SUPPORT_R), (G.UPPER_L, G.UPPER_R)):
        for src, dst in ((g, h), (h, g)):
            assert [(flip[x], y, z) for x, y, z in a.conceptual_tuples(src)] == b.conceptual_tuples(dst)
            assert a.column(src, "hold") == b.column(dst, "hold")


@given(st.floats(-np.pi, np.pi, allow_nan=False), st.floats(-3, 3), st.floats(-3, 3))
def test_yaw_and_translation_invariance(theta, tx, ty):
    m = synth_walk(3, "L")
    moved = transform(m, yaw_matrix(theta), (tx, ty, 0.0))
    assert detect(moved).rows == detect(m).rows


@given(st.integers(0, 10_000), st.integers(2, 40))
def test_segmentation_partitions(seed, T):
    rng = np.random.default_rng(seed)
    base = rest_pose()
    frames = base + np.cumsum(rng.normal(scale=0.01, size=(T, len(JOINTS), 3)), axis=0)
    frames[:, J["l_hip"]] = base[J["l_hip"]]
    frames[:, J["r_hip"]] = base[J["r_hip"]]
    frames[:, J["pelvis"]] = base[J["pelvis"]]
    seq, seg = detect_with_segmentation(MotionSequence(frames))
    for g in EFFECTORS:
        ivs = seg.intervals[g]
        assert ivs[0].start == 0 and ivs[-1].end == T
        for a, b in zip(ivs, ivs[1:]):
            assert a.end == b.start and a.label != b.label
    assert seq.T == T


def test_deflicker_merges_short_runs():
    h, d = HOLD, DYNAMIC
    assert deflicker([h, h, d, h, h], 2) == [h] * 5
    assert deflicker([d, d, h, d, d, d], 2) == [d] * 6
    assert deflicker([h, h, d, d, h, h], 2) == [h, h, d, d, h, h]
    assert deflicker([h], 2) == [h]


def test_runs():
    assert runs("aabccc") == [("a", 0, 2), ("b", 2, 3), ("c", 3, 6)]
    assert runs([]) == []


def test_aggregation_examples():
    assert aggregate_interval(["F"] * 4) == "F"
    assert aggregate_interval(["F", "F", "F", "M", "F"]) == "F"
    assert aggregate_interval(["F", "F", "M", "M"]) == "F"
    assert aggregate_interval(["M", "M", "F", "F"]) == "M"
    assert aggregate_interval([{"a": 1, "b": "x"}, {"a": 2, "b": "x"}, {"a": 2, "b": "y"}]) == {"a": 2, "b": "x"}


def test_empty_interval():
    with pytest.raises(EmptyInterval):
        aggregate_interval([])
    with pytest.raises(EmptyInterval):
        modal_value([])


@given(st.lists(st.sampled_from("FMB"), min_size=1, max_size=20))
def test_mode_oracle(values):
    counts = {v: values.count(v) for v in values}
    best = max(counts.values())
    first = next(v for v in values if counts[v] == best)
    assert modal_value(values) == first
