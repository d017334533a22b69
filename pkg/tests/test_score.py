from __future__ import annotations

import random

import pytest

from helpers import DATA, random_sequence
from labanlite.core_model import DYNAMIC, FIELDS, HOLD, BodyPartGroup as G, InstanceSequence, SymbolKind
from labanlite.detection import detect
from labanlite.errors import EventOutOfRange, OverlapError, UnknownColumn
from labanlite.score import (
    CONCEPTUAL_COLUMNS,
    SCORE_COLUMNS,
    LabanScore,
    ScoreEvent,
    conceptual_events,
    instances_to_score,
    parse_score_text,
    render_score_text,
    score_to_instances,
    scores_equal_on_conceptual,
)

CONCEPTUAL_GROUPS = (G.SUPPORT_L, G.SUPPORT_R, G.UPPER_L, G.UPPER_R)


def _conceptual(seq: InstanceSequence):
    return [(seq.conceptual_tuples(g), seq.column(g, "hold")) for g in CONCEPTUAL_GROUPS]


def _corpus(n: int, seed: int = 7, **kw) -> list[InstanceSequence]:
    rng = random.Random(seed)
    return [random_sequence(rng, **kw) for _ in range(n)]


def _without_effort(seq: InstanceSequence, allowed=(0, 2, 3)) -> InstanceSequence:
    # effort 1 has no glyph and 4 shares the effort-3 glyph; keep only values the text shows
    rng = random.Random(seq.T)
    cols = {(f.group, f.name): [rng.choice(allowed)] * seq.T for f in FIELDS if f.kind is SymbolKind.MOVING_EFFORT}
    return seq.with_columns(cols)


def test_round_trip_on_conceptual_attributes():
    for seq in _corpus(100):
        back = score_to_instances(instances_to_score(seq))
        assert _conceptual(back) == _conceptual(seq)


def test_round_trip_on_all_attributes():
    for seq in _corpus(100, seed=11):
        assert score_to_instances(instances_to_score(seq)).rows == seq.rows


def test_score_to_instances_is_a_left_inverse_on_produced_scores():
    for seq in _corpus(50, seed=3):
        score = instances_to_score(seq)
        again = instances_to_score(score_to_instances(score))
        assert again == score
        assert scores_equal_on_conceptual(again, score)


def test_constant_sequence_is_one_event_per_column():
    seq = random_sequence(random.Random(0), T=1).rows * 40
    seq = InstanceSequence(seq)
    score = instances_to_score(seq)
    for column in SCORE_COLUMNS:
        evs = score.column_events(column)
        if column in ("Left support", "Right support") and not evs:
            continue  # a support column holding the rest cell is left blank
        assert [(e.start, e.duration) for e in evs] == [(0, 40)]


def test_constant_rest_leaves_support_columns_blank():
    score = instances_to_score(InstanceSequence.rest(40))
    assert score.column_events("Left support") == [] == score.column_events("Right support")
    assert [(e.symbol, e.duration) for e in score.column_events("Left hand")] == [("MM.Mi+HOLD", 40)]


def test_forward_walk_support_events(walk3):
    score = instances_to_score(detect(walk3))
    steps = sorted(
        (e.start, e.staff_column)
        for e in conceptual_events(score, ("Left support", "Right support"))
        if not e.symbol.endswith("+HOLD")
    )
    # steps alternate between the two support columns
    assert [c for _, c in steps] == ["Left support", "Right support", "Left support"]
    assert [s for s, _ in steps] == [0, 10, 20]
    # the right column is empty while the first step is taken
    first_right = score.column_events("Right support")[0]
    assert first_right.start == 10
    for ev in score.events:
        assert ev.end <= score.frames


def test_walk_golden_render(walk3):
    text = render_score_text(instances_to_score(detect(walk3)))
    assert text == (DATA / "walk3.laban.txt").read_text()


def test_render_time_axis_runs_bottom_to_top(walk3):
    lines = render_score_text(instances_to_score(detect(walk3))).splitlines()
    assert lines[0] == "#labanscore v1 fps=20 frames=30"
    assert lines[2].startswith("29 |") and lines[-1].startswith(" 0 |")


def _event(column="Left hand", symbol="MF.Mi", start=0, duration=5):
    return ScoreEvent(column, symbol, start, duration)


def test_overlap_error():
    score = LabanScore(SCORE_COLUMNS, (_event(), _event(start=3)), 20, 10)
    with pytest.raises(OverlapError):
        score_to_instances(score)


def test_event_out_of_range():
    score = LabanScore(SCORE_COLUMNS, (_event(start=8, duration=5),), 20, 10)
    with pytest.raises(EventOutOfRange):
        score_to_instances(score)
    assert issubclass(EventOutOfRange, OverlapError)
    with pytest.raises(EventOutOfRange):
        ScoreEvent("Left hand", "MF.Mi", -1, 2)


def test_unknown_column():
    with pytest.raises(UnknownColumn):
        score_to_instances(LabanScore(SCORE_COLUMNS, (_event(column="Tail"),), 20, 10))


def test_duration_must_be_positive():
    with pytest.raises(ValueError):
        ScoreEvent("Left hand", "MF.Mi", 0, 0)


def test_empty_score_densifies_to_rest():
    seq = score_to_instances(LabanScore(SCORE_COLUMNS, (), 20, 0), T=10)
    assert seq.rows == InstanceSequence.rest(10).rows
    for g in CONCEPTUAL_GROUPS:
        assert set(seq.conceptual_tuples(g)) == {("M", "M", "Mi")}
        assert set(seq.column(g, "hold")) == {HOLD}


def test_gap_carries_previous_cell_as_hold():
    score = LabanScore(SCORE_COLUMNS, (_event("Left support", "LF.Lo", 0, 3),), 20, 6)
    seq = score_to_instances(score)
    assert seq.conceptual_tuples(G.SUPPORT_L) == [("L", "F", "Lo")] * 6
    assert seq.column(G.SUPPORT_L, "hold") == (DYNAMIC,) * 3 + (HOLD,) * 3


def test_empty_score_render():
    lines = render_score_text(LabanScore(SCORE_COLUMNS, (), 20, 0)).splitlines()
    assert lines[0] == "#labanscore v1 fps=20 frames=0"
    assert lines[1].split(" | ")[1:] == list(SCORE_COLUMNS)
    assert len(lines) == 2


def test_render_is_deterministic(walk3):
    score = instances_to_score(detect(walk3))
    assert render_score_text(score) == render_score_text(score)


def test_render_injective_on_corpus(walk3, walk2):
    seqs = [_without_effort(s) for s in _corpus(150, seed=5)]
    scores = [instances_to_score(s) for s in seqs] + [instances_to_score(detect(walk3)), instances_to_score(detect(walk2))]
    distinct = {}
    for sc in scores:
        distinct.setdefault((sc.events, sc.frames, sc.fps), sc)
    texts = {render_score_text(sc) for sc in distinct.values()}
    assert len(texts) == len(distinct)


def test_effort_four_shares_the_effort_three_glyph():
    base = InstanceSequence.rest(4)
    col = (G.SUPPORT_BOTH, "effort_horiz")
    a = instances_to_score(base.with_columns({col: [3] * 4}))
    b = instances_to_score(base.with_columns({col: [4] * 4}))
    assert a != b and render_score_text(a) == render_score_text(b)


def test_parse_render_round_trip():
    for seq in _corpus(60, seed=9):
        score = instances_to_score(_without_effort(seq))
        assert parse_score_text(render_score_text(score)) == score


def test_parse_reads_effort_one_as_gap():
    base = InstanceSequence.rest(4)
    col = (G.SUPPORT_BOTH, "effort_horiz")
    score = instances_to_score(base.with_columns({col: [2, 2, 1, 1]}))
    back = score_to_instances(parse_score_text(render_score_text(score)))
    assert back.column(*col) == (2, 2, 2, 2)


def test_conceptual_columns_map_to_groups():
    assert CONCEPTUAL_COLUMNS == {
        "Left hand": G.UPPER_L,
        "Left support": G.SUPPORT_L,
        "Right support": G.SUPPORT_R,
        "Right hand": G.UPPER_R,
    }
    order = [c for c in SCORE_COLUMNS if c in CONCEPTUAL_COLUMNS]
    assert order == ["Left hand", "Left support", "Right support", "Right hand"]
