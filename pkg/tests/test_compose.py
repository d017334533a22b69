from __future__ import annotations

import random
import shlex
import sys

import pytest

from helpers import DATA
from labanlite.compose import (
    TIMEOUT_ENV,
    CDRecord,
    RetrievalConfig,
    build_prompt,
    command_llm,
    compose,
    compose_detailed,
    db_build,
    db_query,
    dump_db,
    format_reference,
    llm_timeout,
    load_db,
    number_word,
    parse_reply,
)
from labanlite.concept import ConceptScript, random_script, serialize_script
from labanlite.errors import (
    ComposeFailed,
    DuplicateCaption,
    EmptyDatabase,
    EvalSplitRecord,
    IndexOutOfTable,
    LlmUnavailable,
    MissingSection,
    NoReferences,
    ParseError,
    TupleError,
)


@pytest.fixture(scope="module")
def records():
    return load_db((DATA / "fixture_db.tsv").read_text())


@pytest.fixture(scope="module")
def db(records):
    return db_build(records)


def _reply(record: CDRecord) -> str:
    return serialize_script(record.script)


def test_fixture_db(records):
    assert [r.caption for r in records] == ["walk forward", "turn", "jump", "wave right hand"]
    assert records[0].script.caption == "walk forward"


def test_exact_caption_ranks_first(db):
    for r in db.records:
        assert db_query(db, r.caption)[0] == r


def test_walk_in_a_circle(db):
    top = [r.caption for r in db_query(db, "walk in a circle")]
    assert len(top) == 3 and top[0] == "walk forward"
    # "turn" shares no word with the query; it gets in only because equal
    # (zero) scores keep insertion order
    assert "turn" in top
    assert db.tfidf("walk in a circle")[1] == 0.0


def test_k_larger_than_db(db):
    assert len(db_query(db, "jump", RetrievalConfig(k=10))) == len(db)


def test_custom_scorer(db):
    by_length = RetrievalConfig(k=2, scorer=lambda q, caps: [len(c) for c in caps])
    assert [r.caption for r in db_query(db, "anything", by_length)] == ["wave right hand", "walk forward"]


def test_ties_keep_insertion_order(db):
    flat = RetrievalConfig(k=4, scorer=lambda q, caps: [0.0] * len(caps))
    assert db_query(db, "x", flat) == list(db.records)


def test_bad_k():
    with pytest.raises(ValueError):
        RetrievalConfig(k=0)


def test_db_build_errors(records):
    with pytest.raises(EmptyDatabase):
        db_build([])
    leaked = CDRecord("secret", records[0].script, eval_split=True)
    with pytest.raises(EvalSplitRecord):
        db_build(list(records) + [leaked])
    with pytest.raises(DuplicateCaption):
        db_build(list(records) + [records[0]])


def test_db_file_round_trip(records):
    text = dump_db(records)
    assert load_db(text) == records
    assert dump_db(load_db(text)) == text


def test_db_file_eval_flag(records):
    line = dump_db([CDRecord("held out", records[0].script, eval_split=True)])
    assert line.rstrip("\n").endswith("\teval")
    loaded = load_db(line)
    assert loaded[0].eval_split
    with pytest.raises(EvalSplitRecord):
        db_build(loaded)


def test_db_file_errors():
    with pytest.raises(ParseError) as exc:
        load_db("walk\n")
    assert exc.value.line == 1
    with pytest.raises(ParseError):
        load_db("# header\nwalk\t[Support] (left, 2, 0.5) [Left hand] [Right hand]\tdev\n")
    with pytest.raises(ParseError) as exc:
        load_db("walk\t[Support] (left, 99, 0.5) [Left hand] [Right hand]\n")
    assert exc.value.line == 1


def test_golden_prompt(db):
    prompt = build_prompt("walk forward", db_query(db, "walk forward"))
    assert prompt == (DATA / "walk_forward.prompt.txt").read_text()
    assert prompt.startswith("There are three digit collections")
    assert "create only one digit collection of walk forward." in prompt


def test_prompt_contains_each_reference_once(db):
    refs = db_query(db, "walk forward")
    prompt = build_prompt("walk forward", refs)
    for i, r in enumerate(refs, start=1):
        block = format_reference(i, r)
        assert prompt.count(block) == 1
        for line in block.splitlines()[1:]:
            assert prompt.count(line) == 1


def test_prompt_is_deterministic(db):
    refs = db_query(db, "jump")
    assert build_prompt("jump", refs) == build_prompt("jump", refs)


def test_no_references():
    with pytest.raises(NoReferences):
        build_prompt("walk", [])


def test_number_words():
    assert [number_word(n) for n in (1, 3, 5)] == ["one", "three", "five"]
    assert number_word(42) == "42"


def test_parse_reply_errors():
    with pytest.raises(IndexOutOfTable):
        parse_reply("[Support] (left, 1, 0.5)\n[Left hand] (99, 0.5)\n[Right hand] (1, 0.5)\n")
    with pytest.raises(MissingSection):
        parse_reply("[Support] (left, 1, 0.5)\n[Left hand] (1, 0.5)\n")
    with pytest.raises(TupleError):
        parse_reply("[Support] (left, 1 0.5)\n[Left hand] (1, 0.5)\n[Right hand] (1, 0.5)\n")


def test_parse_reply_tolerates_number_and_fences(records):
    text = "```\n1 " + _reply(records[1]) + "```\n"
    assert parse_reply(text).support == records[1].script.support


def test_parse_reply_inverts_serialize():
    rng = random.Random(8)
    for _ in range(50):
        script = random_script(rng)
        assert parse_reply(serialize_script(script)) == script


def test_echo_llm_returns_reference(db, records):
    target = records[3]
    result = compose_detailed("wave right hand", db, llm=lambda prompt: _reply(target))
    assert result.script == target.script
    assert result.retries == 0 and len(result.replies) == 1


def test_malformed_then_valid(db, records):
    replies = iter(["no idea", "[Support] (left, 1, 0.5)", _reply(records[0])])
    prompts = []

    def llm(prompt):
        prompts.append(prompt)
        return next(replies)

    result = compose_detailed("walk forward", db, llm=llm)
    assert result.script == records[0].script
    assert result.retries == 2
    assert "MissingSection" in result.errors[0]
    # the error is fed back on the retry
    assert prompts[1].startswith(prompts[0]) and "could not be used" in prompts[1]


def test_duration_mismatch_triggers_retry(db, records):
    bad = "[Support] (left, 2, 2)\n[Left hand] (1, 0.5)\n[Right hand] (1, 0.5)\n"
    replies = iter([bad, _reply(records[0])])
    result = compose_detailed("walk forward", db, llm=lambda p: next(replies))
    assert result.retries == 1 and "DurationMismatch" in result.errors[0]


def test_compose_fails_after_retries(db):
    with pytest.raises(ComposeFailed):
        compose("walk forward", db, llm=lambda p: "garbage", retries=3)
    calls = []
    with pytest.raises(ComposeFailed):
        compose("walk forward", db, llm=lambda p: calls.append(p) or "garbage", retries=1)
    assert len(calls) == 2


def test_offline_composer_returns_top_reference(db, records):
    assert compose("jump", db) == records[2].script


def test_reply_caption_defaults_to_query(db):
    reply = "[Support] (left, 2, 0.5)\n[Left hand] (1, 0.5)\n[Right hand] (1, 0.5)\n"
    assert compose("step once", db, llm=lambda p: reply).caption == "step once"


def _python_command(code: str) -> str:
    return f"{shlex.quote(sys.executable)} -c {shlex.quote(code)}"


def test_command_llm(db, records):
    code = f"import sys; sys.stdin.read(); sys.stdout.write({_reply(records[0])!r})"
    script = compose("walk forward", db, llm=command_llm(_python_command(code)))
    assert script == records[0].script


def test_command_llm_failures():
    with pytest.raises(LlmUnavailable):
        command_llm("/nonexistent/llm-binary")("prompt")
    with pytest.raises(LlmUnavailable):
        command_llm(_python_command("import sys; sys.exit(3)"))("prompt")
    with pytest.raises(LlmUnavailable):
        command_llm(_python_command("import time; time.sleep(5)"), timeout=0.2)("prompt")
    with pytest.raises(LlmUnavailable):
        command_llm("")


def test_llm_unavailable_is_not_retried(db):
    calls = []

    def llm(p):
        calls.append(p)
        raise LlmUnavailable("down")

    with pytest.raises(LlmUnavailable):
        compose("walk forward", db, llm=llm)
    assert len(calls) == 1


def test_timeout_env(monkeypatch):
    monkeypatch.delenv(TIMEOUT_ENV, raising=False)
    assert llm_timeout() == 60.0
    monkeypatch.setenv(TIMEOUT_ENV, "2.5")
    assert llm_timeout() == 2.5
    monkeypatch.setenv(TIMEOUT_ENV, "soon")
    with pytest.raises(LlmUnavailable):
        llm_timeout()
    monkeypatch.setenv(TIMEOUT_ENV, "0.2")
    with pytest.raises(LlmUnavailable):
        command_llm(_python_command("import time; time.sleep(5)"))("prompt")


def test_empty_script_is_rejected_by_compose(db, records):
    empty = serialize_script(ConceptScript())
    replies = iter([empty, _reply(records[0])])
    result = compose_detailed("walk forward", db, llm=lambda p: next(replies))
    assert result.retries == 1 and "EmptyScript" in result.errors[0]
