"""Caption-keyed CD database, retrieval, prompt assembly and LLM reply handling.

The language model is an external text-to-text callable.  Everything on
this side of it is deterministic: retrieval ranks by a pluggable scorer
(TF-IDF cosine by default, ties kept in insertion order), and the prompt is
assembled byte for byte from the composer template.
"""

from __future__ import annotations

import math
import os
import re
import shlex
import subprocess
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .concept import (
    ARM_TABLE,
    SUPPORT_TABLE,
    ConceptScript,
    parse_script,
    script_to_instances,
    serialize_script,
)
from .errors import (
    ComposeFailed,
    DuplicateCaption,
    DurationMismatch,
    EmptyDatabase,
    EmptyScript,
    EvalSplitRecord,
    GrammarError,
    LlmUnavailable,
    NoReferences,
    ParseError,
    ReplyError,
)

Scorer = Callable[[str, Sequence[str]], Sequence[float]]
Llm = Callable[[str], str]

DEFAULT_K = 3
DEFAULT_RETRIES = 3
TIMEOUT_ENV = "LAMOGEN_LLM_TIMEOUT_S"
DEFAULT_TIMEOUT_S = 60.0


@dataclass(frozen=True)
class CDRecord:
    caption: str
    script: ConceptScript
    eval_split: bool = False


@dataclass(frozen=True)
class RetrievalConfig:
    k: int = DEFAULT_K
    scorer: Scorer | None = None  # None: TF-IDF over the database captions

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")


# ------------------------------------------------------------- scoring

_TOKEN = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


class TfidfScorer:
    """Cosine similarity of raw-count TF times smoothed IDF, ln((1+N)/(1+df)) + 1.

    Query words that no caption contains carry no weight.
    """

    def __init__(self, captions: Sequence[str]):
        docs = [Counter(tokenize(c)) for c in captions]
        n = len(docs)
        df = Counter(t for d in docs for t in d)
        self.idf = {t: math.log((1 + n) / (1 + c)) + 1.0 for t, c in df.items()}
        self.vectors = [self._weigh(d) for d in docs]

    def _weigh(self, counts: Counter) -> dict[str, float]:
        return {t: c * self.idf[t] for t, c in counts.items() if t in self.idf}

    def __call__(self, query: str, captions: Sequence[str] | None = None) -> list[float]:
        q = self._weigh(Counter(tokenize(query)))
        qn = math.sqrt(sum(v * v for v in q.values()))
        out = []
        for vec in self.vectors:
            dn = math.sqrt(sum(v * v for v in vec.values()))
            if qn == 0 or dn == 0:
                out.append(0.0)
                continue
            out.append(sum(w * vec.get(t, 0.0) for t, w in q.items()) / (qn * dn))
        return out


@dataclass(frozen=True)
class Database:
    records: tuple[CDRecord, ...]
    tfidf: TfidfScorer = field(repr=False, compare=False, default=None)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def captions(self) -> list[str]:
        return [r.caption for r in self.records]


def db_build(records: Iterable[CDRecord]) -> Database:
    """Validate and freeze records; evaluation-split records are refused."""
    records = tuple(records)
    if not records:
        raise EmptyDatabase("a database needs at least one record")
    seen = set()
    for r in records:
        if not r.caption.strip():
            raise GrammarError("record caption must be non-empty")
        if r.eval_split:
            raise EvalSplitRecord(f"record {r.caption!r} belongs to the evaluation split")
        if r.caption in seen:
            raise DuplicateCaption(f"caption {r.caption!r} appears twice")
        seen.add(r.caption)
    return Database(records, TfidfScorer([r.caption for r in records]))


def db_query(db: Database, query: str, cfg: RetrievalConfig = RetrievalConfig()) -> list[CDRecord]:
    """Top-k records by descending score; equal scores keep insertion order."""
    if not db.records:
        raise EmptyDatabase("cannot query an empty database")
    scores = cfg.scorer(query, db.captions) if cfg.scorer else db.tfidf(query)
    if len(scores) != len(db.records):
        raise ValueError("scorer must return one score per record")
    order = sorted(range(len(db.records)), key=lambda i: -scores[i])
    return [db.records[i] for i in order[: cfg.k]]


# ------------------------------------------------------------- db files


def _one_line(script: ConceptScript) -> str:
    body = serialize_script(script).splitlines()[1:]  # caption lives in the key column
    return " ".join(body)


def dump_db(records: Iterable[CDRecord]) -> str:
    lines = []
    for r in records:
        if "\t" in r.caption or "\n" in r.caption:
            raise GrammarError(f"caption {r.caption!r} contains a tab or newline")
        extra = "\teval" if r.eval_split else ""
        lines.append(f"{r.caption}\t{_one_line(r.script)}{extra}")
    return "".join(line + "\n" for line in lines)


def load_db(text: str) -> list[CDRecord]:
    """``caption<TAB>script[<TAB>train|eval]`` per line; blank lines and ``#`` comments skipped."""
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) not in (2, 3):
            raise ParseError("expected caption<TAB>script[<TAB>split]", lineno, 1)
        caption, blob = cols[0], cols[1]
        split = cols[2].strip() if len(cols) == 3 else "train"
        if split not in ("train", "eval"):
            raise ParseError(f"unknown split {split!r}", lineno, len(caption) + len(blob) + 3)
        try:
            script = parse_script(blob)
        except (ReplyError, GrammarError) as exc:
            raise ParseError(f"bad script: {exc}", lineno, len(caption) + 2) from None
        out.append(CDRecord(caption, ConceptScript(script.support, script.left_hand, script.right_hand, caption),
                            split == "eval"))
    return out


# --------------------------------------------------------------- prompt

PROMPT_TEMPLATE = (
    "There are {count} digit collections describing movements, where each line consists of: [number] [Caption] - "
    "a general description of the motion sequence. [Support] - detailed descriptions of the movements of the "
    "supporting body parts, specifically the left and right feet, using a series of triplets. [Left hand] - "
    "detailed descriptions of the movements of the left hand, using a series of tuples. [Right hand] - detailed "
    "descriptions of the movements of the right hand, using a series of tuples. In the detailed descriptions, we "
    "specify the movement details for each body part and their duration in seconds. For the support movements, "
    "the details must be selected from these 54 categories: [{support}]. For the hand movements, the details must "
    "be selected from these 81 categories: [{arm}]. For example, for the [Support] line, the triplet list would be "
    'like: (left, 1, 0.25), (right, 2, 0.25), (left, 1, 0.25) while (right, 2, 0.25). This means that the first '
    'movement is "left foot steps to rest position in 0.25 seconds". The second movement is "right foot steps '
    'forward in 0.25 seconds". The third movement is "left foot steps to rest position in 0.25 seconds while right '
    'foot steps forward in 0.25 seconds". For the [Left hand] line, the tuple list would be like: (1, 0.5), (2, 0.2). '
    'This means that the first movement is "left hand moves close to shoulder in 0.5 seconds" and the second '
    'movement is "left hand moves forward in 0.2 seconds". For the [Right hand] line, the structure and definition '
    "are similar to [Left hand] lines. Below is the main body of the digit collection describing the movements. "
    "You should strictly imitate the following content and create only one digit collection of {query}. "
    "Reply without explanation."
)

_NUMBER_WORDS = (
    "zero one two three four five six seven eight nine ten eleven twelve thirteen fourteen fifteen sixteen "
    "seventeen eighteen nineteen twenty"
).split()


def number_word(n: int) -> str:
    return _NUMBER_WORDS[n] if 0 <= n < len(_NUMBER_WORDS) else str(n)


def _category_list(table: Sequence[str]) -> str:
    return ", ".join(f"{i}: {p}" for i, p in enumerate(table, start=1))


def format_reference(i: int, record: CDRecord) -> str:
    lines = serialize_script(ConceptScript(record.script.support, record.script.left_hand,
                                           record.script.right_hand, record.caption)).splitlines()
    return "\n".join([f"{i} {lines[0]}"] + lines[1:])


def build_prompt(query: str, refs: Sequence[CDRecord]) -> str:
    if not refs:
        raise NoReferences("the composer prompt needs at least one reference")
    head = PROMPT_TEMPLATE.format(
        count=number_word(len(refs)),
        support=_category_list(SUPPORT_TABLE),
        arm=_category_list(ARM_TABLE),
        query=query,
    )
    body = "\n".join(format_reference(i, r) for i, r in enumerate(refs, start=1))
    return f"{head}\n{body}\n"


# ---------------------------------------------------------------- reply


_FENCE = re.compile(r"^\s*```.*$", re.MULTILINE)


def parse_reply(text: str) -> ConceptScript:
    """Read a reply in the block form; a leading collection number and code fences are ignored."""
    try:
        return parse_script(_FENCE.sub("", text))
    except ReplyError:
        raise
    except GrammarError as exc:
        raise ReplyError(str(exc)) from None


@dataclass
class ComposeResult:
    script: ConceptScript
    prompt: str
    replies: list[str] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)  # one per rejected reply

    @property
    def retries(self) -> int:
        return len(self.errors)


def _retry_prompt(prompt: str, error: str) -> str:
    return f"{prompt}\nYour previous reply could not be used ({error}). Reply again in exactly the format above.\n"


def compose_detailed(
    query: str,
    db: Database,
    cfg: RetrievalConfig = RetrievalConfig(),
    llm: Llm | None = None,
    retries: int = DEFAULT_RETRIES,
    fps: int = 20,
) -> ComposeResult:
    refs = db_query(db, query, cfg)
    prompt = build_prompt(query, refs)
    if llm is None:
        return ComposeResult(refs[0].script, prompt)
    result = ComposeResult(None, prompt)  # type: ignore[arg-type]
    current = prompt
    for _ in range(retries + 1):
        try:
            reply = llm(current)
        except LlmUnavailable:
            raise
        except (OSError, TimeoutError) as exc:
            raise LlmUnavailable(f"language model call failed: {exc}") from exc
        result.replies.append(reply)
        try:
            script = parse_reply(reply)
            script_to_instances(script, fps)
        except (ReplyError, DurationMismatch, EmptyScript) as exc:
            result.errors.append(f"{type(exc).__name__}: {exc}")
            current = _retry_prompt(prompt, result.errors[-1])
            continue
        result.script = ConceptScript(script.support, script.left_hand, script.right_hand, script.caption or query)
        return result
    raise ComposeFailed(f"no usable reply after {retries + 1} attempts", result.errors)


def compose(
    query: str,
    db: Database,
    cfg: RetrievalConfig = RetrievalConfig(),
    llm: Llm | None = None,
    retries: int = DEFAULT_RETRIES,
) -> ConceptScript:
    """Retrieve, prompt, parse and validate; without ``llm`` the top reference is returned."""
    return compose_detailed(query, db, cfg, llm, retries).script


def llm_timeout() -> float:
    raw = os.environ.get(TIMEOUT_ENV)
    if raw is None:
        return DEFAULT_TIMEOUT_S
    try:
        value = float(raw)
    except ValueError:
        raise LlmUnavailable(f"{TIMEOUT_ENV}={raw!r} is not a number") from None
    if value <= 0:
        raise LlmUnavailable(f"{TIMEOUT_ENV} must be positive")
    return value


def command_llm(command: str, timeout: float | None = None) -> Llm:
    """An LLM backed by an external command: prompt on stdin, reply on stdout."""
    argv = shlex.split(command)
    if not argv:
        raise LlmUnavailable("empty LLM command")

    def call(prompt: str) -> str:
        limit = llm_timeout() if timeout is None else timeout
        try:
            proc = subprocess.run(argv, input=prompt, capture_output=True, text=True, timeout=limit)
        except FileNotFoundError:
            raise LlmUnavailable(f"LLM command not found: {argv[0]}") from None
        except subprocess.TimeoutExpired:
            raise LlmUnavailable(f"LLM command timed out after {limit} s") from None
        if proc.returncode != 0:
            raise LlmUnavailable(f"LLM command exited with {proc.returncode}: {proc.stderr.strip()[:200]}")
        return proc.stdout

    return call
