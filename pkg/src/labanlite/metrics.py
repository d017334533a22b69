"""Benchmark scores over conceptual tuples, plus the pose reconstruction distance.

The comparison token of a part is its (DirectionLMR, DirectionBMF, Level)
tuple.  SMT compares run values (durations dropped), TMP compares frames,
HMN compares sequences of synchronized tuple pairs from two parts.  Each is
an LCS length normalized by the longer sequence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from .core_model import BodyPartGroup, InstanceSequence
from .errors import ShapeMismatch
from .motion_io import MotionSequence

G = BodyPartGroup

PARTS = {"supL": G.SUPPORT_L, "supR": G.SUPPORT_R, "armL": G.UPPER_L, "armR": G.UPPER_R}
ARM_SUP_PAIRS = (("armL", "supL"), ("armL", "supR"), ("armR", "supL"), ("armR", "supR"))
PAIRS = {
    "arm-arm": (("armL", "armR"),),
    "arm-sup": ARM_SUP_PAIRS,
    "sup-sup": (("supL", "supR"),),
}
DEFAULT_LAMBDA = 0.5


# ------------------------------------------------------------------ LCS


def lcs_length(a: Sequence[Hashable], b: Sequence[Hashable]) -> int:
    """Textbook LCS table: f(u, 0) = f(0, v) = 0, +1 on a match, else the max neighbor."""
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0] * (len(b) + 1)
        for v, y in enumerate(b, start=1):
            cur[v] = prev[v - 1] + 1 if x == y else max(prev[v], cur[v - 1])
        prev = cur
    return prev[-1]


def lcs_length_fast(a: Sequence[Hashable], b: Sequence[Hashable]) -> int:
    """Bit-parallel LCS length (one machine word per 64 positions of ``a``).

    Same value as :func:`lcs_length`; used where the quadratic table is too
    slow for the per-report time budget.
    """
    if not a or not b:
        return 0
    masks: dict = {}
    for i, x in enumerate(a):
        masks[x] = masks.get(x, 0) | (1 << i)
    full = (1 << len(a)) - 1
    v = full
    for y in b:
        m = masks.get(y)
        if m is None:
            continue
        u = v & m
        v = ((v + u) | (v - u)) & full
    return len(a) - bin(v).count("1")


def normalized_lcs(a: Sequence[Hashable], b: Sequence[Hashable]) -> float:
    """LCS / max(len); two empty sequences count as identical."""
    n = max(len(a), len(b))
    if n == 0:
        return 1.0
    return lcs_length_fast(a, b) / n


# ------------------------------------------------------------ streams


@dataclass(frozen=True)
class Run:
    value: Hashable
    start: int
    length: int

    @property
    def end(self) -> int:
        return self.start + self.length


def compress(tokens: Sequence[Hashable]) -> list[Run]:
    """Duration-ignored stream: one run per maximal block of equal tokens."""
    out: list[Run] = []
    start = 0
    for t in range(1, len(tokens) + 1):
        if t == len(tokens) or tokens[t] != tokens[start]:
            out.append(Run(tokens[start], start, t - start))
            start = t
    return out


def part_tokens(seq: InstanceSequence, part: str) -> list[tuple]:
    try:
        group = PARTS[part]
    except KeyError:
        raise KeyError(f"unknown part {part!r}; expected one of {sorted(PARTS)}") from None
    return seq.conceptual_tuples(group)


def iou(a: Run, b: Run) -> float:
    inter = min(a.end, b.end) - max(a.start, b.start)
    if inter <= 0:
        return 0.0
    return inter / (max(a.end, b.end) - min(a.start, b.start))


def synchronized_pairs(runs1: Sequence[Run], runs2: Sequence[Run]) -> list[tuple]:
    """Pair each part-1 run, in order, with the unused part-2 run of highest IoU above 0.5."""
    used: set[int] = set()
    out = []
    j0 = 0
    for r1 in runs1:
        while j0 < len(runs2) and runs2[j0].end <= r1.start:
            j0 += 1
        best, best_iou = None, 0.5
        j = j0
        while j < len(runs2) and runs2[j].start < r1.end:
            if j not in used:
                v = iou(r1, runs2[j])
                if v > best_iou:
                    best, best_iou = j, v
            j += 1
        if best is not None:
            used.add(best)
            out.append((r1.value, runs2[best].value))
    return out


# ------------------------------------------------------------ metrics


def smt(gt: InstanceSequence, gen: InstanceSequence, part: str) -> float:
    a = [r.value for r in compress(part_tokens(gt, part))]
    b = [r.value for r in compress(part_tokens(gen, part))]
    return normalized_lcs(a, b)


def smt_runs(gt_values: Sequence[Hashable], gen_values: Sequence[Hashable]) -> float:
    """SMT on already-compressed run values."""
    return normalized_lcs(gt_values, gen_values)


def tmp(gt: InstanceSequence, gen: InstanceSequence, part: str) -> float:
    return normalized_lcs(part_tokens(gt, part), part_tokens(gen, part))


def joint_sequence(seq: InstanceSequence, pair: tuple[str, str]) -> list[tuple]:
    return synchronized_pairs(compress(part_tokens(seq, pair[0])), compress(part_tokens(seq, pair[1])))


def hmn(gt: InstanceSequence, gen: InstanceSequence, pair: tuple[str, str]) -> float:
    return normalized_lcs(joint_sequence(gt, pair), joint_sequence(gen, pair))


@dataclass(frozen=True)
class MetricReport:
    values: dict[str, float]

    def __getitem__(self, key: str) -> float:
        return self.values[key]

    def keys(self):
        return self.values.keys()

    def to_lines(self) -> str:
        """Machine-readable ``key=value`` lines, six decimals."""
        return "".join(f"{k}={v:.6f}\n" for k, v in self.values.items())

    def to_table(self) -> str:
        head = f"{'':6}" + "".join(f"{p:>8}" for p in PARTS) + f"{'avg':>8}"
        rows = [head]
        for m in ("smt", "tmp"):
            rows.append(f"{m.upper():6}" + "".join(f"{self.values[f'{m}.{p}']:8.4f}" for p in PARTS)
                        + f"{self.values[f'{m}.avg']:8.4f}")
        rows.append(f"{'':6}" + "".join(f"{p:>9}" for p in PAIRS) + f"{'avg':>8}")
        rows.append(f"{'HMN':6}" + "".join(f"{self.values[f'hmn.{p}']:9.4f}" for p in PAIRS)
                    + f"{self.values['hmn.avg']:8.4f}")
        return "\n".join(rows) + "\n"


def evaluate(gt: InstanceSequence, gen: InstanceSequence) -> MetricReport:
    """SMT and TMP per part, HMN per pair column (arm-sup is the mean of four pairs)."""
    tokens = {seq_id: {p: part_tokens(s, p) for p in PARTS} for seq_id, s in (("gt", gt), ("gen", gen))}
    runs = {k: {p: compress(t) for p, t in v.items()} for k, v in tokens.items()}
    values: dict[str, float] = {}
    for p in PARTS:
        values[f"smt.{p}"] = normalized_lcs([r.value for r in runs["gt"][p]], [r.value for r in runs["gen"][p]])
    for p in PARTS:
        values[f"tmp.{p}"] = normalized_lcs(tokens["gt"][p], tokens["gen"][p])
    values["smt.avg"] = float(np.mean([values[f"smt.{p}"] for p in PARTS]))
    values["tmp.avg"] = float(np.mean([values[f"tmp.{p}"] for p in PARTS]))
    pair_scores = {}
    for column, pairs in PAIRS.items():
        scores = []
        for p1, p2 in pairs:
            a = synchronized_pairs(runs["gt"][p1], runs["gt"][p2])
            b = synchronized_pairs(runs["gen"][p1], runs["gen"][p2])
            s = normalized_lcs(a, b)
            pair_scores[f"hmn.{p1}-{p2}"] = s
            scores.append(s)
        values[f"hmn.{column}"] = float(np.mean(scores))
    values["hmn.avg"] = float(np.mean([values[f"hmn.{c}"] for c in PAIRS]))
    values.update(pair_scores)
    return MetricReport(values)


# --------------------------------------------------------- motion distance


def _frames(x) -> np.ndarray:
    return x.frames if isinstance(x, MotionSequence) else np.asarray(x, dtype=float)


def reconstruction_distance(x, x_hat, lam: float = DEFAULT_LAMBDA) -> float:
    """Sum of L1 pose differences plus ``lam`` times the L1 velocity differences."""
    a, b = _frames(x), _frames(x_hat)
    if a.shape != b.shape:
        raise ShapeMismatch(f"motion shapes differ: {a.shape} vs {b.shape}")
    pose = float(np.abs(a - b).sum())
    if a.shape[0] < 2:
        return pose
    d = a - b
    dv = np.empty_like(d)
    dv[1:] = d[1:] - d[:-1]
    dv[0] = dv[1]
    return pose + lam * float(np.abs(dv).sum())
