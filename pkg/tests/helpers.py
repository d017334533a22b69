from __future__ import annotations

import random
from pathlib import Path

from labanlite.core_model import FIELDS, InstanceSequence

DATA = Path(__file__).parent / "data"


def random_sequence(rng: random.Random, T: int | None = None, fps: int = 20, max_run: int = 6) -> InstanceSequence:
    """Dense sequence built from random-length runs per field, so streams have structure."""
    T = rng.randint(1, 40) if T is None else T
    columns = []
    for f in FIELDS:
        domain = f.kind.domain
        col: list = []
        while len(col) < T:
            col.extend([rng.choice(domain)] * rng.randint(1, max_run))
        columns.append(col[:T])
    return InstanceSequence(tuple(zip(*columns)), fps)


def stretch(seq: InstanceSequence, factor: int) -> InstanceSequence:
    return InstanceSequence(tuple(r for r in seq.rows for _ in range(factor)), seq.fps)
