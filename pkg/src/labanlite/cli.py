"""``labanlite`` command-line tool.

Exit codes: 0 success, 1 domain error (bad input data, failed compose, ...),
2 usage error.  Artifacts go to ``--out`` or stdout; diagnostics go to stderr.
``--in -`` (the default) reads stdin, so subcommands compose with pipes.
"""

from __future__ import annotations

import argparse
import random
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import compose as cmp
from .concept import (
    format_cd,
    format_tuple,
    parse_cd_text,
    parse_script,
    parse_tuple,
    random_script,
    script_to_instances,
    serialize_script,
    cd_to_symbols,
)
from .core_model import INSTANCE_HEADER, BodyPartGroup, InstanceSequence, dump_instances, load_instances
from .detection import DEFAULT_THRESHOLDS, ThresholdConfig, detect
from .errors import ComposeFailed, LabanLiteError, ParseError, UnreachableWarning
from .metrics import evaluate
from .motion_io import MOTION_HEADER, concat, load_motion, save_motion
from .score import SCORE_HEADER, instances_to_score, parse_score_text, render_score_text, score_to_instances
from .synth_decode import decode, superimpose, synth_arm_wave, synth_walk


@dataclass
class CliConfig:
    subcommand: str
    thresholds: ThresholdConfig = DEFAULT_THRESHOLDS
    fps: int = 20
    out: str | None = None
    options: dict = field(default_factory=dict)


class _Usage(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: D401 - argparse hook
        raise _Usage(f"{self.prog}: error: {message}")


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text()


def _write(out: str | None, text: str | bytes) -> None:
    data = text.encode() if isinstance(text, str) else text
    if out is None or out == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        Path(out).write_bytes(data)


def _thresholds(path: str | None) -> ThresholdConfig:
    return ThresholdConfig.load(path) if path else DEFAULT_THRESHOLDS


def load_any_instances(text: str, cfg: ThresholdConfig = DEFAULT_THRESHOLDS, fps: int = 20) -> InstanceSequence:
    """Instances from a motion, instance, score or script file, sniffed by header.

    Score text is lossy on moving effort (see :func:`parse_score_text`).
    """
    head = text.lstrip()[:64]
    if head.startswith(MOTION_HEADER):
        return detect(load_motion(text), cfg)
    if head.startswith(INSTANCE_HEADER):
        return load_instances(text)
    if head.startswith(SCORE_HEADER):
        return score_to_instances(parse_score_text(text))
    if head.startswith("[") or head[:1].isdigit():
        return script_to_instances(parse_script(text), fps)
    raise ParseError("input is not a motion, instance, score or script file", 1, 1)


# ----------------------------------------------------------- subcommands


def cmd_detect(cfg: CliConfig) -> int:
    seq = detect(load_motion(_read(cfg.options["in"])), cfg.thresholds)
    _write(cfg.out, dump_instances(seq))
    if cfg.options.get("score"):
        Path(cfg.options["score"]).write_text(render_score_text(instances_to_score(seq)))
    return 0


def cmd_render(cfg: CliConfig) -> int:
    seq = load_any_instances(_read(cfg.options["in"]), cfg.thresholds, cfg.fps)
    _write(cfg.out, render_score_text(instances_to_score(seq)))
    return 0


def cmd_decode(cfg: CliConfig) -> int:
    o = cfg.options
    if o.get("script"):
        seq = script_to_instances(parse_script(_read(o["script"])), cfg.fps)
    else:
        seq = load_any_instances(_read(o["in"]), cfg.thresholds, cfg.fps)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", UnreachableWarning)
        motion = decode(seq, cfg=cfg.thresholds, strict=o.get("strict", False))
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    _write(cfg.out, save_motion(motion))
    return 0


def cmd_synth(cfg: CliConfig) -> int:
    o = cfg.options
    kind = o["kind"]
    if kind == "walk":
        motion = synth_walk(o["steps"], o["first"], o["step_seconds"], cfg.fps, direction=o["direction"])
        if o.get("then_back"):
            nxt = "R" if (o["steps"] % 2 == 0) == (o["first"] == "R") else "L"
            motion = concat([motion, synth_walk(o["then_back"], nxt, o["step_seconds"], cfg.fps, direction="backward")])
        if o.get("wave"):
            motion = superimpose(motion, synth_arm_wave(o["wave"], o["cycles"], cfg.fps), o["wave"])
        _write(cfg.out, save_motion(motion))
    elif kind == "wave":
        _write(cfg.out, save_motion(synth_arm_wave(o["hand"], o["cycles"], cfg.fps)))
    else:
        script = random_script(random.Random(o["seed"]), o["movements"])
        _write(cfg.out, serialize_script(script))
    return 0


def _report_text(gt: InstanceSequence, gen: InstanceSequence, fmt: str) -> str:
    report = evaluate(gt, gen)
    parts = []
    if fmt in ("table", "both"):
        parts.append(report.to_table())
    if fmt in ("lines", "both"):
        parts.append(report.to_lines())
    return "".join(parts)


def cmd_metrics(cfg: CliConfig) -> int:
    o = cfg.options

    def load(path):
        return load_any_instances(_read(path), cfg.thresholds, cfg.fps)

    if o.get("batch"):
        pairs = []
        for lineno, line in enumerate(_read(o["batch"]).splitlines(), start=1):
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.split()
            if len(cols) != 2:
                raise ParseError("expected '<gt file> <gen file>'", lineno, 1)
            pairs.append(cols)

        def one(pair):
            return f"# {pair[0]} {pair[1]}\n" + _report_text(load(pair[0]), load(pair[1]), o["format"])

        with ThreadPoolExecutor(max_workers=o.get("jobs") or 4) as pool:
            texts = list(pool.map(one, pairs))  # map keeps input order
        _write(cfg.out, "".join(texts))
        return 0
    _write(cfg.out, _report_text(load(o["gt"]), load(o["gen"]), o["format"]))
    return 0


def cmd_db(cfg: CliConfig) -> int:
    o = cfg.options
    records = cmp.load_db(_read(o["db"] if o["action"] == "query" else o["in"]))
    db = cmp.db_build(records)
    if o["action"] == "build":
        _write(cfg.out, cmp.dump_db(db.records))
        return 0
    hits = cmp.db_query(db, o["query"], cmp.RetrievalConfig(k=o["k"]))
    _write(cfg.out, "\n".join(cmp.format_reference(i, r) for i, r in enumerate(hits, start=1)) + "\n")
    return 0


def cmd_compose(cfg: CliConfig) -> int:
    o = cfg.options
    db = cmp.db_build(cmp.load_db(_read(o["db"])))
    llm = cmp.command_llm(o["llm_cmd"]) if o.get("llm_cmd") else None
    try:
        result = cmp.compose_detailed(o["query"], db, cmp.RetrievalConfig(k=o["k"]), llm, o["retries"], cfg.fps)
    except ComposeFailed as exc:
        for err in exc.attempts:
            print(f"rejected reply: {err}", file=sys.stderr)
        raise
    for err in result.errors:
        print(f"retry: {err}", file=sys.stderr)
    _write(cfg.out, serialize_script(result.script))
    return 0


def cmd_cd(cfg: CliConfig) -> int:
    o = cfg.options
    if o["action"] == "parse":
        cd = parse_cd_text(o["text"])
        b = cd_to_symbols(cd, cfg.fps)
        line = f"{format_tuple(cd)}\t{b.lmr}{b.bmf}.{b.level}\t{b.hold}\t{b.frames}\n"
        _write(cfg.out, line)
        return 0
    hand = {"L": BodyPartGroup.UPPER_L, "R": BodyPartGroup.UPPER_R}.get(o.get("hand") or "")
    cd = parse_tuple(o["tuple"], hand)
    _write(cfg.out, format_cd(cd) + "\n")
    return 0


COMMANDS = {
    "detect": cmd_detect,
    "render": cmd_render,
    "decode": cmd_decode,
    "synth": cmd_synth,
    "metrics": cmd_metrics,
    "db": cmd_db,
    "compose": cmd_compose,
    "cd": cmd_cd,
}


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="labanlite", description="LabanLite motion notation toolchain")
    sub = p.add_subparsers(dest="command", parser_class=_Parser, required=True)

    def common(sp, inp=True):
        if inp:
            sp.add_argument("--in", dest="in", default="-", help="input file ('-' for stdin)")
        sp.add_argument("--out", help="output file (default stdout)")
        sp.add_argument("--thresholds", help="key=value threshold file")
        sp.add_argument("--fps", type=int, default=20)

    sp = sub.add_parser("detect", help="motion -> instances")
    common(sp)
    sp.add_argument("--score", help="also write the rendered score here")

    sp = sub.add_parser("render", help="instances (or motion, or script) -> score text")
    common(sp)

    sp = sub.add_parser("decode", help="instances, score or script -> motion")
    common(sp, inp=False)
    src = sp.add_mutually_exclusive_group()
    src.add_argument("--in", dest="in", default="-", help="instance file ('-' for stdin)")
    src.add_argument("--script", help="script file in block form")
    sp.add_argument("--strict", action="store_true", help="fail on unreachable cells instead of clamping")

    sp = sub.add_parser("synth", help="generate synthetic motions or scripts")
    kinds = sp.add_subparsers(dest="kind", parser_class=_Parser, required=True)
    w = kinds.add_parser("walk")
    common(w, inp=False)
    w.add_argument("--steps", type=int, required=True)
    w.add_argument("--first", choices=["L", "R"], default="L")
    w.add_argument("--direction", choices=["forward", "backward"], default="forward")
    w.add_argument("--step-seconds", dest="step_seconds", type=float, default=0.5)
    w.add_argument("--then-back", dest="then_back", type=int, default=0, help="append this many backward steps")
    w.add_argument("--wave", choices=["L", "R"], help="superimpose a hand wave")
    w.add_argument("--cycles", type=int, default=2)
    wv = kinds.add_parser("wave")
    common(wv, inp=False)
    wv.add_argument("--hand", choices=["L", "R"], default="R")
    wv.add_argument("--cycles", type=int, default=2)
    sc = kinds.add_parser("script")
    common(sc, inp=False)
    sc.add_argument("--seed", type=int, required=True)
    sc.add_argument("--movements", type=int, default=4)

    sp = sub.add_parser("metrics", help="SMT/TMP/HMN report")
    common(sp, inp=False)
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--gt")
    src.add_argument("--batch", help="file of '<gt> <gen>' lines")
    sp.add_argument("--gen")
    sp.add_argument("--format", choices=["table", "lines", "both"], default="both")
    sp.add_argument("--jobs", type=int, default=4)

    sp = sub.add_parser("db", help="conceptual description database")
    acts = sp.add_subparsers(dest="action", parser_class=_Parser, required=True)
    b = acts.add_parser("build")
    common(b)
    q = acts.add_parser("query")
    common(q, inp=False)
    q.add_argument("--db", required=True)
    q.add_argument("--query", required=True)
    q.add_argument("--k", type=int, default=cmp.DEFAULT_K)

    sp = sub.add_parser("compose", help="retrieve, prompt an external LLM, parse the reply")
    common(sp, inp=False)
    sp.add_argument("--db", required=True)
    sp.add_argument("--query", required=True)
    sp.add_argument("--llm-cmd", dest="llm_cmd", help="command reading the prompt on stdin")
    sp.add_argument("--k", type=int, default=cmp.DEFAULT_K)
    sp.add_argument("--retries", type=int, default=cmp.DEFAULT_RETRIES)

    sp = sub.add_parser("cd", help="conceptual description grammar")
    acts = sp.add_subparsers(dest="action", parser_class=_Parser, required=True)
    pa = acts.add_parser("parse")
    common(pa, inp=False)
    pa.add_argument("--text", required=True)
    fo = acts.add_parser("format")
    common(fo, inp=False)
    fo.add_argument("--tuple", required=True)
    fo.add_argument("--hand", choices=["L", "R"], help="hand for a two-element tuple")
    return p


def parse_config(argv: Sequence[str]) -> CliConfig:
    ns = build_parser().parse_args(list(argv))
    opts = vars(ns).copy()
    if ns.command == "metrics" and ns.gt and not ns.gen:
        raise _Usage("labanlite metrics: error: --gt requires --gen")
    if ns.command == "metrics" and ns.batch and ns.gen:
        raise _Usage("labanlite metrics: error: --gen is not allowed with --batch")
    for flag in ("steps", "cycles", "movements", "k", "jobs"):
        if flag in opts and opts[flag] is not None and opts[flag] < 1:
            raise _Usage(f"labanlite: error: --{flag} must be at least 1")
    if opts.get("fps") is not None and opts["fps"] < 1:
        raise _Usage("labanlite: error: --fps must be at least 1")
    if "retries" in opts and opts["retries"] < 0:
        raise _Usage("labanlite: error: --retries must be non-negative")
    return CliConfig(
        subcommand=ns.command,
        thresholds=DEFAULT_THRESHOLDS,
        fps=opts.pop("fps", 20) or 20,
        out=opts.pop("out", None),
        options=opts,
    )


def run(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse_config(argv)
    except _Usage as exc:
        print(exc, file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        cfg.thresholds = _thresholds(cfg.options.get("thresholds"))
        return COMMANDS[cfg.subcommand](cfg)
    except LabanLiteError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
