"""LabanLite: symbolic motion notation, detection, decoding and benchmark metrics."""

from __future__ import annotations

from .core_model import BodyPartGroup, InstanceSequence, build_codebook
from .detection import ThresholdConfig, detect
from .metrics import evaluate
from .motion_io import MotionSequence, load_motion, save_motion
from .synth_decode import decode, synth_arm_wave, synth_walk

__all__ = [
    "BodyPartGroup",
    "InstanceSequence",
    "MotionSequence",
    "ThresholdConfig",
    "build_codebook",
    "decode",
    "detect",
    "evaluate",
    "load_motion",
    "save_motion",
    "synth_arm_wave",
    "synth_walk",
]
