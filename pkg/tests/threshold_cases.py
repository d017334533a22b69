"""Boundary inputs for every published cutoff and the symbol each must produce.

Each expected value is read off the rule text by hand, not computed by the
code under test.  Strict inequalities decide the exact-boundary rows: a value
equal to a cutoff never satisfies its ``<`` / ``>`` test.
"""

from __future__ import annotations

EPS = 1e-7

# (kind, side, value, expected)
#   lmr_lower / lmr_upper: a on the x axis (left-side cutoffs; right side mirrors a)
#   bmf_lower / bmf_upper: b on the y axis
#   level_lower / level_upper: c on the z axis
#   hold_feet / hold_hands: effector speed in m/frame
#   bend: segment angle in degrees
#   orientation: hip-line angle in degrees
#   effort: pelvis speed in m/s
CASES = [
    # lower body direction, x axis: a < -0.1 -> R, a > 0.3 -> L
    ("lmr_lower", "L", 0.4, "L"),
    ("lmr_lower", "L", 0.3, "M"),
    ("lmr_lower", "L", 0.3 + EPS, "L"),
    ("lmr_lower", "L", 0.0, "M"),
    ("lmr_lower", "L", -0.1, "M"),
    ("lmr_lower", "L", -0.1 - EPS, "R"),
    ("lmr_lower", "R", -0.4, "R"),
    ("lmr_lower", "R", -0.3, "M"),
    ("lmr_lower", "R", 0.1, "M"),
    ("lmr_lower", "R", 0.1 + EPS, "L"),
    # lower body direction, y axis: b < -0.15 -> F, b > -0.05 -> B
    ("bmf_lower", "L", -0.15, "M"),
    ("bmf_lower", "L", -0.15 - EPS, "F"),
    ("bmf_lower", "L", -0.1, "M"),
    ("bmf_lower", "L", -0.05, "M"),
    ("bmf_lower", "L", -0.05 + EPS, "B"),
    ("bmf_lower", "R", 0.2, "B"),
    # lower body level: 0 > c > -0.8 -> Lo, c > 0 -> Hi, otherwise Mi
    ("level_lower", "L", -0.5, "Lo"),
    ("level_lower", "L", -EPS, "Lo"),
    ("level_lower", "L", 0.0, "Mi"),
    ("level_lower", "L", EPS, "Hi"),
    ("level_lower", "L", -0.8, "Mi"),
    ("level_lower", "L", -0.8 + EPS, "Lo"),
    ("level_lower", "L", -0.9, "Mi"),
    # upper body direction, x axis: same cutoffs as the lower body
    ("lmr_upper", "L", 0.3, "M"),
    ("lmr_upper", "L", 0.3 + EPS, "L"),
    ("lmr_upper", "L", -0.1 - EPS, "R"),
    ("lmr_upper", "R", 0.1 + EPS, "L"),
    ("lmr_upper", "R", -0.3 - EPS, "R"),
    # upper body direction, y axis: b < -0.2 -> F, b > 0.1 -> B
    ("bmf_upper", "L", -0.25, "F"),
    ("bmf_upper", "L", -0.2, "M"),
    ("bmf_upper", "L", -0.2 - EPS, "F"),
    ("bmf_upper", "L", 0.1, "M"),
    ("bmf_upper", "L", 0.1 + EPS, "B"),
    # upper body level: c < -0.2 -> Lo, c > 0.1 -> Hi
    ("level_upper", "L", -0.2, "Mi"),
    ("level_upper", "L", -0.2 - EPS, "Lo"),
    ("level_upper", "L", 0.1, "Mi"),
    ("level_upper", "L", 0.1 + EPS, "Hi"),
    ("level_upper", "R", 0.0, "Mi"),
    # hold: speed strictly below 0.015 (feet) / 0.0005 (hands)
    ("hold_feet", "L", 0.015, "dynamic"),
    ("hold_feet", "L", 0.015 - EPS, "hold"),
    ("hold_feet", "L", 0.0, "hold"),
    ("hold_hands", "L", 0.0005, "dynamic"),
    ("hold_hands", "L", 0.0005 - EPS, "hold"),
    ("hold_hands", "L", 0.001, "dynamic"),
    # bend: six 30 degree bins
    ("bend", "-", 0.0, 0),
    ("bend", "-", 30.0 - EPS, 0),
    ("bend", "-", 30.0, 1),
    ("bend", "-", 45.0, 1),
    ("bend", "-", 60.0, 2),
    ("bend", "-", 150.0, 5),
    ("bend", "-", 180.0, 5),
    # orientation: eight 45 degree bins centered on multiples of 45
    ("orientation", "-", 0.0, 0),
    ("orientation", "-", 22.5 - EPS, 0),
    ("orientation", "-", 22.5, 1),
    ("orientation", "-", 45.0, 1),
    ("orientation", "-", 180.0, 4),
    ("orientation", "-", 337.5 - EPS, 7),
    ("orientation", "-", 337.5, 0),
    ("orientation", "-", 359.0, 0),
    # moving effort: v <= 0.1 -> 0, <= 0.5 -> 1, <= 1.0 -> 2, <= 2.0 -> 3, else 4
    ("effort", "-", 0.05, 0),
    ("effort", "-", 0.1, 0),
    ("effort", "-", 0.1 + EPS, 1),
    ("effort", "-", 0.5, 1),
    ("effort", "-", 0.7, 2),
    ("effort", "-", 1.0, 2),
    ("effort", "-", 1.0 + EPS, 3),
    ("effort", "-", 2.0, 3),
    ("effort", "-", 2.0 + EPS, 4),
    ("effort", "-", 5.0, 4),
]


def classify(kind: str, side: str, value: float):
    """Run one case through the public detection helpers."""
    from labanlite.detection import bend_bin, classify_offset, effort_label, hold_label, orientation_bin

    right = side == "R"
    axis, _, body = kind.partition("_")
    if axis in ("lmr", "bmf", "level"):
        upper = body == "upper"
        # neutral values on the other axes: x = 0 (M), y = -0.1 lower / 0 upper (M), z = -0.9 lower / 0 upper (Mi)
        offset = [0.0, -0.1 if not upper else 0.0, -0.9 if not upper else 0.0]
        offset[{"lmr": 0, "bmf": 1, "level": 2}[axis]] = value
        cell = classify_offset(offset, right, upper)
        return cell[{"lmr": 0, "bmf": 1, "level": 2}[axis]]
    if axis == "hold":
        return hold_label(value, body == "hands")
    if kind == "bend":
        return int(bend_bin(value))
    if kind == "orientation":
        return int(orientation_bin(value))
    return int(effort_label(value))
