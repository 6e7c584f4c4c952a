"""Path-similarity scoring: participant-drawn robot paths vs odometry truth.

Automates the manual analysis: the drawn polyline (tablet units, arbitrary
pose) is registered onto the odometry ground truth with a least-squares
similarity transform (rotation + uniform scale + translation), turns are
extracted from both, and agreement is scored on turn angles and on the
final-position error. Pure batch computation, trivially parallel over
records.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

DEFAULT_TURN_DETECT_DEG = 30.0  # a turn exists
DEFAULT_TURN_TOL_DEG = 20.0  # drawn angle agrees with truth
DEFAULT_ENDPOINT_TOL_M = 1.0
DEFAULT_RESAMPLE_N = 200
STRAIGHT_EPS_DEG = 1.0  # heading steps below this break a turn run


class DegeneratePath(ValueError):
    pass


class PathFrame(str, Enum):
    ODOMETRY = "odometry"
    TABLET = "tablet"


@dataclass(frozen=True)
class Polyline:
    points: np.ndarray  # (n, 2) float64
    frame: PathFrame

    @classmethod
    def from_points(cls, points, frame: PathFrame | str) -> "Polyline":
        """Build a polyline, dropping consecutive duplicate points."""
        arr = np.asarray(points, dtype=float).reshape(-1, 2)
        if len(arr):
            keep = np.ones(len(arr), dtype=bool)
            keep[1:] = np.any(arr[1:] != arr[:-1], axis=1)
            arr = arr[keep]
        return cls(arr, PathFrame(frame))

    @property
    def length(self) -> float:
        if len(self.points) < 2:
            return 0.0
        return float(np.sum(np.linalg.norm(np.diff(self.points, axis=0), axis=1)))

    def to_dict(self) -> dict:
        return {"frame": self.frame.value, "points": self.points.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Polyline":
        return cls.from_points(d["points"], d["frame"])


@dataclass(frozen=True)
class Alignment:
    """Best-fit similarity relating a drawn path to the ground truth.

    rotation_deg and scale describe the drawn path relative to the truth
    (drawn ~ scale * R(rotation) * truth); translation and residual are in
    the truth frame (metres), i.e. the registration that maps the drawn
    path onto the truth applies 1/scale and -rotation, then translation.
    """

    rotation_deg: float
    scale: float
    translation: tuple[float, float]
    residual: float  # rms point error in truth-frame metres


@dataclass(frozen=True)
class Turn:
    arc_index: int
    angle_deg: float


@dataclass(frozen=True)
class PathScore:
    all_turns_matched: bool
    endpoint_ok: bool
    residual: float
    truth_turns: tuple[Turn, ...]
    drawn_turns: tuple[Turn, ...]
    endpoint_error: float

    def to_dict(self) -> dict:
        return {
            "all_turns_matched": self.all_turns_matched,
            "endpoint_ok": self.endpoint_ok,
            "residual": self.residual,
            "endpoint_error": self.endpoint_error,
            "truth_turns": [[t.arc_index, t.angle_deg] for t in self.truth_turns],
            "drawn_turns": [[t.arc_index, t.angle_deg] for t in self.drawn_turns],
        }


def resample(p: Polyline, n: int) -> Polyline:
    """n points equally spaced by arc length; endpoints preserved."""
    if n < 2:
        raise ValueError("need n >= 2")
    pts = p.points
    if len(pts) < 2:
        raise DegeneratePath("polyline has fewer than 2 distinct points")
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    total = float(seg.sum())
    if total <= 0.0:
        raise DegeneratePath("polyline has zero length")
    s = np.concatenate([[0.0], np.cumsum(seg)])
    targets = np.linspace(0.0, total, n)
    x = np.interp(targets, s, pts[:, 0])
    y = np.interp(targets, s, pts[:, 1])
    out = np.column_stack([x, y])
    out[0] = pts[0]
    out[-1] = pts[-1]
    return Polyline(out, p.frame)


def align(drawn: Polyline, truth: Polyline) -> Alignment:
    """Least-squares similarity registration of drawn onto truth.

    Closed-form rotation/scale/translation fit of equal-length point sets
    (SVD of the cross-covariance, orientation-preserving); both inputs must
    be resampled to the same point count first.
    """
    d = drawn.points
    t = truth.points
    if len(d) != len(t):
        raise ValueError("align expects polylines resampled to equal point counts")
    if len(d) < 2:
        raise DegeneratePath("need at least 2 points to align")
    mu_d = d.mean(axis=0)
    mu_t = t.mean(axis=0)
    dc = d - mu_d
    tc = t - mu_t
    var_d = float((dc**2).sum()) / len(d)
    if var_d == 0.0:
        raise DegeneratePath("drawn polyline has zero spread")
    cov = tc.T @ dc / len(d)
    u, s, vt = np.linalg.svd(cov)
    flip = np.sign(np.linalg.det(u @ vt))
    diag = np.array([1.0, flip if flip != 0 else 1.0])
    rot = u @ np.diag(diag) @ vt  # registration rotation, drawn -> truth
    reg_scale = float((s * diag).sum() / var_d)
    trans = mu_t - reg_scale * rot @ mu_d
    fitted = reg_scale * d @ rot.T + trans
    residual = float(np.sqrt(np.mean(np.sum((fitted - t) ** 2, axis=1))))
    return Alignment(
        rotation_deg=-math.degrees(math.atan2(rot[1, 0], rot[0, 0])),
        scale=1.0 / reg_scale,
        translation=(float(trans[0]), float(trans[1])),
        residual=residual,
    )


def apply_alignment(a: Alignment, p: Polyline) -> Polyline:
    """Map a drawn polyline into the truth frame using the registration."""
    theta = math.radians(-a.rotation_deg)
    rot = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    out = (1.0 / a.scale) * p.points @ rot.T + np.asarray(a.translation)
    return Polyline(out, PathFrame.ODOMETRY)


def _wrap_deg(angle: float) -> float:
    """Wrap to (-180, 180]."""
    wrapped = (angle + 180.0) % 360.0 - 180.0
    return 180.0 if wrapped == -180.0 else wrapped


def extract_turns(p: Polyline, threshold_deg: float = DEFAULT_TURN_DETECT_DEG) -> list[Turn]:
    """Turns as runs of consecutive same-sign heading change.

    Heading deltas below STRAIGHT_EPS_DEG end a run; a run whose summed
    |angle| reaches the threshold is emitted with its signed total. Straight
    segments emit nothing.
    """
    if threshold_deg <= 0:
        raise ValueError("threshold must be positive")
    pts = p.points
    if len(pts) < 2 or float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1))) <= 0:
        raise DegeneratePath("polyline has zero length")
    diffs = np.diff(pts, axis=0)
    headings = np.degrees(np.arctan2(diffs[:, 1], diffs[:, 0]))
    deltas = [_wrap_deg(h1 - h0) for h0, h1 in zip(headings, headings[1:])]

    turns: list[Turn] = []
    run_sum = 0.0
    run_start = 0

    def close_run() -> None:
        nonlocal run_sum
        if abs(run_sum) >= threshold_deg:
            turns.append(Turn(run_start, run_sum))
        run_sum = 0.0

    for i, d in enumerate(deltas):
        if abs(d) <= STRAIGHT_EPS_DEG:
            close_run()
            continue
        if run_sum != 0.0 and math.copysign(1.0, d) != math.copysign(1.0, run_sum):
            close_run()
        if run_sum == 0.0:
            run_start = i
        run_sum += d
    close_run()
    return turns


def _turns_match(
    truth_turns: list[Turn], drawn_turns: list[Turn], tol_deg: float
) -> bool:
    """Order-preserving matching: every truth turn finds a drawn turn, in
    order, whose angle agrees within the tolerance."""
    cursor = 0
    for t in truth_turns:
        while cursor < len(drawn_turns) and abs(drawn_turns[cursor].angle_deg - t.angle_deg) > tol_deg:
            cursor += 1
        if cursor >= len(drawn_turns):
            return False
        cursor += 1
    return True


def score(
    drawn: Polyline,
    truth: Polyline,
    turn_tol_deg: float = DEFAULT_TURN_TOL_DEG,
    endpoint_tol_m: float = DEFAULT_ENDPOINT_TOL_M,
    turn_detect_deg: float = DEFAULT_TURN_DETECT_DEG,
    n_resample: int = DEFAULT_RESAMPLE_N,
) -> PathScore:
    drawn_rs = resample(drawn, n_resample)
    truth_rs = resample(truth, n_resample)
    alignment = align(drawn_rs, truth_rs)
    registered = apply_alignment(alignment, drawn_rs)

    truth_turns = extract_turns(truth_rs, turn_detect_deg)
    drawn_turns = extract_turns(registered, turn_detect_deg)
    endpoint_error = float(np.linalg.norm(registered.points[-1] - truth_rs.points[-1]))
    return PathScore(
        all_turns_matched=_turns_match(truth_turns, drawn_turns, turn_tol_deg),
        endpoint_ok=endpoint_error <= endpoint_tol_m,
        residual=alignment.residual,
        truth_turns=tuple(truth_turns),
        drawn_turns=tuple(drawn_turns),
        endpoint_error=endpoint_error,
    )


# ---------------------------------------------------------------------------
# path records (JSON files pairing drawn and truth polylines)
# ---------------------------------------------------------------------------


def record_to_dict(truth: Polyline, drawn: Polyline) -> dict:
    return {"truth": truth.to_dict(), "drawn": drawn.to_dict()}


def load_record(path: Path | str) -> tuple[Polyline, Polyline]:
    d = json.loads(Path(path).read_text())
    return Polyline.from_dict(d["truth"]), Polyline.from_dict(d["drawn"])


def score_record(path: Path | str, **kwargs) -> PathScore:
    truth, drawn = load_record(path)
    return score(drawn, truth, **kwargs)


def batch_report(scores: list[PathScore]) -> dict:
    n = len(scores)
    turns_passed = sum(1 for s in scores if s.all_turns_matched)
    endpoints_passed = sum(1 for s in scores if s.endpoint_ok)
    return {
        "n_records": n,
        "turns_passed": turns_passed,
        "turn_pass_rate": turns_passed / n if n else 0.0,
        "endpoints_passed": endpoints_passed,
        "endpoint_pass_rate": endpoints_passed / n if n else 0.0,
    }
