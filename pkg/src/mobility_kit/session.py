"""Pose data model, pose-log I/O and per-joint trajectory preparation.

Positions are meters in a right-handed, Y-up frame whose origin is the
headset pose at session start. Time is seconds since session start.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import IO, Iterable, Mapping, Sequence, Union

import numpy as np

NOMINAL_RATE_HZ = 50.0
DEFAULT_MAX_GAP_S = 0.2
LEVEL_SLACK_S = 1.0

POSE_FORMAT = "mobility-pose"
POSE_FORMAT_VERSION = 1


class JointId(str, Enum):
    """The six core upper-body joints, keyed by their serialized codes.

    Members compare and hash equal to their codes, so a positions dict keyed
    by ``"LH"`` can be indexed with ``JointId.LH``. Joints outside this set
    are carried around as plain strings.
    """

    LH = "LH"
    RH = "RH"
    LE = "LE"
    RE = "RE"
    LS = "LS"
    RS = "RS"

    def __str__(self) -> str:
        return self.value

    @property
    def side(self) -> str:
        return "Left" if self.value[0] == "L" else "Right"


_LONG_NAMES = {
    "lefthand": JointId.LH,
    "righthand": JointId.RH,
    "leftelbow": JointId.LE,
    "rightelbow": JointId.RE,
    "leftshoulder": JointId.LS,
    "rightshoulder": JointId.RS,
}

CORE_JOINTS: tuple[JointId, ...] = tuple(JointId)
HAND_JOINTS: tuple[JointId, ...] = (JointId.LH, JointId.RH)


def joint_id(name: Union[str, JointId]) -> Union[JointId, str]:
    """Normalize a joint name.

    Accepts the short codes (``"LH"``) and long names (``"LeftHand"``) for
    the core joints; anything else is returned unchanged as an extension id.
    """
    if isinstance(name, JointId):
        return name
    try:
        return JointId(name)
    except ValueError:
        pass
    return _LONG_NAMES.get(name.replace("_", "").lower(), name)


class PoseLogError(ValueError):
    """Raised for malformed pose logs; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"{message} at line {line}" if line is not None else message)


@dataclass(frozen=True)
class PoseSample:
    """One timestamped snapshot of tracked joint positions."""

    t: float
    positions: Mapping[str, tuple[float, float, float]]

    def __getitem__(self, joint) -> np.ndarray:
        return np.asarray(self.positions[joint], dtype=float)

    def __contains__(self, joint) -> bool:
        return joint in self.positions


def make_sample(t: float, positions: Mapping) -> PoseSample:
    """Build a PoseSample from array-likes, validating finiteness."""
    pos = {}
    for joint, p in positions.items():
        xyz = tuple(float(v) for v in p)
        if len(xyz) != 3 or not all(math.isfinite(v) for v in xyz):
            raise ValueError(f"invalid coordinate for joint {joint}")
        pos[str(joint)] = xyz
    if not math.isfinite(t) or t < 0:
        raise ValueError(f"invalid timestamp {t}")
    return PoseSample(float(t), pos)


@dataclass(frozen=True, eq=False)
class JointTrajectory:
    """Ordered samples of a single joint.

    ``breaks`` holds sample indices ``i`` for which the interval
    ``(i - 1, i)`` crosses a gap that was too long to interpolate; such
    intervals are excluded from rate-based metrics.
    """

    joint: str
    t: np.ndarray
    positions: np.ndarray
    nominal_rate: float = NOMINAL_RATE_HZ
    breaks: tuple[int, ...] = ()

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float).reshape(-1)
        p = np.asarray(self.positions, dtype=float).reshape(-1, 3)
        if len(t) == 0:
            raise ValueError("empty trajectory")
        if len(t) != len(p):
            raise ValueError("timestamps and positions differ in length")
        if np.any(np.diff(t) <= 0):
            raise ValueError("timestamps must be strictly increasing")
        if not np.all(np.isfinite(p)):
            raise ValueError("invalid coordinate")
        t.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "positions", p)
        object.__setattr__(self, "breaks", tuple(sorted(int(b) for b in self.breaks)))

    def __len__(self) -> int:
        return len(self.t)

    def segments(self) -> list[slice]:
        """Index slices of the contiguous (unbroken) runs."""
        edges = [0, *self.breaks, len(self.t)]
        return [slice(a, b) for a, b in zip(edges[:-1], edges[1:]) if b > a]

    def with_positions(self, positions: np.ndarray) -> "JointTrajectory":
        return JointTrajectory(self.joint, self.t, positions, self.nominal_rate, self.breaks)


@dataclass(frozen=True)
class Gap:
    joint: str
    start_t: float
    end_t: float

    @property
    def duration(self) -> float:
        return self.end_t - self.start_t


@dataclass(frozen=True)
class Segment:
    label: str
    start_t: float
    end_t: float


@dataclass(frozen=True)
class LevelSegmentation:
    """Ordered, non-overlapping labelled windows of a session.

    Labels are usually ``L1``..``L4``; other labels (``M1``, tutorial, ...)
    are accepted and are exempt from the level-duration check.
    """

    segments: tuple[Segment, ...]
    level_duration: float = 120.0

    def __post_init__(self):
        segs = tuple(self.segments)
        for s in segs:
            if not s.start_t < s.end_t:
                raise ValueError(f"segment {s.label}: start must precede end")
            if _is_level(s.label) and s.end_t - s.start_t > self.level_duration + LEVEL_SLACK_S:
                raise ValueError(f"segment {s.label} exceeds level duration")
        for a, b in zip(segs[:-1], segs[1:]):
            if b.start_t < a.end_t:
                raise ValueError(f"segments {a.label} and {b.label} overlap or are unordered")
        object.__setattr__(self, "segments", segs)

    def __iter__(self):
        return iter(self.segments)

    def __len__(self):
        return len(self.segments)

    @property
    def labels(self) -> list[str]:
        return [s.label for s in self.segments]

    def window(self, label: str) -> tuple[float, float]:
        for s in self.segments:
            if s.label == label:
                return s.start_t, s.end_t
        raise KeyError(label)


def _is_level(label: str) -> bool:
    return len(label) == 2 and label[0] == "L" and label[1] in "1234"


# -- pose log I/O -----------------------------------------------------------

def _read_text(data: Union[bytes, str, IO]) -> str:
    if hasattr(data, "read"):
        data = data.read()
    if isinstance(data, (bytes, bytearray)):
        data = bytes(data).decode("utf-8")
    return data


_NUMBER = (int, float)


def parse_pose_log_with_header(data: Union[bytes, str, IO]) -> tuple[dict, list[PoseSample]]:
    """Parse a pose log, returning ``(header, samples)``.

    See :func:`parse_pose_log`.
    """
    text = _read_text(data)
    header = None
    samples: list[PoseSample] = []
    last_t = -math.inf
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise PoseLogError(f"malformed record ({exc.msg})", lineno) from None
        if not isinstance(rec, dict):
            raise PoseLogError("record is not an object", lineno)
        if header is None:
            if rec.get("format") != POSE_FORMAT:
                raise PoseLogError("missing mobility-pose header", lineno)
            if rec.get("version") != POSE_FORMAT_VERSION:
                raise PoseLogError(f"unsupported version {rec.get('version')!r}", lineno)
            rate = rec.get("rate_hz", NOMINAL_RATE_HZ)
            if not isinstance(rate, (int, float)) or not rate > 0:
                raise PoseLogError("invalid rate_hz", lineno)
            header = rec
            continue
        t = rec.get("t")
        joints = rec.get("joints")
        if not isinstance(t, (int, float)) or isinstance(t, bool) or not math.isfinite(t) or t < 0:
            raise PoseLogError("invalid timestamp", lineno)
        if not isinstance(joints, dict):
            raise PoseLogError("missing joints", lineno)
        if t <= last_t:
            raise PoseLogError("time regression", lineno)
        positions = {}
        for name, xyz in joints.items():
            if type(xyz) is not list or len(xyz) != 3:
                raise PoseLogError("invalid coordinate", lineno)
            x, y, z = xyz
            # JSON numbers decode to int or float only; bool is excluded by the exact type test
            if (
                type(x) not in _NUMBER or type(y) not in _NUMBER or type(z) not in _NUMBER
                or not (math.isfinite(x) and math.isfinite(y) and math.isfinite(z))
            ):
                raise PoseLogError("invalid coordinate", lineno)
            positions[name] = (float(x), float(y), float(z))
        samples.append(PoseSample(float(t), positions))
        last_t = t
    if not samples:
        raise PoseLogError("no samples")
    return header, samples


def parse_pose_log(data: Union[bytes, str, IO]) -> list[PoseSample]:
    """Parse a line-delimited pose log.

    The first non-blank line must be the ``mobility-pose`` header; each
    following line is ``{"t": seconds, "joints": {code: [x, y, z], ...}}``.
    Unknown joint codes are kept verbatim.

    Raises
    ------
    PoseLogError
        ``no samples`` for empty input, ``time regression at line k`` for
        non-increasing timestamps, ``invalid coordinate at line k`` for
        non-finite or malformed positions.
    """
    return parse_pose_log_with_header(data)[1]


def serialize_pose_log(
    samples: Iterable[PoseSample],
    rate_hz: float = NOMINAL_RATE_HZ,
    source: str | None = None,
) -> str:
    header = {"format": POSE_FORMAT, "version": POSE_FORMAT_VERSION, "rate_hz": rate_hz}
    if source is not None:
        header["source"] = source
    lines = [json.dumps(header, separators=(",", ":"))]
    for s in samples:
        rec = {"t": s.t, "joints": {str(k): list(v) for k, v in s.positions.items()}}
        lines.append(json.dumps(rec, separators=(",", ":"), allow_nan=False))
    return "\n".join(lines) + "\n"


def read_pose_log(path) -> tuple[dict, list[PoseSample]]:
    with open(path, "rb") as fh:
        return parse_pose_log_with_header(fh)


def write_pose_log(path, samples, rate_hz=NOMINAL_RATE_HZ, source=None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_pose_log(samples, rate_hz, source))


# -- segmentation and gap reports ------------------------------------------

def read_segmentation(path, level_duration: float = 120.0) -> LevelSegmentation:
    """Read ``label,start_t,end_t`` CSV (header row required)."""
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_segmentation(fh.read(), level_duration)


def parse_segmentation(text: str, level_duration: float = 120.0) -> LevelSegmentation:
    reader = csv.DictReader(io.StringIO(text))
    missing = {"label", "start_t", "end_t"} - set(reader.fieldnames or ())
    if missing:
        raise ValueError(f"segmentation CSV lacks columns: {', '.join(sorted(missing))}")
    segs = []
    for row in reader:
        try:
            segs.append(Segment(row["label"].strip(), float(row["start_t"]), float(row["end_t"])))
        except (TypeError, ValueError):
            raise ValueError(f"bad segmentation row {row!r}") from None
    return LevelSegmentation(tuple(segs), level_duration)


def format_segmentation(seg: LevelSegmentation) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["label", "start_t", "end_t"])
    for s in seg:
        w.writerow([s.label, repr(s.start_t), repr(s.end_t)])
    return out.getvalue()


def format_gap_report(gaps: Iterable[Gap]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["joint", "start_t", "end_t", "duration"])
    for g in gaps:
        w.writerow([g.joint, repr(g.start_t), repr(g.end_t), repr(g.duration)])
    return out.getvalue()


# -- trajectory preparation -------------------------------------------------

def extract_trajectory(
    samples: Sequence[PoseSample],
    joint,
    window: tuple[float, float] | None = None,
    nominal_rate: float = NOMINAL_RATE_HZ,
) -> JointTrajectory:
    """Collect one joint's samples with ``start_t <= t < end_t``.

    ``window=None`` takes the whole stream. Samples where the joint is not
    present are skipped.
    """
    if window is not None:
        start, end = window
        if not start < end:
            raise ValueError("degenerate window: start must precede end")
    else:
        start, end = -math.inf, math.inf
    joint = str(joint_id(joint))
    seen = False
    ts, ps = [], []
    for s in samples:
        p = s.positions.get(joint)
        if p is None:
            continue
        seen = True
        if start <= s.t < end:
            ts.append(s.t)
            ps.append(p)
    if not seen:
        raise ValueError(f"joint not tracked: {joint}")
    if not ts:
        raise ValueError(f"empty trajectory: no {joint} samples in window")
    return JointTrajectory(joint, np.array(ts), np.array(ps), nominal_rate)


def fill_gaps(
    traj: JointTrajectory, max_gap: float = DEFAULT_MAX_GAP_S
) -> tuple[JointTrajectory, list[Gap]]:
    """Interpolate short dropouts and split at long ones.

    An interval counts as a gap when it exceeds 1.5 nominal frames. Gaps of
    at most ``max_gap`` seconds get linearly interpolated samples at (close
    to) the nominal rate; longer gaps become segment breaks and are returned
    in the report. Original samples are never moved or dropped.
    """
    if not max_gap > 0:
        raise ValueError("max_gap must be positive")
    t, p = traj.t, traj.positions
    dt = np.diff(t)
    split = np.zeros(len(dt), dtype=bool)
    for b in traj.breaks:
        split[b - 1] = True
    gap = (dt > 1.5 / traj.nominal_rate) & ~split
    too_long = gap & (dt > max_gap + 1e-12)
    fill = gap & ~too_long
    if not gap.any():
        return traj, []

    n_insert = np.where(fill, np.maximum(np.rint(dt * traj.nominal_rate).astype(int) - 1, 0), 0)
    # output index of each original sample
    out_idx = np.concatenate([[0], np.arange(1, len(t)) + np.cumsum(n_insert)])
    n_out = len(t) + int(n_insert.sum())
    t_out = np.empty(n_out)
    p_out = np.empty((n_out, 3))
    t_out[out_idx] = t
    p_out[out_idx] = p
    for i in np.nonzero(n_insert)[0]:
        m = n_insert[i]
        frac = np.arange(1, m + 1) / (m + 1)
        sl = slice(out_idx[i] + 1, out_idx[i] + 1 + m)
        t_out[sl] = t[i] + frac * dt[i]
        p_out[sl] = p[i] + frac[:, None] * (p[i + 1] - p[i])
    breaks = tuple(int(out_idx[i + 1]) for i in np.nonzero(split | too_long)[0])
    report = [Gap(traj.joint, float(t[i]), float(t[i + 1])) for i in np.nonzero(too_long)[0]]
    out = JointTrajectory(traj.joint, t_out, p_out, traj.nominal_rate, breaks)
    return out, report


def resample(traj: JointTrajectory, rate: float | None = None) -> JointTrajectory:
    """Linearly resample each contiguous segment onto a uniform grid.

    The grid of each segment starts at its first timestamp; segment breaks
    are preserved. Timestamp jitter in the input is tolerated.
    """
    rate = traj.nominal_rate if rate is None else rate
    step = 1.0 / rate
    ts, ps, breaks = [], [], []
    n = 0
    for seg in traj.segments():
        t, p = traj.t[seg], traj.positions[seg]
        grid = t[0] + step * np.arange(int(np.floor((t[-1] - t[0]) / step + 1e-9)) + 1)
        if n:
            breaks.append(n)
        ts.append(grid)
        ps.append(np.column_stack([np.interp(grid, t, p[:, k]) for k in range(3)]))
        n += len(grid)
    return JointTrajectory(traj.joint, np.concatenate(ts), np.concatenate(ps), rate, tuple(breaks))
