"""Deterministic exergame core.

A level is a tempo, a movement family and a range of hold durations. The
schedule builder turns a level and a calibrated movement boundary into a
sequence of beat-aligned targets; :class:`GameSession` replays a pose
stream against that sequence and emits hit/miss/hold/milestone events.

Target geometry: a Line target is a point travelling at constant speed
from ``start`` to ``end`` between ``appear_t`` and ``deadline_t`` (two
beats). A Hold target travels the same way for two beats and then waits at
``end``; the hand must settle there and stay for ``hold_duration``
seconds. Targets never overlap in time.
"""

from __future__ import annotations

import configparser
import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .session import JointId, PoseSample

CAPTURE_RADIUS = 0.10
MIN_RANGE = 0.05
APPROACH_BEATS = 2
HOLD_GRACE_BEATS = 1

MOVEMENT_TYPES = ("Wrist", "Lateral", "Bilateral", "Overhead")
HANDS = ("Left", "Right", "Both")


@dataclass(frozen=True)
class LevelSpec:
    id: str
    bpm: float
    movement_type: str
    hold_range: tuple[float, float]
    duration: float = 120.0

    def __post_init__(self):
        lo, hi = self.hold_range
        if not self.bpm > 0:
            raise ValueError("bpm must be positive")
        if not 0 < lo <= hi:
            raise ValueError("hold range must satisfy 0 < min <= max")
        if not self.duration >= 0:
            raise ValueError("duration must be non-negative")
        if self.movement_type not in MOVEMENT_TYPES:
            raise ValueError(f"unknown movement type {self.movement_type!r}")

    @property
    def beat(self) -> float:
        return 60.0 / self.bpm

    def hold_values(self) -> list[float]:
        lo, hi = self.hold_range
        return [lo + j for j in range(int(math.floor(hi - lo + 1e-9)) + 1)]


DEFAULT_LEVELS: dict[str, LevelSpec] = {
    "L1": LevelSpec("L1", 77, "Wrist", (4, 6)),
    "L2": LevelSpec("L2", 105, "Lateral", (6, 8)),
    "L3": LevelSpec("L3", 112, "Bilateral", (8, 10)),
    "L4": LevelSpec("L4", 140, "Overhead", (10, 12)),
}


def load_level_specs(path) -> dict[str, LevelSpec]:
    """Level table with overrides from an INI file.

    Each section is a level id; recognized keys are ``bpm``,
    ``movement_type``, ``hold_min_s``, ``hold_max_s`` and ``duration_s``.
    Unmentioned keys keep their defaults.
    """
    cp = configparser.ConfigParser()
    with open(path, encoding="utf-8") as fh:
        cp.read_file(fh)
    levels = dict(DEFAULT_LEVELS)
    allowed = {"bpm", "movement_type", "hold_min_s", "hold_max_s", "duration_s"}
    for sec in cp.sections():
        unknown = set(cp[sec]) - allowed
        if unknown:
            raise ValueError(f"[{sec}] unknown keys: {', '.join(sorted(unknown))}")
        base = levels.get(sec)
        if base is None:
            if "movement_type" not in cp[sec] or "bpm" not in cp[sec]:
                raise ValueError(f"[{sec}] new levels need bpm and movement_type")
            base = LevelSpec(sec, 60, cp[sec]["movement_type"], (1, 1))
        s = cp[sec]
        levels[sec] = LevelSpec(
            sec,
            s.getfloat("bpm", base.bpm),
            s.get("movement_type", base.movement_type),
            (s.getfloat("hold_min_s", base.hold_range[0]), s.getfloat("hold_max_s", base.hold_range[1])),
            s.getfloat("duration_s", base.duration),
        )
    return levels


@dataclass(frozen=True)
class MovementBoundary:
    """Patient-specific playable box: X from left to right extent, Y from
    lap to overhead reach, on a fixed play plane at depth ``forward_z``."""

    rest_y: float
    overhead_y: float
    lateral_left_x: float
    lateral_right_x: float
    forward_z: float

    def __post_init__(self):
        vals = (self.rest_y, self.overhead_y, self.lateral_left_x, self.lateral_right_x, self.forward_z)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("boundary values must be finite")
        if not self.overhead_y > self.rest_y:
            raise ValueError("overhead_y must exceed rest_y")
        if not self.lateral_right_x > self.lateral_left_x:
            raise ValueError("lateral_right_x must exceed lateral_left_x")

    @property
    def width(self) -> float:
        return self.lateral_right_x - self.lateral_left_x

    @property
    def height(self) -> float:
        return self.overhead_y - self.rest_y

    @property
    def center(self) -> np.ndarray:
        return np.array([
            0.5 * (self.lateral_left_x + self.lateral_right_x),
            0.5 * (self.rest_y + self.overhead_y),
            self.forward_z,
        ])

    def point(self, u: float, v: float) -> np.ndarray:
        """Map normalized (u across, v up) coordinates into the box."""
        return np.array([self.lateral_left_x + u * self.width, self.rest_y + v * self.height, self.forward_z])

    def contains(self, p, tol: float = 1e-9) -> bool:
        x, y, z = p
        return (
            self.lateral_left_x - tol <= x <= self.lateral_right_x + tol
            and self.rest_y - tol <= y <= self.overhead_y + tol
            and abs(z - self.forward_z) <= tol
        )

    def to_dict(self) -> dict:
        return {
            "rest_y": self.rest_y,
            "overhead_y": self.overhead_y,
            "lateral_left_x": self.lateral_left_x,
            "lateral_right_x": self.lateral_right_x,
            "forward_z": self.forward_z,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MovementBoundary":
        try:
            return cls(**{k: float(d[k]) for k in cls.__dataclass_fields__})
        except KeyError as exc:
            raise ValueError(f"boundary lacks field {exc.args[0]}") from None


def read_boundary(path) -> MovementBoundary:
    with open(path, encoding="utf-8") as fh:
        try:
            return MovementBoundary.from_dict(json.load(fh))
        except json.JSONDecodeError as exc:
            raise ValueError(f"boundary file is not JSON: {exc.msg}") from None


def calibrate(rest: PoseSample, overhead: PoseSample, lateral: PoseSample) -> MovementBoundary:
    """Boundary from the lap-rest, overhead-reach and lateral-extension poses."""
    poses = (rest, overhead, lateral)
    for p in poses:
        if JointId.LH not in p.positions or JointId.RH not in p.positions:
            raise ValueError("calibration poses need both hands")
    hands = [np.array([p[JointId.LH], p[JointId.RH]]) for p in poses]
    rest_y = float(hands[0][:, 1].mean())
    overhead_y = float(hands[1][:, 1].max())
    left_x = float(hands[2][:, 0].min())
    right_x = float(hands[2][:, 0].max())
    forward_z = float(np.concatenate(hands)[:, 2].mean())
    if overhead_y - rest_y < MIN_RANGE or right_x - left_x < MIN_RANGE:
        raise ValueError("insufficient range")
    return MovementBoundary(rest_y, overhead_y, left_x, right_x, forward_z)


# -- scripting ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TargetEvent:
    """One scripted target.

    ``paths`` maps each required hand joint to its ``(start, end)`` points.
    For two-handed targets the right-hand path mirrors the left one about
    the boundary midline.
    """

    index: int
    kind: str
    hand: str
    paths: tuple[tuple[str, tuple[float, ...], tuple[float, ...]], ...]
    appear_t: float
    deadline_t: float
    beat: float
    hold_duration: float | None = None

    @property
    def arrive_t(self) -> float:
        """When the travelling point reaches ``end``."""
        if self.kind == "Line":
            return self.deadline_t
        return self.appear_t + APPROACH_BEATS * self.beat

    def point(self, joint: str, t: float) -> np.ndarray:
        for j, a, b in self.paths:
            if j == joint:
                span = self.arrive_t - self.appear_t
                s = min(max((t - self.appear_t) / span, 0.0), 1.0) if span > 0 else 1.0
                a, b = np.asarray(a), np.asarray(b)
                return a + s * (b - a)
        raise KeyError(joint)

    @property
    def joints(self) -> tuple[str, ...]:
        return tuple(j for j, _, _ in self.paths)

    def to_record(self) -> dict:
        rec = {
            "index": self.index,
            "kind": self.kind,
            "hand": self.hand,
            "appear_t": self.appear_t,
            "deadline_t": self.deadline_t,
            "paths": {j: [list(a), list(b)] for j, a, b in self.paths},
        }
        if self.hold_duration is not None:
            rec["hold_duration"] = self.hold_duration
        return rec


@dataclass(frozen=True, eq=False)
class TargetScript:
    level: LevelSpec
    events: tuple[TargetEvent, ...]

    def __len__(self):
        return len(self.events)

    def scripted_time(self) -> float:
        return float(sum(e.deadline_t - e.appear_t for e in self.events))

    def to_jsonl(self) -> str:
        lv = self.level
        head = {
            "level": lv.id,
            "bpm": lv.bpm,
            "movement_type": lv.movement_type,
            "hold_range": list(lv.hold_range),
            "duration": lv.duration,
            "n_targets": len(self.events),
        }
        lines = [json.dumps(head, separators=(",", ":"))]
        lines += [json.dumps(e.to_record(), separators=(",", ":")) for e in self.events]
        return "\n".join(lines) + "\n"


# (kind, hand, start_uv, end_uv) in normalized boundary coordinates;
# a two-handed entry gives the left-hand path
_PATTERNS = {
    "Wrist": [
        ("Line", "Left", (0.17, 0.08), (0.33, 0.22)),
        ("Line", "Right", (0.83, 0.08), (0.67, 0.22)),
        ("Line", "Left", (0.33, 0.22), (0.17, 0.08)),
        ("Line", "Right", (0.67, 0.22), (0.83, 0.08)),
        ("Hold", "Left", (0.17, 0.08), (0.25, 0.15)),
        ("Hold", "Right", (0.83, 0.08), (0.75, 0.15)),
    ],
    "Lateral": [
        ("Line", "Left", (0.0, 0.25), (0.5, 0.55)),
        ("Line", "Right", (1.0, 0.25), (0.5, 0.55)),
        ("Line", "Left", (0.5, 0.55), (0.0, 0.25)),
        ("Line", "Right", (0.5, 0.55), (1.0, 0.25)),
        ("Hold", "Left", (0.0, 0.25), (0.05, 0.45)),
        ("Hold", "Right", (1.0, 0.25), (0.95, 0.45)),
    ],
    "Bilateral": [
        ("Line", "Both", (0.15, 0.25), (0.35, 0.65)),
        ("Hold", "Both", (0.35, 0.65), (0.3, 1.0)),
        ("Line", "Left", (0.0, 0.35), (0.45, 0.6)),
        ("Line", "Right", (1.0, 0.35), (0.55, 0.6)),
        ("Hold", "Both", (0.15, 0.3), (0.15, 0.5)),
    ],
    "Overhead": [
        ("Line", "Left", (0.1, 0.1), (0.9, 0.9)),
        ("Line", "Right", (0.9, 0.1), (0.1, 0.9)),
        ("Hold", "Both", (0.15, 0.5), (0.2, 1.0)),
        ("Line", "Left", (0.9, 0.9), (0.1, 0.1)),
        ("Line", "Right", (0.1, 0.9), (0.9, 0.1)),
        ("Hold", "Both", (0.4, 0.5), (0.35, 1.0)),
    ],
}


def _paths(hand, start_uv, end_uv, boundary: MovementBoundary):
    out = []
    if hand in ("Left", "Both"):
        out.append((str(JointId.LH), start_uv, end_uv))
    if hand == "Right":
        out.append((str(JointId.RH), start_uv, end_uv))
    if hand == "Both":
        out.append((str(JointId.RH), (1 - start_uv[0], start_uv[1]), (1 - end_uv[0], end_uv[1])))
    return tuple(
        (j, tuple(boundary.point(*a).tolist()), tuple(boundary.point(*b).tolist())) for j, a, b in out
    )


def build_level_schedule(spec: LevelSpec, boundary: MovementBoundary, seed: int = 0) -> TargetScript:
    """Beat-aligned target script filling the level duration.

    Targets follow the movement family's pattern cyclically. Holds take
    durations from the level's range in 1 s steps, cycling from an offset
    set by ``seed``; a hold that no longer fits before the end is skipped.
    Every ``appear_t`` is an integer number of beats and the last deadline
    falls within one beat of the level end.
    """
    beat = spec.beat
    total = int(math.floor(spec.duration / beat + 1e-9))
    pattern = _PATTERNS[spec.movement_type]
    holds = spec.hold_values()
    hold_k = int(seed) % len(holds)

    plan = []  # (pattern item, hold duration, length in beats)
    pos = 0
    i = 0
    while total - pos >= APPROACH_BEATS:
        item = pattern[i % len(pattern)]
        i += 1
        if item[0] == "Hold":
            h = holds[hold_k % len(holds)]
            length = int(math.ceil((h / beat) + APPROACH_BEATS + HOLD_GRACE_BEATS - 1e-9))
            if pos + length > total:
                continue
            hold_k += 1
        else:
            h, length = None, APPROACH_BEATS
        plan.append([item, h, length])
        pos += length
    leftover = total - pos
    if leftover:
        if plan:
            holds_idx = [k for k, p in enumerate(plan) if p[1] is not None]
            plan[holds_idx[-1] if holds_idx else -1][2] += leftover
        elif total:
            line = next(p for p in pattern if p[0] == "Line")
            plan.append([line, None, total])

    events = []
    pos = 0
    for idx, (item, h, length) in enumerate(plan):
        kind, hand, a, b = item
        events.append(
            TargetEvent(
                index=idx,
                kind=kind,
                hand=hand,
                paths=_paths(hand, a, b, boundary),
                appear_t=pos * beat,
                deadline_t=(pos + length) * beat,
                beat=beat,
                hold_duration=None if h is None else float(h),
            )
        )
        pos += length
    return TargetScript(spec, tuple(events))


# -- replay --------------------------------------------------------------------

EVENT_KINDS = (
    "Hit", "Miss", "HoldComplete", "HoldBroken",
    "Milestone25", "Milestone50", "Milestone75", "LevelComplete",
)
MILESTONES = ((0.25, "Milestone25"), (0.50, "Milestone50"), (0.75, "Milestone75"))
SUCCESS_KINDS = ("Hit", "HoldComplete")


@dataclass(frozen=True)
class SessionEvent:
    t: float
    kind: str
    target_index: int | None
    detail: str = ""

    def to_record(self) -> dict:
        return {"t": self.t, "kind": self.kind, "target_index": self.target_index, "detail": self.detail}


def format_events(events: Iterable[SessionEvent]) -> str:
    return "".join(json.dumps(e.to_record(), separators=(",", ":")) + "\n" for e in events)


def parse_events(text: str) -> list[SessionEvent]:
    out = []
    for line in text.splitlines():
        if line.strip():
            r = json.loads(line)
            out.append(SessionEvent(r["t"], r["kind"], r["target_index"], r.get("detail", "")))
    return out


class GameSession:
    """Replays one level's pose stream against its script.

    Feed samples with :meth:`step` in increasing time order (times relative
    to level start); call :meth:`finish` when the stream ends early. Once
    the level is complete further samples are ignored.

    Milestones track scripted progress: they fire when the number of
    resolved targets, hit or not, first reaches 25/50/75% of the total.
    """

    def __init__(self, script: TargetScript, capture_radius: float = CAPTURE_RADIUS):
        if not capture_radius > 0:
            raise ValueError("capture_radius must be positive")
        self.script = script
        self.capture_radius = capture_radius
        self.events: list[SessionEvent] = []
        self.last_t = -math.inf
        self.done = False
        self._cur = 0
        self._resolved = 0
        self._fired: set[str] = set()
        self._acquired_at: float | None = None

    def _inside(self, target: TargetEvent, sample: PoseSample, t: float) -> bool:
        r2 = self.capture_radius**2
        for j in target.joints:
            p = sample.positions.get(j)
            if p is None:
                return False
            d = np.asarray(p) - target.point(j, t)
            if float(d @ d) > r2:
                return False
        return True

    def _resolve(self, kind: str, t: float, out: list, detail: str = "") -> None:
        idx = self._cur
        out.append(SessionEvent(t, kind, idx, detail))
        self._cur += 1
        self._resolved += 1
        self._acquired_at = None
        total = len(self.script.events)
        for frac, name in MILESTONES:
            if name not in self._fired and self._resolved >= frac * total - 1e-9:
                self._fired.add(name)
                out.append(SessionEvent(t, name, idx))

    def step(self, sample: PoseSample) -> list[SessionEvent]:
        if self.done:
            return []
        t = sample.t
        if not t > self.last_t:
            raise ValueError(f"time regression at t={t}")
        self.last_t = t
        out: list[SessionEvent] = []
        targets = self.script.events
        while self._cur < len(targets):
            e = targets[self._cur]
            if t < e.appear_t:
                break
            if e.kind == "Line":
                if t > e.deadline_t:
                    self._resolve("Miss", e.deadline_t, out)
                    continue
                if self._inside(e, sample, t):
                    self._resolve("Hit", t, out)
                    continue
                break
            # Hold
            latest_start = e.deadline_t - e.hold_duration
            if self._acquired_at is None:
                if t > latest_start + 1e-9:
                    self._resolve("HoldBroken", latest_start, out, "not acquired")
                    continue
                if t >= e.arrive_t and self._inside(e, sample, t):
                    self._acquired_at = t
                break
            if not self._inside(e, sample, t):
                self._resolve("HoldBroken", t, out, f"held {t - self._acquired_at:.2f}s")
                continue
            if t - self._acquired_at >= e.hold_duration - 1e-9:
                self._resolve("HoldComplete", t, out)
                continue
            break
        if t >= self.script.level.duration:
            self._close(out)
        self.events.extend(out)
        return out

    def finish(self) -> list[SessionEvent]:
        """Resolve outstanding targets at their deadlines and close the level."""
        if self.done:
            return []
        out: list[SessionEvent] = []
        self._close(out)
        self.events.extend(out)
        return out

    def _close(self, out: list) -> None:
        for e in self.script.events[self._cur :]:
            if e.kind == "Line":
                self._resolve("Miss", e.deadline_t, out)
            else:
                self._resolve("HoldBroken", e.deadline_t, out, "stream ended")
        out.append(SessionEvent(self.script.level.duration, "LevelComplete", None))
        self.done = True


def replay(
    script: TargetScript,
    samples: Iterable[PoseSample],
    capture_radius: float = CAPTURE_RADIUS,
    t_offset: float = 0.0,
) -> list[SessionEvent]:
    """Run a whole stream through a fresh session.

    ``t_offset`` is the session time at which the level starts; samples
    before it are skipped.
    """
    game = GameSession(script, capture_radius)
    events: list[SessionEvent] = []
    for s in samples:
        if s.t < t_offset:
            continue
        events.extend(game.step(PoseSample(s.t - t_offset, s.positions)))
        if game.done:
            break
    if not game.done:
        events.extend(game.finish())
    return events


@dataclass(frozen=True)
class CompletionSummary:
    level: str
    targets_total: int
    targets_hit: int

    @property
    def completion_fraction(self) -> float:
        return self.targets_hit / self.targets_total if self.targets_total else 0.0

    def __add__(self, other: "CompletionSummary") -> "CompletionSummary":
        return CompletionSummary(
            f"{self.level}+{other.level}",
            self.targets_total + other.targets_total,
            self.targets_hit + other.targets_hit,
        )


def summarize(events: Sequence[SessionEvent], script: TargetScript) -> CompletionSummary:
    hit = sum(1 for e in events if e.kind in SUCCESS_KINDS)
    return CompletionSummary(script.level.id, len(script.events), hit)
