"""Parametric synthetic pose streams for scripted levels.

Hands chase the scripted targets; a profile degrades that ideal play with
reaction lag, reduced amplitude, a speed cap and low-pass tremor. Elbows
come from a two-segment arm hung off fixed shoulder points.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy import signal

from .game import DEFAULT_LEVELS, LevelSpec, MovementBoundary, TargetScript, build_level_schedule
from .kinematics import MetricRow, level_metrics
from .session import (
    CORE_JOINTS,
    NOMINAL_RATE_HZ,
    JointId,
    LevelSegmentation,
    PoseSample,
    Segment,
)

UPPER_ARM = 0.30
FOREARM = 0.28
# hand speed reached at speed_scale = 1, m/s
MAX_HAND_SPEED = 3.0
TREMOR_CUTOFF_HZ = 4.0
# depth of the arc (toward the body) during repositioning, per meter moved
ARC_RATIO = 0.1
# the hand sits further forward the further it reaches from its shoulder
# (in the frontal plane); offset from the play plane in m per m of reach,
# clipped well inside the capture radius
DEPTH_GAIN = 0.15
DEPTH_REACH0 = 0.45
DEPTH_MAX = 0.05
MAX_REPOSITION_S = 1.2
LEVEL_GAP_S = 5.0


@dataclass(frozen=True)
class PatientProfile:
    amplitude_scale: float = 1.0
    speed_scale: float = 1.0
    tremor_sd: float = 0.0
    reaction_delay: float = 0.0
    seed: int = 0
    name: str = "patient"
    shoulder_left: tuple[float, float, float] = (-0.18, -0.25, 0.05)
    shoulder_right: tuple[float, float, float] = (0.18, -0.25, 0.05)

    def __post_init__(self):
        vals = [self.amplitude_scale, self.speed_scale, self.tremor_sd, self.reaction_delay,
                *self.shoulder_left, *self.shoulder_right]
        if not np.all(np.isfinite(vals)):
            raise ValueError("profile values must be finite")
        if not 0 <= self.amplitude_scale <= 1:
            raise ValueError("amplitude_scale must lie in [0, 1]")
        if not 0 < self.speed_scale <= 1:
            raise ValueError("speed_scale must lie in (0, 1]")
        if self.tremor_sd < 0 or self.reaction_delay < 0:
            raise ValueError("tremor_sd and reaction_delay must be non-negative")


PERFECT = PatientProfile(name="perfect")


def load_profiles(path) -> list[PatientProfile]:
    """Profiles from an INI file, one section per profile.

    Keys: ``amplitude_scale``, ``speed_scale``, ``tremor_sd`` (m),
    ``reaction_delay`` (s), ``seed``, and optionally ``shoulder_left`` /
    ``shoulder_right`` as ``x, y, z`` in meters.
    """
    cp = configparser.ConfigParser()
    with open(path, encoding="utf-8") as fh:
        cp.read_file(fh)
    allowed = {"amplitude_scale", "speed_scale", "tremor_sd", "reaction_delay", "seed",
               "shoulder_left", "shoulder_right"}
    out = []
    for name in cp.sections():
        s = cp[name]
        unknown = set(s) - allowed
        if unknown:
            raise ValueError(f"[{name}] unknown keys: {', '.join(sorted(unknown))}")
        kw = {"name": name}
        for key in ("amplitude_scale", "speed_scale", "tremor_sd", "reaction_delay"):
            if key in s:
                kw[key] = s.getfloat(key)
        if "seed" in s:
            kw["seed"] = s.getint("seed")
        for key in ("shoulder_left", "shoulder_right"):
            if key in s:
                xyz = tuple(float(v) for v in s[key].split(","))
                if len(xyz) != 3:
                    raise ValueError(f"[{name}] {key} needs three comma-separated values")
                kw[key] = xyz
        out.append(PatientProfile(**kw))
    if not out:
        raise ValueError("no profiles defined")
    return out


def healthy_population(n: int = 13, seed: int = 0) -> list[PatientProfile]:
    """Profiles for unimpaired participants.

    Near-full amplitude and speed, light tremor, short lag; spread across
    subjects is an assumption, not a measured distribution.
    """
    rng = np.random.default_rng(seed)
    return [
        PatientProfile(
            amplitude_scale=float(rng.uniform(0.9, 1.0)),
            speed_scale=float(rng.uniform(0.85, 1.0)),
            tremor_sd=float(rng.uniform(0.0002, 0.0006)),
            reaction_delay=float(rng.uniform(0.05, 0.25)),
            seed=int(rng.integers(2**31)),
            name=f"H{i + 1:02d}",
        )
        for i in range(n)
    ]


def default_boundary() -> MovementBoundary:
    """Boundary of a seated adult with unrestricted reach."""
    return MovementBoundary(rest_y=-0.56, overhead_y=0.07, lateral_left_x=-0.4, lateral_right_x=0.4, forward_z=-0.2)


def calibration_poses(boundary: MovementBoundary) -> tuple[PoseSample, PoseSample, PoseSample]:
    """Rest, overhead and lateral poses that calibrate to ``boundary``."""
    b = boundary
    cx = 0.5 * (b.lateral_left_x + b.lateral_right_x)
    z = b.forward_z
    rest = PoseSample(0.0, {"LH": (cx - 0.2, b.rest_y, z + 0.05), "RH": (cx + 0.2, b.rest_y, z + 0.05)})
    over = PoseSample(1.0, {"LH": (cx - 0.15, b.overhead_y, z), "RH": (cx + 0.15, b.overhead_y, z)})
    lat = PoseSample(2.0, {"LH": (b.lateral_left_x, 0.5 * (b.rest_y + b.overhead_y), z - 0.05),
                           "RH": (b.lateral_right_x, 0.5 * (b.rest_y + b.overhead_y), z - 0.05)})
    return rest, over, lat


def script_hash(script: TargetScript) -> str:
    return hashlib.sha256(script.to_jsonl().encode()).hexdigest()


@dataclass(frozen=True, eq=False)
class SyntheticStream:
    samples: list[PoseSample]
    profile: PatientProfile
    level: LevelSpec
    script_hash: str

    @property
    def provenance(self) -> dict:
        return {"profile": asdict(self.profile), "level": asdict(self.level), "script_hash": self.script_hash}


def _home(joint: str, boundary: MovementBoundary) -> np.ndarray:
    u = 0.3 if joint == JointId.LH else 0.7
    return boundary.point(u, 0.0)


def _ideal_hand(joint: str, script: TargetScript, boundary: MovementBoundary, t: np.ndarray) -> np.ndarray:
    """Perfect-play path of one hand: track each own target, reposition
    (arcing toward the body) between them, start and end at the lap."""
    out = np.empty((len(t), 3))
    home = _home(joint, boundary)
    mine = [e for e in script.events if joint in e.joints]
    pos = home.copy()
    cursor = 0.0
    for e in mine:
        start = np.asarray(e.point(joint, e.appear_t))
        _reposition(out, t, cursor, e.appear_t, pos, start)
        act = (t >= e.appear_t) & (t < e.deadline_t)
        ta = t[act]
        track = np.array([e.point(joint, x) for x in ta]) if len(ta) else np.empty((0, 3))
        if len(ta) and np.linalg.norm(pos - start) > 1e-12:
            # hand is elsewhere at appearance: blend in over one beat
            s = np.clip((ta - e.appear_t) / e.beat, 0.0, 1.0)
            w = 0.5 * (1 + np.cos(np.pi * s))
            track = track + w[:, None] * (pos - start)
        out[act] = track
        pos = np.asarray(e.point(joint, e.deadline_t))
        cursor = e.deadline_t
    end_t = max(t[-1], cursor) + 1e-9
    _reposition(out, t, cursor, min(cursor + MAX_REPOSITION_S, end_t), pos, home)
    out[t >= cursor + MAX_REPOSITION_S] = home
    return out


def _reposition(out, t, t0, t1, a, b):
    """Fill [t0, t1): wait at ``a``, then move to ``b`` along a cosine-eased
    arc lasting at most MAX_REPOSITION_S."""
    sel = (t >= t0) & (t < t1)
    if not sel.any():
        return
    move = min(t1 - t0, MAX_REPOSITION_S)
    ts = t[sel]
    s = np.clip((ts - (t1 - move)) / move, 0.0, 1.0) if move > 0 else np.ones_like(ts)
    e = 0.5 * (1 - np.cos(np.pi * s))
    p = a + e[:, None] * (b - a)
    p[:, 2] += ARC_RATIO * np.linalg.norm(b - a) * np.sin(np.pi * s)
    out[sel] = p


def _rate_limit(p: np.ndarray, vmax: float, dt: float) -> np.ndarray:
    step = np.linalg.norm(np.diff(p, axis=0), axis=1)
    if step.size == 0 or step.max() <= vmax * dt:
        return p
    out = p.copy()
    lim = vmax * dt
    cur = p[0].copy()
    for k in range(1, len(p)):
        d = p[k] - cur
        n = np.sqrt(d @ d)
        if n > lim:
            d *= lim / n
        cur = cur + d
        out[k] = cur
    return out


def _tremor(rng, n: int, sd: float, rate: float) -> np.ndarray:
    if sd == 0 or n < 16:
        return np.zeros((n, 3))
    sos = signal.butter(2, TREMOR_CUTOFF_HZ, fs=rate, output="sos")
    w = signal.sosfiltfilt(sos, rng.standard_normal((n, 3)), axis=0)
    return w * (sd / w.std(axis=0))


def elbow_position(shoulder, hand, side: str) -> np.ndarray:
    """Two-segment arm: elbow 0.30 m from the shoulder, 0.28 m from the hand
    when reachable; fully extended toward the hand otherwise. The elbow
    bends downward and outward."""
    s = np.asarray(shoulder, float)
    h = np.atleast_2d(np.asarray(hand, float))
    v = h - s
    d = np.linalg.norm(v, axis=1)
    pole = np.array([-0.5 if side == "Left" else 0.5, -1.0, 0.0])
    pole /= np.linalg.norm(pole)
    safe = np.maximum(d, 1e-12)
    u = v / safe[:, None]
    w = pole - (u @ pole)[:, None] * u
    wn = np.linalg.norm(w, axis=1)
    fallback = np.cross(u, [0.0, 0.0, 1.0])
    w = np.where(wn[:, None] > 1e-9, w / np.maximum(wn, 1e-12)[:, None], fallback)
    dd = np.clip(d, abs(UPPER_ARM - FOREARM), UPPER_ARM + FOREARM)
    a = (UPPER_ARM**2 - FOREARM**2 + dd**2) / (2 * dd)
    r = np.sqrt(np.maximum(UPPER_ARM**2 - a**2, 0.0))
    e = s + a[:, None] * u + r[:, None] * w
    e[d < 1e-12] = s + UPPER_ARM * pole
    return e


def generate(
    profile: PatientProfile,
    script: TargetScript,
    boundary: MovementBoundary,
    rate: float = NOMINAL_RATE_HZ,
    t_offset: float = 0.0,
) -> SyntheticStream:
    """Synthetic stream for one level, timestamps ``t_offset + k / rate``
    covering ``[0, duration]``."""
    duration = script.level.duration
    n = int(round(duration * rate)) + 1
    t = np.arange(n) / rate
    sh = script_hash(script)
    rng = np.random.default_rng([profile.seed, int(sh[:12], 16)])
    center = boundary.center
    joints = {}
    for joint, side, shoulder in (
        (JointId.LH, "Left", profile.shoulder_left),
        (JointId.RH, "Right", profile.shoulder_right),
    ):
        p = _ideal_hand(joint, script, boundary, t)
        reach = np.hypot(p[:, 0] - shoulder[0], p[:, 1] - shoulder[1])
        p[:, 2] -= np.clip(DEPTH_GAIN * (reach - DEPTH_REACH0), -DEPTH_MAX, DEPTH_MAX)
        if profile.reaction_delay > 0:
            td = np.clip(t - profile.reaction_delay, 0.0, None)
            p = np.column_stack([np.interp(td, t, p[:, k]) for k in range(3)])
        p = center + profile.amplitude_scale * (p - center)
        p = _rate_limit(p, profile.speed_scale * MAX_HAND_SPEED, 1.0 / rate)
        p = p + _tremor(rng, n, profile.tremor_sd, rate)
        joints[str(joint)] = p
        elbow = JointId.LE if side == "Left" else JointId.RE
        shoulder_j = JointId.LS if side == "Left" else JointId.RS
        joints[str(elbow)] = elbow_position(shoulder, p, side)
        joints[str(shoulder_j)] = np.broadcast_to(np.asarray(shoulder, float), (n, 3))
    order = [str(j) for j in CORE_JOINTS]
    cols = {j: joints[j].tolist() for j in order}
    times = (t + t_offset).tolist()
    samples = [
        PoseSample(times[k], {j: tuple(cols[j][k]) for j in order}) for k in range(n)
    ]
    return SyntheticStream(samples, profile, script.level, sh)


@dataclass
class SyntheticSession:
    profile: PatientProfile
    scripts: list[TargetScript]
    offsets: list[float]
    samples: list[PoseSample]
    segmentation: LevelSegmentation


def generate_session(
    profile: PatientProfile,
    specs: Sequence[LevelSpec] = tuple(DEFAULT_LEVELS.values()),
    boundary: MovementBoundary | None = None,
    seed: int = 0,
    rate: float = NOMINAL_RATE_HZ,
    level_gap: float = LEVEL_GAP_S,
) -> SyntheticSession:
    """Levels played back to back, ``level_gap`` seconds apart."""
    boundary = boundary or default_boundary()
    scripts, offsets, samples, segs = [], [], [], []
    off = 0.0
    for spec in specs:
        script = build_level_schedule(spec, boundary, seed)
        stream = generate(profile, script, boundary, rate, t_offset=off)
        scripts.append(script)
        offsets.append(off)
        samples.extend(stream.samples)
        segs.append(Segment(spec.id, off, off + spec.duration + 1.0 / rate))
        off += spec.duration + level_gap
    seg = LevelSegmentation(tuple(segs), max(s.duration for s in specs) if specs else 120.0)
    return SyntheticSession(profile, scripts, offsets, samples, seg)


@dataclass
class PopulationCorpus:
    sessions: list[SyntheticSession]
    metrics: list[tuple[str, MetricRow]] = field(default_factory=list)

    @property
    def n_streams(self) -> int:
        return sum(len(s.scripts) for s in self.sessions)

    def long_records(self, joint: str, metric: str) -> list[tuple[str, str, float]]:
        """``(subject, level, value)`` records for one joint and metric."""
        attr = {"mean_speed_mps": "mean_speed", "rom_m": "rom", "volume_m3": "volume"}.get(metric, metric)
        return [
            (subj, row.level, getattr(row, attr))
            for subj, row in self.metrics
            if row.joint == str(joint) and getattr(row, attr) is not None
        ]

    def to_long_csv(self) -> str:
        lines = ["subject,condition,joint,metric,value"]
        for subj, row in self.metrics:
            for metric, val in (("mean_speed_mps", row.mean_speed), ("rom_m", row.rom), ("volume_m3", row.volume)):
                if val is not None:
                    lines.append(f"{subj},{row.level},{row.joint},{metric},{val!r}")
        return "\n".join(lines) + "\n"


def generate_population(
    profiles: Sequence[PatientProfile],
    specs: Sequence[LevelSpec] = tuple(DEFAULT_LEVELS.values()),
    seed: int = 0,
    boundary: MovementBoundary | None = None,
    joints=CORE_JOINTS,
) -> PopulationCorpus:
    """One session per profile plus the per-(subject, level, joint) metric table."""
    corpus = PopulationCorpus([])
    for prof in profiles:
        sess = generate_session(prof, specs, boundary, seed)
        corpus.sessions.append(sess)
        for row in level_metrics(sess.samples, sess.segmentation, joints):
            corpus.metrics.append((prof.name, row))
    return corpus
