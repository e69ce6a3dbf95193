"""Per-joint movement metrics: mean speed, range of motion, workspace volume.

Range of motion is the RMS distance of the samples from their centroid,
``sqrt(mean(|p_i - c|^2))``. (Read literally, the typeset formula puts the
sum inside the norm, which is zero by construction of the centroid; the
dispersion reading is the one used here.)

Workspace volume is the convex-hull volume written as a sum of facet
pyramids, ``(1/3) * sum(A_k * d_k)``, with ``d_k`` measured from the hull
vertex centroid.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .hull import EPS_HULL, Degenerate, convex_hull
from .session import (
    CORE_JOINTS,
    DEFAULT_MAX_GAP_S,
    NOMINAL_RATE_HZ,
    JointTrajectory,
    LevelSegmentation,
    PoseSample,
    extract_trajectory,
    fill_gaps,
)

# intervals whose duration deviates from the nominal frame time by more
# than this fraction are left out of the speed average
JITTER_TOLERANCE = 0.5


@dataclass(frozen=True)
class SpeedResult:
    joint: str
    mean_speed: float
    n_intervals: int
    n_excluded: int = 0


@dataclass(frozen=True)
class RomResult:
    joint: str
    centroid: np.ndarray
    rom: float


@dataclass(frozen=True)
class WorkspaceResult:
    joint: str
    volume: float
    degenerate: bool
    rank: int = 3


def mean_speed(traj: JointTrajectory, jitter_tolerance: float = JITTER_TOLERANCE) -> SpeedResult:
    """Average of the instantaneous speeds ``|p_i - p_{i-1}| / (t_i - t_{i-1})``.

    Only intervals inside a contiguous segment and within
    ``jitter_tolerance`` of the nominal frame time contribute.
    """
    step = 1.0 / traj.nominal_rate
    speeds = []
    excluded = 0
    for seg in traj.segments():
        t, p = traj.t[seg], traj.positions[seg]
        if len(t) < 2:
            continue
        dt = np.diff(t)
        ok = np.abs(dt - step) <= jitter_tolerance * step
        excluded += int(np.count_nonzero(~ok))
        v = np.linalg.norm(np.diff(p, axis=0), axis=1)[ok] / dt[ok]
        speeds.append(v)
    v = np.concatenate(speeds) if speeds else np.empty(0)
    if len(v) == 0:
        raise ValueError("insufficient samples")
    return SpeedResult(traj.joint, float(v.mean()), len(v), excluded)


def range_of_motion(traj: JointTrajectory) -> RomResult:
    p = traj.positions
    c = p.mean(axis=0)
    rom = float(np.sqrt(np.mean(np.sum((p - c) ** 2, axis=1))))
    return RomResult(traj.joint, c, rom)


def workspace_volume(traj: JointTrajectory, eps: float = EPS_HULL) -> WorkspaceResult:
    hull = convex_hull(traj.positions, eps)
    if isinstance(hull, Degenerate):
        return WorkspaceResult(traj.joint, 0.0, True, hull.rank)
    return WorkspaceResult(traj.joint, hull.volume(), False)


# -- level table -------------------------------------------------------------

@dataclass
class MetricRow:
    level: str
    joint: str
    mean_speed: float | None = None
    rom: float | None = None
    volume: float | None = None
    flags: list[str] = field(default_factory=list)

    def as_record(self) -> dict:
        return {
            "level": self.level,
            "joint": self.joint,
            "mean_speed_mps": self.mean_speed,
            "rom_m": self.rom,
            "volume_m3": self.volume,
            "flags": ";".join(self.flags),
        }


METRIC_COLUMNS = ["level", "joint", "mean_speed_mps", "rom_m", "volume_m3", "flags"]


def level_metrics(
    samples: Sequence[PoseSample],
    segmentation: LevelSegmentation,
    joints: Iterable = CORE_JOINTS,
    nominal_rate: float = NOMINAL_RATE_HZ,
    max_gap: float | None = DEFAULT_MAX_GAP_S,
) -> list[MetricRow]:
    """Speed, ROM and workspace volume for every (segment, joint) cell.

    Cells that cannot be computed are kept with ``None`` values and the
    reason in ``flags``. Short dropouts are interpolated before computing
    speed and ROM unless ``max_gap`` is None; the hull always uses the
    recorded samples only.
    """
    joints = [str(j) for j in joints]
    rows = []
    for seg in segmentation:
        for joint in joints:
            row = MetricRow(seg.label, joint)
            rows.append(row)
            try:
                raw = extract_trajectory(samples, joint, (seg.start_t, seg.end_t), nominal_rate)
            except ValueError as exc:
                row.flags.append(f"error:{exc}")
                continue
            traj = raw
            if max_gap is not None:
                traj, gaps = fill_gaps(raw, max_gap)
                if gaps:
                    row.flags.append(f"gaps={len(gaps)}")
            try:
                sp = mean_speed(traj)
                row.mean_speed = sp.mean_speed
                if sp.n_excluded:
                    row.flags.append(f"excluded_intervals={sp.n_excluded}")
            except ValueError as exc:
                row.flags.append(f"speed:{exc}")
            row.rom = range_of_motion(traj).rom
            ws = workspace_volume(raw)
            row.volume = ws.volume
            if ws.degenerate:
                row.flags.append(f"degenerate_rank={ws.rank}")
    return rows


def _fmt(v):
    return "" if v is None else repr(float(v))


def format_metrics_csv(rows: Iterable[MetricRow]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(METRIC_COLUMNS)
    for r in rows:
        w.writerow([r.level, r.joint, _fmt(r.mean_speed), _fmt(r.rom), _fmt(r.volume), ";".join(r.flags)])
    return out.getvalue()


def format_metrics_jsonl(rows: Iterable[MetricRow]) -> str:
    return "".join(json.dumps(r.as_record(), separators=(",", ":")) + "\n" for r in rows)
