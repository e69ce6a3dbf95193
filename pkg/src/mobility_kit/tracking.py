"""Tracking accuracy against a reference capture (Absolute Pose Error)."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .session import JointTrajectory

DEFAULT_ASSOC_TOL = 0.010
REGISTRATION_MODES = ("none", "translation", "rigid")


@dataclass(frozen=True, eq=False)
class TrajectoryPair:
    """Estimated and reference trajectories with their time association.

    ``matches`` is an (M, 2) int array of ``(est_index, ref_index)`` rows,
    one-to-one and increasing in both columns.
    """

    estimated: JointTrajectory
    reference: JointTrajectory
    matches: np.ndarray
    unmatched_est: int = 0
    unmatched_ref: int = 0

    @property
    def est_points(self) -> np.ndarray:
        return self.estimated.positions[self.matches[:, 0]]

    @property
    def ref_points(self) -> np.ndarray:
        return self.reference.positions[self.matches[:, 1]]


@dataclass(frozen=True, eq=False)
class RigidTransform:
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def apply(self, points) -> np.ndarray:
        return np.asarray(points, dtype=float) @ self.rotation.T + self.translation

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls()


@dataclass(frozen=True)
class TrackingErrorStats:
    """APE summary for one joint and task. ``sd`` is the population SD."""

    joint: str
    task: str
    mean: float
    sd: float
    rmse: float
    max: float
    n: int


def associate(est: JointTrajectory, ref: JointTrajectory, assoc_tol: float = DEFAULT_ASSOC_TOL) -> TrajectoryPair:
    """Match samples by timestamp.

    Candidate pairs within ``assoc_tol`` seconds are taken greedily in order
    of increasing time offset (ties by estimate then reference index), each
    sample used at most once.
    """
    if not assoc_tol > 0:
        raise ValueError("assoc_tol must be positive")
    te, tr = est.t, ref.t
    lo = np.searchsorted(tr, te - assoc_tol, side="left")
    hi = np.searchsorted(tr, te + assoc_tol, side="right")
    counts = hi - lo
    ei = np.repeat(np.arange(len(te)), counts)
    ri = np.concatenate([np.arange(a, b) for a, b in zip(lo, hi)]) if counts.sum() else np.empty(0, int)
    if len(ei) == 0:
        raise ValueError("no temporal overlap")
    d = np.abs(te[ei] - tr[ri])
    order = np.lexsort((ri, ei, d))
    used_e = np.zeros(len(te), bool)
    used_r = np.zeros(len(tr), bool)
    pairs = []
    for k in order:
        a, b = ei[k], ri[k]
        if d[k] > assoc_tol or used_e[a] or used_r[b]:
            continue
        used_e[a] = used_r[b] = True
        pairs.append((a, b))
    pairs.sort()
    # only exact ties can cross; drop them to keep matches time-ordered
    kept = []
    for a, b in pairs:
        if kept and b <= kept[-1][1]:
            continue
        kept.append((a, b))
    matches = np.array(kept, dtype=int).reshape(-1, 2)
    return TrajectoryPair(est, ref, matches, len(te) - len(kept), len(tr) - len(kept))


def register(pair: TrajectoryPair, mode: str = "none", eps: float = 1e-9) -> RigidTransform:
    """Least-squares transform taking estimated points onto the reference.

    ``rigid`` is the closed-form SVD (Kabsch) solution with the reflection
    correction; ``translation`` aligns centroids; ``none`` is the identity.
    """
    if mode not in REGISTRATION_MODES:
        raise ValueError(f"unknown registration mode {mode!r}")
    if mode == "none":
        return RigidTransform.identity()
    x, y = pair.est_points, pair.ref_points
    if len(x) == 0:
        raise ValueError("no matches")
    mx, my = x.mean(axis=0), y.mean(axis=0)
    if mode == "translation":
        return RigidTransform(np.eye(3), my - mx)
    xc, yc = x - mx, y - my
    sv = np.linalg.svd(xc, compute_uv=False)
    if len(x) < 3 or sv[1] <= eps * max(1.0, np.sqrt(len(x))):
        raise ValueError("rank deficient")
    u, _, vt = np.linalg.svd(yc.T @ xc)
    s = np.eye(3)
    if np.linalg.det(u) * np.linalg.det(vt) < 0:
        s[2, 2] = -1.0
    r = u @ s @ vt
    return RigidTransform(r, my - r @ mx)


def ape(pair: TrajectoryPair, transform: RigidTransform | None = None, task: str = "") -> TrackingErrorStats:
    if len(pair.matches) == 0:
        raise ValueError("no matches")
    transform = transform or RigidTransform.identity()
    err = np.linalg.norm(transform.apply(pair.est_points) - pair.ref_points, axis=1)
    return TrackingErrorStats(
        joint=pair.estimated.joint,
        task=task,
        mean=float(err.mean()),
        sd=float(err.std()),
        rmse=float(np.sqrt(np.mean(err**2))),
        max=float(err.max()),
        n=len(err),
    )


@dataclass
class ApeRow:
    joint: str
    task: str
    stats: TrackingErrorStats | None = None
    flags: list[str] = field(default_factory=list)


APE_COLUMNS = ["joint", "task", "n", "mean_m", "sd_m", "rmse_m", "max_m", "flags"]


def ape_report(
    cells: Mapping[tuple[str, str], tuple[JointTrajectory, JointTrajectory]],
    mode: str = "none",
    assoc_tol: float = DEFAULT_ASSOC_TOL,
) -> list[ApeRow]:
    """APE per (joint, task) cell; failing cells are kept, flagged empty."""
    rows = []
    for (joint, task), (est, ref) in cells.items():
        row = ApeRow(str(joint), str(task))
        try:
            pair = associate(est, ref, assoc_tol)
            row.stats = ape(pair, register(pair, mode), task=str(task))
            if pair.unmatched_est:
                row.flags.append(f"unmatched_est={pair.unmatched_est}")
        except ValueError as exc:
            row.flags.append(f"empty:{exc}")
        rows.append(row)
    return rows


def format_ape_csv(rows) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(APE_COLUMNS)
    for r in rows:
        s = r.stats
        vals = ["", "", "", "", ""] if s is None else [s.n, repr(s.mean), repr(s.sd), repr(s.rmse), repr(s.max)]
        w.writerow([r.joint, r.task, *vals, ";".join(r.flags)])
    return out.getvalue()
