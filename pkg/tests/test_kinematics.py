import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import trapezoid
from scipy.spatial.transform import Rotation

from conftest import samples_from, traj_from
from mobility_kit.kinematics import (
    METRIC_COLUMNS,
    format_metrics_csv,
    format_metrics_jsonl,
    level_metrics,
    mean_speed,
    range_of_motion,
    workspace_volume,
)
from mobility_kit.session import JointTrajectory, LevelSegmentation, Segment, fill_gaps


def random_walk(rng, n=200, step=0.01):
    return np.cumsum(rng.normal(scale=step, size=(n, 3)), axis=0)


# -- speed ---------------------------------------------------------------------

def test_stationary_speed_is_zero():
    tr = traj_from(np.tile([0.1, -0.2, 0.3], (6001, 1)))
    assert mean_speed(tr).mean_speed == 0.0
    assert mean_speed(tr).n_intervals == 6000


def test_uniform_line_speed():
    p = np.outer(np.arange(500) * 0.002, [1.0, 0.0, 0.0])
    assert mean_speed(traj_from(p)).mean_speed == pytest.approx(0.1, rel=1e-12)


def test_sinusoid_matches_fine_integral():
    a, f, rate, dur = 0.1, 0.5, 50.0, 60.0
    t = np.arange(int(dur * rate) + 1) / rate
    x = a * np.sin(2 * np.pi * f * t)
    got = mean_speed(traj_from(np.column_stack([x, 0 * x, 0 * x]))).mean_speed
    # time-average of |x'(t)| on a 10^6-point grid
    tf = np.linspace(0.0, dur, 10**6 + 1)
    ref = trapezoid(np.abs(2 * np.pi * f * a * np.cos(2 * np.pi * f * tf)), tf) / dur
    assert got == pytest.approx(ref, rel=0.005)


def test_speed_excludes_jittered_intervals_and_breaks():
    t = np.array([0.0, 0.02, 0.04, 0.10, 0.12])
    p = np.column_stack([t, 0 * t, 0 * t])
    r = mean_speed(JointTrajectory("LH", t, p))
    assert r.n_excluded == 1 and r.n_intervals == 3
    assert r.mean_speed == pytest.approx(1.0)
    broken = JointTrajectory("LH", t, p, breaks=(3,))
    assert mean_speed(broken).n_excluded == 0


def test_speed_needs_two_samples():
    with pytest.raises(ValueError, match="insufficient samples"):
        mean_speed(traj_from([[0, 0, 0]]))


def test_speed_interval_count_over_segments():
    t = np.concatenate([np.arange(10), 20 + np.arange(5)]) / 50.0
    p = np.zeros((15, 3))
    p[:, 0] = t
    tr, gaps = fill_gaps(JointTrajectory("LH", t, p), 0.05)
    assert len(gaps) == 1
    assert mean_speed(tr).n_intervals == (10 - 1) + (5 - 1)


# -- ROM -----------------------------------------------------------------------

def test_rom_identical_points_is_zero():
    assert range_of_motion(traj_from(np.ones((50, 3)))).rom == 0.0


def test_rom_two_point_alternation():
    p = np.array([[0, 0, 0], [0.2, 0, 0]] * 50)
    r = range_of_motion(traj_from(p))
    np.testing.assert_allclose(r.centroid, [0.1, 0, 0], atol=1e-15)
    assert r.rom == pytest.approx(0.1, rel=1e-12)


def test_rom_sphere_points():
    rng = np.random.default_rng(12)
    v = rng.normal(size=(10_000, 3))
    p = 0.3 * v / np.linalg.norm(v, axis=1, keepdims=True)
    assert range_of_motion(traj_from(p)).rom == pytest.approx(0.3, rel=0.01)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 40), st.integers(0, 2**32 - 1))
def test_rom_zero_iff_coincident(n, seed):
    rng = np.random.default_rng(seed)
    p = rng.normal(size=(n, 3))
    r = range_of_motion(traj_from(p)).rom
    assert r >= 0
    assert (r == 0) == (n == 1)


# -- volume --------------------------------------------------------------------

def test_workspace_degenerate_flag():
    p = np.column_stack([np.linspace(0, 1, 30), np.zeros(30), np.zeros(30)])
    w = workspace_volume(traj_from(p))
    assert w.degenerate and w.volume == 0.0 and w.rank == 1
    w = workspace_volume(traj_from(np.random.default_rng(1).normal(size=(30, 3))))
    assert not w.degenerate and w.volume > 0


# -- invariances ---------------------------------------------------------------

def _metrics(p, t0=0.0):
    tr = traj_from(p, t0=t0)
    return np.array([mean_speed(tr).mean_speed, range_of_motion(tr).rom, workspace_volume(tr).volume])


def test_rigid_invariance_and_scaling_covariance():
    rng = np.random.default_rng(77)
    for _ in range(20):
        p = random_walk(rng)
        base = _metrics(p)
        rot = Rotation.random(random_state=rng).as_matrix()
        shift = rng.uniform(-5, 5, 3)
        np.testing.assert_allclose(_metrics(p @ rot.T + shift, t0=rng.uniform(0, 100)), base, rtol=1e-9)
        s = rng.uniform(0.2, 5.0)
        np.testing.assert_allclose(_metrics(s * p), base * [s, s, s**3], rtol=1e-9)


# -- level table ---------------------------------------------------------------

def _session(rng):
    n = 600
    arrays = {j: random_walk(rng, n) for j in ("LH", "RH", "LE", "RE", "LS", "RS")}
    return samples_from(arrays)


def test_single_level_table_has_one_row_per_joint():
    samples = _session(np.random.default_rng(3))
    seg = LevelSegmentation((Segment("L1", 0.0, 12.0),))
    rows = level_metrics(samples, seg)
    assert [r.joint for r in rows] == ["LH", "RH", "LE", "RE", "LS", "RS"]
    assert all(r.mean_speed > 0 and r.rom > 0 and r.volume > 0 for r in rows)


def test_stationary_table_is_zero():
    samples = samples_from({"LH": np.zeros((200, 3)), "RH": np.ones((200, 3))})
    rows = level_metrics(samples, LevelSegmentation((Segment("L1", 0, 4),)), ["LH", "RH"])
    for r in rows:
        assert (r.mean_speed, r.rom, r.volume) == (0.0, 0.0, 0.0)
        assert "degenerate_rank=0" in r.flags


def test_missing_cells_are_flagged_not_raised():
    samples = _session(np.random.default_rng(4))
    seg = LevelSegmentation((Segment("L1", 0.0, 6.0), Segment("L2", 50.0, 60.0)))
    rows = level_metrics(samples, seg, ["LH", "Head"])
    by = {(r.level, r.joint): r for r in rows}
    assert by[("L1", "LH")].mean_speed is not None
    assert by[("L1", "Head")].flags == ["error:joint not tracked: Head"]
    assert by[("L2", "LH")].flags[0].startswith("error:empty trajectory")
    csv_text = format_metrics_csv(rows)
    assert csv_text.splitlines()[0] == ",".join(METRIC_COLUMNS)
    assert ",,," in csv_text.splitlines()[2]
    assert len(format_metrics_jsonl(rows).splitlines()) == len(rows)


def test_gap_flags_in_table():
    samples = _session(np.random.default_rng(5))
    holed = [s for s in samples if not 2.0 < s.t < 3.0]
    rows = level_metrics(holed, LevelSegmentation((Segment("L1", 0, 12),)), ["LH"])
    assert rows[0].flags == ["gaps=1"]
