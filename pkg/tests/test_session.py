import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import HEADER, make_log, traj_from
from mobility_kit.session import (
    Gap,
    JointId,
    JointTrajectory,
    LevelSegmentation,
    PoseLogError,
    Segment,
    extract_trajectory,
    fill_gaps,
    format_gap_report,
    format_segmentation,
    joint_id,
    make_sample,
    parse_pose_log,
    parse_pose_log_with_header,
    parse_segmentation,
    resample,
    serialize_pose_log,
)

SIX = {"LH": (0, 0, 0), "RH": (1, 0, 0), "LE": (0, 1, 0), "RE": (1, 1, 0), "LS": (0, 2, 0), "RS": (1, 2, 0)}


# -- joint ids ---------------------------------------------------------------

def test_joint_ids_accept_codes_and_long_names():
    assert joint_id("LH") is JointId.LH
    assert joint_id("LeftHand") is JointId.LH
    assert joint_id("right_shoulder") is JointId.RS
    assert joint_id("Head") == "Head"
    assert str(JointId.RE) == "RE"
    assert JointId.LE.side == "Left" and JointId.RS.side == "Right"


# -- parsing -----------------------------------------------------------------

def test_empty_log_has_no_samples():
    with pytest.raises(PoseLogError, match="no samples"):
        parse_pose_log("")
    with pytest.raises(PoseLogError, match="no samples"):
        parse_pose_log(HEADER + "\n")


def test_two_lines_at_fifty_hz():
    s = parse_pose_log(make_log([(0.0, SIX), (0.02, SIX)]))
    assert len(s) == 2
    assert s[1].t - s[0].t == pytest.approx(0.02, abs=1e-15)
    np.testing.assert_array_equal(s[0]["RS"], [1, 2, 0])


def test_nan_on_line_three_is_reported():
    lines = make_log([(0.0, SIX), (0.02, SIX)]).splitlines()
    lines[2] = '{"t":0.02,"joints":{"LH":[NaN,0,0]}}'
    with pytest.raises(PoseLogError, match="invalid coordinate at line 3") as info:
        parse_pose_log("\n".join(lines))
    assert info.value.line == 3


def test_time_regression_line_number():
    text = make_log([(0.0, SIX), (0.04, SIX), (0.02, SIX)])
    with pytest.raises(PoseLogError, match="time regression at line 4"):
        parse_pose_log(text)
    with pytest.raises(PoseLogError, match="time regression"):
        parse_pose_log(make_log([(0.0, SIX), (0.0, SIX)]))


@pytest.mark.parametrize(
    "bad",
    [
        '{"t":0.02,"joints":{"LH":[0,0]}}',
        '{"t":0.02,"joints":{"LH":[0,"x",0]}}',
        '{"t":0.02,"joints":{"LH":[0,1e999,0]}}',
        '{"t":0.02,"joints":{"LH":[true,0,0]}}',
    ],
)
def test_malformed_coordinates(bad):
    with pytest.raises(PoseLogError, match="invalid coordinate at line 2"):
        parse_pose_log(HEADER + "\n" + bad)


def test_header_is_required():
    with pytest.raises(PoseLogError, match="missing mobility-pose header at line 1"):
        parse_pose_log('{"t":0,"joints":{}}')
    with pytest.raises(PoseLogError, match="unsupported version"):
        parse_pose_log('{"format":"mobility-pose","version":2}\n{"t":0,"joints":{}}')


def test_unknown_joints_pass_through_and_header_kept():
    text = make_log([(0.0, {"LH": (0, 0, 0), "Spine2": (0.1, 0.2, 0.3)})],
                    header='{"format":"mobility-pose","version":1,"rate_hz":50,"source":"reference"}')
    header, s = parse_pose_log_with_header(text.encode())
    assert header["source"] == "reference"
    assert s[0].positions["Spine2"] == (0.1, 0.2, 0.3)


def test_blank_lines_and_bytes_input():
    text = HEADER + "\n\n" + '{"t":0.5,"joints":{"LH":[1,2,3]}}\n\n'
    assert parse_pose_log(text.encode("utf-8"))[0].t == 0.5


coord = st.floats(-5, 5, allow_nan=False, allow_infinity=False)


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.tuples(st.floats(0.001, 0.5), coord, coord, coord), min_size=1, max_size=20),
)
def test_round_trip_is_identity(rows):
    t, samples = 0.0, []
    for dt, x, y, z in rows:
        t += dt
        samples.append(make_sample(t, {"LH": (x, y, z), "Extra": (z, x, y)}))
    again = parse_pose_log(serialize_pose_log(samples))
    assert again == samples
    assert parse_pose_log(serialize_pose_log(again)) == samples


def test_make_sample_rejects_bad_values():
    with pytest.raises(ValueError):
        make_sample(0.0, {"LH": (0, math.inf, 0)})
    with pytest.raises(ValueError):
        make_sample(-1.0, {"LH": (0, 0, 0)})


# -- trajectories ------------------------------------------------------------

def _stream(n=100, rate=50.0):
    return [make_sample(k / rate, {"LH": (k, 0, 0), "RH": (0, k, 0)}) for k in range(n)]


def test_extract_full_and_half_windows():
    s = _stream()
    full = extract_trajectory(s, "LH")
    assert len(full) == len(s)
    mid = 0.99
    half = extract_trajectory(s, JointId.LH, (0.0, mid))
    assert len(half) == sum(1 for x in s if x.t < mid)


def test_extract_errors():
    s = _stream(10)
    with pytest.raises(ValueError, match="empty trajectory"):
        extract_trajectory(s, "LH", (5.0, 6.0))
    with pytest.raises(ValueError, match="joint not tracked: LE"):
        extract_trajectory(s, "LE")
    with pytest.raises(ValueError, match="degenerate window"):
        extract_trajectory(s, "LH", (1.0, 1.0))


def test_extract_skips_samples_without_the_joint():
    s = _stream(5) + [make_sample(0.2, {"RH": (0, 0, 0)})]
    assert len(extract_trajectory(s, "LH")) == 5


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.0, 2.0), min_size=1, max_size=4, unique=True))
def test_extract_commutes_with_disjoint_windows(cuts):
    s = _stream(100)
    edges = [0.0, *sorted(cuts), 2.5]
    edges = sorted(set(edges))
    pieces = []
    for a, b in zip(edges[:-1], edges[1:]):
        try:
            pieces.append(extract_trajectory(s, "LH", (a, b)).t)
        except ValueError:
            pass
    whole = extract_trajectory(s, "LH", (edges[0], edges[-1])).t
    np.testing.assert_array_equal(np.concatenate(pieces), whole)


def test_trajectory_is_immutable_and_validated():
    tr = traj_from(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        tr.positions[0, 0] = 1.0
    with pytest.raises(ValueError, match="strictly increasing"):
        JointTrajectory("LH", [0, 0], np.zeros((2, 3)))
    with pytest.raises(ValueError, match="empty"):
        JointTrajectory("LH", [], np.zeros((0, 3)))


# -- gaps --------------------------------------------------------------------

def _gapped(gap_s, rate=50.0):
    t1 = np.arange(10) / rate
    t2 = t1[-1] + gap_s + np.arange(10) / rate
    t = np.concatenate([t1, t2])
    p = np.column_stack([t * 2.0, np.sin(t), np.ones_like(t)])
    return JointTrajectory("LH", t, p, rate)


def test_no_gaps_is_identity():
    tr = traj_from(np.random.default_rng(0).normal(size=(30, 3)))
    out, report = fill_gaps(tr, 0.2)
    assert out is tr and report == []


def test_short_gap_interpolated_on_the_chord():
    tr = _gapped(0.1)
    out, report = fill_gaps(tr, 0.2)
    assert report == []
    assert len(out) == len(tr) + 4
    i = 9
    a, b = tr.positions[i], tr.positions[i + 1]
    ins = out.positions[i + 1 : i + 5]
    frac = np.arange(1, 5) / 5
    np.testing.assert_allclose(ins, a + frac[:, None] * (b - a), atol=1e-12)
    np.testing.assert_allclose(np.diff(out.t[i : i + 6]), 0.02, atol=1e-12)


def test_long_gap_splits_and_is_reported():
    tr = _gapped(0.5)
    out, report = fill_gaps(tr, 0.2)
    assert len(out) == len(tr)
    assert len(out.segments()) == 2
    assert report == [Gap("LH", tr.t[9], tr.t[10])]
    assert report[0].duration == pytest.approx(0.5)
    assert format_gap_report(report).splitlines()[0] == "joint,start_t,end_t,duration"


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.005, 0.6), min_size=2, max_size=25), st.floats(0.03, 0.4))
def test_fill_gaps_keeps_originals(dts, max_gap):
    t = np.concatenate([[0.0], np.cumsum(dts)])
    p = np.column_stack([np.cos(3 * t), t, t**2])
    tr = JointTrajectory("LH", t, p)
    out, report = fill_gaps(tr, max_gap)
    idx = np.searchsorted(out.t, t)
    np.testing.assert_array_equal(out.t[idx], t)
    np.testing.assert_array_equal(out.positions[idx], p)
    # inserted points sit on the chord between their bracketing originals
    for a, b in zip(idx[:-1], idx[1:]):
        if b - a > 1:
            seg = out.positions[a : b + 1]
            d = seg[-1] - seg[0]
            u = d / np.linalg.norm(d)
            rel = seg - seg[0]
            off = rel - np.outer(rel @ u, u)
            assert np.abs(off).max() < 1e-9
    assert all(g.duration > max_gap for g in report)


def test_resample_uniform_grid_per_segment():
    rng = np.random.default_rng(3)
    t = np.cumsum(rng.uniform(0.015, 0.025, 200))
    p = np.column_stack([t, 2 * t, -t])
    out = resample(JointTrajectory("LH", t, p), 50.0)
    np.testing.assert_allclose(np.diff(out.t), 0.02, atol=1e-12)
    np.testing.assert_allclose(out.positions[:, 1], 2 * out.t, atol=1e-12)


# -- segmentation --------------------------------------------------------------

def test_segmentation_validation_and_csv_round_trip():
    seg = LevelSegmentation((Segment("L1", 0, 120), Segment("L2", 125, 245.5)))
    assert parse_segmentation(format_segmentation(seg)).segments == seg.segments
    assert seg.window("L2") == (125, 245.5)
    with pytest.raises(ValueError, match="exceeds level duration"):
        LevelSegmentation((Segment("L1", 0, 121.5),))
    with pytest.raises(ValueError, match="overlap"):
        LevelSegmentation((Segment("L1", 0, 100), Segment("L2", 90, 150)))
    # non-level labels are not held to the level length
    LevelSegmentation((Segment("tutorial", 0, 400),))
