import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mobility_kit.game import (
    DEFAULT_LEVELS,
    EVENT_KINDS,
    CompletionSummary,
    GameSession,
    LevelSpec,
    MovementBoundary,
    build_level_schedule,
    calibrate,
    format_events,
    load_level_specs,
    parse_events,
    replay,
    summarize,
)
from mobility_kit.session import PoseSample
from mobility_kit.synthgen import PERFECT, calibration_poses, default_boundary, generate

BOX = default_boundary()


def far_stream(duration, rate=50.0):
    far = (10.0, 10.0, 10.0)
    n = int(round(duration * rate)) + 1
    return [PoseSample(k / rate, {"LH": far, "RH": far}) for k in range(n)]


def on_target_stream(script, rate=50.0):
    """Hands sitting exactly on the active target point at every frame."""
    events = script.events
    home = {"LH": BOX.point(0.25, 0.0), "RH": BOX.point(0.75, 0.0)}
    n = int(round(script.level.duration * rate)) + 1
    out = []
    for k in range(n):
        t = k / rate
        pos = dict(home)
        for e in events:
            if e.appear_t <= t <= e.deadline_t:
                pos.update({j: e.point(j, t) for j in e.joints})
                break
        out.append(PoseSample(t, {j: tuple(map(float, p)) for j, p in pos.items()}))
    return out


# -- level table -----------------------------------------------------------------

def test_default_level_table():
    got = {k: (v.bpm, v.movement_type, v.hold_range, v.duration) for k, v in DEFAULT_LEVELS.items()}
    assert got == {
        "L1": (77, "Wrist", (4, 6), 120.0),
        "L2": (105, "Lateral", (6, 8), 120.0),
        "L3": (112, "Bilateral", (8, 10), 120.0),
        "L4": (140, "Overhead", (10, 12), 120.0),
    }


@pytest.mark.parametrize(
    "kw, msg",
    [
        ({"bpm": 0}, "bpm"),
        ({"hold_range": (5, 4)}, "hold range"),
        ({"movement_type": "Jump"}, "unknown movement type"),
        ({"duration": -1}, "duration"),
    ],
)
def test_level_validation(kw, msg):
    base = {"id": "X", "bpm": 90, "movement_type": "Wrist", "hold_range": (2, 3)}
    with pytest.raises(ValueError, match=msg):
        LevelSpec(**{**base, **kw})


def test_ini_overrides(tmp_path):
    ini = tmp_path / "levels.ini"
    ini.write_text("[L2]\nbpm = 100\n\n[L5]\nbpm = 60\nmovement_type = Wrist\nhold_min_s = 2\nhold_max_s = 3\n")
    levels = load_level_specs(ini)
    assert levels["L2"].bpm == 100 and levels["L2"].hold_range == (6, 8)
    assert levels["L5"].movement_type == "Wrist" and levels["L1"] == DEFAULT_LEVELS["L1"]
    ini.write_text("[L1]\ntempo = 3\n")
    with pytest.raises(ValueError, match="unknown keys: tempo"):
        load_level_specs(ini)


# -- scheduling ------------------------------------------------------------------

@pytest.mark.parametrize("lid", list(DEFAULT_LEVELS))
def test_schedule_invariants(lid):
    spec = DEFAULT_LEVELS[lid]
    script = build_level_schedule(spec, BOX)
    beat = spec.beat
    prev_end = 0.0
    for e in script.events:
        k = e.appear_t / beat
        assert abs(k - round(k)) < 1e-9
        assert e.appear_t >= prev_end - 1e-12
        prev_end = e.deadline_t
        for j in e.joints:
            assert BOX.contains(e.point(j, e.appear_t)) and BOX.contains(e.point(j, e.deadline_t))
        if e.kind == "Hold":
            lo, hi = spec.hold_range
            assert lo <= e.hold_duration <= hi
            assert e.deadline_t - e.arrive_t >= e.hold_duration
    assert spec.duration - beat <= script.scripted_time() <= spec.duration + 1e-9


def test_zero_duration_has_no_targets():
    spec = LevelSpec("Z", 90, "Lateral", (1, 2), duration=0.0)
    script = build_level_schedule(spec, BOX)
    assert len(script) == 0
    events = replay(script, far_stream(0.0))
    assert [e.kind for e in events] == ["LevelComplete"]


@settings(max_examples=30, deadline=None)
@given(
    st.integers(0, 10_000),
    st.floats(-1, 1), st.floats(0.05, 1.5), st.floats(-1, 0), st.floats(0.05, 1.5), st.floats(-1, 1),
)
def test_targets_stay_inside_any_boundary(seed, y0, h, x0, w, z):
    box = MovementBoundary(y0, y0 + h, x0, x0 + w, z)
    for spec in DEFAULT_LEVELS.values():
        for e in build_level_schedule(spec, box, seed).events:
            for _, a, b in e.paths:
                assert box.contains(a) and box.contains(b)


def _extent(lid):
    script = build_level_schedule(DEFAULT_LEVELS[lid], BOX)
    return np.array([np.abs(np.subtract(b, a))[:2] for e in script.events for _, a, b in e.paths])


def test_movement_families_scale_with_level():
    diag = _extent("L4")
    span = np.array([BOX.width, BOX.height])
    assert (diag / span).max(axis=0).min() >= 0.8
    assert (_extent("L1") / span).max() <= 0.25


def test_both_hand_paths_are_mirrored():
    script = build_level_schedule(DEFAULT_LEVELS["L3"], BOX)
    both = [e for e in script.events if e.hand == "Both"]
    assert both
    cx = BOX.center[0]
    for e in both:
        (_, la, lb), (_, ra, rb) = e.paths
        assert ra[0] - cx == pytest.approx(cx - la[0]) and ra[1] == pytest.approx(la[1])
        assert rb[0] - cx == pytest.approx(cx - lb[0])


def test_schedule_is_deterministic():
    a = build_level_schedule(DEFAULT_LEVELS["L3"], BOX, seed=4)
    b = build_level_schedule(DEFAULT_LEVELS["L3"], BOX, seed=4)
    assert a.to_jsonl() == b.to_jsonl()


# -- calibration -----------------------------------------------------------------

def test_calibration_recovers_boundary():
    got = calibrate(*calibration_poses(BOX))
    assert got.rest_y == pytest.approx(BOX.rest_y)
    assert got.overhead_y == pytest.approx(BOX.overhead_y)
    assert (got.lateral_left_x, got.lateral_right_x) == pytest.approx((BOX.lateral_left_x, BOX.lateral_right_x))


def test_calibration_rejects_small_range():
    p = PoseSample(0.0, {"LH": (-0.01, 0.0, 0.0), "RH": (0.01, 0.0, 0.0)})
    with pytest.raises(ValueError, match="insufficient range"):
        calibrate(p, p, p)
    with pytest.raises(ValueError, match="both hands"):
        calibrate(PoseSample(0.0, {"LH": (0, 0, 0)}), p, p)


# -- replay ----------------------------------------------------------------------

def test_far_hands_miss_everything():
    script = build_level_schedule(DEFAULT_LEVELS["L2"], BOX)
    events = replay(script, far_stream(120.0))
    kinds = [e.kind for e in events]
    assert summarize(events, script).targets_hit == 0
    assert "Hit" not in kinds and "HoldComplete" not in kinds
    assert kinds.count("Miss") + kinds.count("HoldBroken") == len(script)
    assert kinds[-1] == "LevelComplete"


def test_hand_on_target_hits_immediately():
    script = build_level_schedule(DEFAULT_LEVELS["L1"], BOX)
    e0 = script.events[0]
    game = GameSession(script)
    pos = {j: tuple(e0.point(j, 0.0)) for j in e0.joints}
    out = game.step(PoseSample(0.0, pos))
    assert out[0].kind == "Hit" and out[0].t == 0.0 and out[0].target_index == 0


@pytest.mark.parametrize("lid", list(DEFAULT_LEVELS))
def test_tracking_the_target_completes_the_level(lid):
    script = build_level_schedule(DEFAULT_LEVELS[lid], BOX)
    events = replay(script, on_target_stream(script))
    assert summarize(events, script).completion_fraction == 1.0
    assert all(e.kind in EVENT_KINDS for e in events)


def test_milestones_fire_once_in_order():
    script = build_level_schedule(DEFAULT_LEVELS["L4"], BOX)
    events = replay(script, generate(PERFECT, script, BOX).samples)
    ms = [e.kind for e in events if e.kind.startswith("Milestone")]
    assert ms == ["Milestone25", "Milestone50", "Milestone75"]
    assert [e.kind for e in events].count("LevelComplete") == 1 and events[-1].kind == "LevelComplete"
    ts = [e.t for e in events]
    assert ts == sorted(ts)
    # milestone k fires with the target that brings the resolved count to k/4 of the total
    resolved = [e for e in events if e.target_index is not None and not e.kind.startswith("Milestone")]
    for frac, e in zip((0.25, 0.5, 0.75), (x for x in events if x.kind.startswith("Milestone"))):
        assert e.target_index == resolved[math.ceil(frac * len(script) - 1e-9) - 1].target_index


def test_time_regression_is_rejected():
    script = build_level_schedule(DEFAULT_LEVELS["L1"], BOX)
    game = GameSession(script)
    game.step(PoseSample(1.0, {}))
    with pytest.raises(ValueError, match="time regression"):
        game.step(PoseSample(1.0, {}))


def test_broken_hold_is_reported():
    script = build_level_schedule(DEFAULT_LEVELS["L1"], BOX)
    samples = on_target_stream(script)
    hold = next(e for e in script.events if e.kind == "Hold")
    # leave the target half-way through the hold
    cut = hold.arrive_t + 0.5 * hold.hold_duration
    far = {"LH": (9.0, 9.0, 9.0), "RH": (9.0, 9.0, 9.0)}
    samples = [PoseSample(s.t, far) if cut <= s.t <= hold.deadline_t else s for s in samples]
    events = replay(script, samples)
    broken = [e for e in events if e.target_index == hold.index and e.kind == "HoldBroken"]
    assert len(broken) == 1 and broken[0].detail.startswith("held")


def test_replay_is_deterministic_and_round_trips():
    script = build_level_schedule(DEFAULT_LEVELS["L2"], BOX)
    samples = generate(PERFECT, script, BOX).samples
    a, b = format_events(replay(script, samples)), format_events(replay(script, samples))
    assert a == b
    assert format_events(parse_events(a)) == a


def test_summary_matches_recount():
    script = build_level_schedule(DEFAULT_LEVELS["L3"], BOX)
    samples = on_target_stream(script)
    # blank out the middle third so some targets fail
    far = {"LH": (9.0, 9.0, 9.0), "RH": (9.0, 9.0, 9.0)}
    samples = [PoseSample(s.t, far) if 40 < s.t < 80 else s for s in samples]
    events = replay(script, samples)
    s = summarize(events, script)
    ok = {e.target_index for e in events if e.kind in ("Hit", "HoldComplete")}
    assert s.targets_hit == len(ok) and 0 < s.completion_fraction < 1
    assert s.targets_total == len(script)


def test_completion_summaries_add():
    total = CompletionSummary("L1", 10, 7) + CompletionSummary("L2", 30, 9)
    assert (total.targets_total, total.targets_hit) == (40, 16)
    assert total.completion_fraction == pytest.approx(0.4)
    assert CompletionSummary("E", 0, 0).completion_fraction == 0.0
