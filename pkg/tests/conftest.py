import json

import numpy as np
import pytest

from mobility_kit.session import JointTrajectory, PoseSample


def pose_line(t, joints):
    return json.dumps({"t": t, "joints": {k: list(v) for k, v in joints.items()}})


HEADER = '{"format":"mobility-pose","version":1,"rate_hz":50}'


def make_log(records, header=HEADER):
    return "\n".join([header, *(pose_line(t, j) for t, j in records)]) + "\n"


def traj_from(points, rate=50.0, t0=0.0, joint="LH"):
    points = np.asarray(points, dtype=float)
    t = t0 + np.arange(len(points)) / rate
    return JointTrajectory(joint, t, points, rate)


def samples_from(arrays: dict, rate=50.0, t0=0.0):
    n = len(next(iter(arrays.values())))
    return [
        PoseSample(t0 + k / rate, {j: tuple(map(float, a[k])) for j, a in arrays.items()})
        for k in range(n)
    ]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
