"""Independently written brute-force reference implementations.

Everything here is deliberately slow and scalar: plain Python loops and the
math module wherever possible, no reuse of the package's vectorized code paths.
These serve as ground truth for the fast implementations under test.
"""

from __future__ import annotations

import math

import numpy as np

# Joint slot indices, restated literally so the oracle does not import the
# package's enum.
ROOT, SPINE, NECK, HEAD = 0, 1, 2, 3
LSHOULDER, LELBOW, LHAND = 4, 5, 6
RSHOULDER, RELBOW, RHAND = 7, 8, 9
LHIP, LKNEE, LFOOT = 10, 11, 12
RHIP, RKNEE, RFOOT = 13, 14, 15


def _sub(p, q):
    return (p[0] - q[0], p[1] - q[1], p[2] - q[2])


def _norm(v):
    return math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])


def _dot(u, v):
    return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]


def _cross(u, v):
    return (
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    )


def _angle(u, v):
    nu, nv = _norm(u), _norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    c = _dot(u, v) / (nu * nv)
    c = min(1.0, max(-1.0, c))
    return math.acos(c)


def frame_volume(frame) -> float:
    out = 1.0
    for axis in range(3):
        vals = [frame[j][axis] for j in range(16)]
        out *= max(vals) - min(vals)
    return out


def frame_angles(frame) -> list[float]:
    up = (0.0, 1.0, 0.0)
    return [
        _angle(_sub(frame[LSHOULDER], frame[NECK]), _sub(frame[RSHOULDER], frame[NECK])),
        _angle(_sub(frame[NECK], frame[RSHOULDER]), _sub(frame[LSHOULDER], frame[RSHOULDER])),
        _angle(_sub(frame[NECK], frame[LSHOULDER]), _sub(frame[RSHOULDER], frame[LSHOULDER])),
        _angle(up, _sub(frame[SPINE], frame[NECK])),
        _angle(_sub(frame[HEAD], frame[NECK]), _sub(frame[SPINE], frame[NECK])),
    ]


def frame_distances(frame) -> list[float]:
    pairs = ((RHAND, ROOT), (LHAND, ROOT), (RFOOT, ROOT), (LFOOT, ROOT))
    return [_norm(_sub(frame[a], frame[b])) for a, b in pairs]


def frame_areas(frame) -> list[float]:
    tris = ((LHAND, RHAND, NECK), (LFOOT, RFOOT, ROOT))
    return [
        0.5 * _norm(_cross(_sub(frame[a], frame[c]), _sub(frame[b], frame[c])))
        for a, b, c in tris
    ]


def first_derivative(rows, dt):
    """rows: list of 3-tuples; central differences, one-sided at the ends."""
    n = len(rows)
    out = []
    for k in range(n):
        if k == 0:
            d = tuple((rows[1][i] - rows[0][i]) / dt for i in range(3))
        elif k == n - 1:
            d = tuple((rows[-1][i] - rows[-2][i]) / dt for i in range(3))
        else:
            d = tuple((rows[k + 1][i] - rows[k - 1][i]) / (2.0 * dt) for i in range(3))
        out.append(d)
    return out


def derivative_magnitudes(rows, fps):
    dt = 1.0 / fps
    d1 = first_derivative(rows, dt)
    d2 = first_derivative(d1, dt)
    d3 = first_derivative(d2, dt)
    return [_norm(v) for v in d1], [_norm(v) for v in d2], [_norm(v) for v in d3]


def plateau_minima(y) -> list[int]:
    n = len(y)
    mins = []
    start = 0
    while start < n:
        end = start
        while end + 1 < n and y[end + 1] == y[start]:
            end += 1
        interior = start > 0 and end < n - 1
        if interior and y[start - 1] > y[start] and y[end + 1] > y[start]:
            mins.append(start + (end - start) // 2)
        start = end + 1
    return mins


def foot_strikes_one_foot(traj, fps, theta_v=0.05, theta_gap=None):
    if theta_gap is None:
        theta_gap = math.ceil(0.25 * fps)
    heights = [p[1] for p in traj]
    speeds = [_norm(v) for v in first_derivative(traj, 1.0 / fps)]
    kept = []
    for k in plateau_minima(heights):
        if speeds[k] >= theta_v:
            continue
        if kept and k - kept[-1] < theta_gap:
            if heights[k] < heights[kept[-1]]:
                kept[-1] = k
        else:
            kept.append(k)
    return kept


def gait_cycle_time(frames, fps) -> float:
    tau = len(frames)
    intervals = []
    if tau >= 3:
        for foot in (LFOOT, RFOOT):
            strikes = foot_strikes_one_foot([f[foot] for f in frames], fps)
            for a, b in zip(strikes, strikes[1:]):
                intervals.append(b - a)
    if not intervals:
        return tau / fps
    return (sum(intervals) / len(intervals)) / fps


def gait_features(frames_array: np.ndarray, fps: float) -> np.ndarray:
    """The full 29-dim feature vector, computed feature by feature with loops."""
    frames = [[tuple(frames_array[k, j]) for j in range(16)] for k in range(len(frames_array))]
    tau = len(frames)

    def mean(vals):
        return sum(vals) / len(vals)

    per_frame_angles = [frame_angles(f) for f in frames]
    per_frame_dists = [frame_distances(f) for f in frames]
    per_frame_areas = [frame_areas(f) for f in frames]
    out = [mean([frame_volume(f) for f in frames])]
    for i in range(5):
        out.append(mean([a[i] for a in per_frame_angles]))
    for i in range(4):
        out.append(mean([d[i] for d in per_frame_dists]))
    out.append(max(_norm(_sub(f[LFOOT], f[RFOOT])) for f in frames))
    for i in range(2):
        out.append(mean([a[i] for a in per_frame_areas]))
    for joint in (LHAND, RHAND, HEAD, LFOOT, RFOOT):
        traj = [f[joint] for f in frames]
        speed, accel, jerk = derivative_magnitudes(traj, fps)
        out.extend([mean(speed), mean(accel), mean(jerk)])
    out.append(gait_cycle_time(frames, fps))
    assert len(out) == 29
    return np.array(out)
