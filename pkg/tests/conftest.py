import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cmbnb import CameraIntrinsics, random_scene, synthesize

settings.register_profile("repo", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


def quat_rotate(axis_angle, v):
    """Rotate v by the axis-angle vector using unit-quaternion products.

    Deliberately shares nothing with the library's Rodrigues code.
    """
    a = np.asarray(axis_angle, dtype=float)
    v = np.asarray(v, dtype=float)
    th = np.linalg.norm(a)
    if th == 0:
        return v.copy()
    w, xyz = np.cos(th / 2), np.sin(th / 2) * a / th

    def mul(p, q):
        pw, pv = p
        qw, qv = q
        return pw * qw - pv @ qv, pw * qv + qw * pv + np.cross(pv, qv)

    _, out = mul(mul((w, xyz), (0.0, v)), (w, -xyz))
    return out


def quat_matrix(axis_angle):
    return np.stack([quat_rotate(axis_angle, e) for e in np.eye(3)], axis=1)


def oracle_warp(u, t, omega, intr):
    ray = np.array([(u[0] - intr.cx) / intr.fx, (u[1] - intr.cy) / intr.fy, 1.0])
    r = quat_rotate(t * np.asarray(omega, dtype=float), ray)
    return np.array([intr.fx * r[0] / r[2] + intr.cx, intr.fy * r[1] / r[2] + intr.cy])


@pytest.fixture
def cam64():
    return CameraIntrinsics(60.0, 60.0, 31.5, 31.5, 64, 64)


@pytest.fixture
def cam32():
    return CameraIntrinsics(40.0, 40.0, 15.5, 15.5, 32, 32)


def small_window(intr, n_points, omega, t_max=0.05, rate=100, seed=0, noise=0.0, margin=2):
    rng = np.random.default_rng(seed)
    scene = random_scene(n_points, intr, rng, margin=margin)
    win, _ = synthesize(scene, omega, intr, t_max, rate, noise, rng)
    return win
