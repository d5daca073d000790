"""Constant angular velocity rotation model and the event warp.

All warps go through ``rotate`` and ``project`` so that the image renderer
and the bounding code agree bit-for-bit when a search cube is a single point.
"""

from __future__ import annotations

import numpy as np

from .events import CameraIntrinsics

SMALL_ANGLE = 1e-9
# rotated rays with depth at or below this are treated as behind the camera
MIN_DEPTH = 1e-12


class BehindCameraError(ValueError):
    """The rotated ray no longer intersects the image plane in front of the camera."""


def skew(v) -> np.ndarray:
    x, y, z = np.asarray(v, dtype=float)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def exp_map(axis_angle) -> np.ndarray:
    """Rotation matrix of an axis-angle vector (Rodrigues)."""
    v = np.asarray(axis_angle, dtype=float).reshape(3)
    theta = float(np.linalg.norm(v))
    S = skew(v)
    if theta < SMALL_ANGLE:
        return np.eye(3) + S + 0.5 * (S @ S)
    return np.eye(3) + (np.sin(theta) / theta) * S + ((1.0 - np.cos(theta)) / theta**2) * (S @ S)


def exp_map_batch(axis_angles) -> np.ndarray:
    """Vectorised ``exp_map`` over the leading axes of an (..., 3) array."""
    v = np.asarray(axis_angles, dtype=float)
    theta = np.linalg.norm(v, axis=-1)
    small = theta < SMALL_ANGLE
    safe = np.where(small, 1.0, theta)
    a = np.where(small, 1.0, np.sin(safe) / safe)
    b = np.where(small, 0.5, (1.0 - np.cos(safe)) / safe**2)
    S = np.zeros(v.shape[:-1] + (3, 3))
    S[..., 0, 1], S[..., 0, 2] = -v[..., 2], v[..., 1]
    S[..., 1, 0], S[..., 1, 2] = v[..., 2], -v[..., 0]
    S[..., 2, 0], S[..., 2, 1] = -v[..., 1], v[..., 0]
    return np.eye(3) + a[..., None, None] * S + b[..., None, None] * (S @ S)


def rotate(vectors, axis_angles) -> np.ndarray:
    """Apply ``exp([a]x)`` to vectors, broadcasting over leading axes.

    Uses the vector form of Rodrigues' formula, falling back to the
    second-order series for angles below ``SMALL_ANGLE``.
    """
    v = np.asarray(vectors, dtype=float)
    a = np.asarray(axis_angles, dtype=float)
    theta = np.linalg.norm(a, axis=-1, keepdims=True)
    small = theta < SMALL_ANGLE
    safe = np.where(small, 1.0, theta)
    s = np.where(small, 1.0, np.sin(safe) / safe)
    c = np.where(small, 0.5, (1.0 - np.cos(safe)) / safe**2)
    axv = np.cross(a, v)
    return v + s * axv + c * np.cross(a, axv)


def pixel_rays(xy, intr: CameraIntrinsics) -> np.ndarray:
    """Back-projected rays ``K^-1 [u; 1]`` (depth 1, not normalised)."""
    xy = np.asarray(xy, dtype=float)
    return np.stack(
        [(xy[..., 0] - intr.cx) / intr.fx, (xy[..., 1] - intr.cy) / intr.fy, np.ones(xy.shape[:-1])], axis=-1
    )


def project(rays, intr: CameraIntrinsics) -> np.ndarray:
    """Pinhole projection of rays to pixel coordinates."""
    rays = np.asarray(rays, dtype=float)
    z = rays[..., 2]
    return np.stack([intr.fx * (rays[..., 0] / z) + intr.cx, intr.fy * (rays[..., 1] / z) + intr.cy], axis=-1)


def warp_points(xy, t, omega, intr: CameraIntrinsics) -> tuple[np.ndarray, np.ndarray]:
    """Warp many events to time 0.

    ``omega`` may be a single 3-vector or an (M, 3) batch, in which case
    the result is (M, N, 2). Returns ``(positions, in_front)``; positions of
    events rotated behind the camera are NaN.
    """
    omega = np.asarray(omega, dtype=float)
    rays = pixel_rays(xy, intr)
    t = np.asarray(t, dtype=float)
    if omega.ndim == 1:
        rotated = rotate(rays, t[:, None] * omega)
    else:
        rotated = rotate(rays[None], t[None, :, None] * omega[:, None, :])
    in_front = rotated[..., 2] > MIN_DEPTH
    with np.errstate(divide="ignore", invalid="ignore"):
        pos = project(rotated, intr)
    pos[~in_front] = np.nan
    return pos, in_front


def warp_event(u, t: float, omega, intr: CameraIntrinsics) -> np.ndarray:
    """Position at time 0 of an event seen at ``u`` at time ``t``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    ray = rotate(pixel_rays(np.asarray(u, dtype=float), intr), t * np.asarray(omega, dtype=float))
    if ray[2] <= MIN_DEPTH:
        raise BehindCameraError(f"rotated ray depth {ray[2]:.3g} is not in front of the camera")
    return project(ray, intr)


def warp_ray(u, t: float, omega, intr: CameraIntrinsics) -> np.ndarray:
    """Unit direction of the event's ray after rotation to time 0."""
    ray = rotate(pixel_rays(np.asarray(u, dtype=float), intr), t * np.asarray(omega, dtype=float))
    return ray / np.linalg.norm(ray)
