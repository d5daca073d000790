"""Event stream data model, plain-text ingestion, windowing and synthesis."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

# out-of-order timestamps within this tolerance are silently re-sorted
JITTER_TOLERANCE = 1e-6


class EventFormatError(ValueError):
    """Raised for malformed event, calibration or ground-truth files."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class Event(NamedTuple):
    u: tuple[float, float]
    t: float
    p: int


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    # radial-tangential coefficients (k1, k2, p1, p2, k3)
    distortion: tuple[float, float, float, float, float] = (0.0, 0.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if self.width < 1 or self.height < 1:
            raise ValueError("sensor size must be at least 1x1")

    @property
    def P(self) -> int:
        return self.width * self.height

    @property
    def K(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    def contains(self, xy: np.ndarray) -> np.ndarray:
        """Mask of positions inside [0, W) x [0, H)."""
        xy = np.asarray(xy, dtype=float)
        return (
            (xy[..., 0] >= 0) & (xy[..., 0] < self.width) & (xy[..., 1] >= 0) & (xy[..., 1] < self.height)
        )


@dataclass(frozen=True, eq=False)
class EventWindow:
    """A time-rebased chunk of events stored column-wise.

    ``xy`` is (N, 2) pixel positions, ``t`` is (N,) seconds in ``[0, t_max]``
    and ``p`` is (N,) polarity in {-1, +1}.
    """

    xy: np.ndarray
    t: np.ndarray
    p: np.ndarray
    t_max: float
    source_offset: float = 0.0

    def __post_init__(self):
        xy = np.ascontiguousarray(self.xy, dtype=float).reshape(-1, 2)
        t = np.ascontiguousarray(self.t, dtype=float).reshape(-1)
        p = np.ascontiguousarray(self.p, dtype=np.int8).reshape(-1)
        if len(t) == 0:
            raise ValueError("event window must be non-empty")
        if not (len(xy) == len(t) == len(p)):
            raise ValueError("xy, t and p lengths differ")
        if np.any(np.diff(t) < 0):
            raise ValueError("timestamps must be non-decreasing")
        if t[0] < 0 or t[-1] > self.t_max:
            raise ValueError("timestamps must lie in [0, t_max]")
        for arr in (xy, t, p):
            arr.setflags(write=False)
        object.__setattr__(self, "xy", xy)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "p", p)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def events(self) -> list[Event]:
        return [Event((float(x), float(y)), float(t), int(p)) for (x, y), t, p in zip(self.xy, self.t, self.p)]

    @classmethod
    def from_events(cls, events: Sequence[Event], t_max: float | None = None, source_offset: float = 0.0):
        xy, t, p = events_to_arrays(events)
        if t_max is None:
            t_max = float(t[-1]) if len(t) else 0.0
        return cls(xy, t, p, t_max, source_offset)


@dataclass(frozen=True, eq=False)
class GroundTruthTrack:
    times: np.ndarray
    omegas: np.ndarray = field(repr=False)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).reshape(-1)
        omegas = np.asarray(self.omegas, dtype=float).reshape(-1, 3)
        if len(times) != len(omegas):
            raise ValueError("times and omegas lengths differ")
        if np.any(np.diff(times) <= 0):
            raise ValueError("ground-truth timestamps must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "omegas", omegas)

    def __len__(self) -> int:
        return len(self.times)

    def nearest_index(self, t: float) -> int:
        i = int(np.searchsorted(self.times, t))
        if i == 0:
            return 0
        if i == len(self.times):
            return len(self.times) - 1
        return i if self.times[i] - t < t - self.times[i - 1] else i - 1

    def interpolate(self, t: float) -> np.ndarray:
        return np.array([np.interp(t, self.times, self.omegas[:, k]) for k in range(3)])


def events_to_arrays(events: Sequence[Event]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = len(events)
    xy = np.empty((n, 2))
    t = np.empty(n)
    p = np.empty(n, dtype=np.int8)
    for k, e in enumerate(events):
        xy[k] = e.u
        t[k] = e.t
        p[k] = e.p
    return xy, t, p


def _content_lines(lines: Iterable[str]):
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield lineno, line.split()


def parse_events(lines: Iterable[str] | str, intrinsics: CameraIntrinsics | None = None) -> list[Event]:
    """Parse ``t x y p`` lines into events.

    Polarity 0 maps to -1. Timestamps running backwards by at most
    ``JITTER_TOLERANCE`` are re-sorted; larger reversals raise. When
    ``intrinsics`` is given, positions outside the sensor raise.
    """
    if isinstance(lines, str):
        lines = lines.splitlines()
    events = []
    latest = -math.inf
    jittered = False
    for lineno, fields in _content_lines(lines):
        if len(fields) != 4:
            raise EventFormatError(f"expected 4 fields 't x y p', got {len(fields)}", lineno)
        try:
            t, x, y = float(fields[0]), float(fields[1]), float(fields[2])
            p = int(fields[3])
        except ValueError as exc:
            raise EventFormatError(str(exc), lineno) from None
        if not all(math.isfinite(v) for v in (t, x, y)):
            raise EventFormatError("non-finite value", lineno)
        if t < 0:
            raise EventFormatError(f"negative timestamp {t}", lineno)
        if p not in (-1, 0, 1):
            raise EventFormatError(f"polarity must be 0/1 or -1/+1, got {p}", lineno)
        if intrinsics is not None and not (0 <= x < intrinsics.width and 0 <= y < intrinsics.height):
            raise EventFormatError(f"position ({x}, {y}) outside the sensor", lineno)
        if t < latest:
            if latest - t > JITTER_TOLERANCE:
                raise EventFormatError(f"timestamp {t} decreases by more than {JITTER_TOLERANCE} s", lineno)
            jittered = True
        latest = max(latest, t)
        events.append(Event((x, y), t, 1 if p == 1 else -1))
    if jittered:
        events.sort(key=lambda e: e.t)
    return events


def serialize_events(events: Iterable[Event]) -> str:
    out = []
    for e in events:
        out.append(f"{e.t!r} {e.u[0]!r} {e.u[1]!r} {1 if e.p > 0 else 0}\n")
    return "".join(out)


def load_events(path, intrinsics: CameraIntrinsics | None = None, undistort: bool = False) -> list[Event]:
    with open(path) as fh:
        events = parse_events(fh, intrinsics if not undistort else None)
    if undistort:
        if intrinsics is None:
            raise ValueError("undistortion requires intrinsics")
        xy, t, p = events_to_arrays(events)
        xy = undistort_points(xy, intrinsics)
        events = [Event((float(a), float(b)), e.t, e.p) for (a, b), e in zip(xy, events)]
    return events


def save_events(path, events: Iterable[Event]) -> None:
    Path(path).write_text(serialize_events(events))


_CALIB_KEYS = ("fx", "fy", "cx", "cy", "width", "height")
_DIST_KEYS = ("k1", "k2", "p1", "p2", "k3")


def parse_calibration(text: str) -> CameraIntrinsics:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line or line.startswith("["):
            continue
        for token in line.split():
            key, sep, val = token.partition("=")
            if not sep:
                raise EventFormatError(f"expected key=value, got {token!r}", lineno)
            try:
                values[key.strip().lower()] = float(val)
            except ValueError:
                raise EventFormatError(f"bad number for {key!r}: {val!r}", lineno) from None
    missing = [k for k in _CALIB_KEYS if k not in values]
    if missing:
        raise EventFormatError(f"calibration missing keys: {', '.join(missing)}")
    dist = tuple(values.get(k, 0.0) for k in _DIST_KEYS)
    return CameraIntrinsics(
        values["fx"], values["fy"], values["cx"], values["cy"],
        int(values["width"]), int(values["height"]), dist,
    )


def serialize_calibration(intr: CameraIntrinsics) -> str:
    lines = [
        f"fx={intr.fx!r}", f"fy={intr.fy!r}", f"cx={intr.cx!r}", f"cy={intr.cy!r}",
        f"width={intr.width}", f"height={intr.height}",
    ]
    if any(intr.distortion):
        lines += [f"{k}={v!r}" for k, v in zip(_DIST_KEYS, intr.distortion)]
    return "\n".join(lines) + "\n"


def load_calibration(path) -> CameraIntrinsics:
    return parse_calibration(Path(path).read_text())


def parse_ground_truth(lines: Iterable[str] | str) -> GroundTruthTrack:
    if isinstance(lines, str):
        lines = lines.splitlines()
    times, omegas = [], []
    for lineno, fields in _content_lines(lines):
        if len(fields) != 4:
            raise EventFormatError(f"expected 4 fields 't wx wy wz', got {len(fields)}", lineno)
        try:
            vals = [float(f) for f in fields]
        except ValueError as exc:
            raise EventFormatError(str(exc), lineno) from None
        if times and vals[0] <= times[-1]:
            raise EventFormatError("ground-truth timestamps must be strictly increasing", lineno)
        times.append(vals[0])
        omegas.append(vals[1:])
    return GroundTruthTrack(np.array(times), np.array(omegas).reshape(-1, 3))


def serialize_ground_truth(track: GroundTruthTrack) -> str:
    return "".join(f"{t!r} {w[0]!r} {w[1]!r} {w[2]!r}\n" for t, w in zip(track.times.tolist(), track.omegas.tolist()))


def load_ground_truth(path) -> GroundTruthTrack:
    with open(path) as fh:
        return parse_ground_truth(fh)


def undistort_points(xy: np.ndarray, intr: CameraIntrinsics, iterations: int = 20) -> np.ndarray:
    """Invert the radial-tangential model by fixed-point iteration."""
    k1, k2, p1, p2, k3 = intr.distortion
    xy = np.asarray(xy, dtype=float)
    xd = (xy[:, 0] - intr.cx) / intr.fx
    yd = (xy[:, 1] - intr.cy) / intr.fy
    x, y = xd.copy(), yd.copy()
    for _ in range(iterations):
        r2 = x * x + y * y
        radial = 1 + k1 * r2 + k2 * r2**2 + k3 * r2**3
        dx = 2 * p1 * x * y + p2 * (r2 + 2 * x * x)
        dy = p1 * (r2 + 2 * y * y) + 2 * p2 * x * y
        x = (xd - dx) / radial
        y = (yd - dy) / radial
    return np.stack([x * intr.fx + intr.cx, y * intr.fy + intr.cy], axis=1)


def split_windows(events, window: float = 0.010) -> list[EventWindow]:
    """Cut a time-ordered stream into contiguous fixed-duration windows.

    Window k covers ``[k*window, (k+1)*window)`` of the original clock and
    is rebased to start at 0. Empty windows are omitted.
    """
    if window <= 0:
        raise ValueError("window must be positive")
    if isinstance(events, EventWindow):
        xy, t, p = events.xy, events.t + events.source_offset, events.p
    else:
        if len(events) == 0:
            return []
        xy, t, p = events_to_arrays(events)
    if len(t) == 0:
        return []
    if np.any(np.diff(t) < 0):
        raise ValueError("events must be time-ordered")
    k = np.floor(t / window).astype(np.int64)
    out = []
    starts = np.flatnonzero(np.r_[True, k[1:] != k[:-1]])
    ends = np.r_[starts[1:], len(t)]
    for s, e in zip(starts, ends):
        offset = float(k[s]) * window
        local = np.clip(t[s:e] - offset, 0.0, window)
        out.append(EventWindow(xy[s:e], local, p[s:e], window, offset))
    return out


def pixels_to_bearings(xy: np.ndarray, intr: CameraIntrinsics) -> np.ndarray:
    """Unit bearing vectors of pixel positions."""
    xy = np.atleast_2d(np.asarray(xy, dtype=float))
    b = np.stack([(xy[:, 0] - intr.cx) / intr.fx, (xy[:, 1] - intr.cy) / intr.fy, np.ones(len(xy))], axis=1)
    return b / np.linalg.norm(b, axis=1, keepdims=True)


def random_scene(n_points: int, intr: CameraIntrinsics, rng=None, margin: float = 0.0, integer: bool = True):
    """Random scene bearings whose t = 0 projections fall on the sensor.

    With ``integer`` the projections sit exactly on pixel centres.
    """
    rng = np.random.default_rng(rng)
    lo_x, hi_x = margin, intr.width - 1 - margin
    lo_y, hi_y = margin, intr.height - 1 - margin
    if n_points < 1 or lo_x > hi_x or lo_y > hi_y:
        raise ValueError("margin leaves no room for scene points on the sensor")
    if integer:
        xs = rng.integers(math.ceil(lo_x), math.floor(hi_x) + 1, n_points)
        ys = rng.integers(math.ceil(lo_y), math.floor(hi_y) + 1, n_points)
    else:
        xs = rng.uniform(lo_x, hi_x, n_points)
        ys = rng.uniform(lo_y, hi_y, n_points)
    return pixels_to_bearings(np.stack([xs, ys], axis=1).astype(float), intr)


def synthesize(
    scene: np.ndarray,
    omega_true,
    intr: CameraIntrinsics,
    t_max: float,
    rate: float,
    noise_px: float = 0.0,
    rng=None,
    r_max: float | None = None,
) -> tuple[EventWindow, np.ndarray]:
    """Generate a window of events for a static scene under constant rotation.

    Each scene point emits ``round(rate * t_max)`` events at uniformly random
    times; an event at time t sits at the projection of the point rotated by
    ``R(t; omega)^-1``, so warping it with ``omega`` lands on the point's
    t = 0 projection.
    """
    from .warp import project, rotate

    omega_true = np.asarray(omega_true, dtype=float).reshape(3)
    if rate <= 0:
        raise ValueError("rate must be positive")
    if r_max is not None and np.linalg.norm(omega_true) > r_max:
        raise ValueError("omega_true exceeds r_max")
    rng = np.random.default_rng(rng)
    scene = np.atleast_2d(np.asarray(scene, dtype=float))
    start = project(scene, intr)
    if not np.any(intr.contains(start)):
        raise ValueError("scene projects entirely outside the sensor at t = 0")

    per_point = max(1, int(round(rate * t_max)))
    ts = np.sort(rng.uniform(0.0, t_max, (len(scene), per_point)), axis=1)
    pts = np.repeat(scene, per_point, axis=0)
    ts = ts.reshape(-1)
    moved = rotate(pts, -np.outer(ts, omega_true))
    with np.errstate(divide="ignore", invalid="ignore"):
        xy = project(moved, intr)
    if noise_px > 0:
        xy = xy + rng.normal(0.0, noise_px, xy.shape)
    keep = (moved[:, 2] > 1e-12) & intr.contains(xy)
    order = np.argsort(ts[keep], kind="stable")
    xy, ts = xy[keep][order], ts[keep][order]
    if len(ts) == 0:
        raise ValueError("no synthetic event fell on the sensor")
    p = rng.choice(np.array([-1, 1], dtype=np.int8), len(ts))
    return EventWindow(xy, ts, p, t_max), omega_true
