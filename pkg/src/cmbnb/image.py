"""Event image formation and the contrast / reward objectives."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .events import CameraIntrinsics, EventWindow
from .warp import warp_points


@dataclass(frozen=True)
class KernelSpec:
    sigma: float = 1.0
    # support radius in multiples of sigma
    truncation: float = 6.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("kernel bandwidth must be positive")
        if self.truncation < 3:
            raise ValueError("kernel truncation must be at least 3 sigma")

    @property
    def radius(self) -> float:
        return self.truncation * self.sigma

    def __call__(self, d):
        """Unnormalised Gaussian of distance, zero beyond the support radius."""
        d = np.asarray(d, dtype=float)
        return np.where(d <= self.radius, np.exp(-0.5 * (d / self.sigma) ** 2), 0.0)


@dataclass(frozen=True, eq=False)
class EventImage:
    values: np.ndarray  # (H, W)
    kind: str  # "continuous" | "discrete"

    @property
    def P(self) -> int:
        return self.values.size


def bin_pixels(pos: np.ndarray, width: int, height: int) -> np.ndarray:
    """Flat index of the pixel containing each position, -1 when off-sensor.

    Pixel (c, r) owns ``[c-0.5, c+0.5) x [r-0.5, r+0.5)``.
    """
    with np.errstate(invalid="ignore"):
        col = np.floor(pos[..., 0] + 0.5)
        row = np.floor(pos[..., 1] + 0.5)
        ok = (col >= 0) & (col < width) & (row >= 0) & (row < height)
    idx = np.where(ok, np.where(ok, row, 0) * width + np.where(ok, col, 0), -1)
    return idx.astype(np.int64)


def accumulate_discrete(pos: np.ndarray, width: int, height: int) -> np.ndarray:
    """Count images of warped positions; a leading batch axis is allowed."""
    idx = bin_pixels(pos, width, height)
    P = width * height
    if idx.ndim == 1:
        return np.bincount(idx[idx >= 0], minlength=P).reshape(height, width)
    flat = idx.reshape(idx.shape[0], -1)
    offs = np.arange(flat.shape[0])[:, None] * P
    keep = flat >= 0
    counts = np.bincount((flat + offs)[keep], minlength=P * flat.shape[0])
    return counts.reshape(flat.shape[0], height, width)


def accumulate_gaussian(pos: np.ndarray, width: int, height: int, kernel: KernelSpec) -> np.ndarray:
    """Kernel-sum image of positions evaluated at integer pixel centres.

    ``pos`` is (N, 2) or a batch (M, N, 2); NaN positions are skipped.
    """
    pos = np.asarray(pos, dtype=float)
    batched = pos.ndim == 3
    if not batched:
        pos = pos[None]
    M = pos.shape[0]
    P = width * height
    pos = pos.reshape(-1, 2)
    batch = np.repeat(np.arange(M), len(pos) // M if M else 0)
    finite = np.isfinite(pos).all(axis=1)
    pos, batch = pos[finite], batch[finite]
    R = kernel.radius
    # [p - R, p + R] holds at most floor(2R) + 1 integers
    m = int(math.floor(2 * R)) + 1
    off = np.arange(m)
    base = np.ceil(pos - R).astype(np.int64)
    cols = base[:, 0, None] + off  # (n, m)
    rows = base[:, 1, None] + off
    dx2 = (cols - pos[:, 0, None]) ** 2
    dy2 = (rows - pos[:, 1, None]) ** 2
    s2 = 2.0 * kernel.sigma**2
    gx = np.where((cols >= 0) & (cols < width), np.exp(-dx2 / s2), 0.0)
    gy = np.where((rows >= 0) & (rows < height), np.exp(-dy2 / s2), 0.0)
    # radial support: per kernel row, the squared horizontal reach left
    reach2 = R * R - dy2
    w = gy[:, :, None] * gx[:, None, :]
    w[dx2[:, None, :] > reach2[:, :, None]] = 0.0
    row_base = batch[:, None] * P + np.clip(rows, 0, height - 1) * width
    flat = row_base[:, :, None] + np.clip(cols, 0, width - 1)[:, None, :]
    img = np.bincount(flat.reshape(-1), weights=w.reshape(-1), minlength=M * P).reshape(M, height, width)
    return img if batched else img[0]


def render_discrete(window: EventWindow, omega, intr: CameraIntrinsics) -> EventImage:
    pos, _ = warp_points(window.xy, window.t, omega, intr)
    return EventImage(accumulate_discrete(pos, intr.width, intr.height), "discrete")


def render_continuous(window: EventWindow, omega, intr: CameraIntrinsics, kernel: KernelSpec = KernelSpec()) -> EventImage:
    # events rotated behind the camera come back as NaN and are skipped
    pos, _ = warp_points(window.xy, window.t, omega, intr)
    return EventImage(accumulate_gaussian(pos, intr.width, intr.height, kernel), "continuous")


def variance_from_sums(sum_sq, total, P: int) -> float:
    """``S/P - (s/P)^2``; exact rational evaluation for integer sums."""
    if isinstance(sum_sq, (int, np.integer)) and isinstance(total, (int, np.integer)):
        return (P * int(sum_sq) - int(total) ** 2) / (P * P)
    return float(sum_sq) / P - (float(total) / P) ** 2


def contrast(image) -> float:
    """Variance of the pixel values."""
    values = image.values if isinstance(image, EventImage) else np.asarray(image)
    if values.size < 1:
        raise ValueError("image has no pixels")
    if np.issubdtype(values.dtype, np.integer):
        v = values.astype(np.int64)
        return variance_from_sums(int((v * v).sum()), int(v.sum()), v.size)
    v = values.astype(float)
    return float(np.mean((v - v.mean()) ** 2))


def reward(image) -> float:
    """Contrast plus the mean of ``exp(-H) + exp(H)`` over pixels."""
    values = image.values if isinstance(image, EventImage) else np.asarray(image)
    h = np.minimum(values.astype(float), 700.0)
    return contrast(values) + float(np.mean(np.exp(-h) + np.exp(h)))


def save_image(image: EventImage | np.ndarray, path, contrast_value: float | None = None) -> Path:
    """Write an 8-bit PGM or PNG scaled so the brightest pixel is 255.

    A sidecar ``<path>.txt`` records the scale factor and contrast.
    """
    values = image.values if isinstance(image, EventImage) else np.asarray(image)
    path = Path(path)
    peak = float(values.max()) if values.size else 0.0
    scale = 255.0 / peak if peak > 0 else 1.0
    img8 = np.clip(np.round(values.astype(float) * scale), 0, 255).astype(np.uint8)
    suffix = path.suffix.lower()
    if suffix == ".pgm":
        h, w = img8.shape
        path.write_bytes(b"P5\n%d %d\n255\n" % (w, h) + img8.tobytes())
    elif suffix == ".png":
        from PIL import Image

        Image.fromarray(img8, mode="L").save(path)
    else:
        raise ValueError(f"unsupported image extension {path.suffix!r} (use .pgm or .png)")
    if contrast_value is None:
        contrast_value = contrast(values)
    sidecar = path.with_name(path.name + ".txt")
    kind = image.kind if isinstance(image, EventImage) else "unknown"
    sidecar.write_text(f"contrast={contrast_value!r}\nscale={scale!r}\nkind={kind}\n")
    return sidecar


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    m = re.match(rb"P5\s+(\d+)\s+(\d+)\s+(\d+)\s", data)
    if m is None:
        raise ValueError("not a binary PGM")
    w, h = int(m.group(1)), int(m.group(2))
    return np.frombuffer(data[m.end() : m.end() + w * h], dtype=np.uint8).reshape(h, w)
