"""Bounding functions over cubes of angular velocities.

For a cube B every event's warped position is confined to a disc: the
rotated ray stays inside a cone around the ray rotated by the cube centre,
and the cone's image is an ellipse enclosed by a disc. The discs feed a
pixel-wise bound for kernel images and an assignment-style bound for count
images; together with lower bounds on the mean pixel value they give an
upper bound on the contrast over B.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from itertools import product
from typing import Iterable

import numpy as np

from .events import CameraIntrinsics, Event, EventWindow
from .image import KernelSpec, EventImage, bin_pixels, variance_from_sums
from .warp import MIN_DEPTH, pixel_rays, rotate

SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True, eq=False)
class SearchCube:
    centre: np.ndarray
    half_width: float

    def __post_init__(self):
        c = np.asarray(self.centre, dtype=float).reshape(3)
        c.setflags(write=False)
        object.__setattr__(self, "centre", c)
        if self.half_width < 0:
            raise ValueError("half-width must be non-negative")

    @classmethod
    def singleton(cls, omega) -> "SearchCube":
        return cls(omega, 0.0)

    @property
    def corners(self) -> tuple[np.ndarray, np.ndarray]:
        """Opposite corners ``(centre - h, centre + h)``."""
        return self.centre - self.half_width, self.centre + self.half_width

    def subdivide(self) -> list["SearchCube"]:
        h = 0.5 * self.half_width
        return [SearchCube(self.centre + h * np.array(s), h) for s in product((-1.0, 1.0), repeat=3)]

    def min_norm(self) -> float:
        """Distance from the origin to the nearest point of the cube."""
        lo, hi = self.corners
        return float(np.linalg.norm(np.clip(0.0, lo, hi)))

    def contains(self, omega, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(np.asarray(omega) - self.centre) <= self.half_width + tol))

    def sample(self, n: int, rng=None) -> np.ndarray:
        rng = np.random.default_rng(rng)
        return self.centre + rng.uniform(-self.half_width, self.half_width, (n, 3))


@dataclass(frozen=True)
class UncertaintyDisc:
    centre: np.ndarray
    radius: float
    semi_major: float
    semi_minor: float
    major_dir: np.ndarray
    on_image: bool
    valid: bool


@dataclass(frozen=True, eq=False)
class DiscSet:
    """Per-event discs for one cube, stored column-wise."""

    centres: np.ndarray  # (N, 2)
    radii: np.ndarray  # (N,), inf for invalid cones
    semi_major: np.ndarray
    semi_minor: np.ndarray
    major_dir: np.ndarray  # (N, 2)
    on_image: np.ndarray  # (N,) bool
    valid: np.ndarray  # (N,) bool

    def __len__(self) -> int:
        return len(self.radii)

    @classmethod
    def from_circles(cls, centres, radii, intr: CameraIntrinsics) -> "DiscSet":
        """Discs given directly as circles (ellipse fields set to the circle)."""
        centres = np.atleast_2d(np.asarray(centres, dtype=float)).reshape(-1, 2)
        radii = np.asarray(radii, dtype=float).reshape(-1)
        valid = np.isfinite(radii)
        with np.errstate(invalid="ignore"):
            on_image = (
                valid
                & (centres[:, 0] - radii >= -0.5) & (centres[:, 0] + radii < intr.width - 0.5)
                & (centres[:, 1] - radii >= -0.5) & (centres[:, 1] + radii < intr.height - 0.5)
            )
        major = np.tile([1.0, 0.0], (len(radii), 1))
        return cls(centres, radii, radii.copy(), radii.copy(), major, on_image, valid)

    def __getitem__(self, i: int) -> UncertaintyDisc:
        return UncertaintyDisc(
            self.centres[i].copy(), float(self.radii[i]), float(self.semi_major[i]), float(self.semi_minor[i]),
            self.major_dir[i].copy(), bool(self.on_image[i]), bool(self.valid[i]),
        )


def rotation_uncertainty(cube: SearchCube, t):
    """Half-angle of the cone swept by a ray rotated for time t over the cube."""
    p, q = cube.corners
    t = np.asarray(t, dtype=float)
    alpha = 0.5 * np.linalg.norm(q - p) * t
    return float(alpha) if alpha.ndim == 0 else alpha


def project_cones(cube: SearchCube, xy, t, intr: CameraIntrinsics) -> DiscSet:
    """Enclosing discs of the projected uncertainty cones of many events.

    The cone axis is the event ray rotated by the cube centre. Its rim rays
    in the plane of the axis and the optical axis project to the ends of the
    ellipse's major axis; the disc is centred at their midpoint with the
    semi-major length as radius.
    """
    xy = np.atleast_2d(np.asarray(xy, dtype=float))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    alpha = rotation_uncertainty(cube, t)
    v = rotate(pixel_rays(xy, intr), t[:, None] * cube.centre)
    vnorm = np.sqrt(np.einsum("ij,ij->i", v, v))
    ux, uy, uz = (v / vnorm[:, None]).T

    # major-axis direction u x (u x n) with n the optical axis, and the
    # minor-axis direction y x n; any orthogonal pair when u is along n
    yx, yy, yz = ux * uz, uy * uz, uz * uz - 1.0
    y_len = np.sqrt(yx * yx + yy * yy + yz * yz)
    axial = y_len < 1e-12
    y_len[axial] = 1.0
    y_hat = np.stack([yx, yy, yz], axis=1) / y_len[:, None]
    y_hat[axial] = (1.0, 0.0, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        zx, zy = y_hat[:, 1], -y_hat[:, 0]
        z_len = np.hypot(zx, zy)
        z_hat = np.stack([zx / z_len, zy / z_len, np.zeros_like(zx)], axis=1)
    z_hat[axial] = (0.0, 1.0, 0.0)

    # rim rays at exactly alpha from the axis, scaled to the length of v
    cos_a = np.cos(alpha)[:, None]
    sin_a = (np.sin(alpha) * vnorm)[:, None]
    ya, yb = cos_a * v - sin_a * y_hat, cos_a * v + sin_a * y_hat
    za, zb = cos_a * v - sin_a * z_hat, cos_a * v + sin_a * z_hat
    min_depth = np.minimum(np.minimum(ya[:, 2], yb[:, 2]), np.minimum(za[:, 2], zb[:, 2]))
    valid = (alpha < 0.5 * np.pi) & (min_depth > MIN_DEPTH)

    with np.errstate(divide="ignore", invalid="ignore"):
        pa, pb = ya[:, :2] / ya[:, 2:], yb[:, :2] / yb[:, 2:]
        qa, qb = za[:, :2] / za[:, 2:], zb[:, :2] / zb[:, 2:]
        centre_n = 0.5 * (pa + pb)
        a_n = 0.5 * np.linalg.norm(pa - pb, axis=1)
        b_n = 0.5 * np.linalg.norm(qa - qb, axis=1)
        # for fx != fy the pixel-space ellipse is stretched; scaling by the
        # larger focal length keeps the disc enclosing
        f_max = max(intr.fx, intr.fy)
        centres = np.stack([intr.fx * centre_n[:, 0] + intr.cx, intr.fy * centre_n[:, 1] + intr.cy], axis=1)
        semi_major = a_n * f_max
        semi_minor = np.minimum(b_n * f_max, semi_major)
        major = (pb - pa) * np.array([intr.fx, intr.fy])
        major_len = np.linalg.norm(major, axis=1, keepdims=True)
        major_dir = np.where(major_len > 0, major / np.where(major_len > 0, major_len, 1.0), [1.0, 0.0])

    radii = np.where(valid, semi_major, np.inf)
    centres = np.where(valid[:, None], centres, np.nan)
    half = 0.5
    with np.errstate(invalid="ignore"):
        on_image = (
            valid
            & (centres[:, 0] - radii >= -half) & (centres[:, 0] + radii < intr.width - half)
            & (centres[:, 1] - radii >= -half) & (centres[:, 1] + radii < intr.height - half)
        )
    return DiscSet(centres, radii, semi_major, semi_minor, major_dir, on_image, valid)


def project_cone(cube: SearchCube, event, intr: CameraIntrinsics) -> UncertaintyDisc:
    if isinstance(event, Event):
        u, t = event.u, event.t
    else:
        u, t = event
    return project_cones(cube, np.asarray(u, dtype=float)[None], [t], intr)[0]


def window_discs(cube: SearchCube, window: EventWindow, intr: CameraIntrinsics) -> DiscSet:
    return project_cones(cube, window.xy, window.t, intr)


# ---------------------------------------------------------------------------
# disc/pixel enumeration


def _box_pairs(c0, c1, r0, r1, width: int):
    """Enumerate (owner, col, row) for integer boxes [c0, c1] x [r0, r1]."""
    nc = np.maximum(c1 - c0 + 1, 0)
    nr = np.maximum(r1 - r0 + 1, 0)
    counts = nc * nr
    total = int(counts.sum())
    owner = np.repeat(np.arange(len(counts)), counts)
    start = np.cumsum(counts) - counts
    local = np.arange(total) - start[owner]
    w = nc[owner]
    cols = c0[owner] + local % np.maximum(w, 1)
    rows = r0[owner] + local // np.maximum(w, 1)
    return owner, cols, rows


def _covers_sensor(discs: DiscSet, intr: CameraIntrinsics, reach) -> np.ndarray:
    """Discs whose ``reach``-inflated radius covers every pixel centre."""
    far_x = np.maximum(np.abs(discs.centres[:, 0]), np.abs(discs.centres[:, 0] - (intr.width - 1)))
    far_y = np.maximum(np.abs(discs.centres[:, 1]), np.abs(discs.centres[:, 1] - (intr.height - 1)))
    with np.errstate(invalid="ignore"):
        return ~discs.valid | (np.hypot(far_x, far_y) <= reach)


def _pixel_boxes(centres, reach, intr: CameraIntrinsics):
    c0 = np.clip(np.ceil(centres[:, 0] - reach), 0, intr.width).astype(np.int64)
    c1 = np.clip(np.floor(centres[:, 0] + reach), -1, intr.width - 1).astype(np.int64)
    r0 = np.clip(np.ceil(centres[:, 1] - reach), 0, intr.height).astype(np.int64)
    r1 = np.clip(np.floor(centres[:, 1] + reach), -1, intr.height - 1).astype(np.int64)
    return c0, c1, r0, r1


# ---------------------------------------------------------------------------
# kernel images


def pixel_upper_continuous(x, discs: DiscSet, kernel: KernelSpec = KernelSpec()):
    """Upper bound on the kernel image at pixel centre(s) ``x``.

    Each disc contributes the kernel at the distance from ``x`` to the disc;
    invalid cones may reach any pixel and contribute the kernel peak.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    valid = discs.valid
    d = np.linalg.norm(x[:, None, :] - discs.centres[None, valid], axis=2)
    out = kernel(np.maximum(d - discs.radii[None, valid], 0.0)).sum(axis=1) + np.count_nonzero(~valid)
    return float(out[0]) if single else out


def upper_image_continuous(discs: DiscSet, intr: CameraIntrinsics, kernel: KernelSpec = KernelSpec()) -> np.ndarray:
    """Pixel-wise upper bound image over all pixels, shape (H, W)."""
    R = kernel.radius
    reach = discs.radii + R
    full = _covers_sensor(discs, intr, discs.radii)
    part = ~full
    c = discs.centres[part]
    owner, cols, rows = _box_pairs(*_pixel_boxes(c, reach[part], intr), intr.width)
    d = np.hypot(cols - c[owner, 0], rows - c[owner, 1])
    w = kernel(np.maximum(d - discs.radii[part][owner], 0.0))
    img = np.bincount(rows * intr.width + cols, weights=w, minlength=intr.P)
    return (img + np.count_nonzero(full)).reshape(intr.height, intr.width)


def sos_upper_continuous(discs: DiscSet, intr: CameraIntrinsics, kernel: KernelSpec = KernelSpec()) -> float:
    img = upper_image_continuous(discs, intr, kernel)
    return float(np.sum(img * img))


def mean_lower_continuous(discs: DiscSet, intr: CameraIntrinsics, kernel: KernelSpec = KernelSpec()) -> float:
    """Lower bound on the mean kernel-image value: each disc contributes the
    kernel at the farthest distance from the pixel to the disc."""
    R = kernel.radius
    keep = discs.valid & (discs.radii <= R)
    c = discs.centres[keep]
    rad = discs.radii[keep]
    owner, cols, rows = _box_pairs(*_pixel_boxes(c, R - rad, intr), intr.width)
    d = np.hypot(cols - c[owner, 0], rows - c[owner, 1]) + rad[owner]
    return float(kernel(d).sum()) / intr.P


# ---------------------------------------------------------------------------
# count images


@dataclass(frozen=True, eq=False)
class Intersections:
    """Sparse disc/pixel incidence.

    Rows are retained discs (those touching at least one pixel), identified
    by their original disc index in ``rows``. Discs covering the whole
    sensor are kept symbolically in ``full_rows``; the remaining incidences
    are (``pair_row``, ``pair_pixel``) pairs sorted by row then pixel, where
    ``pair_row`` holds original disc indices.
    """

    rows: np.ndarray
    full_rows: np.ndarray
    pair_row: np.ndarray
    pair_pixel: np.ndarray
    width: int
    height: int

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_pixels(self) -> int:
        return self.width * self.height

    def column_sums(self) -> np.ndarray:
        return np.bincount(self.pair_pixel, minlength=self.n_pixels) + len(self.full_rows)

    def to_dense(self) -> np.ndarray:
        """Boolean (n_rows, P) matrix with rows in ``self.rows`` order."""
        pos = {int(r): k for k, r in enumerate(self.rows)}
        T = np.zeros((self.n_rows, self.n_pixels), dtype=bool)
        if len(self.pair_row):
            T[[pos[int(r)] for r in self.pair_row], self.pair_pixel] = True
        for r in self.full_rows:
            T[pos[int(r)]] = True
        return T

    def column(self, j: int) -> frozenset:
        return frozenset(self.pair_row[self.pair_pixel == j].tolist()) | frozenset(self.full_rows.tolist())


def intersections(discs: DiscSet, intr: CameraIntrinsics) -> Intersections:
    """Incidence of discs with pixel squares (closed sets on both sides).

    A zero-radius disc is a point and is assigned to the single pixel that
    owns it under the half-open pixel convention. Invalid cones touch every
    pixel.
    """
    n = len(discs)
    full = _covers_sensor(discs, intr, discs.radii - math.sqrt(0.5))
    point = ~full & (discs.radii == 0)
    blob = ~full & ~point

    pt_idx = np.flatnonzero(point)
    pt_pix = bin_pixels(discs.centres[pt_idx], intr.width, intr.height)
    on = pt_pix >= 0
    pt_idx, pt_pix = pt_idx[on], pt_pix[on]

    b_idx = np.flatnonzero(blob)
    c = discs.centres[b_idx]
    rad = discs.radii[b_idx]
    owner, cols, rows = _box_pairs(*_pixel_boxes(c, rad + 0.5, intr), intr.width)
    dx = np.maximum(np.abs(cols - c[owner, 0]) - 0.5, 0.0)
    dy = np.maximum(np.abs(rows - c[owner, 1]) - 0.5, 0.0)
    hit = dx * dx + dy * dy <= rad[owner] ** 2
    bl_row = b_idx[owner[hit]]
    bl_pix = rows[hit] * intr.width + cols[hit]

    pair_row = np.concatenate([pt_idx, bl_row])
    pair_pixel = np.concatenate([pt_pix, bl_pix])
    order = np.lexsort((pair_pixel, pair_row))
    pair_row, pair_pixel = pair_row[order], pair_pixel[order]
    full_rows = np.flatnonzero(full)
    touched = np.zeros(n, dtype=bool)
    touched[pair_row] = True
    touched[full_rows] = True
    return Intersections(np.flatnonzero(touched), full_rows, pair_row, pair_pixel, intr.width, intr.height)


def pixel_upper_discrete(T: Intersections) -> EventImage:
    """Number of discs touching each pixel."""
    return EventImage(T.column_sums().reshape(T.height, T.width), "discrete")


class DominantColumns:
    """Distinct dominant columns of the incidence structure.

    Built either from an ``Intersections`` (columns are identified by a
    representative pixel and materialised lazily) or from explicit sets.
    """

    def __init__(self, densities, n: int, rep_pixels=None, source: Intersections | None = None, sets=None):
        self.densities = np.asarray(densities, dtype=np.int64)
        self.n = int(n)
        self.rep_pixels = rep_pixels
        self._source = source
        self._sets = None if sets is None else tuple(frozenset(s) for s in sets)

    @classmethod
    def from_sets(cls, sets: Iterable[Iterable[int]], n: int | None = None) -> "DominantColumns":
        sets = [frozenset(s) for s in sets]
        if n is None:
            n = len(frozenset().union(*sets)) if sets else 0
        return cls([len(s) for s in sets], n, sets=sets)

    @property
    def columns(self) -> tuple[frozenset, ...]:
        if self._sets is None:
            self._sets = tuple(self._source.column(int(j)) for j in self.rep_pixels)
        return self._sets

    def __len__(self) -> int:
        return len(self.densities)

    def __repr__(self) -> str:
        return f"DominantColumns(n={self.n}, densities={self.densities.tolist()})"


_HASH_CACHE: dict[int, np.ndarray] = {}


def _hash_weights(n: int) -> np.ndarray:
    w = _HASH_CACHE.get(0)
    if w is None or len(w) < n:
        size = max(n, 2 * len(w) if w is not None else 1024)
        w = np.random.default_rng(0x5EED).integers(0, 2**63, size, dtype=np.uint64) * np.uint64(2) + np.uint64(1)
        _HASH_CACHE[0] = w
    return w


def dominant_columns(T: Intersections) -> DominantColumns:
    """Dominant columns by scanning each disc's densest pixels.

    For every disc, the pixels of maximal coverage count inside it are
    candidates; identical columns among candidates are emitted once.
    Columns are compared exactly on their sorted disc lists.
    """
    Hbar = T.column_sums()
    P = T.n_pixels
    cand = np.zeros(P, dtype=bool)
    if len(T.pair_row):
        vals = Hbar[T.pair_pixel]
        starts = np.flatnonzero(np.r_[True, T.pair_row[1:] != T.pair_row[:-1]])
        cmax = np.maximum.reduceat(vals, starts)
        run = np.repeat(np.arange(len(starts)), np.diff(np.r_[starts, len(vals)]))
        cand[T.pair_pixel[vals == cmax[run]]] = True
    if len(T.full_rows):
        cand[Hbar == Hbar.max()] = True
    cand_pix = np.flatnonzero(cand)
    if len(cand_pix) == 0:
        return DominantColumns([], T.n_rows, np.array([], dtype=np.int64), T)

    # partial column of every candidate, as sorted disc lists
    sel = cand[T.pair_pixel]
    pp, pr = T.pair_pixel[sel], T.pair_row[sel]
    order = np.lexsort((pr, pp))
    pp, pr = pp[order], pr[order]
    length = np.bincount(pp, minlength=P)[cand_pix]
    ptr = np.searchsorted(pp, cand_pix)

    # group by (length, hash of disc list), then confirm element-wise
    weights = _hash_weights(int(T.rows.max()) + 1 if T.n_rows else 1)
    h = np.zeros(len(cand_pix), dtype=np.uint64)
    nz = length > 0
    if np.any(nz):
        h[nz] = np.add.reduceat(weights[pr], ptr[nz])
    _, first, inverse = np.unique(np.stack([length.astype(np.uint64), h], axis=1), axis=0,
                                  return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    local = np.arange(len(pr)) - np.repeat(ptr, length) + np.repeat(ptr[first[inverse]], length)
    if np.array_equal(pr, pr[local]):
        rep = np.sort(cand_pix[first])
        return DominantColumns(Hbar[rep], T.n_rows, rep, T)

    reps = []
    for L in np.unique(length):
        group = np.flatnonzero(length == L)
        if L == 0:
            reps.append(cand_pix[group[:1]])
            continue
        mat = pr[ptr[group][:, None] + np.arange(L)]
        _, first = np.unique(mat, axis=0, return_index=True)
        reps.append(cand_pix[group[first]])
    rep = np.sort(np.concatenate(reps))
    return DominantColumns(Hbar[rep], T.n_rows, rep, T)


def sos_upper_discrete(columns: DominantColumns) -> int:
    """Greedy optimum of the relaxed assignment: fill the quota of N discs
    from the densest columns, the last one partially."""
    n = columns.n
    if n == 0:
        return 0
    d = np.sort(columns.densities)[::-1]
    cs = np.cumsum(d)
    if len(d) == 0 or cs[-1] < n:
        raise ValueError("dominant columns do not cover every disc")
    gamma = int(np.searchsorted(cs, n, side="left"))
    taken = int(cs[gamma - 1]) if gamma else 0
    return int(np.sum(d[:gamma] ** 2)) + (n - taken) ** 2


def iqp_exact(columns, n: int | None = None, max_discs: int = 12) -> int:
    """Exact optimum of the assignment program by exhaustive search.

    Enumerates set partitions of the discs whose blocks each fit inside some
    column; merging blocks of the same column never hurts, so the best such
    partition is the optimum. Exponential; meant as a test oracle.
    """
    sets = columns.columns if isinstance(columns, DominantColumns) else [frozenset(s) for s in columns]
    discs = sorted(frozenset().union(*sets)) if sets else []
    if n is not None and n != len(discs):
        raise ValueError("some disc is not covered by any column")
    m = len(discs)
    if m > max_discs:
        raise ValueError(f"instance too large for exhaustive search ({m} > {max_discs} discs)")
    if m == 0:
        return 0
    bit = {d: 1 << k for k, d in enumerate(discs)}
    feasible = np.zeros(1 << m, dtype=bool)
    for s in sets:
        mask = sum(bit[d] for d in s)
        sub = mask
        while True:
            feasible[sub] = True
            if sub == 0:
                break
            sub = (sub - 1) & mask
    best = 0
    blocks: list[int] = []
    sizes: list[int] = []

    def search(i: int, value: int):
        nonlocal best
        if i == m:
            best = max(best, value)
            return
        # optimistic completion: all remaining discs join the largest block
        rest = m - i
        top = max(sizes, default=0)
        if value - top * top + (top + rest) ** 2 <= best:
            return
        b = 1 << i
        for k in range(len(blocks)):
            if feasible[blocks[k] | b]:
                blocks[k] |= b
                sizes[k] += 1
                search(i + 1, value + 2 * sizes[k] - 1)
                sizes[k] -= 1
                blocks[k] ^= b
        blocks.append(b)
        sizes.append(1)
        search(i + 1, value + 1)
        blocks.pop()
        sizes.pop()

    search(0, 0)
    return best


def mean_lower_discrete(discs: DiscSet, P: int) -> float:
    """Fraction of pixels' worth of events guaranteed to land on the sensor."""
    return np.count_nonzero(discs.on_image) / P


def contrast_upper(
    cube: SearchCube,
    window: EventWindow,
    intr: CameraIntrinsics,
    mode: str = "discrete",
    kernel: KernelSpec | None = None,
) -> float:
    """Upper bound on the contrast over every angular velocity in the cube."""
    discs = window_discs(cube, window, intr)
    return contrast_upper_from_discs(discs, intr, mode, kernel)


def contrast_upper_from_discs(discs: DiscSet, intr: CameraIntrinsics, mode: str = "discrete", kernel=None) -> float:
    P = intr.P
    if mode == "discrete":
        S = sos_upper_discrete(dominant_columns(intersections(discs, intr)))
        return variance_from_sums(S, int(np.count_nonzero(discs.on_image)), P)
    if mode == "continuous":
        kernel = kernel or KernelSpec()
        S = sos_upper_continuous(discs, intr, kernel)
        mu = mean_lower_continuous(discs, intr, kernel)
        return S / P - mu * mu
    raise ValueError(f"unknown mode {mode!r}")


def write_disc_csv(discs: DiscSet, path) -> None:
    """Diagnostic dump of one cube's discs."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["event", "c_x", "c_y", "rho", "a", "b", "on_image", "valid"])
        for i in range(len(discs)):
            w.writerow([
                i, repr(float(discs.centres[i, 0])), repr(float(discs.centres[i, 1])), repr(float(discs.radii[i])),
                repr(float(discs.semi_major[i])), repr(float(discs.semi_minor[i])),
                int(discs.on_image[i]), int(discs.valid[i]),
            ])
