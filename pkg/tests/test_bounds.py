import csv
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cmbnb import (
    CameraIntrinsics,
    DiscSet,
    DominantColumns,
    KernelSpec,
    SearchCube,
    contrast,
    contrast_upper,
    dominant_columns,
    intersections,
    iqp_exact,
    mean_lower_continuous,
    mean_lower_discrete,
    pixel_upper_continuous,
    pixel_upper_discrete,
    project_cone,
    render_continuous,
    render_discrete,
    rotation_uncertainty,
    sos_upper_continuous,
    sos_upper_discrete,
    warp_event,
)
from cmbnb import bounds as bounds_mod
from cmbnb.bounds import contrast_upper_from_discs, upper_image_continuous, window_discs, write_disc_csv
from cmbnb.solvers import batch_contrast
from cmbnb.warp import warp_points
from conftest import quat_rotate
from oracles import dominant_scan, dense_T, distinct_columns, random_cube, random_window, riqp_bruteforce, sampled_images

CAM8 = CameraIntrinsics(10.0, 10.0, 3.5, 3.5, 8, 8)
CAM16 = CameraIntrinsics(20.0, 20.0, 7.5, 7.5, 16, 16)


# --- cones and discs -------------------------------------------------------------------


def test_rotation_uncertainty_examples():
    assert rotation_uncertainty(SearchCube([1, 2, 3], 0.0), 0.05) == 0.0
    assert rotation_uncertainty(SearchCube(np.zeros(3), 0.1), 0.01) == pytest.approx(0.0017320508, abs=1e-10)


def test_rotation_uncertainty_bounds_the_ray_angle():
    rng = np.random.default_rng(0)
    for _ in range(5):
        cube = random_cube(rng, 0.05, 2.0)
        t = rng.uniform(0.01, 0.5)
        ray = np.append(rng.uniform(-0.5, 0.5, 2), 1.0)
        axis = quat_rotate(t * cube.centre, ray)
        omegas = cube.sample(20000, rng)
        for w in omegas[:2000]:
            r = quat_rotate(t * w, ray)
            ang = math.atan2(np.linalg.norm(np.cross(axis, r)), axis @ r)
            assert ang <= rotation_uncertainty(cube, t) + 1e-12


def test_singleton_cone_is_the_warp():
    rng = np.random.default_rng(1)
    for _ in range(20):
        u, t, w = rng.uniform(0, 16, 2), rng.uniform(0, 0.1), rng.normal(size=3)
        d = project_cone(SearchCube.singleton(w), (u, t), CAM16)
        assert d.radius == 0 and d.valid
        np.testing.assert_array_equal(d.centre, warp_event(u, t, w, CAM16))


def test_axis_aligned_cone_is_a_circle():
    intr = CameraIntrinsics(1.0, 1.0, 0.0, 0.0, 1, 1)
    cube, t = SearchCube(np.zeros(3), 0.3), 0.5
    alpha = rotation_uncertainty(cube, t)
    d = project_cone(cube, ([0.0, 0.0], t), intr)
    assert d.semi_major == pytest.approx(math.tan(alpha), rel=1e-12)
    assert d.semi_minor == pytest.approx(math.tan(alpha), rel=1e-12)
    np.testing.assert_allclose(d.centre, [0.0, 0.0], atol=1e-15)


def test_disc_fields_are_consistent():
    rng = np.random.default_rng(2)
    win = random_window(CAM16, 200, rng)
    discs = window_discs(random_cube(rng, 0.01, 1.0), win, CAM16)
    v = discs.valid
    assert np.all(discs.radii[v] == discs.semi_major[v])
    assert np.all(discs.semi_minor[v] <= discs.semi_major[v] + 1e-12)
    assert np.all(np.isinf(discs.radii[~v]))
    np.testing.assert_allclose(np.linalg.norm(discs.major_dir[v], axis=1), 1.0)


def test_disc_containment_small():
    rng = np.random.default_rng(3)
    cam = CameraIntrinsics(30.0, 36.0, 20.0, 15.0, 40, 30)
    for k in range(25):
        cube = random_cube(rng, 1e-3, 2.0)
        u = np.array([cam.cx, cam.cy]) if k < 3 else rng.uniform(0, [40, 30])
        if k < 3:
            cube = SearchCube(np.zeros(3), cube.half_width)
        t = rng.uniform(0.01, 0.2)
        d = project_cone(cube, (u, t), cam)
        if not d.valid:
            continue
        pos, front = warp_points(np.tile(u, (1, 1)), np.array([t]), cube.sample(2000, rng), cam)
        assert front.all()
        dist = np.linalg.norm(pos[:, 0] - d.centre, axis=1)
        assert dist.max() <= d.radius + 1e-9


def test_behind_camera_cones_are_flagged():
    cube = SearchCube([0.0, 20.0, 0.0], 1.0)
    d = project_cone(cube, ([8.0, 8.0], 0.1), CAM16)
    assert not d.valid and not d.on_image and math.isinf(d.radius)


# --- continuous bounds -----------------------------------------------------------------


def test_pixel_upper_inside_every_disc():
    discs = DiscSet.from_circles([[3, 3], [4, 3.5], [3.2, 2.1]], [2.0, 2.0, 2.0], CAM8)
    assert pixel_upper_continuous([3.5, 3.0], discs) == 3.0


def test_continuous_bounds_collapse_at_singleton():
    rng = np.random.default_rng(4)
    for _ in range(10):
        win = random_window(CAM16, 40, rng)
        w = rng.normal(size=3)
        discs = window_discs(SearchCube.singleton(w), win, CAM16)
        img = render_continuous(win, w, CAM16).values
        np.testing.assert_allclose(upper_image_continuous(discs, CAM16), img, atol=1e-12)
        assert sos_upper_continuous(discs, CAM16) == pytest.approx(float((img**2).sum()), abs=1e-9)
        assert mean_lower_continuous(discs, CAM16) == pytest.approx(img.mean(), abs=1e-12)
        xs = np.array([[3.0, 4.0], [10.0, 2.0]])
        np.testing.assert_allclose(pixel_upper_continuous(xs, discs), [img[4, 3], img[2, 10]], atol=1e-12)


def test_continuous_bounds_dominate_samples():
    rng = np.random.default_rng(5)
    kernel = KernelSpec()
    for _ in range(15):
        win = random_window(CAM16, int(rng.integers(5, 60)), rng)
        cube = random_cube(rng, 1e-3, 1.0)
        discs = window_discs(cube, win, CAM16)
        imgs = sampled_images(win, CAM16, cube.sample(300, rng), kernel)
        upper = upper_image_continuous(discs, CAM16, kernel)
        assert np.all(upper >= imgs.max(axis=0) - 1e-9)
        assert sos_upper_continuous(discs, CAM16) >= (imgs**2).sum(axis=(1, 2)).max() - 1e-9
        assert mean_lower_continuous(discs, CAM16) <= imgs.mean(axis=(1, 2)).min() + 1e-12


def test_offimage_discs_give_zero_sos():
    discs = DiscSet.from_circles([[-30, 4], [50, 50]], [1.0, 2.0], CAM8)
    assert sos_upper_continuous(discs, CAM8) == 0.0
    assert mean_lower_continuous(discs, CAM8) == 0.0


# --- incidence ------------------------------------------------------------------------


def test_point_disc_hits_one_pixel():
    T = intersections(DiscSet.from_circles([[2.0, 5.0]], [0.0], CAM8), CAM8)
    assert T.pair_pixel.tolist() == [5 * 8 + 2] and T.rows.tolist() == [0]


def test_full_cover_disc_and_offimage_disc():
    T = intersections(DiscSet.from_circles([[3.5, 3.5], [40, 40]], [20.0, 1.0], CAM8), CAM8)
    assert T.rows.tolist() == [0]
    assert T.to_dense().tolist() == [[True] * 64]
    assert np.all(T.column_sums() == 1)


def test_tangency_counts():
    # disc reaching exactly the left edge of pixel (3, 0)
    T = intersections(DiscSet.from_circles([[1.0, 0.0]], [1.5], CAM8), CAM8)
    assert 3 in T.pair_pixel.tolist()


def test_intersections_match_definition():
    rng = np.random.default_rng(6)
    for _ in range(10):
        n = int(rng.integers(1, 12))
        discs = DiscSet.from_circles(rng.uniform(-3, 11, (n, 2)), rng.choice([0.0, 0.3, 1.0, 2.5, 15.0], n), CAM8)
        T = intersections(discs, CAM8)
        ref = dense_T(discs, CAM8)
        keep = ref.any(axis=1)
        assert T.rows.tolist() == np.flatnonzero(keep).tolist()
        assert np.array_equal(T.to_dense(), ref[keep])


def test_intersections_against_rasterisation():
    rng = np.random.default_rng(7)
    sub = (np.arange(10) + 0.5) / 10 - 0.5
    edge = np.linspace(-0.5, 0.5, 2001)
    perimeter = np.concatenate([
        np.stack([edge, np.full_like(edge, -0.5)], 1), np.stack([edge, np.full_like(edge, 0.5)], 1),
        np.stack([np.full_like(edge, -0.5), edge], 1), np.stack([np.full_like(edge, 0.5), edge], 1),
    ])
    for _ in range(20):
        n = int(rng.integers(1, 6))
        discs = DiscSet.from_circles(rng.uniform(-1, 9, (n, 2)), rng.uniform(0.05, 3.0, n), CAM8)
        T = intersections(discs, CAM8)
        dense = np.zeros((n, 64), dtype=bool)
        dense[T.rows] = T.to_dense()
        for i in range(n):
            c, r = discs.centres[i], discs.radii[i]
            for j in range(64):
                col, row = j % 8, j // 8
                pts = np.stack(np.meshgrid(col + sub, row + sub), -1).reshape(-1, 2)
                sampled = bool(np.any(np.linalg.norm(pts - c, axis=1) <= r))
                if sampled:
                    assert dense[i, j], "false negative"
                elif dense[i, j]:
                    inside = np.all(np.abs(c - [col, row]) <= 0.5)
                    near = np.linalg.norm(perimeter + [col, row] - c, axis=1).min()
                    assert inside or near <= r + 1e-3


def test_pixel_upper_discrete_examples():
    rng = np.random.default_rng(8)
    for _ in range(10):
        win = random_window(CAM16, 30, rng)
        w = rng.normal(size=3)
        T = intersections(window_discs(SearchCube.singleton(w), win, CAM16), CAM16)
        assert np.array_equal(pixel_upper_discrete(T).values, render_discrete(win, w, CAM16).values)
    discs = DiscSet.from_circles([[3, 3], [3, 3]], [1.2, 1.2], CAM8)
    img = pixel_upper_discrete(intersections(discs, CAM8)).values
    assert set(np.unique(img).tolist()) == {0, 2}
    T = intersections(DiscSet.from_circles(rng.uniform(0, 8, (6, 2)), rng.uniform(0, 2, 6), CAM8), CAM8)
    per_disc = np.bincount(T.pair_row, minlength=6)
    assert pixel_upper_discrete(T).values.sum() == per_disc.sum() <= T.n_rows * per_disc.max()


# --- dominant columns and the assignment bounds -----------------------------------------


def test_dominant_columns_hand_example():
    # disc 0 covers pixels A, B; disc 1 covers B, C
    strip = CameraIntrinsics(1.0, 1.0, 1.0, 0.0, 3, 1)
    discs = DiscSet.from_circles([[0.5, 0.0], [1.5, 0.0]], [0.2, 0.2], strip)
    T = intersections(discs, strip)
    assert T.to_dense().astype(int).tolist() == [[1, 1, 0], [0, 1, 1]]
    cols = dominant_columns(T)
    assert cols.columns == (frozenset({0, 1}),) and cols.densities.tolist() == [2]
    two = DominantColumns.from_sets([{0, 1}, {0}, {1}])
    assert iqp_exact(two) == 4


def test_disjoint_discs_give_singletons():
    discs = DiscSet.from_circles([[0, 0], [4, 4], [7, 1]], [0.0, 0.0, 0.0], CAM8)
    cols = dominant_columns(intersections(discs, CAM8))
    assert sorted(map(sorted, cols.columns)) == [[0], [1], [2]] and cols.densities.tolist() == [1, 1, 1]
    assert sos_upper_discrete(cols) == 3 == iqp_exact(cols)


def check_dominant_invariants(cols, T_dense, rows):
    tcols = {frozenset(rows[np.flatnonzero(T_dense[:, j])].tolist()) for j in range(T_dense.shape[1])}
    sets = cols.columns
    assert len(set(sets)) == len(sets)
    for s in sets:
        assert s in tcols
        assert not any(s < other for other in tcols)
    assert frozenset().union(*sets) == frozenset(rows.tolist())
    assert cols.densities.sum() >= cols.n == len(rows)
    assert [len(s) for s in sets] == cols.densities.tolist()


def test_dominant_columns_match_reference_algorithm():
    rng = np.random.default_rng(9)
    for _ in range(40):
        n = int(rng.integers(1, 25))
        radii = rng.choice([0.0, 0.4, 1.0, 2.0, 3.5, np.inf], n, p=[0.2, 0.2, 0.2, 0.2, 0.15, 0.05])
        discs = DiscSet.from_circles(rng.uniform(-1, 9, (n, 2)), radii, CAM8)
        T = intersections(discs, CAM8)
        if T.n_rows == 0:
            continue
        dense = T.to_dense()
        cols = dominant_columns(T)
        ref = [frozenset(T.rows[sorted(c)].tolist()) for c in dominant_scan(dense)]
        assert sorted(map(sorted, cols.columns)) == sorted(map(sorted, ref))
        check_dominant_invariants(cols, dense, T.rows)


def test_dominant_columns_exact_fallback(monkeypatch):
    # force every equal-length column into one hash bucket
    monkeypatch.setattr(bounds_mod, "_hash_weights", lambda n: np.ones(max(n, 1), dtype=np.uint64))
    rng = np.random.default_rng(10)
    for _ in range(20):
        n = int(rng.integers(2, 20))
        discs = DiscSet.from_circles(rng.uniform(0, 8, (n, 2)), rng.uniform(0, 2.5, n), CAM8)
        T = intersections(discs, CAM8)
        ref = [frozenset(T.rows[sorted(c)].tolist()) for c in dominant_scan(T.to_dense())]
        assert sorted(map(sorted, dominant_columns(T).columns)) == sorted(map(sorted, ref))


def test_iqp_examples():
    assert iqp_exact(DominantColumns.from_sets([{0}, {1}, {2}, {3}])) == 4
    assert iqp_exact([{0, 1, 2}, {2, 3}]) == 9 + 1
    with pytest.raises(ValueError):
        iqp_exact([set(range(13))])


def test_greedy_examples():
    assert sos_upper_discrete(DominantColumns([3, 2, 2], 5)) == 13
    assert riqp_bruteforce([3, 2, 2], 5) == 13
    assert sos_upper_discrete(DominantColumns([4, 1, 1], 4)) == 16
    assert sos_upper_discrete(DominantColumns([], 0)) == 0


@given(st.lists(st.integers(1, 10), min_size=1, max_size=8), st.data())
def test_greedy_equals_relaxed_optimum(densities, data):
    n = data.draw(st.integers(max(densities), min(10, sum(densities))) if max(densities) <= min(10, sum(densities))
                  else st.just(max(densities)))
    if n > sum(densities):
        return
    S = sos_upper_discrete(DominantColumns(densities, n))
    assert S == riqp_bruteforce(densities, n)
    assert S <= n * n


def test_bound_chain_small_random():
    rng = np.random.default_rng(11)
    axis = np.linspace(-1, 1, 9)
    grid = np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), -1).reshape(-1, 3)
    checked = 0
    for _ in range(30):
        win = random_window(CAM8, int(rng.integers(1, 9)), rng)
        cube = random_cube(rng, 0.02, 1.0)
        T = intersections(window_discs(cube, win, CAM8), CAM8)
        if T.n_rows == 0:
            continue
        cols = dominant_columns(T)
        exact = iqp_exact(cols)
        assert exact == iqp_exact(distinct_columns(T.to_dense()))
        imgs = sampled_images(win, CAM8, cube.centre + cube.half_width * grid).astype(np.int64)
        assert (imgs**2).sum(axis=(1, 2)).max() <= exact <= sos_upper_discrete(cols) <= T.n_rows**2
        checked += 1
    assert checked > 20


def test_assignment_bounds_collapse_at_singleton():
    rng = np.random.default_rng(12)
    for _ in range(20):
        win = random_window(CAM8, int(rng.integers(1, 10)), rng)
        w = rng.normal(size=3)
        T = intersections(window_discs(SearchCube.singleton(w), win, CAM8), CAM8)
        img = render_discrete(win, w, CAM8).values.astype(np.int64)
        cols = dominant_columns(T)
        assert iqp_exact(cols) == sos_upper_discrete(cols) == int((img**2).sum())


def test_discrete_mean_lower_bound():
    on = DiscSet.from_circles([[2, 2], [5, 5]], [1.0, 0.0], CAM8)
    assert mean_lower_discrete(on, 64) == 2 / 64
    straddle = DiscSet.from_circles([[0, 2], [7.2, 5]], [1.0, 0.5], CAM8)
    assert mean_lower_discrete(straddle, 64) == 0.0
    rng = np.random.default_rng(13)
    for _ in range(20):
        win = random_window(CAM16, 40, rng)
        cube = random_cube(rng, 1e-3, 1.0)
        imgs = sampled_images(win, CAM16, cube.sample(300, rng))
        assert mean_lower_discrete(window_discs(cube, win, CAM16), 256) <= imgs.mean(axis=(1, 2)).min()


# --- assembled bound ---------------------------------------------------------------------


def test_singleton_contrast_bound_is_exact():
    rng = np.random.default_rng(14)
    for _ in range(20):
        win = random_window(CAM16, int(rng.integers(1, 80)), rng)
        w = rng.normal(size=3)
        cube = SearchCube.singleton(w)
        assert contrast_upper(cube, win, CAM16, "discrete") == contrast(render_discrete(win, w, CAM16))
        assert contrast_upper(cube, win, CAM16, "continuous") == pytest.approx(
            contrast(render_continuous(win, w, CAM16)), abs=1e-9)


@pytest.mark.parametrize("mode", ["discrete", "continuous"])
def test_contrast_bound_dominates_samples(mode):
    rng = np.random.default_rng(15)
    for _ in range(15):
        win = random_window(CAM16, int(rng.integers(2, 80)), rng)
        cube = random_cube(rng, 1e-3, 1.0)
        ub = contrast_upper(cube, win, CAM16, mode)
        assert ub >= batch_contrast(win, CAM16, cube.sample(300, rng), mode).max() - 1e-9
        if mode == "discrete":
            assert ub <= len(win) ** 2 / CAM16.P


@pytest.mark.parametrize("mode", ["discrete", "continuous"])
def test_bound_is_monotone_under_shrinking(mode):
    rng = np.random.default_rng(16)
    for _ in range(10):
        win = random_window(CAM16, 50, rng)
        centre = rng.normal(size=3)
        values = [contrast_upper(SearchCube(centre, h), win, CAM16, mode) for h in (1.0, 0.5, 0.2, 0.05, 0.01, 0.0)]
        assert all(b <= a + 1e-9 for a, b in zip(values, values[1:]))


def test_invalid_cones_keep_the_bound_valid():
    rng = np.random.default_rng(17)
    win = random_window(CAM16, 30, rng, t_max=0.5)
    cube = SearchCube([0.0, 3.0, 0.0], 2.0)
    discs = window_discs(cube, win, CAM16)
    assert not discs.valid.all()
    samples = cube.sample(500, rng)
    for mode in ("discrete", "continuous"):
        assert contrast_upper_from_discs(discs, CAM16, mode) >= batch_contrast(win, CAM16, samples, mode).max() - 1e-9


def test_pixelwise_sos_is_looser_than_assignment_bound():
    rng = np.random.default_rng(18)
    for _ in range(20):
        win = random_window(CAM16, 60, rng)
        T = intersections(window_discs(random_cube(rng, 1e-3, 1.0), win, CAM16), CAM16)
        H = pixel_upper_discrete(T).values.astype(np.int64)
        assert (H**2).sum() >= sos_upper_discrete(dominant_columns(T))


def test_disc_dump(tmp_path):
    rng = np.random.default_rng(19)
    discs = window_discs(SearchCube(np.zeros(3), 0.5), random_window(CAM8, 3, rng), CAM8)
    write_disc_csv(discs, tmp_path / "d.csv")
    rows = list(csv.reader(open(tmp_path / "d.csv")))
    assert rows[0] == ["event", "c_x", "c_y", "rho", "a", "b", "on_image", "valid"] and len(rows) == 4


def test_subdivision_geometry():
    cube = SearchCube([1.0, -1.0, 0.5], 0.4)
    lo, hi = cube.corners
    assert np.linalg.norm(hi - lo) == pytest.approx(2 * 0.4 * math.sqrt(3))
    kids = cube.subdivide()
    assert len(kids) == 8 and all(k.half_width == 0.2 for k in kids)
    pts = np.random.default_rng(0).uniform(lo, hi, (200, 3))
    for p in pts:
        assert any(k.contains(p, 1e-12) for k in kids)
    assert SearchCube(np.zeros(3), 1.0).min_norm() == 0.0
    assert SearchCube([3.0, 0, 0], 1.0).min_norm() == 2.0
    with pytest.raises(ValueError):
        SearchCube(np.zeros(3), -1)
