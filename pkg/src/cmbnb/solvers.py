"""Global (branch-and-bound) and local contrast maximisation solvers."""

from __future__ import annotations

import csv
import heapq
import io
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .bounds import SearchCube, contrast_upper
from .events import CameraIntrinsics, EventWindow
from .image import KernelSpec, accumulate_discrete, accumulate_gaussian, contrast, render_continuous, render_discrete, reward
from .warp import warp_points

MODES = ("discrete", "continuous")


@dataclass(frozen=True)
class SolverConfig:
    r_max: float = 20.0
    # absolute gap; None means 1e-3 * N^2 / P for the window at hand
    tau: float | None = None
    tau_rel: float = 1e-2
    mode: str = "discrete"
    kernel: KernelSpec = field(default_factory=KernelSpec)
    max_iterations: int = 10**6
    parallel: bool = False
    record_trace: bool = True

    def __post_init__(self):
        if not self.r_max > 0:
            raise ValueError("r_max must be positive")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if not ((self.tau is not None and self.tau > 0) or self.tau_rel > 0):
            raise ValueError("need a positive tau or tau_rel")

    def absolute_tau(self, n_events: int, P: int) -> float:
        if self.tau is not None:
            return self.tau
        return 1e-3 * n_events**2 / P

    def gap(self, best: float, n_events: int, P: int) -> float:
        return max(self.absolute_tau(n_events, P), self.tau_rel * max(best, 1.0))


class TraceRow(NamedTuple):
    iteration: int
    elapsed: float
    lower: float
    upper: float


@dataclass
class SolveResult:
    omega: np.ndarray
    contrast: float
    upper_bound_at_exit: float | None
    iterations: int
    cubes_pruned: int
    runtime: float
    trace: list[TraceRow] = field(default_factory=list)
    certified: bool = False
    method: str = ""
    final_half_width: float | None = None

    @property
    def gap(self) -> float | None:
        if self.upper_bound_at_exit is None:
            return None
        return self.upper_bound_at_exit - self.contrast


def project_to_ball(omega, r_max: float) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    n = np.linalg.norm(omega)
    return omega * (r_max / n) if n > r_max else omega.copy()


def objective(window: EventWindow, intr: CameraIntrinsics, mode: str = "discrete",
              kernel: KernelSpec | None = None, kind: str = "contrast") -> Callable[[np.ndarray], float]:
    """Contrast (or reward) of the warped image as a function of omega."""
    kernel = kernel or KernelSpec()
    score = contrast if kind == "contrast" else reward
    if mode == "discrete":
        return lambda w: score(render_discrete(window, w, intr))
    return lambda w: score(render_continuous(window, w, intr, kernel))


def batch_contrast(window: EventWindow, intr: CameraIntrinsics, omegas, mode: str = "discrete",
                   kernel: KernelSpec | None = None, batch: int = 1024) -> np.ndarray:
    """Contrast for each row of an (M, 3) array of angular velocities."""
    omegas = np.atleast_2d(np.asarray(omegas, dtype=float))
    out = np.empty(len(omegas))
    P = intr.P
    if mode == "continuous":
        kernel = kernel or KernelSpec()
        step = max(1, batch // 16)
        for s in range(0, len(omegas), step):
            pos, _ = warp_points(window.xy, window.t, omegas[s : s + step], intr)
            img = accumulate_gaussian(pos, intr.width, intr.height, kernel).reshape(len(pos), -1)
            out[s : s + step] = np.mean((img - img.mean(axis=1, keepdims=True)) ** 2, axis=1)
        return out
    for s in range(0, len(omegas), batch):
        pos, _ = warp_points(window.xy, window.t, omegas[s : s + batch], intr)
        counts = accumulate_discrete(pos, intr.width, intr.height).reshape(len(pos), -1).astype(np.int64)
        S = (counts * counts).sum(axis=1)
        n = counts.sum(axis=1)
        out[s : s + batch] = (P * S - n * n) / (P * P)
    return out


def solve_bnb(window: EventWindow, intr: CameraIntrinsics, config: SolverConfig = SolverConfig()) -> SolveResult:
    """Best-first branch-and-bound over the cube enclosing the r_max ball.

    Cubes are dequeued by upper bound; the centre of each dequeued cube
    (pulled onto the ball if outside) may replace the incumbent, and its
    eight octants are queued unless their bound falls below the incumbent
    or they miss the ball. Stops once the top bound is within the gap
    threshold of the incumbent.
    """
    start = time.perf_counter()
    N, P = len(window), intr.P
    f = objective(window, intr, config.mode, config.kernel)

    def bound(cube: SearchCube) -> float:
        return contrast_upper(cube, window, intr, config.mode, config.kernel)

    pool = ThreadPoolExecutor(max_workers=8) if config.parallel else None
    try:
        root = SearchCube(np.zeros(3), config.r_max)
        best_w = np.zeros(3)
        best_c = f(best_w)
        tie = 0
        heap = [(-bound(root), tie, root)]
        trace: list[TraceRow] = []
        iterations = pruned = 0
        certified = False
        upper = None
        final_h = None
        while heap:
            neg_ub, _, cube = heapq.heappop(heap)
            ub = -neg_ub
            if iterations >= config.max_iterations:
                upper = ub
                break
            iterations += 1
            if config.record_trace:
                trace.append(TraceRow(iterations, time.perf_counter() - start, best_c, ub))
            if ub - best_c <= config.gap(best_c, N, P):
                certified, upper, final_h = True, ub, cube.half_width
                break
            wc = project_to_ball(cube.centre, config.r_max)
            c = f(wc)
            if c >= best_c:
                best_w, best_c = wc, c
            children = [ch for ch in cube.subdivide() if ch.min_norm() <= config.r_max]
            pruned += 8 - len(children)
            bounds = list(pool.map(bound, children)) if pool else [bound(ch) for ch in children]
            for ch, b in zip(children, bounds):
                # a child can never exceed its parent's bound
                b = min(b, ub)
                if b >= best_c:
                    tie += 1
                    heapq.heappush(heap, (-b, tie, ch))
                else:
                    pruned += 1
        else:
            # every remaining cube was pruned against the incumbent
            certified, upper = True, best_c
    finally:
        if pool:
            pool.shutdown()
    return SolveResult(
        best_w, best_c, upper, iterations, pruned, time.perf_counter() - start, trace, certified,
        f"bnb-{config.mode}", final_h,
    )


def fd_gradient(f: Callable[[np.ndarray], float], w, step: float = 1e-5) -> np.ndarray:
    """Central-difference gradient."""
    w = np.asarray(w, dtype=float)
    g = np.empty(3)
    for k in range(3):
        e = np.zeros(3)
        e[k] = step
        g[k] = (f(w + e) - f(w - e)) / (2 * step)
    return g


def solve_local(
    window: EventWindow,
    intr: CameraIntrinsics,
    config: SolverConfig = SolverConfig(),
    objective_kind: str = "contrast",
    omega_init=None,
    max_iterations: int = 200,
    rel_tol: float = 1e-7,
    fd_step: float = 1e-5,
) -> SolveResult:
    """Nonlinear conjugate-gradient ascent on the kernel-image objective.

    Gradients are central differences; each line search halves a trial
    step until the objective improves, then doubles while it keeps
    improving. Iterates are kept inside the r_max ball.
    """
    if objective_kind not in ("contrast", "reward"):
        raise ValueError("objective must be 'contrast' or 'reward'")
    start = time.perf_counter()
    f = objective(window, intr, "continuous", config.kernel, objective_kind)
    w = project_to_ball(np.zeros(3) if omega_init is None else omega_init, config.r_max)
    fw = f(w)
    # about one pixel of displacement at the end of the window
    step = 1.0 / (max(intr.fx, intr.fy) * max(window.t_max, 1e-9))
    g_prev = d_prev = None
    trace = [TraceRow(0, 0.0, fw, np.nan)]
    it = 0
    for it in range(1, max_iterations + 1):
        g = fd_gradient(f, w, fd_step)
        if not np.all(np.isfinite(g)) or not np.any(g):
            break
        d = g
        if g_prev is not None:
            beta = max(0.0, g @ (g - g_prev) / (g_prev @ g_prev))
            d = g + beta * d_prev
            if d @ g <= 0:
                d = g
        u = d / np.linalg.norm(d)
        s = step
        for _ in range(50):
            w_new = project_to_ball(w + s * u, config.r_max)
            f_new = f(w_new)
            if f_new > fw:
                break
            s *= 0.5
        else:
            break
        for _ in range(30):
            w2 = project_to_ball(w + 2 * s * u, config.r_max)
            f2 = f(w2)
            if f2 <= f_new:
                break
            s, w_new, f_new = 2 * s, w2, f2
        improvement = (f_new - fw) / max(abs(fw), 1e-300)
        w, fw = w_new, f_new
        g_prev, d_prev, step = g, d, s
        trace.append(TraceRow(it, time.perf_counter() - start, fw, np.nan))
        if improvement < rel_tol:
            break
    name = "local-gd" if objective_kind == "contrast" else "local-reward"
    return SolveResult(w, fw, None, it, 0, time.perf_counter() - start, trace, False, name)


def grid_oracle(window: EventWindow, intr: CameraIntrinsics, config: SolverConfig, steps_per_axis: int):
    """Exhaustive contrast maximisation over a uniform grid inside the ball.

    Grid points are visited in lexicographic (x, y, z) order and the first
    maximiser wins ties.
    """
    if steps_per_axis < 2:
        raise ValueError("need at least 2 steps per axis")
    axis = np.linspace(-config.r_max, config.r_max, steps_per_axis)
    grid = np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1).reshape(-1, 3)
    norms = np.linalg.norm(grid, axis=1)
    inside = norms <= config.r_max * (1 + 1e-12)
    if inside.any():
        grid = grid[inside]
    else:
        # very coarse grids miss the ball entirely; pull the nodes onto its surface
        grid = grid * (config.r_max / norms)[:, None]
    values = batch_contrast(window, intr, grid, config.mode, config.kernel)
    k = int(np.argmax(values))
    return grid[k].copy(), float(values[k])


def error_metrics(omega_true, omega_est) -> tuple[float, float]:
    """Full angular velocity error and angular-rate-only error."""
    a = np.asarray(omega_true, dtype=float)
    b = np.asarray(omega_est, dtype=float)
    return float(np.linalg.norm(a - b)), float(abs(np.linalg.norm(a) - np.linalg.norm(b)))


def trace_csv(trace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iteration", "elapsed_s", "lower", "upper"])
    for row in trace:
        w.writerow([row.iteration, repr(float(row.elapsed)), repr(float(row.lower)), repr(float(row.upper))])
    return buf.getvalue()
