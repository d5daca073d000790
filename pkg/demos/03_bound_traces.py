"""
How fast the bounds close
=========================

Run both flavours of branch and bound on one window and compare how the
best contrast found and the best bound still open evolve per dequeue.
The traces are written as CSV for plotting elsewhere.
"""

# %%
from pathlib import Path

import numpy as np

from cmbnb import CameraIntrinsics, SolverConfig, solve_bnb, synthesize
from cmbnb.events import pixels_to_bearings
from cmbnb.solvers import trace_csv

out = Path("demo_out")
out.mkdir(exist_ok=True)
cam = CameraIntrinsics(60.0, 60.0, 31.5, 31.5, 64, 64)
xs = np.round(np.linspace(3, 60, 4))
scene = pixels_to_bearings(np.array([(x, y) for x in xs for y in xs], float), cam)
window, _ = synthesize(scene, [0.3, -0.2, 0.5], cam, t_max=0.5, rate=16, rng=0)

# %%
disc = solve_bnb(window, cam, SolverConfig(r_max=2.0))
print("discrete: closed after", disc.iterations, "dequeues")

# the continuous run gets ten times as many dequeues
cont = solve_bnb(window, cam, SolverConfig(r_max=2.0, mode="continuous", max_iterations=10 * disc.iterations))
print("continuous: certified", cont.certified, "after", cont.iterations, "dequeues")

# %%
for name, res in [("discrete", disc), ("continuous", cont)]:
    (out / f"trace_{name}.csv").write_text(trace_csv(res.trace))
    rows = res.trace[:: max(1, len(res.trace) // 8)] + [res.trace[-1]]
    print(f"\n{name}")
    print("  iter      lower      upper")
    for r in rows:
        print(f"{r.iteration:6d} {r.lower:10.4f} {r.upper:10.4f}")
