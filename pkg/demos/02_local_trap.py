"""
Where gradient ascent gets stuck
================================

The bundled window shows a regular lattice of points moving sideways fast
enough that, at zero angular velocity, each row smears into a continuous
line. Shrinking the motion a little leaves the lines as lines, so the
contrast is almost flat around zero and a local solver started there stops
early. Branch and bound searches the whole ball instead.
"""

# %%
from pathlib import Path

import numpy as np

import cmbnb
from cmbnb import EventWindow, SolverConfig, render_continuous, solve_bnb, solve_local
from cmbnb.events import load_calibration, load_events
from cmbnb.image import save_image

data = Path(cmbnb.__file__).parent / "data"
cam = load_calibration(data / "local_trap_calib.txt")
window = EventWindow.from_events(load_events(data / "local_trap_events.txt", cam), t_max=0.2)
out = Path("demo_out")
out.mkdir(exist_ok=True)

# %%
cfg = SolverConfig(r_max=2.0, mode="continuous", tau_rel=0.1, max_iterations=600)
local = solve_local(window, cam, cfg, omega_init=np.zeros(3))
print("local from 0: contrast %.4f at %s" % (local.contrast, np.round(local.omega, 3)))

# The continuous bound tightens slowly, so the run is capped; the incumbent
# is still a feasible point and hence a lower bound on the optimum.
glob = solve_bnb(window, cam, cfg)
print("branch and bound: contrast %.4f at %s (certified: %s)" % (glob.contrast, np.round(glob.omega, 3), glob.certified))
print("ratio %.3f" % (local.contrast / glob.contrast))

# %%
# The discrete objective can be certified outright.
disc = solve_bnb(window, cam, SolverConfig(r_max=2.0))
print("discrete optimum %.4f at %s, certified %s" % (disc.contrast, np.round(disc.omega, 3), disc.certified))

# %%
for name, w in [("identity", np.zeros(3)), ("local", local.omega), ("global", glob.omega)]:
    img = render_continuous(window, w, cam)
    save_image(img, out / f"trap_{name}.pgm")
