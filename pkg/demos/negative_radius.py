"""Flat initial data under the harmonic-mean flow with alpha = 1/2.

The initial support function has r1 = 0 on a cap around the equator.  The
flat part is pushed inward at a rate that makes r1 negative immediately, so
the evolving support function stops describing an immersed surface.  The
script prints min r1 over time and, if matplotlib is installed, plots the
initial and evolved meridian curves.
"""
import sys

import numpy as np

from curvflow.axisym import build_theorem1_data, embed, evolve, radii, turning
from curvflow.speed_algebra import parse_speed

alpha, n = 0.5, 2
spec = parse_speed(f"quot({n},{n - 1})", n, alpha)
prof, r0 = build_theorem1_data(alpha, n, theta0=0.63, h=1.0, N=256)
traj = evolve(prof, spec, 0.01, n_store=10)

print(f"r1_negative event: {traj.event('r1_negative')}")
print(f"{'t':>10s} {'min r1':>12s} {'min turning':>12s}")
for t, p in zip(traj.times, traj.profiles):
    print(f"{t:10.3e} {radii(p)[0].min():12.4e} {turning(p).min():12.4e}")

if "--plot" in sys.argv:
    import matplotlib.pyplot as plt
    fig, ax = plt.subplots(figsize=(5, 5))
    for p, label in ((traj.profiles[0], "t = 0"), (traj.profiles[-1], f"t = {traj.times[-1]:.3g}")):
        _, x, y = embed(p)
        ax.plot(x, y, label=label)
    ax.set_aspect("equal")
    ax.legend()
    fig.savefig("negative_radius.png", dpi=150)
    print("wrote negative_radius.png")
