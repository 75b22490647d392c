# %% [markdown]
# # Monotone data and phantom shocks
#
# V(x) = 1 - x, eta = 0.5, T = 0.5 on [-4, 4] with 1600 cells. With the
# exponential kernel a monotone datum stays monotone for every p. With the
# constant kernel this only holds for increasing data when p <= 1 and for
# decreasing data when p >= 1. Outside that range steep fronts appear
# upstream of the jump.

# %%
import numpy as np

from pnormcl import Grid, Kernel, Scenario, VelocityModel, field_from_datum, riemann, solve
from pnormcl.diagnostics import gradient_peaks, monotone_direction, sign_breach

grid = Grid(-4.0, 4.0, 1600)


def run(kernel, p, a, b):
    d = riemann(a, b, 0.0)
    s = Scenario(field_from_datum(d, grid), VelocityModel.linear(), Kernel(kernel),
                 p, 0.5, 0.5, datum=d)
    return s, solve(s)


# %%
print("kernel       datum       p     worst breach")
for kernel in ("exponential", "constant"):
    for a, b in ((0.5, 1.0), (1.0, 0.5)):
        for p in (0.25, 0.5, 1.0, 4.0, 16.0):
            s, tr = run(kernel, p, a, b)
            direction = monotone_direction(s.initial.values)
            br = max(sign_breach(sn.q.values, direction) for sn in tr.snapshots)
            print(f"{kernel:12s} {direction:11s} {p:5g}  {br:.2e}")

# %% [markdown]
# For p = 16 and the increasing datum the profile develops a train of
# fronts about half a window apart.

# %%
_, tr = run("constant", 16.0, 0.5, 1.0)
q = tr.final().q
peaks = gradient_peaks(q, (-1.6, -0.2))
print("fronts:", np.round(peaks, 3), "spacing:", np.round(np.diff(peaks), 3))
x = grid.centers
for lo in np.arange(-1.8, 0.2, 0.1):
    sel = (x >= lo) & (x < lo + 0.1)
    print(f"{lo:5.1f}  " + "#" * int(60 * (q.values[sel].mean() - 0.5)))
