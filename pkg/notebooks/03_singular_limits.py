# %% [markdown]
# # Two limits: eta -> 0 and p -> 0
#
# As the reach eta shrinks the nonlocal solution approaches the entropy
# solution of q_t + (q(1 - q))_x = 0, computed here with Godunov on a grid
# five times finer. As p -> 0 (constant kernel) it approaches the solution
# driven by the geometric mean of the downstream density.

# %%
import numpy as np

from pnormcl import (Grid, Kernel, LocalScenario, Scenario, VelocityModel, field_from_datum,
                     riemann, solve, solve_godunov)
from pnormcl.diagnostics import convergence_table

grid = Grid(-4.0, 4.0, 1600)
d = riemann(0.5, 1.0, 0.0)
window = (-2.0, 2.0)


def scenario(kernel, p, eta=0.5):
    return Scenario(field_from_datum(d, grid), VelocityModel.linear(), Kernel(kernel),
                    p, eta, 0.5, datum=d)


# %%
base = scenario("exponential", 1.0)
ref = solve_godunov(LocalScenario.from_nonlocal(base, grid.refine(5)))
runs = [(eta, solve(base.with_changes(eta=eta))) for eta in (0.4, 0.2, 0.1, 0.05)]
table = convergence_table(runs, ref, window)
print("eta      L1 sup    ratio")
for eta, dist, ratio, _ in table.rows():
    print(f"{eta:<7g}  {dist:.5f}  {ratio:.3f}")
print("log-log slope", round(table.slope, 3))

# %% [markdown]
# The rate is below one: the shock is smeared over a width of order eta, so the
# distance decays roughly like eta^0.6 in this range.

# %%
ref0 = solve(scenario("constant", "zero"))
runs0 = [(p, solve(scenario("constant", p))) for p in (0.4, 0.2, 0.1, 0.05)]
table0 = convergence_table(runs0, ref0, window)
for p, dist, ratio, _ in table0.rows():
    print(f"p = {p:<5g} {dist:.2e}  {ratio:.3f}")
print("slope", round(table0.slope, 3))
