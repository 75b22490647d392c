# %% [markdown]
# # The downstream L^p average
#
# For a density step from 0.5 to 1 at x = 0 we look at the nonlocal term W
# for several exponents, with the constant and the exponential kernel.
# Small p pulls W towards the geometric mean, large p towards the windowed
# maximum.

# %%
import math

import numpy as np

from pnormcl import Grid, Kernel, evaluate, field_from_datum, riemann

grid = Grid(-2.0, 2.0, 800)
q = field_from_datum(riemann(0.5, 1.0, 0.0), grid)
eta = 0.5

# %%
probe = np.array([-0.75, -0.5, -0.25, 0.0])
idx = np.searchsorted(grid.edges, probe)
for shape in ("constant", "exponential"):
    print(shape)
    for p in (0.0, 0.25, 1.0, 2.0, 16.0, math.inf):
        if shape == "exponential" and (p == 0 or math.isinf(p)):
            continue  # both limits need a finitely supported kernel
        W = evaluate(q, Kernel(shape), p, eta).W_values
        print(f"  p = {p:>5}:", np.round(W[idx], 4))

# %% [markdown]
# With the constant kernel at x = -0.25 the window covers half of each state:
# p = 1 gives 0.75, p = 2 gives sqrt(0.625), p -> 0 gives sqrt(0.5), and the
# supremum already sees the right state.

# %%
W1 = evaluate(q, Kernel.constant(), 1.0, eta).W_values
print(W1[idx[2]], math.sqrt(0.625), math.sqrt(0.5))

# %% [markdown]
# The exponential kernel turns the integral into a recursion. Its
# derivative satisfies q^p = W^p - eta W^(p-1) W', and the residual of
# that identity shrinks linearly with the cell size for smooth data.

# %%
from pnormcl.fields import Datum
from pnormcl.operators import check_exponential_identity, eval_W_exponential

smooth = Datum("tanh", a=0.5, b=1.0, jump=0.0, width=1.0)
for n in (200, 400, 800, 1600):
    qs = field_from_datum(smooth, Grid(-4, 4, n))
    print(n, check_exponential_identity(qs, eval_W_exponential(qs, 1.0, eta)))
