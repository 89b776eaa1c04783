"""Where does the ordered phase start?

At zero field the paramagnet x = 0 is always stationary. It stops being
the maximizer once the spectral radius of alpha^-1 Delta exceeds one.
This script checks that on a one-species scan and on a two-species plane.
"""
# %%
import numpy as np

from nmsk import ModelParams, maximize
from nmsk.criticality import phase_scan

# %% One species: the threshold is mu = 1 and the magnetization grows linearly past it.
for p in phase_scan([ModelParams.single(m) for m in (0.8, 0.95, 1.0, 1.02, 1.1, 1.5, 2.0)]):
    mu = p.params_ref.mu[0, 0]
    lin = (mu - 1) / mu**2 if mu > 1 else 0.0
    print(f"mu={mu:5.2f}  rho={p.rho:5.2f}  {p.phase_label:12s}  x={p.x_star[0]:.6f}  (mu-1)/mu^2={lin:.6f}")

# %% Two species with a symmetric block coupling [[a, b], [b, a]] and equal sizes.
# rho = (a + b)/2 here, so the boundary in the (a, b) plane is the line a + b = 2.
print("\n  b \\ a " + "".join(f"{a:6.2f}" for a in np.linspace(0.5, 2.5, 9)))
for b in (0.0, 0.5, 1.0):
    grid = [ModelParams(alpha=[0.5, 0.5], mu=[[a, b], [b, a]], h=[0, 0]) for a in np.linspace(0.5, 2.5, 9)]
    marks = "".join("     #" if p.phase_label == "ordered" else "     ." for p in phase_scan(grid))
    print(f"{b:6.2f}  {marks}")

# %% Unequal sizes: a strongly coupled minority species can order the whole system.
p = ModelParams(alpha=[0.2, 0.8], mu=[[8.0, 1.0], [1.0, 0.2]], h=[0, 0])
rep = maximize(p)
print(f"\nminority-driven order: rho={rep.rho:.3f}  x={np.round(rep.x_star, 6)}  p={rep.pressure:.10f}")
