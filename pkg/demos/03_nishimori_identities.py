"""Gauge identities of the Nishimori line, checked on small systems.

When every coupling and field has variance equal to its mean, the
disorder average of <s_i>^2 equals that of <s_i>, and similarly for pairs
and mixed products. We enumerate all 2^10 states exactly for each
realization, so the only error is from the disorder average.
Doubling the field variance breaks the identities, which shows the
check has power.
"""
# %%
from nmsk import ModelParams
from nmsk.simulate import make_lattice, nishimori_checks

params = ModelParams(alpha=[0.5, 0.5], mu=[[1.0, 0.5], [0.5, 1.0]], h=[0.3, 0.3])
lattice = make_lattice(params, 10)

# %% On the line: every residual is compatible with zero.
for e in nishimori_checks(params, lattice, 1000, "exact", master_seed=3):
    print(f"on-line   {e.observable_name:22s} {e.mean:+.2e} +- {e.stderr:.1e}  z={e.z_score:+.2f}")

# %% Off the line: the site identity fails by many standard errors.
for e in nishimori_checks(params, lattice, 1000, "exact", master_seed=3, field_variance_scale=2.0):
    print(f"off-line  {e.observable_name:22s} {e.mean:+.2e} +- {e.stderr:.1e}  z={e.z_score:+.2f}")

# %% The same identities estimated by Metropolis chains instead of enumeration.
for e in nishimori_checks(params, lattice, 40, "mc", master_seed=3, sweeps=4000, therm=400):
    print(f"mc        {e.observable_name:22s} {e.mean:+.2e} +- {e.stderr:.1e}  z={e.z_score:+.2f}")
