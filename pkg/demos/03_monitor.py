# %% [markdown]
# # Monitoring the regularity bounds along a run
#
# The constants in the a priori bounds are iterated exponentials, so they are
# carried in log form. The monitor evaluates the weighted functionals of the
# vorticity at each sample and compares them with the bound.

# %%
from besovns.diagnostics import Tower, constant_ladder, monitor
from besovns.littlewood_paley import build_partition
from besovns.ns_solver import InitialData, SolverConfig, integrate, make_initial_data
from besovns.spectral import make_grid

ladder = constant_ladder(4.0)
for k in range(1, 7):
    print(f"log M_{k} = {ladder.log_M(k):.4g}")
print("a tower of height 4:", Tower(4, 2.0))

# %%
grid = make_grid(16)
part = build_partition(grid)
u0 = make_initial_data(InitialData("random_besov", M=4.0, seed=3), grid, part)
traj = integrate(u0, SolverConfig(grid, 1e-3, 0.05, save_every=10))
rep = monitor(traj, 4.0, 0.5, ladder, part)
for row in rep.rows():
    print({k: f"{v:.4g}" if isinstance(v, float) else v for k, v in row.items()})
print("summary:", rep.summary())
print("left sides within bounds:", rep.lhs_within_rhs())
