# %% [markdown]
# # Layered Duhamel cascade of a Navier-Stokes solution
#
# The solution is split into layers. Layer 1 is the heat flow of the data and
# layer k solves a forced heat equation driven by the nonlinear interaction of
# the first k-1 layers. The remainder carries the smoother part of the flow.

# %%
from besovns.cascade import compute_cascade, remainder_residual, stability_limit, x_norm
from besovns.ns_solver import InitialData, SolverConfig, energies, integrate, make_initial_data
from besovns.spectral import make_grid

grid = make_grid(16)
u0 = make_initial_data(InitialData("taylor_green_3d"), grid)
traj = integrate(u0, SolverConfig(grid, 1e-3, 0.2, save_every=20))
print("energy:", energies(traj))

# %% [markdown]
# The cascade depth for p = 4 is floor(p) + 3 = 7.

# %%
state = compute_cascade(u0, 4.0, 0.2, stability_limit(grid), times=traj.times)
for k in range(1, state.m + 1):
    print(f"layer {k}: |v_k(T)|_2 = {state.layer(k)[-1].l2_norm():.3e}")

# %% [markdown]
# The remainder v = u - (v_1 + ... + v_m) satisfies its own perturbed equation.
# The residual measures how well the discrete pieces fit together.

# %%
v, residual = remainder_residual(traj, state)
print("max relative residual:", residual.values.max())
print("sup of the remainder norm:", x_norm(v).sup)
