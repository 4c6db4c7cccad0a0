"""Conditioned walk on {1..d}: spectrum, survival and convergence to the Yaglom limit."""
import numpy as np

from qswlab import Model
from qswlab.model import tv_distance
from qswlab.semigroup import evolve
from qswlab.spectral import eigensystem, quasi_stationary

m = Model(8, 1.0, "delta:1")
b = eigensystem(m)
pi = quasi_stationary(m)[0].weights
print(f"d={m.d} theta={m.theta}  E0={b.E0:.6f}  E1/E0={b.E1bar:.6f}")

tr = evolve(m, 60)
print(" n   P(T>n)       P(T>n)/E0^n   TV(eta_n, pi)")
for n in (0, 5, 10, 20, 40, 60):
    print(f"{n:3d}  {tr.z[n]:.6e}  {tr.z[n] / b.E0 ** n:.6f}      {tv_distance(tr.etas[n], pi):.3e}")
print("pi:", np.round(pi, 4))
