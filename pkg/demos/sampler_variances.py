"""Closed-form asymptotic variances against replicate runs for the four estimators."""
import numpy as np

from qswlab import fixture
from qswlab.samplers import run_replicates
from qswlab.semigroup import evolve
from qswlab.spectral import eigensystem, tilde_spectrum
from qswlab.variance import (
    empirical_variance, second_moment_ratio,
    v_dp, v_hard, v_is, v_soft,
)

m = fixture("C")
f = eigensystem(m).phi0
n, N, R = 10, 2000, 200
tr = evolve(m, n)
closed = {"dp": v_dp, "is": v_is, "soft": v_soft, "hard": v_hard}

print(f"model C, f = phi0, n = {n}, N = {N}, R = {R}")
print("sampler   closed      empirical   se")
for tag, fn in closed.items():
    table = run_replicates(m, tag, n, N, R, 1, f)
    if tag == "hard":
        gm = evolve(m, n).g_masses[n - 1]
        ev = empirical_variance(table, tr.z[n], float(tr.etas[n] @ f), z_scale=tr.z[n - 1], eta_scale=gm)
    else:
        ev = empirical_variance(table, tr.z[n], float(tr.etas[n] @ f))
    print(f"{tag:8s}  {max(fn(m, n, f), 0.0):.6f}    {ev.v:.6f}    {ev.v_se:.6f}")

rate = tilde_spectrum(m).E0tilde / eigensystem(m).E0 ** 2
print(f"\nreflected sampler second moment grows like {rate:.6f}^n")
for k in (10, 50, 100, 200):
    print(f"  n={k:3d}  ratio={second_moment_ratio(m, k):.4f}  rate^n={rate ** k:.4f}")
