"""Steady imbalance versus the initial gauge angle theta.

Sweeping theta over (-pi, pi] traces out a single confinement peak: the
excitation stays localized when the gauge spins start near the direction
singled out by the effective longitudinal field, and melts away elsewhere.
A Gaussian fit extracts the peak position.
"""

import math
import pathlib

import numpy as np

from z2chain import (build_full, device_default, evolve_krylov,
                     extended_imbalance, fit_gaussian_peak,
                     occupation_profile, prepare_initial)
from z2chain.observables import ObservableSeries, steady_value
from z2chain.params import InitialStateSpec

OUT = pathlib.Path("out/demo_theta")
OUT.mkdir(parents=True, exist_ok=True)

N_POINTS = 25
WINDOW = (0.2, 1.0)

params = device_default().with_fields(h_x=6.0, v_even=15.0)
H = build_full(params)
times = np.arange(0.0, 1.0 + 1e-9, 0.02)

thetas = [-math.pi + (k + 1) * 2 * math.pi / N_POINTS for k in range(N_POINTS)]
means, stds = [], []
for theta in thetas:
    psi0 = prepare_initial(InitialStateSpec("00100", theta), 10)
    states = evolve_krylov(H, psi0, times)
    imb = [extended_imbalance(occupation_profile(s), "00100") for s in states]
    m, s = steady_value(ObservableSeries("imbalance", times, imb), WINDOW)
    means.append(m)
    stds.append(s)
    print(f"theta = {theta:+.3f}  I_inf = {m:+.3f} +- {s:.3f}")

fit = fit_gaussian_peak(thetas, means)
print(f"\nGaussian fit: peak at theta* = {fit.mu:.3f} rad "
      f"(width {fit.sigma:.3f}, amplitude {fit.amplitude:.3f}, "
      f"offset {fit.offset:.3f})")

np.savetxt(OUT / "imbalance_vs_theta.tsv",
           np.column_stack([thetas, means, stds]), delimiter="\t",
           header="theta_rad\timbalance_mean\timbalance_std", comments="")
print(f"table written to {OUT}/")
