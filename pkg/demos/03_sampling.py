"""Boltzmann sampling near the singularity and an ASCII picture of the result.

A permutation of size about 2000 from the X-class is drawn and its diagram is
binned on a coarse grid: the X shape with centre (1/2, 1/2) is already visible.
"""

import numpy as np

from permlimit import BoltzmannSampler, load_spec, tune_control

spec = load_spec("xclass")
x = tune_control(spec, 0, 2000)
print(f"control parameter x = {x:.10f} (expected size 2000)")
sample = BoltzmannSampler(spec, x).sample(0, 2000, rng=2024)
perm = sample.perm
print(f"size {len(perm)} after {sample.attempts} attempts")

G = 32
grid = np.zeros((G, G), dtype=int)
n = len(perm)
for i, v in enumerate(perm):
    grid[G - 1 - (v - 1) * G // n, i * G // n] += 1
for row in grid:
    print("".join("#" if c > 2 else ("." if c else " ") for c in row))
