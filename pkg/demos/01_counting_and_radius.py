"""Counting permutations in a class and locating the dominant singularity.

Av(132) is counted by the Catalan numbers; its generating function has a
square-root singularity at 1/4. The X-class has a simple pole at 1 - sqrt(2)/2.
"""

import math

from permlimit import expand, find_radius, load_spec

for name in ("av132", "xclass", "xtilde"):
    spec = load_spec(name)
    coeffs = expand(spec, 12)[0]
    print(f"{name:8s} counts: {[coeffs[n] for n in range(1, 13)]}")
    rep = find_radius(spec)
    print(f"{'':8s} rho = {rep.rho:.12f}")
    # the growth rate c_{n+1}/c_n tends to 1/rho
    big = expand(spec, 300)[0]
    print(f"{'':8s} c_300 / c_299 = {big[300] / big[299]:.6f}  vs 1/rho = {1 / rep.rho:.6f}")

print("\nCatalan check:", all(expand(load_spec("av132"), 20)[0][n] == math.comb(2 * n, n) // (n + 1) for n in range(1, 21)))
