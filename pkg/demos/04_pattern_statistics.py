"""Confronting samples with the predicted limit through 3-point patterns.

For the X-class the total variation distance between the empirical pattern
frequencies and the X(1/4,1/4,1/4,1/4) law is small already at n = 1000. For
Av(132) the limit is the anti-diagonal, which puts all mass on 321; the
distance to it shrinks only like n^(-1/2) (points sit about sqrt(n) away from
the anti-diagonal), so the same protocol needs several thousand points to get
below 0.05. This script shows that trend.
"""

import math

from permlimit import load_spec, run_verification

rep = run_verification(load_spec("xclass"), 0, 1000, 300, 3, 200, seed=1)
print(f"xclass  n=1000: TV = {rep.tv:.4f}")

spec = load_spec("av132")
for n in (250, 1000, 4000):
    rep = run_verification(spec, 0, n, 100, 3, 200, seed=n)
    print(f"av132   n={n:5d}: TV = {rep.tv:.4f}   TV*sqrt(n) = {rep.tv * math.sqrt(n):.2f}")
