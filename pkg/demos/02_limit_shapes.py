"""What a large uniform permutation of each packaged class looks like.

Essentially linear classes converge to an X-permuton (four segments meeting at
a centre), essentially branching ones to a biased Brownian separable permuton.
Classes whose critical families are not strongly connected combine these as
mixtures or juxtapositions.
"""

from permlimit import analyze, load_spec
from permlimit.specs import fixture_names

print(f"{'class':10s} {'rho':>12s}  {'kind':9s} {'SC':5s} limit")
for name in fixture_names():
    rep = analyze(load_spec(name))
    s = rep.structure
    print(f"{name:10s} {rep.rho:12.9f}  {s.classification:9s} {str(s.sc):5s} {rep.limit}")
