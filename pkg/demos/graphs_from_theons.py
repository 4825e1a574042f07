#!/usr/bin/env python3
"""Four graph recipes, one distribution (almost).

qr_graph flips a fair coin per pair.  twist_graph and semitwist_graph also
read the vertex weights, yet the graphs they produce have the same law.
bipartite_graph does not: it never produces a triangle.

    python3 demos/graphs_from_theons.py
"""

from fractions import Fraction

from theons import Structure, equivalence_test, gallery, phi, sample_structure
from theons.symbols import GRAPH

TRIANGLE = Structure(GRAPH, (1, 2, 3), {"E": [(1, 2), (2, 1), (1, 3), (3, 1), (2, 3), (3, 2)]})

for name in ("qr_graph", "twist_graph", "semitwist_graph", "bipartite_graph"):
    theon = gallery(name)
    m = sample_structure(theon, range(1, 7), seed=1)
    edges = sorted(t for t in m.relation("E") if t[0] < t[1])
    est = phi(theon, TRIANGLE, samples=10**5, seed=2)
    kind = "exact" if est.exact else "Monte Carlo"
    print(f"{name:<16} one sample on 6 vertices: {len(edges):>2} edges   triangle density {est} ({kind})")

print()
print("triangle density of a uniform random graph:", Fraction(1, 8))
for other, n in (("twist_graph", 3), ("semitwist_graph", 4), ("bipartite_graph", 3)):
    rep = equivalence_test(gallery(other), gallery("qr_graph"), n, samples=10**5, seed=0)
    print(f"{other} vs qr_graph on {n} vertices: {rep}")
