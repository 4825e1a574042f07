#!/usr/bin/env python3
"""Where discrepancy and coupling-uniqueness part ways.

In disc_3hypergraph a triple whose vertices all have weight above 1/2 is
an edge exactly when an odd number of its pairs have weight below 1/2.
On three vertices every pinning of the vertex weights still gives edge
probability 1/2.  On four vertices the parity constraint shows: if every
vertex is high, the edge count is always even.

    python3 demos/quasirandomness.py
"""

from theons import counterexample_suite, disc_test, gallery, ucouple_test
from theons.quasitest import exact_disc

disc = gallery("disc_3hypergraph")
print("exact conditional tables agree across pinnings:")
for n in (3, 4):
    print(f"  n={n}: {exact_disc(disc, 1, n)}")

print()
print(disc_test(disc, 1, 3, seed=0).line())
rep = disc_test(disc, 1, 4, seed=0)
print(rep.line())
low, high = rep.witness["cells"]
print("  witnessing pinnings (vertex weights):",
      [c["w"][0] for c in low.values()], "vs", [c["w"][0] for c in high.values()])
print(ucouple_test(disc, 1, 4, trials=10**5, seed=0).line())

print()
print("the full separation suite:")
suite = counterexample_suite(seed=0)
for r in suite.reports:
    print(" ", r.line())
print("passed" if suite.passed else "FAILED")
