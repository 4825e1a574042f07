#!/usr/bin/env python3
"""Simulating pair orders with a separate random tournament.

A theon that reads the order of each pair is split into one symbol per
choice of pair orders, plus an orientation symbol that carries the order
itself.  Interpreting back recovers the original recipe.

    python3 demos/order_simulation.py
"""

import numpy as np

from theons import equivalence_test, gallery, kqrO_1theon, sample_points, simulate_orders

source = kqrO_1theon(2)
bundle = simulate_orders(source, 1)
print("split symbols:", bundle.language.names)
print("combined language:", bundle.G.language.names)
print("interpretation of P:", bundle.interpretation.formulas["P"])

interpreted = bundle.interpreted()
x = sample_points((1, 2), source.descriptor, seed=0, size=10**5)
agree = np.mean(interpreted["P"].evaluate(x) == source["P"].evaluate(x))
print(f"pointwise agreement on 10^5 points: {agree:.5f}")
rep = equivalence_test(interpreted, gallery("qr_tournament_0"), 3, samples=10**5, seed=1, backend="mc")
print("sampled tournaments vs uniform tournaments on 3 vertices:", rep)
