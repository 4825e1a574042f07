"""Equivariance, exchangeability and locality checks shared by the sampler and acceptance tests.

Chamber-grid theons are checked exhaustively: every chamber of the joint
layout on [n] contributes one representative point, and every injection
into [n] is tried.  Other theons are checked pointwise on random seeds.
"""

import itertools
from fractions import Fraction

import numpy as np

from theons.density import exact_distribution, joint_layout
from theons.sampler import StructureCodec, all_injections, draw_points, realize_batch
from theons.space import PulledPoint, colex_subsets
from theons.symbols import enumerate_structures, relabel, restrict


def _slot_map(theon, alpha, big_vs):
    """Column of each slot of the pulled structure inside the codomain's slot bits."""
    small = StructureCodec(theon.language, alpha.domain)
    big = StructureCodec(theon.language, big_vs)
    return np.array([big.index[(name, tuple(alpha(v) for v in t))] for name, t in small.slots], dtype=np.int64)


def _check_equivariance(theon, x, vs, injections):
    bits = realize_batch(theon, x)
    for alpha in injections:
        cols = _slot_map(theon, alpha, vs)
        pulled = realize_batch(theon, PulledPoint(x, alpha))
        if not np.array_equal(pulled, bits[:, cols]):
            return False, f"injection {alpha.mapping} breaks equivariance"
    return True, ""


def chamber_points(theon, n):
    vs = tuple(range(1, n + 1))
    layout = joint_layout(theon, vs)
    rows = layout.enumerate()
    levels = max(1, min(theon.language.max_arity(), n))
    return layout.representatives(rows, vs, theon.descriptor, levels=levels)


def equivariance_exhaustive(theon, n):
    vs = tuple(range(1, n + 1))
    x = chamber_points(theon, n)
    maps = [a for k in range(1, n + 1) for a in all_injections(tuple(range(1, k + 1)), vs)]
    return _check_equivariance(theon, x, vs, maps)


def equivariance_pointwise(theon, n, seeds=1000):
    vs = tuple(range(1, n + 1))
    x = draw_points(theon, vs, seed=0, size=seeds)
    maps = [a for k in range(1, n + 1) for a in all_injections(tuple(range(1, k + 1)), vs)]
    return _check_equivariance(theon, x, vs, maps)


def exchangeability_exact(theon, n):
    vs = tuple(range(1, n + 1))
    table = exact_distribution(theon, vs)
    perms = [dict(zip(vs, p)) for p in itertools.permutations(vs)]
    for k in enumerate_structures(theon.language, vs):
        base = table.prob(k)
        for p in perms:
            if table.prob(relabel(k, p)) != base:
                return False, f"{k} and its relabeling by {p} differ"
    return True, ""


def locality_exact(theon, a, b, n):
    """(M|A, M|B) factors exactly for disjoint A, B inside [n]."""
    table = exact_distribution(theon, tuple(range(1, n + 1)))
    joint, left, right = {}, {}, {}
    for k, p in table.probs.items():
        ka, kb = restrict(k, a), restrict(k, b)
        joint[(ka, kb)] = joint.get((ka, kb), Fraction(0)) + p
        left[ka] = left.get(ka, Fraction(0)) + p
        right[kb] = right.get(kb, Fraction(0)) + p
    for ka, pa in left.items():
        for kb, pb in right.items():
            if joint.get((ka, kb), Fraction(0)) != pa * pb:
                return False, f"joint mass of ({ka}, {kb}) is not the product of marginals"
    return True, ""


def locality_pointwise(theon, a, n, seeds=1000):
    """M|A is unchanged when every coordinate not inside A is resampled."""
    vs = tuple(range(1, n + 1))
    x = draw_points(theon, vs, seed=0, size=seeds)
    y = draw_points(theon, vs, seed=1, size=seeds)
    a = tuple(sorted(a))
    for s in range(1, x.levels + 1):
        for idx in range(len(x.weights[s - 1])):
            sub = tuple(vs[i] for i in colex_subsets(n, s)[idx])
            if set(sub) <= set(a):
                y.weights[s - 1][idx] = x.weights[s - 1][idx]
                if y.ranks[s - 1] is not None:
                    y.ranks[s - 1][idx] = x.ranks[s - 1][idx]
    codec = StructureCodec(theon.language, vs)
    cols = [i for i, (_, t) in enumerate(codec.slots) if set(t) <= set(a)]
    bx, by = realize_batch(theon, x), realize_batch(theon, y)
    if not np.array_equal(bx[:, cols], by[:, cols]):
        return False, f"restriction to {a} moved when outside coordinates were resampled"
    return True, ""
