"""Stripping and simulating order variables.

A realization family turns order-free randomness into weight-plus-order
randomness.  At level i the forward map f_i reads an (x, y) weight pair per
subset of [i]: the output weight is x at the top, and each output order is
the pullback of the usual order along tau_i(y_top) composed with sigma_y,
where sigma_y sorts the y values of the co-singletons.  The almost inverse
g_i keeps x and re-encodes the order into h_i, built bottom-up so that
f_i(g_i(...)) returns the input.

Permutations are 0-based one-line arrays: ``perm[u]`` is the image of u+1,
minus one.  An order is a rank array over the sorted elements, and the
pullback of the usual order along a permutation p has ranks p.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .peon import (ChamberGridPeon, EuclideanStructure, Peon, cosingleton_sigma, dependency_check,
                   disjoint_union_theon, interpret_theon)
from .space import (FixedOrderPoint, LevelPoint, Mask, Point, SpaceDescriptor, colex_subsets, grid_cell,
                    interleave_weights, lex_permutations, perm_index, r_sets, split_weight)
from .symbols import And, Atom, Interpretation, Language, Or, Predicate, fresh_name

log = logging.getLogger(__name__)

I_MAX = 6


# ---------------------------------------------------------------- building blocks

def tau(i: int, t) -> np.ndarray:
    """The permutation with index floor(t*i!) in the lexicographic enumeration."""
    return lex_permutations(i)[grid_cell(t, math.factorial(i))]


def sigma_sort(y) -> np.ndarray:
    """sigma_y from the co-singleton values.

    ``y[..., u-1]`` is the value at [i] minus {u}; sigma_y(u) is the rank of
    that value.  Ties go to the smaller removed index and are logged.
    """
    y = np.asarray(y, dtype=float)
    if y.shape[-1] > 1:
        s = np.sort(y, axis=-1)
        ties = int(np.any(s[..., 1:] == s[..., :-1], axis=-1).sum())
        if ties:
            log.warning("sigma_sort: %d inputs with tied co-singleton values", ties)
    return cosingleton_sigma(y)


def _lifted_ranks(top, cos_values) -> np.ndarray:
    """Ranks of (tau(top) ∘ sigma)^*(<=): element u gets tau[sigma[u]]."""
    s = cos_values.shape[-1]
    sig = cosingleton_sigma(cos_values)
    t = tau(s, top)
    return np.take_along_axis(t, sig, axis=-1).astype(np.int8)


def _cosingletons(a: tuple) -> list[tuple]:
    return [tuple(v for v in a if v != u) for u in a]


# ---------------------------------------------------------------- the family

@dataclass(frozen=True)
class RealizationFamily:
    """The realization with d order outputs.

    Natively the source weight has 1+d components (x, y_1..y_d), which is the
    d-fold product of the single-order construction sharing one x.  With
    ``packed`` the y components are carried interleaved in one weight so the
    source is [0,1)^2 for every d (exact only for d=1).
    """

    d: int = 1
    i_max: int = I_MAX
    packed: bool = False

    def __post_init__(self):
        if self.d < 0:
            raise ValueError("d must be non-negative")
        if self.i_max > 8:
            raise ValueError("i_max above 8 exceeds the factorial cap")

    @property
    def source(self) -> SpaceDescriptor:
        if self.d == 0:
            return SpaceDescriptor(1, 0)
        return SpaceDescriptor(2 if self.packed else 1 + self.d, 0)

    @property
    def target(self) -> SpaceDescriptor:
        return SpaceDescriptor(1, self.d)

    @property
    def inverse_source(self) -> SpaceDescriptor:
        return SpaceDescriptor(self.source.p, self.d)

    def y(self, x: Point, subset: tuple, j: int) -> np.ndarray:
        """The y value feeding order slot j at ``subset``."""
        if self.packed and self.d > 1:
            return split_weight(x.weight_component(subset, 1), self.d)[j]
        return x.weight_component(subset, 1 + j)

    def y_components(self, j: int) -> tuple[int, ...]:
        return (1,) if self.packed else (1 + j,)

    def check_level(self, s: int) -> None:
        if s > self.i_max:
            raise ValueError(f"subset size {s} exceeds the level cap {self.i_max}")

    # forward maps
    def lift(self, x: Point) -> "LiftedPoint":
        return LiftedPoint(x, self)

    def hat_f(self, x: Point) -> LevelPoint:
        return hat_f(x, self)

    def hat_g(self, x: Point):
        return hat_g(x, self)


class LiftedPoint(Point):
    """Lazy f-hat of ``base``: weight x_A, order slot j from tau(y_A) ∘ sigma over the co-singletons."""

    def __init__(self, base: Point, family: RealizationFamily):
        if base.descriptor != family.source:
            raise ValueError(f"point descriptor {base.descriptor} is not the family source {family.source}")
        self.base, self.family = base, family
        self.vertices, self.size, self.levels = base.vertices, base.size, base.levels
        self.descriptor = family.target

    def weight_component(self, subset, c):
        return self.base.weight_component(subset, 0)

    def order_ranks(self, subset, j):
        s = len(subset)
        self.family.check_level(s)
        top = self.family.y(self.base, subset, j)
        cos = np.stack([self.family.y(self.base, b, j) for b in _cosingletons(subset)], axis=-1)
        return _lifted_ranks(top, cos)


def hat_f(x: Point, family: RealizationFamily = RealizationFamily()) -> LevelPoint:
    """f-hat_V applied to every row of ``x``."""
    return LiftedPoint(x, family).materialize()


def realize_f(x: Point, family: RealizationFamily = RealizationFamily()) -> tuple[np.ndarray, np.ndarray]:
    """f_i on a point over [i]: (weight, ranks of shape (rows, d, i))."""
    top = tuple(x.vertices)
    lp = LiftedPoint(x, family)
    ranks = np.stack([lp.order(*top, j=j) for j in range(family.d)], axis=1) if family.d else \
        np.zeros((x.size, 0, len(top)), dtype=np.int8)
    return lp.weight_component(top, 0), ranks


# ---------------------------------------------------------------- the almost inverse

@dataclass
class Degeneracy:
    """Rows hitting the measure-zero sets where the construction is arbitrary."""

    tied_inputs: np.ndarray  # rows with two equal y values on distinct subsets
    tied_h: np.ndarray  # rows where co-singleton h values tie
    nudged: int = 0  # h values moved by one ulp to land in the intended cell

    @property
    def rows(self) -> np.ndarray:
        return self.tied_inputs | self.tied_h

    @property
    def count(self) -> int:
        return int(self.rows.sum())


def _h_levels(x: Point, family: RealizationFamily, j: int):
    """h_|A| at every stored subset A for order slot j, plus k and degeneracy flags."""
    vs = tuple(x.vertices)
    n = len(vs)
    levels = x.levels
    h: dict[tuple, np.ndarray] = {}
    k: dict[tuple, np.ndarray] = {}
    tied_h = np.zeros(x.size, dtype=bool)
    nudged = 0
    for s in range(1, levels + 1):
        family.check_level(s)
        fact = math.factorial(s)
        for row in colex_subsets(n, s):
            a = tuple(vs[i] for i in row)
            y = family.y(x, a, j)
            if s == 1:
                h[a], k[a] = y.copy(), np.ones(x.size, dtype=np.int64)
                continue
            hc = np.stack([h[b] for b in _cosingletons(a)], axis=-1)
            srt = np.sort(hc, axis=-1)
            tied_h |= np.any(srt[:, 1:] == srt[:, :-1], axis=-1)
            sig = cosingleton_sigma(hc)
            ranks = x.order_ranks(a, j).astype(np.int64)
            pi = np.empty_like(ranks)
            np.put_along_axis(pi, sig, ranks, axis=-1)
            kk = perm_index(pi) + 1
            hv = (y + (kk - 1)) / fact
            for _ in range(4):
                cell = grid_cell(hv, fact)
                low, high = cell < kk - 1, cell > kk - 1
                if not (low.any() or high.any()):
                    break
                nudged += int(low.sum() + high.sum())
                hv = np.where(low, np.nextafter(hv, 1.0), np.where(high, np.nextafter(hv, 0.0), hv))
            h[a], k[a] = hv, kk
    return h, k, tied_h, nudged


def _tied_inputs(x: Point, family: RealizationFamily) -> np.ndarray:
    out = np.zeros(x.size, dtype=bool)
    subs = r_sets(x.vertices, x.levels)
    for j in range(family.d):
        vals = np.sort(np.stack([family.y(x, a, j) for a in subs], axis=-1), axis=-1)
        if vals.shape[-1] > 1:
            out |= np.any(vals[:, 1:] == vals[:, :-1], axis=-1)
    return out


def hat_g(x: Point, family: RealizationFamily = RealizationFamily()) -> tuple[LevelPoint, Degeneracy]:
    """g-hat_V: keeps x and replaces (y, orders) by the h values.

    ``x`` carries the family's source weights plus d orders per subset; the
    result carries source weights only.
    """
    if x.descriptor != family.inverse_source:
        raise ValueError(f"point descriptor {x.descriptor} is not {family.inverse_source}")
    vs = tuple(x.vertices)
    n = len(vs)
    hs, tied_h, nudged = [], np.zeros(x.size, dtype=bool), 0
    for j in range(family.d):
        h, _, t, nd = _h_levels(x, family, j)
        hs.append(h)
        tied_h |= t
        nudged += nd
    p = family.source.p
    weights = []
    for s in range(1, x.levels + 1):
        subs = [tuple(vs[i] for i in row) for row in colex_subsets(n, s)]
        w = np.empty((len(subs), x.size, p))
        for r, a in enumerate(subs):
            w[r, :, 0] = x.weight_component(a, 0)
            if family.d == 0:
                continue
            if family.packed and family.d > 1:
                w[r, :, 1] = interleave_weights(*[h[a] for h in hs])
            else:
                for j, h in enumerate(hs):
                    w[r, :, 1 + j] = h[a]
        weights.append(w)
    deg = Degeneracy(_tied_inputs(x, family), tied_h, nudged)
    if deg.count or nudged:
        log.warning("hat_g: %d degenerate rows (tied values), %d h values nudged by one ulp", deg.count, nudged)
    out = LevelPoint(vs, family.source, weights, [None] * x.levels, validate=False)
    return out, deg


def h_and_k(x: Point, family: RealizationFamily = RealizationFamily(), j: int = 0):
    """(h_i, k_i) at the top subset of a point over [i]."""
    h, k, _, _ = _h_levels(x, family, j)
    top = tuple(x.vertices)
    return h[top], k[top]


def realize_g(x: Point, family: RealizationFamily = RealizationFamily()) -> np.ndarray:
    """g_i on a point over [i]: the source weight at the top subset, shape (rows, p)."""
    out, _ = hat_g(x, family)
    return out.weight(tuple(x.vertices))


# ---------------------------------------------------------------- theon pullback

def _lcm(values) -> int:
    out = 1
    for v in values:
        out = out * v // math.gcd(out, v)
    return out


def pull_peon(family: RealizationFamily, pe: Peon) -> Peon:
    if pe.descriptor != family.target:
        raise ValueError(f"peon descriptor {pe.descriptor} is not the family target {family.target}")
    weights, ranked, grids = set(), set(), [1]
    for a, c in pe.mask.weights:
        weights.add((a, 0))
    for a, j in pe.mask.orders:
        family.check_level(len(a))
        for comp in family.y_components(j):
            weights.add((a, comp))
            for b in _cosingletons(a):
                weights.add((b, comp))
                ranked.add((b, comp))
        grids.append(math.factorial(len(a)))
    mask = Mask(frozenset(weights), frozenset())
    inner = pe
    fn = lambda x: inner.evaluate(LiftedPoint(x, family))
    name = f"pull({pe.name})"
    if pe.is_chamber_grid and not (family.packed and family.d > 1):
        ranked |= {(a, 0) for a, _ in pe.ranked}
        return ChamberGridPeon(pe.arity, family.source, fn, mask, grid=_lcm(grids + [pe.grid]), ranked=ranked,
                               name=name)
    return Peon(pe.arity, family.source, fn, mask, name=name)


def pull_theon(family: RealizationFamily, theon: EuclideanStructure) -> EuclideanStructure:
    """f^*(N): membership of the lifted point in N."""
    if theon.descriptor != family.target:
        raise ValueError(f"theon descriptor {theon.descriptor} is not the family target {family.target}")
    peons = {n: pull_peon(family, pe) for n, pe in theon.peons.items()}
    return EuclideanStructure(theon.language, peons, family.source, name=f"pull({theon.name})")


def strip_orders(theon: EuclideanStructure, i_max: int = I_MAX) -> EuclideanStructure:
    """Order-free representation of ``theon`` (its weights must have one component)."""
    d = theon.descriptor.d
    if theon.descriptor.p != 1:
        raise ValueError("strip_orders needs weight width 1; interleave wider weights first")
    return pull_theon(RealizationFamily(d, i_max), theon)


# ---------------------------------------------------------------- order simulation

def order_code(orders: Sequence[tuple]) -> str:
    return ".".join("".join(str(v) for v in o) for o in orders)


@dataclass
class SimulationBundle:
    ell: int
    language: Language  # the Q_⊲ symbols
    assignments: dict  # Q_⊲ name -> (Q, {A: ranked list})
    H: EuclideanStructure
    G: EuclideanStructure
    orientation: str
    interpretation: Interpretation

    def interpreted(self) -> EuclideanStructure:
        return interpret_theon(self.interpretation, self.G)


def _independent_below(theon: EuclideanStructure, ell: int, trials: int, seed: int) -> None:
    for name, pe in theon.peons.items():
        small = [a for a in pe.mask.subsets() if len(a) <= ell]
        for a in small:
            rep = dependency_check(pe, a, trials=trials, seed=seed)
            if not rep:
                raise ValueError(f"peon {name} reads coordinate {a} of size <= {ell}; it is not {ell}-independent")


def simulate_orders(theon: EuclideanStructure, ell: int, trials: int = 2000, seed: int = 0) -> SimulationBundle:
    """Replace the orders on (ell+1)-sets by a separate quasirandom (ell+1)-orientation.

    For each symbol Q and each choice ⊲ of an order on every (ell+1)-subset of
    [k(Q)], Q_⊲ holds where Q holds once those orders are overwritten by ⊲.
    G adds an orientation symbol reading exactly those order coordinates, and
    I(Q) picks the Q_⊲ matching the orientation.
    """
    if theon.descriptor.d != 1:
        raise ValueError("order simulation needs exactly one order variable per subset")
    if ell < 0:
        raise ValueError("ell must be non-negative")
    lex_permutations(ell + 1)
    _independent_below(theon, ell, trials, seed)
    desc = theon.descriptor
    preds, peons, assignments, formulas_parts = [], {}, {}, {}
    for q in theon.language:
        k = q.arity
        sets = list(itertools.combinations(range(1, k + 1), ell + 1)) if k >= ell + 1 else []
        choices = itertools.product(*[list(itertools.permutations(a)) for a in sets])
        pe = theon.peons[q.name]
        formulas_parts[q.name] = []
        for choice in choices:
            name = f"{q.name}@{order_code(choice)}"
            fixed = {(a, 0): tuple(o.index(v) for v in a) for a, o in zip(sets, choice)}
            mask = Mask(pe.mask.weights, frozenset(e for e in pe.mask.orders if len(e[0]) != ell + 1))
            fn = (lambda inner, fx: (lambda x: inner.evaluate(FixedOrderPoint(x, fx))))(pe, fixed)
            if pe.is_chamber_grid:
                hp = ChamberGridPeon(k, desc, fn, mask, grid=pe.grid, ranked=pe.ranked, name=name)
            else:
                hp = Peon(k, desc, fn, mask, name=name)
            preds.append(Predicate(name, k, False))
            peons[name] = hp
            assignments[name] = (q.name, dict(zip(sets, choice)))
            formulas_parts[q.name].append((name, choice))
    lang = Language(tuple(preds))
    h = EuclideanStructure(lang, peons, desc, name=f"H({theon.name})")
    o_name = fresh_name("O", lang.names)
    top = tuple(range(1, ell + 2))
    o_peon = ChamberGridPeon(ell + 1, desc, lambda x: x.is_increasing(*top), Mask(frozenset(), frozenset({(top, 0)})),
                             grid=1, name=f"orientation({ell + 1})")
    o_theon = EuclideanStructure(Language((Predicate(o_name, ell + 1),)), {o_name: o_peon}, desc, name="O")
    g = disjoint_union_theon(h, o_theon)
    formulas = {}
    for q in theon.language:
        variables = tuple(range(1, q.arity + 1))
        disjuncts = []
        for name, choice in formulas_parts[q.name]:
            conj = [Atom(name, variables)] + [Atom(o_name, tuple(o)) for o in choice]
            disjuncts.append(And(tuple(conj)))
        formulas[q.name] = Or(tuple(disjuncts))
    interp = Interpretation(theon.language, g.language, formulas)
    return SimulationBundle(ell, lang, assignments, h, g, o_name, interp)
