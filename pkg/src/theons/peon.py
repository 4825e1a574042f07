"""Membership predicates (peons), theons, the example gallery and combinators.

A peon of arity k is a vectorized predicate on batches of points over
{1,...,k}.  It is always evaluated through a masked view, so reading a
coordinate outside its declared mask raises instead of silently widening
the dependency.

Chamber-grid peons are the ones whose membership only depends on the grid
cell floor(w*m) of each weight coordinate, the relative order of "ranked"
coordinates sharing a cell, and the order coordinates.  For those the
induced densities are computed exactly by enumerating chambers.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .space import (Injection, Mask, MaskedPoint, Point, PulledPoint, SlicedPoint, SpaceDescriptor,
                    grid_cell, lex_permutations, perm_index, r_sets, sample_points)
from .symbols import (And, Atom, Eq, Formula, Interpretation, Language, Not, Or, Predicate,
                      disjoint_union_language)

Predicate_fn = Callable[[Point], np.ndarray]


class Peon:
    """Membership predicate for one predicate symbol."""

    def __init__(self, arity: int, descriptor: SpaceDescriptor, fn: Predicate_fn, mask: Mask, name: str = ""):
        if arity < 1:
            raise ValueError("arity must be positive")
        self.arity = arity
        self.descriptor = descriptor
        self.fn = fn
        self.mask = mask
        self.name = name
        top = tuple(range(1, arity + 1))
        for a, c in mask.weights:
            if not set(a) <= set(top) or c >= descriptor.p:
                raise ValueError(f"mask entry {(a, c)} does not fit arity {arity} and {descriptor}")
        for a, j in mask.orders:
            if not set(a) <= set(top) or j >= descriptor.d:
                raise ValueError(f"mask entry {(a, j)} does not fit arity {arity} and {descriptor}")

    @property
    def is_chamber_grid(self) -> bool:
        return False

    def evaluate(self, x: Point) -> np.ndarray:
        """Membership of every row of ``x`` (a batch of points over [k])."""
        if x.descriptor != self.descriptor:
            raise ValueError(f"point descriptor {x.descriptor} does not match peon descriptor {self.descriptor}")
        if tuple(x.vertices) != tuple(range(1, self.arity + 1)):
            raise ValueError(f"peon of arity {self.arity} needs a point over 1..{self.arity}")
        out = np.asarray(self.fn(MaskedPoint(x, self.mask)), dtype=bool)
        return np.broadcast_to(out, (x.size,)).copy()

    __call__ = evaluate

    def __repr__(self):
        return f"{type(self).__name__}({self.name or '?'}, arity={self.arity}, {self.descriptor})"


class ChamberGridPeon(Peon):
    """Peon constant on the chambers of an m-grid.

    ``ranked`` lists the (subset, component) weight coordinates whose relative
    order inside a shared cell matters; the other masked weights are read
    only through their cell.
    """

    def __init__(self, arity, descriptor, fn, mask, grid: int, ranked: Iterable = (), name: str = ""):
        super().__init__(arity, descriptor, fn, mask, name)
        if grid < 1:
            raise ValueError("grid resolution must be positive")
        self.grid = int(grid)
        self.ranked = frozenset(ranked)
        if not self.ranked <= mask.weights:
            raise ValueError("ranked coordinates must be inside the mask")
        self._table = None

    @property
    def is_chamber_grid(self) -> bool:
        return True

    def coordinates(self) -> "ChamberLayout":
        return ChamberLayout.build(sorted(self.mask.weights), self.ranked, sorted(self.mask.orders), self.grid)

    def table(self) -> dict:
        """Truth value per chamber, computed on one interior representative each."""
        if self._table is None:
            layout = self.coordinates()
            rows = layout.enumerate()
            pt = layout.representatives(rows, tuple(range(1, self.arity + 1)), self.descriptor)
            member = self.evaluate(pt)
            self._table = {rows.key(i): bool(member[i]) for i in range(rows.count)}
        return self._table

    def lookup(self, x: Point) -> np.ndarray:
        """Membership of each row of ``x`` read from the chamber table."""
        layout = self.coordinates()
        keys = layout.locate(x)
        table = self.table()
        return np.array([table[k] for k in keys], dtype=bool)


# ---------------------------------------------------------------- chambers

@dataclass
class ChamberRows:
    """A batch of chambers: cells and within-cell ranks per weight coordinate,
    lexicographic order index per order coordinate."""

    cells: np.ndarray
    keys: np.ndarray
    occupancy: np.ndarray
    orders: np.ndarray
    denominators: np.ndarray

    @property
    def count(self) -> int:
        return self.cells.shape[0]

    def key(self, i: int) -> tuple:
        return (tuple(self.cells[i]), tuple(self.keys[i]), tuple(self.orders[i]))


@dataclass
class ChamberLayout:
    weights: list  # (subset, component)
    ranked: list  # bool per weight coordinate
    orders: list  # (subset, slot)
    grid: int

    @classmethod
    def build(cls, weights, ranked, orders, grid) -> "ChamberLayout":
        weights = list(weights)
        return cls(weights, [w in ranked for w in weights], list(orders), grid)

    def order_sizes(self) -> list[int]:
        return [len(a) for a, _ in self.orders]

    def estimate(self) -> int:
        """Number of chambers (exact count)."""
        m = self.grid
        r = sum(self.ranked)
        u = len(self.weights) - r
        # summing prod(occupancy!) over placements of r labelled coordinates gives r! * C(r+m-1, m-1)
        ranked_total = math.factorial(r) * math.comb(r + m - 1, m - 1)
        return ranked_total * m ** u * math.prod(math.factorial(s) for s in self.order_sizes())

    def enumerate(self, cap: int = 4 * 10**6) -> ChamberRows:
        total = self.estimate()
        if total > cap:
            raise ValueError(f"{total} chambers exceed the cap {cap}")
        m, nw = self.grid, len(self.weights)
        ranked_idx = [i for i, r in enumerate(self.ranked) if r]
        cell_rows, key_rows, occ_rows, den_rows = [], [], [], []
        for cells in itertools.product(range(m), repeat=nw):
            groups: dict[int, list[int]] = {}
            for i in ranked_idx:
                groups.setdefault(cells[i], []).append(i)
            occ = [0] * nw
            for g in groups.values():
                for i in g:
                    occ[i] = len(g)
            den = m ** nw * math.prod(math.factorial(len(g)) for g in groups.values())
            glist = list(groups.values())
            for perms in itertools.product(*[itertools.permutations(range(len(g))) for g in glist]):
                keys = [0] * nw
                for g, perm in zip(glist, perms):
                    for i, k in zip(g, perm):
                        keys[i] = k
                cell_rows.append(cells)
                key_rows.append(keys)
                occ_rows.append(occ)
                den_rows.append(den)
        sizes = self.order_sizes()
        order_choices = list(itertools.product(*[range(math.factorial(s)) for s in sizes]))
        order_den = math.prod(math.factorial(s) for s in sizes)
        nc, no = len(cell_rows), len(order_choices)
        cells = np.repeat(np.array(cell_rows, dtype=np.int64).reshape(nc, nw), no, axis=0)
        keys = np.repeat(np.array(key_rows, dtype=np.int64).reshape(nc, nw), no, axis=0)
        occ = np.repeat(np.array(occ_rows, dtype=np.int64).reshape(nc, nw), no, axis=0)
        dens = np.repeat(np.array(den_rows, dtype=object), no) * order_den
        orders = np.tile(np.array(order_choices, dtype=np.int64).reshape(no, len(sizes)), (nc, 1))
        return ChamberRows(cells, keys, occ, orders, dens)

    def representatives(self, rows: ChamberRows, vertices: Sequence, descriptor: SpaceDescriptor,
                        fill: Point | None = None, levels: int = 1) -> Point:
        """One interior point per chamber.

        Ranked coordinates sit at (cell + (key+1)/(occupancy+1))/m, the rest at
        cell centres.  Coordinates outside the layout are copied from ``fill``
        when given and set to 0 otherwise.
        """
        from .space import LevelPoint, colex_subsets  # local import keeps the module graph flat
        vs = tuple(sorted(vertices))
        n, p, d, m = len(vs), descriptor.p, descriptor.d, self.grid
        count = rows.count
        levels = max([len(a) for a, _ in self.weights] + [len(a) for a, _ in self.orders] + [levels])
        if fill is not None:
            levels = max(levels, fill.levels)
        weights, ranks = [], []
        for s in range(1, levels + 1):
            c = math.comb(n, s)
            if fill is not None and s <= fill.levels:
                base = fill.materialize() if not isinstance(fill, LevelPoint) else fill
                weights.append(np.broadcast_to(base.weights[s - 1], (c, count, p)).copy())
                if d and s > 1:
                    ranks.append(np.broadcast_to(base.ranks[s - 1], (c, count, d, s)).copy())
                else:
                    ranks.append(None)
            else:
                weights.append(np.zeros((c, count, p)))
                ranks.append(np.broadcast_to(np.arange(s, dtype=np.int8), (c, count, d, s)).copy()
                             if d and s > 1 else None)
        pos = {v: i for i, v in enumerate(vs)}

        def loc(a):
            idx = sorted(pos[v] for v in a)
            return len(idx), sum(math.comb(i, j + 1) for j, i in enumerate(idx))

        for i, ((a, comp), is_ranked) in enumerate(zip(self.weights, self.ranked)):
            s, r = loc(a)
            cell = rows.cells[:, i].astype(float)
            if is_ranked:
                frac = (rows.keys[:, i] + 1) / (rows.occupancy[:, i] + 1)
            else:
                frac = 0.5
            weights[s - 1][r, :, comp] = (cell + frac) / m
        for i, (a, slot) in enumerate(self.orders):
            s, r = loc(a)
            ranks[s - 1][r, :, slot, :] = lex_permutations(s)[rows.orders[:, i]]
        return LevelPoint(vs, descriptor, weights, ranks, validate=False)

    def locate(self, x: Point) -> list[tuple]:
        """Chamber key of every row of ``x``."""
        m = self.grid
        nw = len(self.weights)
        vals = np.stack([x.weight_component(a, c) for a, c in self.weights], axis=1) if nw else np.zeros((x.size, 0))
        cells = grid_cell(vals, m) if nw else np.zeros((x.size, 0), dtype=np.int64)
        keys = np.zeros_like(cells)
        ranked_idx = [i for i, r in enumerate(self.ranked) if r]
        for i in ranked_idx:
            for j in ranked_idx:
                if j != i:
                    same = cells[:, j] == cells[:, i]
                    keys[:, i] += same & ((vals[:, j] < vals[:, i]) | ((vals[:, j] == vals[:, i]) & (j < i)))
        orders = (np.stack([perm_index(x.order(*a, j=slot)) for a, slot in self.orders], axis=1)
                  if self.orders else np.zeros((x.size, 0), dtype=np.int64))
        return [(tuple(cells[b]), tuple(keys[b]), tuple(orders[b])) for b in range(x.size)]


def chamber_volume(cells: Sequence[int], m: int, ranked: Sequence[bool] | None = None,
                   order_sizes: Sequence[int] = ()) -> Fraction:
    """Exact volume of one chamber.

    m^-N * prod over cells of 1/(ranked occupancy)! * prod over order coordinates of 1/|A|!.
    By default every weight coordinate is ranked.
    """
    cells = list(cells)
    ranked = [True] * len(cells) if ranked is None else list(ranked)
    occ: dict[int, int] = {}
    for c, r in zip(cells, ranked):
        if not 0 <= c < m:
            raise ValueError(f"cell {c} outside 0..{m - 1}")
        if r:
            occ[c] = occ.get(c, 0) + 1
    den = m ** len(cells) * math.prod(math.factorial(k) for k in occ.values())
    den *= math.prod(math.factorial(s) for s in order_sizes)
    return Fraction(1, den)


# ---------------------------------------------------------------- theons

class EuclideanStructure:
    """A theon: one peon per predicate symbol over a shared space."""

    def __init__(self, language: Language, peons: Mapping[str, Peon], descriptor: SpaceDescriptor,
                 name: str = ""):
        if set(peons) != set(language.names):
            raise ValueError("need exactly one peon per predicate symbol")
        for p in language:
            pe = peons[p.name]
            if pe.arity != p.arity:
                raise ValueError(f"peon for {p.name} has arity {pe.arity}, symbol has {p.arity}")
            if pe.descriptor != descriptor:
                raise ValueError(f"peon for {p.name} has descriptor {pe.descriptor}, expected {descriptor}")
        self.language = language
        self.peons = dict(peons)
        self.descriptor = descriptor
        self.name = name

    @property
    def is_chamber_grid(self) -> bool:
        return all(pe.is_chamber_grid for pe in self.peons.values())

    def __getitem__(self, name: str) -> Peon:
        return self.peons[name]

    def __repr__(self):
        return f"EuclideanStructure({self.name or '?'}, {list(self.language.names)}, {self.descriptor})"


def eval_peon(peon: Peon, x: Point) -> bool:
    """Membership of a single point."""
    if x.size != 1:
        raise ValueError("eval_peon takes a single point; use Peon.evaluate for batches")
    return bool(peon.evaluate(x)[0])


def _top(k: int) -> tuple:
    return tuple(range(1, k + 1))


def _cosingletons(k: int) -> list[tuple]:
    return [tuple(v for v in _top(k) if v != u) for u in _top(k)]


def _pairs(k: int) -> list[tuple]:
    return list(itertools.combinations(_top(k), 2))


# ---------------------------------------------------------------- gallery

D0 = SpaceDescriptor(1, 0)
D1 = SpaceDescriptor(1, 1)


def _single(name, symbol, arity, peon, symmetric=False):
    lang = Language((Predicate(symbol, arity, symmetric),))
    return EuclideanStructure(lang, {symbol: peon}, peon.descriptor, name)


def qr_graph() -> EuclideanStructure:
    """Edge iff the pair weight is below 1/2."""
    fn = lambda x: x.w(1, 2) < 0.5
    pe = ChamberGridPeon(2, D0, fn, Mask.of([(1, 2)]), grid=2, name="qr_graph")
    return _single("qr_graph", "E", 2, pe, True)


def twist_graph() -> EuclideanStructure:
    """Edge iff (w1 + w2 + w12) mod 1 < 1/2."""
    fn = lambda x: np.mod(x.w(1) + x.w(2) + x.w(1, 2), 1.0) < 0.5
    pe = Peon(2, D0, fn, Mask.of([(1,), (2,), (1, 2)]), name="twist_graph")
    return _single("twist_graph", "E", 2, pe, True)


def bipartite_graph() -> EuclideanStructure:
    """Edge iff exactly one endpoint weight is below 1/2."""
    fn = lambda x: (x.w(1) < 0.5) != (x.w(2) < 0.5)
    pe = ChamberGridPeon(2, D0, fn, Mask.of([(1,), (2,)]), grid=2, name="bipartite_graph")
    return _single("bipartite_graph", "E", 2, pe, True)


def qr_tournament_0() -> EuclideanStructure:
    """(v,w) is an arc iff exactly one of w_v < w_w and w_vw < 1/2 holds."""
    fn = lambda x: (x.w(1) < x.w(2)) != (x.w(1, 2) < 0.5)
    mask = Mask.of([(1,), (2,), (1, 2)])
    pe = ChamberGridPeon(2, D0, fn, mask, grid=2, ranked=Mask.of([(1,), (2,)]).weights, name="qr_tournament_0")
    return _single("qr_tournament_0", "P", 2, pe)


def _pair_parity(x) -> np.ndarray:
    below = (x.w(1, 2) < 0.5).astype(int) + (x.w(1, 3) < 0.5) + (x.w(2, 3) < 0.5)
    return below % 2 == 1


def disc_3hypergraph() -> EuclideanStructure:
    def fn(x):
        low = np.minimum(np.minimum(x.w(1), x.w(2)), x.w(3)) < 0.5
        return (low & (x.w(1, 2, 3) < 0.5)) | (~low & _pair_parity(x))
    pe = ChamberGridPeon(3, D0, fn, Mask.of(r_sets(_top(3))), grid=2, name="disc_3hypergraph")
    return _single("disc_3hypergraph", "H", 3, pe, True)


def odd_3hypergraph() -> EuclideanStructure:
    """Edge iff an odd number of the three pair weights are below 1/2."""
    pe = ChamberGridPeon(3, D0, _pair_parity, Mask.of(_pairs(3)), grid=2, name="odd_3hypergraph")
    return _single("odd_3hypergraph", "H", 3, pe, True)


def cycle_3hypergraph() -> EuclideanStructure:
    """Triples on which the 0-theon tournament orientations form a directed 3-cycle."""
    def arc(x, a, b):
        return (x.w(a) < x.w(b)) != (x.w(a, b) < 0.5)

    def fn(x):
        o12, o23, o13 = arc(x, 1, 2), arc(x, 2, 3), arc(x, 1, 3)
        return (o12 & o23 & ~o13) | (~o12 & ~o23 & o13)

    mask = Mask.of([(1,), (2,), (3,)] + _pairs(3))
    pe = ChamberGridPeon(3, D0, fn, mask, grid=2, ranked=Mask.of([(1,), (2,), (3,)]).weights,
                         name="cycle_3hypergraph")
    return _single("cycle_3hypergraph", "H", 3, pe, True)


def semitwist_graph() -> EuclideanStructure:
    def fn(x):
        w1, w2, w12 = x.w(1), x.w(2), x.w(1, 2)
        low = np.minimum(w1, w2) < 0.5
        return (low & (w12 < 0.5)) | (~low & (np.mod(w1 + w2 + w12, 1.0) < 0.5))
    pe = Peon(2, D0, fn, Mask.of([(1,), (2,), (1, 2)]), name="semitwist_graph")
    return _single("semitwist_graph", "E", 2, pe, True)


def kqrO_1theon(k: int = 2, name: str = "P") -> EuclideanStructure:
    """Quasirandom k-orientation with one order variable: P holds iff the order on [k] is the usual one."""
    if k < 1:
        raise ValueError("k must be positive")
    lex_permutations(k)  # factorial cap check
    top = _top(k)
    fn = lambda x: x.is_increasing(*top)
    pe = ChamberGridPeon(k, D1, fn, Mask.of([], [top], d=1), grid=1, name=f"kqrO_1theon({k})")
    return _single(f"kqrO_1theon({k})", name, k, pe)


def cosingleton_sigma(values: np.ndarray) -> np.ndarray:
    """0-based sigma(u) = rank of the value at [k] minus {u}; ties go to the smaller removed index.

    ``values`` has shape (rows, k), column u-1 holding the co-singleton of u.
    """
    order = np.argsort(values, axis=-1, kind="stable")
    sigma = np.empty_like(order)
    np.put_along_axis(sigma, order, np.arange(values.shape[-1]), axis=-1)
    return sigma


def kqrO_0theon(k: int = 2, inverse_enumeration: bool = True, name: str = "P") -> EuclideanStructure:
    """Order-free quasirandom k-orientation.

    P holds iff sigma_x equals the permutation selected by the cell of the
    top weight on a grid of k! cells.  With ``inverse_enumeration`` the
    selected permutation is the inverse of the lexicographic one, which makes
    the peon agree pointwise with the realization pullback of the
    order-variable version; both choices give the same distribution.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    perms = lex_permutations(k)
    fact = math.factorial(k)
    table = np.argsort(perms, axis=1) if inverse_enumeration else perms
    top, cos = _top(k), _cosingletons(k)

    def fn(x):
        vals = np.stack([x.w(*a) for a in cos], axis=-1)
        sigma = cosingleton_sigma(vals)
        chosen = table[grid_cell(x.w(*top), fact)]
        return np.all(sigma == chosen, axis=-1)

    mask = Mask.of([top] + cos)
    pe = ChamberGridPeon(k, D0, fn, mask, grid=fact, ranked=Mask.of(cos).weights, name=f"kqrO_0theon({k})")
    return _single(f"kqrO_0theon({k})", name, k, pe)


def empty_theon(arity: int = 2, name: str = "F", descriptor: SpaceDescriptor = D0) -> EuclideanStructure:
    """A predicate that never holds."""
    pe = ChamberGridPeon(arity, descriptor, lambda x: np.zeros(x.size, dtype=bool), Mask(), grid=1, name="empty")
    return _single("empty", name, arity, pe)


GALLERY: dict[str, Callable[..., EuclideanStructure]] = {
    "qr_graph": qr_graph,
    "twist_graph": twist_graph,
    "bipartite_graph": bipartite_graph,
    "qr_tournament_0": qr_tournament_0,
    "disc_3hypergraph": disc_3hypergraph,
    "odd_3hypergraph": odd_3hypergraph,
    "cycle_3hypergraph": cycle_3hypergraph,
    "semitwist_graph": semitwist_graph,
    "kqrO_1theon": kqrO_1theon,
    "kqrO_0theon": kqrO_0theon,
    "empty": empty_theon,
}


def gallery(name: str, **params) -> EuclideanStructure:
    try:
        build = GALLERY[name]
    except KeyError:
        raise ValueError(f"unknown gallery entry {name!r}; known: {sorted(GALLERY)}") from None
    return build(**params)


# ---------------------------------------------------------------- combinators

def _lcm(values) -> int:
    out = 1
    for v in values:
        out = out * v // math.gcd(out, v)
    return out


def _truth(f: Formula, x: Point, theon: EuclideanStructure) -> np.ndarray:
    if isinstance(f, Atom):
        if len(set(f.args)) != len(f.args):
            return np.zeros(x.size, dtype=bool)
        alpha = Injection.from_tuple(f.args, x.vertices)
        return theon.peons[f.pred].evaluate(PulledPoint(x, alpha))
    if isinstance(f, Eq):
        return np.full(x.size, f.i == f.j)
    if isinstance(f, Not):
        return ~_truth(f.arg, x, theon)
    if isinstance(f, And):
        out = np.ones(x.size, dtype=bool)
        for a in f.args:
            out &= _truth(a, x, theon)
        return out
    if isinstance(f, Or):
        out = np.zeros(x.size, dtype=bool)
        for a in f.args:
            out |= _truth(a, x, theon)
        return out
    raise TypeError(f"not a formula: {f!r}")


def truth_peon(f: Formula, n: int, theon: EuclideanStructure, name: str = "") -> Peon:
    """The truth set of ``f`` (in n variables) as a peon."""
    mask = Mask()
    ranked: set = set()
    grids = []
    chamber = True
    for a in f.atoms():
        if len(set(a.args)) != len(a.args):
            continue
        pe = theon.peons[a.pred]
        alpha = Injection.from_tuple(a.args, _top(n))
        mask = mask | pe.mask.pullback(alpha)
        if pe.is_chamber_grid:
            ranked |= {(alpha.apply(s), c) for s, c in pe.ranked}
            grids.append(pe.grid)
        else:
            chamber = False
    fn = lambda x: _truth(f, x, theon)
    if chamber:
        return ChamberGridPeon(n, theon.descriptor, fn, mask, grid=_lcm(grids), ranked=ranked, name=name)
    return Peon(n, theon.descriptor, fn, mask, name=name)


def interpret_theon(interp: Interpretation, theon: EuclideanStructure) -> EuclideanStructure:
    """I^*(N): each source symbol gets the truth set of its formula."""
    if theon.language.signature() != interp.target.signature():
        raise ValueError("theon is not in the interpretation's target language")
    peons = {p.name: truth_peon(interp.formulas[p.name], p.arity, theon, name=p.name) for p in interp.source}
    return EuclideanStructure(interp.source, peons, theon.descriptor, name=f"I*({theon.name})")


def reduct_theon(theon: EuclideanStructure, names: Iterable[str]) -> EuclideanStructure:
    lang = theon.language.restrict(names)
    return EuclideanStructure(lang, {n: theon.peons[n] for n in lang.names}, theon.descriptor,
                              name=f"{theon.name}|{','.join(lang.names)}")


def _sliced_peon(pe: Peon, descriptor: SpaceDescriptor, comps: Sequence[int], slots: Sequence[int]) -> Peon:
    inner = pe
    fn = lambda x: inner.evaluate(SlicedPoint(x, comps, slots))
    mask = Mask(frozenset((a, comps[c]) for a, c in pe.mask.weights),
                frozenset((a, slots[j]) for a, j in pe.mask.orders))
    if pe.is_chamber_grid:
        ranked = {(a, comps[c]) for a, c in pe.ranked}
        return ChamberGridPeon(pe.arity, descriptor, fn, mask, grid=pe.grid, ranked=ranked, name=pe.name)
    return Peon(pe.arity, descriptor, fn, mask, name=pe.name)


def independent_coupling(n1: EuclideanStructure, n2: EuclideanStructure) -> EuclideanStructure:
    """N1 ⊗ N2 over the product space; colliding names of N2 are renamed."""
    d1, d2 = n1.descriptor, n2.descriptor
    desc = SpaceDescriptor(d1.p + d2.p, d1.d + d2.d)
    lang, rename = disjoint_union_language(n1.language, n2.language)
    comps1, slots1 = list(range(d1.p)), list(range(d1.d))
    comps2, slots2 = list(range(d1.p, d1.p + d2.p)), list(range(d1.d, d1.d + d2.d))
    peons = {n: _sliced_peon(pe, desc, comps1, slots1) for n, pe in n1.peons.items()}
    peons.update({rename[n]: _sliced_peon(pe, desc, comps2, slots2) for n, pe in n2.peons.items()})
    return EuclideanStructure(lang, peons, desc, name=f"{n1.name}⊗{n2.name}")


def disjoint_union_theon(n1: EuclideanStructure, n2: EuclideanStructure) -> EuclideanStructure:
    """Both theons' peons side by side over the same space."""
    if n1.descriptor != n2.descriptor:
        raise ValueError("disjoint union needs a shared space descriptor")
    lang, rename = disjoint_union_language(n1.language, n2.language)
    peons = dict(n1.peons)
    peons.update({rename[n]: pe for n, pe in n2.peons.items()})
    return EuclideanStructure(lang, peons, n1.descriptor, name=f"{n1.name}+{n2.name}")


def rename_theon(theon: EuclideanStructure, mapping: Mapping[str, str]) -> EuclideanStructure:
    preds = tuple(Predicate(mapping.get(p.name, p.name), p.arity, p.symmetric) for p in theon.language)
    peons = {mapping.get(n, n): pe for n, pe in theon.peons.items()}
    return EuclideanStructure(Language(preds), peons, theon.descriptor, theon.name)


# ---------------------------------------------------------------- dependency checks

@dataclass
class DependencyReport:
    independent: bool
    subset: tuple
    trials: int
    witness: tuple | None = None  # (point json, resampled point json) on a flip

    def __bool__(self) -> bool:
        return self.independent


def dependency_check(peon: Peon, subset, trials: int = 10**4, seed: int = 0,
                     which: str = "both") -> DependencyReport:
    """Resample only the coordinate at ``subset`` and look for a membership flip.

    The predicate is evaluated without the mask, so this checks the actual
    behaviour rather than the declaration.  ``which`` picks the weight, the
    orders, or both.
    """
    a = tuple(sorted(subset)) if isinstance(subset, (tuple, list, set, frozenset)) else (subset,)
    top = _top(peon.arity)
    if not a or not set(a) <= set(top):
        raise ValueError(f"{a} is not a subset of {top}")
    if which not in ("both", "weights", "orders"):
        raise ValueError("which must be 'both', 'weights' or 'orders'")
    x = sample_points(top, peon.descriptor, seed, trials)
    fresh = sample_points(top, peon.descriptor, seed, trials, stream=1)
    y = x.copy()
    s, r = y.locate(a)
    if which in ("both", "weights"):
        y.weights[s - 1][r] = fresh.weights[s - 1][r]
    if which in ("both", "orders") and peon.descriptor.d and s > 1:
        y.ranks[s - 1][r] = fresh.ranks[s - 1][r]
    flips = np.flatnonzero(np.asarray(peon.fn(x), dtype=bool) != np.asarray(peon.fn(y), dtype=bool))
    if flips.size:
        b = int(flips[0])
        return DependencyReport(False, a, trials, (x.to_json(b), y.to_json(b)))
    return DependencyReport(True, a, trials)
