"""Points, linear orders, subset indexing and injections.

A point assigns to every non-empty subset A of a vertex set a weight in
[0,1)^p and d linear orders of A.  Points are stored in batches: every
accessor returns an array whose first axis runs over the batch rows, so one
object can hold a single point or 10^5 of them.

Orders of a set A are stored as rank arrays over the sorted elements of A:
``ranks[t]`` is the 0-based position of the t-th smallest element of A.  The
public ``OrderAssignment`` form is the ranked list of elements (first element
first).  The enumeration of the permutations of [i] is lexicographic in the
one-line notation, and the order attached to the permutation gamma is the one
in which u has rank gamma(u); all_orders, tau and k share this enumeration.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

log = logging.getLogger(__name__)

FACTORIAL_CAP = 8
COORDINATE_CAP = 10**7


@dataclass(frozen=True)
class SpaceDescriptor:
    """Weight width p (weights live in [0,1)^p) and order degree d."""

    weight_width: int = 1
    order_degree: int = 0

    def __post_init__(self):
        if self.weight_width < 1 or self.order_degree < 0:
            raise ValueError("need weight_width >= 1 and order_degree >= 0")

    @property
    def p(self) -> int:
        return self.weight_width

    @property
    def d(self) -> int:
        return self.order_degree


# ---------------------------------------------------------------- injections

class Injection:
    """An injective map between finite vertex sets."""

    __slots__ = ("mapping", "domain", "codomain", "image")

    def __init__(self, mapping: Mapping, codomain: Iterable | None = None):
        self.mapping = dict(mapping)
        if len(set(self.mapping.values())) != len(self.mapping):
            raise ValueError("map is not injective")
        self.domain = tuple(sorted(self.mapping))
        self.image = tuple(sorted(self.mapping.values()))
        self.codomain = tuple(sorted(set(codomain))) if codomain is not None else self.image
        if not set(self.image) <= set(self.codomain):
            raise ValueError("image is not inside the codomain")

    @classmethod
    def from_tuple(cls, values: Sequence, codomain: Iterable | None = None) -> "Injection":
        """The map [k] -> V sending i to values[i-1]."""
        return cls({i + 1: v for i, v in enumerate(values)}, codomain)

    @classmethod
    def identity(cls, vertices: Iterable) -> "Injection":
        vs = tuple(vertices)
        return cls({v: v for v in vs}, vs)

    def __call__(self, a):
        return self.mapping[a]

    def apply(self, subset: Iterable) -> tuple:
        return tuple(sorted(self.mapping[a] for a in subset))

    def compose(self, inner: "Injection") -> "Injection":
        """self ∘ inner."""
        if not set(inner.image) <= set(self.domain):
            raise ValueError("maps do not compose")
        return Injection({a: self.mapping[inner.mapping[a]] for a in inner.domain}, self.codomain)

    @property
    def is_bijective(self) -> bool:
        return len(self.image) == len(self.codomain)

    def inverse(self) -> "Injection":
        if not self.is_bijective:
            raise ValueError("only bijections are invertible")
        return Injection({b: a for a, b in self.mapping.items()}, self.domain)

    def __eq__(self, other):
        return isinstance(other, Injection) and (self.mapping, self.codomain) == (other.mapping, other.codomain)

    def __repr__(self):
        return f"Injection({self.mapping}, codomain={list(self.codomain)})"


# ---------------------------------------------------------------- orders

@lru_cache(maxsize=None)
def lex_permutations(m: int) -> np.ndarray:
    """All permutations of range(m) in lexicographic order, shape (m!, m)."""
    if m > FACTORIAL_CAP:
        raise ValueError(f"{m}! orders exceed the factorial cap ({FACTORIAL_CAP})")
    arr = np.array(list(itertools.permutations(range(m))), dtype=np.int64).reshape(math.factorial(m), m)
    arr.setflags(write=False)
    return arr


def perm_index(perms) -> np.ndarray:
    """Lexicographic rank (0-based) of each permutation along the last axis."""
    perms = np.asarray(perms)
    m = perms.shape[-1]
    out = np.zeros(perms.shape[:-1], dtype=np.int64)
    for i in range(m - 1):
        smaller = (perms[..., i + 1:] < perms[..., i:i + 1]).sum(axis=-1)
        out += smaller * math.factorial(m - 1 - i)
    return out


def order_from_ranks(elements: Sequence, ranks: Sequence[int]) -> tuple:
    """Ranked list of ``elements`` (sorted) given their ranks."""
    return tuple(elements[i] for i in np.argsort(np.asarray(ranks), kind="stable"))


def ranks_from_order(order: Sequence, elements: Sequence) -> tuple[int, ...]:
    pos = {v: r for r, v in enumerate(order)}
    if set(pos) != set(elements) or len(order) != len(elements):
        raise ValueError(f"{order} is not an order of {list(elements)}")
    return tuple(pos[v] for v in elements)


def all_orders(subset: Iterable) -> list[tuple]:
    """Every linear order of ``subset`` as a ranked list, in the fixed enumeration."""
    elems = tuple(sorted(subset))
    return [order_from_ranks(elems, r) for r in lex_permutations(len(elems))]


def pullback_order(alpha: Injection, order: Sequence) -> tuple:
    """u1 before u2 in the result iff alpha(u1) before alpha(u2) in ``order``."""
    if set(alpha.image) != set(order) or len(order) != len(alpha.domain):
        raise ValueError("injection is not a bijection onto the order's ground set")
    pos = {v: r for r, v in enumerate(order)}
    return tuple(sorted(alpha.domain, key=lambda a: pos[alpha(a)]))


def grid_cell(t, m: int) -> np.ndarray:
    """floor(t*m) computed exactly for doubles t in [0,1)."""
    t = np.asarray(t, dtype=float)
    prod = t * m
    cell = np.floor(prod)
    near = np.abs(prod - np.rint(prod)) < 1e-9
    if near.any():
        flat_t, flat_c = t.reshape(-1), cell.reshape(-1)
        for i in np.flatnonzero(near.reshape(-1)):
            flat_c[i] = math.floor(Fraction(float(flat_t[i])) * m)
        cell = flat_c.reshape(t.shape)
    return np.clip(cell, 0, m - 1).astype(np.int64)


# ---------------------------------------------------------------- subsets

def r_sets(vertices: Iterable, ell: int | None = None) -> list[tuple]:
    """Non-empty subsets (of size <= ell), by size then lexicographically."""
    vs = tuple(sorted(set(vertices)))
    top = len(vs) if ell is None else min(ell, len(vs))
    return [s for k in range(1, top + 1) for s in itertools.combinations(vs, k)]


@lru_cache(maxsize=None)
def colex_subsets(n: int, s: int) -> np.ndarray:
    """Index tuples of the s-subsets of range(n) in colex order, shape (C(n,s), s)."""
    combos = sorted(itertools.combinations(range(n), s), key=lambda c: c[::-1])
    arr = np.array(combos, dtype=np.int64).reshape(len(combos), s)
    arr.setflags(write=False)
    return arr


def colex_rank(idx) -> np.ndarray:
    """Colex rank of sorted index tuples along the last axis."""
    idx = np.asarray(idx, dtype=np.int64)
    out = np.zeros(idx.shape[:-1], dtype=np.int64)
    for j in range(idx.shape[-1]):
        col = idx[..., j]
        # C(col, j+1) computed exactly in int64 for the small sizes used here
        term = np.ones_like(col)
        for t in range(j + 1):
            term = term * (col - t) // (t + 1)
        out += np.where(col >= j + 1, term, 0)
    return out


# ---------------------------------------------------------------- masks

def _as_subset(a) -> tuple:
    if isinstance(a, (tuple, list, set, frozenset)):
        return tuple(sorted(a))
    return (a,)


@dataclass(frozen=True)
class Mask:
    """Coordinates a predicate may read: (subset, component) weight pairs and
    (subset, slot) order pairs, subsets as sorted tuples."""

    weights: frozenset = frozenset()
    orders: frozenset = frozenset()

    @classmethod
    def of(cls, weights: Iterable = (), orders: Iterable = (), p: int = 1, d: int = 1) -> "Mask":
        """Every component of the listed weight subsets and every slot of the listed order subsets."""
        w = frozenset((_as_subset(a), c) for a in weights for c in range(p))
        o = frozenset((_as_subset(a), j) for a in orders for j in range(d) if len(_as_subset(a)) > 1)
        return cls(w, o)

    def __or__(self, other: "Mask") -> "Mask":
        return Mask(self.weights | other.weights, self.orders | other.orders)

    def pullback(self, alpha: Injection) -> "Mask":
        """The mask on the codomain read when evaluating through alpha."""
        return Mask(frozenset((alpha.apply(a), c) for a, c in self.weights),
                    frozenset((alpha.apply(a), j) for a, j in self.orders))

    def subsets(self) -> set[tuple]:
        return {a for a, _ in self.weights} | {a for a, _ in self.orders}


class CoordinateAccessError(LookupError):
    """A predicate read a coordinate outside its declared dependency mask."""


# ---------------------------------------------------------------- points

class Point:
    """Batch of points over a vertex set.  Subclasses implement the two primitives."""

    vertices: tuple
    descriptor: SpaceDescriptor
    size: int
    levels: int

    def weight_component(self, subset: tuple, c: int) -> np.ndarray:
        raise NotImplementedError

    def order_ranks(self, subset: tuple, j: int) -> np.ndarray:
        raise NotImplementedError

    # conveniences used by membership predicates
    def _subset(self, a) -> tuple:
        if len(a) == 1 and isinstance(a[0], (tuple, list, set, frozenset)):
            a = a[0]
        s = _as_subset(a)
        if not s or len(set(s)) != len(s):
            raise ValueError(f"bad subset {a!r}")
        return s

    def w(self, *subset, c: int = 0) -> np.ndarray:
        """Component c of the weight at ``subset``, shape (rows,)."""
        return self.weight_component(self._subset(subset), c)

    def weight(self, subset) -> np.ndarray:
        s = self._subset(subset)
        return np.stack([self.weight_component(s, c) for c in range(self.descriptor.p)], axis=-1)

    def order(self, *subset, j: int = 0) -> np.ndarray:
        """Rank array (rows, |A|) of order slot j at ``subset``."""
        s = self._subset(subset)
        if len(s) == 1:
            return np.zeros((self.size, 1), dtype=np.int8)
        return self.order_ranks(s, j)

    def is_increasing(self, *subset, j: int = 0) -> np.ndarray:
        """Whether order slot j at ``subset`` is the usual order of its elements."""
        r = self.order(*subset, j=j)
        return np.all(r == np.arange(r.shape[-1]), axis=-1)

    def order_index(self, *subset, j: int = 0) -> np.ndarray:
        return perm_index(self.order(*subset, j=j))

    def subsets(self) -> list[tuple]:
        return r_sets(self.vertices, self.levels)

    def materialize(self) -> "LevelPoint":
        return LevelPoint.from_accessor(self)


class LevelPoint(Point):
    """Array-backed batch of points.

    ``weights[s-1]`` has shape (C(n,s), rows, p) and ``ranks[s-1]`` shape
    (C(n,s), rows, d, s), subsets of each size in colex order of their
    positions in the sorted vertex list.
    """

    def __init__(self, vertices: Iterable, descriptor: SpaceDescriptor, weights: Sequence[np.ndarray],
                 ranks: Sequence[np.ndarray | None], validate: bool = True):
        self.vertices = tuple(sorted(set(vertices)))
        self.descriptor = descriptor
        self.weights = list(weights)
        self.ranks = list(ranks)
        self.levels = len(self.weights)
        self.size = self.weights[0].shape[1] if self.weights else 1
        self._pos = {v: i for i, v in enumerate(self.vertices)}
        n, p, d = len(self.vertices), descriptor.p, descriptor.d
        if validate:
            if self.levels > n or len(self.ranks) != self.levels:
                raise ValueError("level arrays do not match the vertex set")
            for s in range(1, self.levels + 1):
                wa = self.weights[s - 1]
                if wa.shape != (math.comb(n, s), self.size, p):
                    raise ValueError(f"weights at level {s} have shape {wa.shape}")
                if np.any(wa < 0) or np.any(wa >= 1):
                    raise ValueError("weights must lie in [0,1)")
                if d and s > 1 and self.ranks[s - 1].shape != (math.comb(n, s), self.size, d, s):
                    raise ValueError(f"orders at level {s} have the wrong shape")

    # index bookkeeping
    def locate(self, subset: tuple) -> tuple[int, int]:
        try:
            idx = sorted(self._pos[v] for v in subset)
        except KeyError:
            raise ValueError(f"{subset} is not a subset of {self.vertices}") from None
        s = len(idx)
        if s > self.levels:
            raise ValueError(f"coordinate {subset} is beyond the stored size cap {self.levels}")
        return s, int(sum(math.comb(i, j + 1) for j, i in enumerate(idx)))

    def weight_component(self, subset, c):
        s, r = self.locate(subset)
        return self.weights[s - 1][r, :, c]

    def order_ranks(self, subset, j):
        s, r = self.locate(subset)
        if s == 1:
            return np.zeros((self.size, 1), dtype=np.int8)
        return self.ranks[s - 1][r, :, j, :]

    @classmethod
    def from_accessor(cls, pt: Point) -> "LevelPoint":
        n, p, d = len(pt.vertices), pt.descriptor.p, pt.descriptor.d
        weights, ranks = [], []
        for s in range(1, pt.levels + 1):
            subs = [tuple(pt.vertices[i] for i in row) for row in colex_subsets(n, s)]
            weights.append(np.stack([np.stack([pt.weight_component(a, c) for c in range(p)], -1)
                                     for a in subs]))
            if d and s > 1:
                ranks.append(np.stack([np.stack([pt.order_ranks(a, j) for j in range(d)], 1)
                                       for a in subs]).astype(np.int8))
            else:
                ranks.append(None)
        return cls(pt.vertices, pt.descriptor, weights, ranks)

    def take(self, rows) -> "LevelPoint":
        rows = np.atleast_1d(np.asarray(rows))
        return LevelPoint(self.vertices, self.descriptor, [w[:, rows] for w in self.weights],
                          [None if r is None else r[:, rows] for r in self.ranks], validate=False)

    def row(self, b: int) -> "LevelPoint":
        return self.take([b])

    def copy(self) -> "LevelPoint":
        return LevelPoint(self.vertices, self.descriptor, [w.copy() for w in self.weights],
                          [None if r is None else r.copy() for r in self.ranks], validate=False)

    def replace(self, subset, weight=None, orders=None) -> "LevelPoint":
        """Copy with the coordinate at ``subset`` overwritten (values broadcast over rows).

        ``weight`` has trailing shape (p,); ``orders`` has trailing shape (d, |A|) of ranks.
        """
        out = self.copy()
        s, r = self.locate(_as_subset(subset))
        if weight is not None:
            w = np.asarray(weight, dtype=float)
            if np.any(w < 0) or np.any(w >= 1):
                raise ValueError("weights must lie in [0,1)")
            out.weights[s - 1][r] = np.broadcast_to(w, out.weights[s - 1][r].shape)
        if orders is not None and s > 1 and self.descriptor.d:
            o = np.asarray(orders)
            out.ranks[s - 1][r] = np.broadcast_to(o, out.ranks[s - 1][r].shape)
        return out

    def to_json(self, row: int = 0) -> dict:
        out = {}
        for a in self.subsets():
            w = [float(v) for v in self.weight(a)[row]]
            orders = [list(order_from_ranks(a, self.order(a, j=j)[row])) for j in range(self.descriptor.d)]
            out[json.dumps(list(a))] = {"w": w, "orders": orders}
        return out

    @classmethod
    def from_json(cls, data: Mapping, descriptor: SpaceDescriptor | None = None) -> "LevelPoint":
        coords = {tuple(json.loads(k)): v for k, v in data.items()}
        vertices = sorted({v for a in coords for v in a})
        levels = max(len(a) for a in coords)
        if descriptor is None:
            any_coord = next(iter(coords.values()))
            descriptor = SpaceDescriptor(len(any_coord["w"]), len(any_coord["orders"]))
        n, p, d = len(vertices), descriptor.p, descriptor.d
        weights, ranks = [], []
        for s in range(1, levels + 1):
            subs = [tuple(vertices[i] for i in row) for row in colex_subsets(n, s)]
            missing = [a for a in subs if a not in coords]
            if missing:
                raise ValueError(f"point is missing coordinates {missing[:3]}")
            weights.append(np.array([[coords[a]["w"]] for a in subs], dtype=float).reshape(len(subs), 1, p))
            if d and s > 1:
                ranks.append(np.array([[[ranks_from_order(o, a) for o in coords[a]["orders"]]] for a in subs],
                                      dtype=np.int8))
            else:
                ranks.append(None)
        return cls(vertices, descriptor, weights, ranks)

    def dumps(self, row: int = 0) -> str:
        return json.dumps(self.to_json(row), separators=(",", ":"))


class PulledPoint(Point):
    """Lazy pullback of ``base`` along ``alpha``: coordinate A' reads base at alpha(A')."""

    def __init__(self, base: Point, alpha: Injection):
        if not set(alpha.image) <= set(base.vertices):
            raise ValueError("injection image is not inside the point's vertex set")
        self.base, self.alpha = base, alpha
        self.vertices = alpha.domain
        self.descriptor = base.descriptor
        self.size = base.size
        self.levels = min(base.levels, len(alpha.domain))

    def weight_component(self, subset, c):
        return self.base.weight_component(self.alpha.apply(subset), c)

    def order_ranks(self, subset, j):
        img = [self.alpha(a) for a in subset]
        srt = sorted(img)
        perm = [srt.index(v) for v in img]
        return self.base.order_ranks(tuple(srt), j)[:, perm]


def pullback_point(alpha: Injection, x: Point) -> LevelPoint:
    """alpha^*(x): weight at A' is x's weight at alpha(A'), orders pulled back along alpha."""
    if not set(alpha.image) <= set(x.vertices):
        raise ValueError("injection image is not inside the point's vertex set")
    return PulledPoint(x, alpha).materialize()


class MaskedPoint(Point):
    """View that refuses to read coordinates outside ``mask``."""

    def __init__(self, base: Point, mask: Mask):
        self.base, self.mask = base, mask
        self.vertices, self.descriptor, self.size, self.levels = base.vertices, base.descriptor, base.size, base.levels

    def weight_component(self, subset, c):
        if (subset, c) not in self.mask.weights:
            raise CoordinateAccessError(f"weight {c} at {subset} is outside the dependency mask")
        return self.base.weight_component(subset, c)

    def order_ranks(self, subset, j):
        if (subset, j) not in self.mask.orders:
            raise CoordinateAccessError(f"order {j} at {subset} is outside the dependency mask")
        return self.base.order_ranks(subset, j)


class SlicedPoint(Point):
    """Selects some weight components and order slots of ``base``."""

    def __init__(self, base: Point, components: Sequence[int], slots: Sequence[int]):
        self.base, self.components, self.slots = base, tuple(components), tuple(slots)
        self.vertices, self.size, self.levels = base.vertices, base.size, base.levels
        self.descriptor = SpaceDescriptor(len(self.components), len(self.slots))

    def weight_component(self, subset, c):
        return self.base.weight_component(subset, self.components[c])

    def order_ranks(self, subset, j):
        return self.base.order_ranks(subset, self.slots[j])


class FixedOrderPoint(Point):
    """``base`` with the order slots listed in ``fixed`` replaced by constants.

    ``fixed`` maps (subset, slot) to a rank tuple over the sorted subset.
    """

    def __init__(self, base: Point, fixed: Mapping[tuple, Sequence[int]]):
        self.base = base
        self.fixed = {k: np.asarray(v, dtype=np.int8) for k, v in fixed.items()}
        self.vertices, self.descriptor, self.size, self.levels = base.vertices, base.descriptor, base.size, base.levels

    def weight_component(self, subset, c):
        return self.base.weight_component(subset, c)

    def order_ranks(self, subset, j):
        if (subset, j) in self.fixed:
            return np.broadcast_to(self.fixed[(subset, j)], (self.size, len(subset)))
        return self.base.order_ranks(subset, j)


# ---------------------------------------------------------------- sampling

def keyed_generator(seed: int, *key: int) -> np.random.Generator:
    """Counter-based Philox stream keyed by (seed, key...)."""
    if int(seed) < 0 or any(int(k) < 0 for k in key):
        raise ValueError("seeds and keys must be non-negative integers")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, key)])))


def sample_points(vertices: Iterable, descriptor: SpaceDescriptor = SpaceDescriptor(), seed: int = 0,
                  size: int = 1, ell: int | None = None, stream: int = 0) -> LevelPoint:
    """``size`` independent uniform points over r(V) (or r(V, ell)).

    Each coordinate level and kind has its own Philox stream keyed by
    (seed, stream, level, kind); inside it, values are laid out row-major by
    batch row then colex subset rank, so the first rows do not depend on
    ``size``.
    """
    vs = tuple(sorted(set(vertices)))
    n = len(vs)
    levels = n if ell is None else min(ell, n)
    p, d = descriptor.p, descriptor.d
    draws = sum(math.comb(n, s) for s in range(1, levels + 1)) * size * (p + d)
    if draws > COORDINATE_CAP:
        raise ValueError(f"{draws} coordinate draws exceed the cap {COORDINATE_CAP}; cap the subset size with ell")
    weights, ranks = [], []
    for s in range(1, levels + 1):
        c = math.comb(n, s)
        w = keyed_generator(seed, stream, s, 0).random((size, c, p))
        weights.append(np.ascontiguousarray(w.transpose(1, 0, 2)))
        if d and s > 1:
            idx = keyed_generator(seed, stream, s, 1).integers(0, math.factorial(s), size=(size, c, d))
            ranks.append(lex_permutations(s)[idx.transpose(1, 0, 2)].astype(np.int8))
        else:
            ranks.append(None)
    return LevelPoint(vs, descriptor, weights, ranks, validate=False)


def sample_point(vertices: Iterable, descriptor: SpaceDescriptor = SpaceDescriptor(), seed: int = 0,
                 ell: int | None = None) -> LevelPoint:
    return sample_points(vertices, descriptor, seed, 1, ell)


# ---------------------------------------------------------------- weight interleaving

def interleave_weights(*values) -> np.ndarray | float:
    """Merge several [0,1) values into one by interleaving their binary digits.

    Each input keeps floor(64/parts) bits; the 64-bit result is truncated to
    the 53 bits a double holds.
    """
    parts = len(values)
    if parts < 1:
        raise ValueError("need at least one value")
    arrs = np.broadcast_arrays(*[np.asarray(v, dtype=float) for v in values])
    if any(np.any((a < 0) | (a >= 1)) for a in arrs):
        raise ValueError("inputs must lie in [0,1)")
    bits = 64 // parts
    one = np.uint64(1)
    z = np.zeros(arrs[0].shape, dtype=np.uint64)
    qs = [np.floor(np.ldexp(a, bits)).astype(np.uint64) for a in arrs]
    for b in range(bits):
        for j, q in enumerate(qs):
            bit = (q >> np.uint64(bits - 1 - b)) & one
            z |= bit << np.uint64(63 - (b * parts + j))
    out = np.ldexp((z >> np.uint64(11)).astype(float), -53)
    return float(out) if out.ndim == 0 else out


def split_weight(t, parts: int = 2) -> tuple:
    """Inverse of interleave_weights up to the retained precision."""
    t = np.asarray(t, dtype=float)
    if np.any((t < 0) | (t >= 1)):
        raise ValueError("input must lie in [0,1)")
    bits = 64 // parts
    one = np.uint64(1)
    z = np.floor(np.ldexp(t, 53)).astype(np.uint64) << np.uint64(11)
    qs = [np.zeros(t.shape, dtype=np.uint64) for _ in range(parts)]
    for b in range(bits):
        for j in range(parts):
            bit = (z >> np.uint64(63 - (b * parts + j))) & one
            qs[j] |= bit << np.uint64(bits - 1 - b)
    outs = [np.ldexp(q.astype(float), -bits) for q in qs]
    return tuple(float(o) if o.ndim == 0 else o for o in outs)
