"""Realizing structures from points, sampling, and conditional sampling."""

from __future__ import annotations

import itertools
import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, Mapping, Sequence

import numpy as np

from .peon import EuclideanStructure
from .space import (COORDINATE_CAP, Injection, LevelPoint, Point, PulledPoint, SpaceDescriptor, ranks_from_order,
                    r_sets, sample_points)
from .symbols import Language, Structure, relation_slots

log = logging.getLogger(__name__)

CHUNK = 1 << 14


class PartialPoint:
    """Pinned coordinate values on some subsets of V.

    ``values`` maps a subset to (weight, orders): the weight is a float or a
    length-p sequence, the orders a sequence of d ranked lists of the subset.
    """

    def __init__(self, vertices: Iterable, descriptor: SpaceDescriptor, values: Mapping | None = None):
        self.vertices = tuple(sorted(set(vertices)))
        self.descriptor = descriptor
        self.values: dict[tuple, tuple[np.ndarray, np.ndarray | None]] = {}
        vset = set(self.vertices)
        for a, val in (values or {}).items():
            a = tuple(sorted(a)) if isinstance(a, (tuple, list, set, frozenset)) else (a,)
            if not a or not set(a) <= vset:
                raise ValueError(f"pinned subset {a} is not in r(V)")
            weight, orders = val if isinstance(val, tuple) and len(val) == 2 else (val, None)
            w = np.atleast_1d(np.asarray(weight, dtype=float))
            if w.shape != (descriptor.p,):
                raise ValueError(f"pinned weight at {a} needs {descriptor.p} components")
            if np.any(w < 0) or np.any(w >= 1):
                raise ValueError(f"pinned weight {w.tolist()} at {a} is outside [0,1)")
            r = None
            if orders is not None and descriptor.d and len(a) > 1:
                if len(orders) != descriptor.d:
                    raise ValueError(f"pinned orders at {a} need {descriptor.d} entries")
                r = np.array([ranks_from_order(o, a) for o in orders], dtype=np.int8)
            self.values[a] = (w, r)

    @property
    def max_size(self) -> int:
        return max((len(a) for a in self.values), default=0)

    def apply(self, x: LevelPoint) -> LevelPoint:
        """Copy of ``x`` with the pinned coordinates overwritten on every row."""
        out = x.copy()
        for a, (w, r) in self.values.items():
            if len(a) > out.levels:
                continue
            s, idx = out.locate(a)
            out.weights[s - 1][idx] = w
            if r is not None:
                out.ranks[s - 1][idx] = r
        return out


class StructureCodec:
    """Bit encoding of canonical structures on a fixed vertex set.

    Slot order is (symbol, injective tuple), lexicographic; a structure is the
    bit vector of slots that hold.
    """

    def __init__(self, language: Language, vertices: Iterable):
        self.language = language
        self.vertices = tuple(sorted(set(vertices)))
        self.slots = relation_slots(language, self.vertices)
        self.index = {s: i for i, s in enumerate(self.slots)}

    def decode(self, bits: Sequence[bool]) -> Structure:
        rel: dict[str, list] = {p.name: [] for p in self.language}
        for on, (name, t) in zip(bits, self.slots):
            if on:
                rel[name].append(t)
        return Structure(self.language, self.vertices, rel)

    def encode(self, m: Structure) -> np.ndarray:
        if m.language.signature() != self.language.signature() or m.vertices != self.vertices:
            raise ValueError("structure does not match the codec's language and vertex set")
        bits = np.zeros(len(self.slots), dtype=bool)
        for name in self.language.names:
            for t in m.relation(name):
                bits[self.index[(name, t)]] = True
        return bits

    def key(self, m: Structure) -> bytes:
        return np.packbits(self.encode(m)).tobytes()

    def group(self, bits: np.ndarray) -> tuple[list[Structure], np.ndarray, np.ndarray]:
        """Distinct structures among rows of ``bits``, per-row index, and counts."""
        packed = np.packbits(bits, axis=1)
        if packed.shape[1] == 0:
            packed = np.zeros((bits.shape[0], 1), dtype=np.uint8)
        uniq, inverse, counts = np.unique(packed, axis=0, return_inverse=True, return_counts=True)
        width = len(self.slots)
        structs = [self.decode(np.unpackbits(u)[:width].astype(bool)) for u in uniq]
        return structs, inverse.reshape(-1), counts


def _check_point(theon: EuclideanStructure, vs: tuple, x: Point) -> None:
    if x.descriptor != theon.descriptor:
        raise ValueError(f"point descriptor {x.descriptor} does not match theon descriptor {theon.descriptor}")
    if tuple(x.vertices) != vs:
        raise ValueError(f"point is indexed by {x.vertices}, expected {vs}")
    need = min(theon.language.max_arity(), len(vs))
    if x.levels < need:
        raise ValueError(f"point stores subsets up to size {x.levels}; the theon needs {need}")


def realize_batch(theon: EuclideanStructure, x: Point) -> np.ndarray:
    """Slot bits (rows, slots) of M^N_V(x) for every row of ``x``.

    Tuples are evaluated in the codec's lexicographic slot order.
    """
    vs = tuple(x.vertices)
    _check_point(theon, vs, x)
    slots = relation_slots(theon.language, vs)
    bits = np.zeros((x.size, len(slots)), dtype=bool)
    for i, (name, t) in enumerate(slots):
        bits[:, i] = theon.peons[name].evaluate(PulledPoint(x, Injection.from_tuple(t, vs)))
    return bits


def realize_structure(theon: EuclideanStructure, vertices: Iterable, x: Point) -> Structure:
    """M^N_V(x) for a single point."""
    vs = tuple(sorted(set(vertices)))
    if x.size != 1:
        raise ValueError("realize_structure takes a single point; use realize_batch for batches")
    _check_point(theon, vs, x)
    return StructureCodec(theon.language, vs).decode(realize_batch(theon, x)[0])


def _levels(theon: EuclideanStructure, n: int) -> int:
    return max(1, min(theon.language.max_arity(), n))


def draw_points(theon: EuclideanStructure, vertices: Iterable, seed: int, size: int,
                stream: int = 0) -> LevelPoint:
    """Uniform points carrying only the coordinate levels the theon can read."""
    vs = tuple(sorted(set(vertices)))
    return sample_points(vs, theon.descriptor, seed, size, ell=_levels(theon, len(vs)), stream=stream)


def sample_structure(theon: EuclideanStructure, vertices: Iterable, seed: int) -> Structure:
    vs = tuple(sorted(set(vertices)))
    return realize_structure(theon, vs, draw_points(theon, vs, seed, 1))


def _chunks(count: int, chunk: int):
    for c, start in enumerate(range(0, count, chunk)):
        yield c, min(chunk, count - start)


def sample_bits(theon: EuclideanStructure, vertices: Iterable, seed: int, count: int,
                pinned: PartialPoint | None = None, workers: int = 1, chunk: int = CHUNK) -> np.ndarray:
    """Slot bits of ``count`` independent samples.

    Chunk c draws from stream c, so the output depends on (seed, count, chunk)
    but not on the worker count.
    """
    vs = tuple(sorted(set(vertices)))
    if count < 0:
        raise ValueError("count must be non-negative")
    if pinned is not None and (pinned.vertices != vs or pinned.descriptor != theon.descriptor):
        raise ValueError("pinned values do not match the vertex set or descriptor")
    per_row = sum(1 for _ in r_sets(vs, _levels(theon, len(vs)))) * (theon.descriptor.p + theon.descriptor.d)
    chunk = max(1, min(chunk, COORDINATE_CAP // max(per_row, 1)))

    def one(job):
        c, size = job
        x = draw_points(theon, vs, seed, size, stream=c)
        if pinned is not None:
            x = pinned.apply(x)
        return realize_batch(theon, x)

    jobs = list(_chunks(count, chunk))
    if not jobs:
        return np.zeros((0, len(relation_slots(theon.language, vs))), dtype=bool)
    if workers and workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, jobs))
    else:
        parts = [one(j) for j in jobs]
    return np.concatenate(parts, axis=0)


def sample_structures(theon: EuclideanStructure, vertices: Iterable, seed: int, count: int,
                      workers: int = 1) -> list[Structure]:
    vs = tuple(sorted(set(vertices)))
    bits = sample_bits(theon, vs, seed, count, workers=workers)
    codec = StructureCodec(theon.language, vs)
    structs, inverse, _ = codec.group(bits)
    return [structs[i] for i in inverse]


def sample_counts(theon: EuclideanStructure, vertices: Iterable, seed: int, count: int,
                  pinned: PartialPoint | None = None, workers: int = 1) -> Counter:
    """Empirical counts of realized structures."""
    vs = tuple(sorted(set(vertices)))
    bits = sample_bits(theon, vs, seed, count, pinned=pinned, workers=workers)
    structs, _, counts = StructureCodec(theon.language, vs).group(bits)
    return Counter(dict(zip(structs, (int(c) for c in counts))))


def sample_conditional(theon: EuclideanStructure, vertices: Iterable, pinned: PartialPoint,
                       seed: int) -> Structure:
    """One structure with the pinned coordinates held fixed and the rest fresh."""
    vs = tuple(sorted(set(vertices)))
    bits = sample_bits(theon, vs, seed, 1, pinned=pinned)
    return StructureCodec(theon.language, vs).decode(bits[0])


def all_injections(domain: Sequence, codomain: Sequence):
    """Every injection domain -> codomain, lexicographic."""
    dom = tuple(sorted(domain))
    for img in itertools.permutations(sorted(codomain), len(dom)):
        yield Injection(dict(zip(dom, img)), codomain)
