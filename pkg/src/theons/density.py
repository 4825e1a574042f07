"""Induced densities, distribution tables and representation equivalence.

Two backends: "exact" enumerates the joint chambers of every coordinate the
theon reads on the vertex set and sums rational chamber volumes; "mc" samples.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np
from scipy import stats

from .peon import ChamberLayout, EuclideanStructure, rename_theon
from .sampler import PartialPoint, StructureCodec, realize_batch, sample_bits
from .space import Injection
from .symbols import Structure, automorphism_count, enumerate_structures, relabel

log = logging.getLogger(__name__)

EXACT_CAP = 4 * 10**6
CONFIDENCE = 0.99


# ---------------------------------------------------------------- results

@dataclass(frozen=True)
class DensityEstimate:
    value: float
    samples: int
    half_width: float
    exact: bool = False
    rational: Fraction | None = None
    ci_low: float | None = None
    ci_high: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"density {self.value} outside [0,1]")
        if self.exact and (self.rational is None or self.half_width != 0 or not 0 <= self.rational <= 1):
            raise ValueError("exact estimates carry a rational in [0,1] and zero half-width")

    @classmethod
    def from_rational(cls, q: Fraction) -> "DensityEstimate":
        q = Fraction(q)
        return cls(float(q), 0, 0.0, True, q, float(q), float(q))

    @classmethod
    def from_counts(cls, hits: int, n: int, confidence: float = CONFIDENCE) -> "DensityEstimate":
        if n < 1:
            raise ValueError("need at least one sample")
        ci = stats.binomtest(int(hits), int(n)).proportion_ci(confidence, method="wilson")
        return cls(hits / n, n, (ci.high - ci.low) / 2, False, None, float(ci.low), float(ci.high))

    def scaled(self, factor: int) -> "DensityEstimate":
        if self.exact:
            return DensityEstimate.from_rational(self.rational * factor)
        return DensityEstimate(min(1.0, self.value * factor), self.samples, self.half_width * factor, False, None,
                               min(1.0, self.ci_low * factor), min(1.0, self.ci_high * factor))

    def __str__(self):
        if self.exact:
            return str(self.rational)
        return f"{self.value:.6f} ± {self.half_width:.6f}"


@dataclass
class DistributionTable:
    """Probabilities of canonical structures on a fixed vertex set.

    Only structures with non-zero mass are stored; ``prob`` returns 0 for the rest.
    """

    language: object
    vertices: tuple
    probs: dict
    exact: bool
    samples: int = 0
    counts: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.vertices)

    def prob(self, k: Structure):
        if k.vertices != self.vertices or k.language.signature() != self.language.signature():
            raise ValueError("structure is not on this table's vertex set and language")
        return self.probs.get(k, Fraction(0) if self.exact else 0.0)

    def total(self):
        return sum(self.probs.values(), Fraction(0) if self.exact else 0.0)

    def support(self) -> list[Structure]:
        return sorted(self.probs, key=lambda k: k.dumps())

    def estimate(self, k: Structure) -> DensityEstimate:
        if self.exact:
            return DensityEstimate.from_rational(self.prob(k))
        return DensityEstimate.from_counts(self.counts.get(k, 0), self.samples)

    def rows(self, all_structures: bool = False) -> list[tuple]:
        """(structure-id, structure-json, value, ci-low, ci-high, exact) per structure."""
        codec = StructureCodec(self.language, self.vertices)
        keys = enumerate_structures(self.language, self.vertices) if all_structures else self.support()
        out = []
        for k in keys:
            est = self.estimate(k)
            value = str(est.rational) if est.exact else repr(est.value)
            out.append((codec.key(k).hex() or "0", k.dumps(), value, est.ci_low, est.ci_high, est.exact))
        return out

    def to_json(self) -> dict:
        return {
            "vertices": list(self.vertices),
            "exact": self.exact,
            "samples": self.samples,
            "entries": [{"id": r[0], "structure": json.loads(r[1]), "value": r[2], "ci_low": r[3],
                         "ci_high": r[4]} for r in self.rows()],
        }


CSV_COLUMNS = ("structure-id", "structure-json", "value", "ci-low", "ci-high", "exact")


def rows_to_csv(rows: Iterable[tuple]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(["true" if x is True else "false" if x is False else x for x in r])
    return buf.getvalue()


def csv_to_rows(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))


# ---------------------------------------------------------------- exact engine

def _vertices(n_or_vertices) -> tuple:
    if isinstance(n_or_vertices, int):
        return tuple(range(1, n_or_vertices + 1))
    return tuple(sorted(set(n_or_vertices)))


def joint_layout(theon: EuclideanStructure, vertices, pinned: PartialPoint | None = None) -> ChamberLayout:
    """Chamber layout over every coordinate any tuple's peon reads on ``vertices``."""
    if not theon.is_chamber_grid:
        bad = [n for n, pe in theon.peons.items() if not pe.is_chamber_grid]
        raise ValueError(f"exact backend needs chamber-grid peons; {bad} are not")
    vs = _vertices(vertices)
    weights, orders, ranked = set(), set(), set()
    grid = 1
    for p in theon.language:
        pe = theon.peons[p.name]
        grid = grid * pe.grid // math.gcd(grid, pe.grid)
        for t in itertools.permutations(vs, p.arity):
            alpha = Injection.from_tuple(t, vs)
            m = pe.mask.pullback(alpha)
            weights |= m.weights
            orders |= m.orders
            ranked |= {(alpha.apply(a), c) for a, c in pe.ranked}
    if pinned is not None:
        fixed = set(pinned.values)
        clash = {(a, c) for a, c in ranked if a in fixed}
        if clash:
            raise ValueError(f"pinned coordinates {sorted(clash)} are ranked; only cell-only coordinates can be pinned")
        weights = {(a, c) for a, c in weights if a not in fixed}
        orders = {(a, j) for a, j in orders if a not in fixed or pinned.values[a][1] is None}
    order_key = lambda e: (len(e[0]), e[0], e[1])
    return ChamberLayout.build(sorted(weights, key=order_key), ranked, sorted(orders, key=order_key), grid)


def exact_cost(theon: EuclideanStructure, vertices) -> int:
    return joint_layout(theon, vertices).estimate()


def exact_distribution(theon: EuclideanStructure, vertices, pinned: PartialPoint | None = None,
                       cap: int = EXACT_CAP) -> DistributionTable:
    """mu^N_V as exact rationals (conditional on ``pinned`` cell-only coordinates when given)."""
    vs = _vertices(vertices)
    layout = joint_layout(theon, vs, pinned)
    cost = layout.estimate()
    log.info("exact engine: %d chambers over %d weight and %d order coordinates (grid %d)",
             cost, len(layout.weights), len(layout.orders), layout.grid)
    if cost > cap:
        raise ValueError(f"{cost} chambers exceed the exact-engine cap {cap}")
    rows = layout.enumerate(cap)
    levels = max(1, min(theon.language.max_arity(), len(vs)))
    if pinned is not None:
        levels = max(levels, min(pinned.max_size, levels))
    pt = layout.representatives(rows, vs, theon.descriptor, levels=levels)
    if pinned is not None:
        pt = pinned.apply(pt)
    codec = StructureCodec(theon.language, vs)
    structs, inverse, _ = codec.group(realize_batch(theon, pt))
    dens = rows.denominators
    probs: dict[Structure, Fraction] = {}
    if all(int(d) < 2**62 for d in dens[:1]) and max(int(d) for d in dens) < 2**62:
        pairs = np.stack([inverse, np.array([int(d) for d in dens], dtype=np.int64)], axis=1)
        uniq, counts = np.unique(pairs, axis=0, return_counts=True)
        for (i, d), c in zip(uniq, counts):
            probs[structs[i]] = probs.get(structs[i], Fraction(0)) + Fraction(int(c), int(d))
    else:
        for i, d in zip(inverse, dens):
            probs[structs[i]] = probs.get(structs[i], Fraction(0)) + Fraction(1, int(d))
    probs = {k: v for k, v in probs.items() if v}
    if sum(probs.values()) != 1:
        raise AssertionError("chamber volumes do not sum to one")
    return DistributionTable(theon.language, vs, probs, True)


def mc_distribution(theon: EuclideanStructure, vertices, samples: int, seed: int,
                    pinned: PartialPoint | None = None, workers: int = 1) -> DistributionTable:
    vs = _vertices(vertices)
    if samples < 1:
        raise ValueError("need at least one sample")
    bits = sample_bits(theon, vs, seed, samples, pinned=pinned, workers=workers)
    structs, _, counts = StructureCodec(theon.language, vs).group(bits)
    cnt = {k: int(c) for k, c in zip(structs, counts)}
    return DistributionTable(theon.language, vs, {k: c / samples for k, c in cnt.items()}, False, samples, cnt)


def resolve_backend(theon: EuclideanStructure, vs, backend: str, cap: int = EXACT_CAP) -> str:
    if backend not in ("exact", "mc", "auto"):
        raise ValueError("backend must be 'exact', 'mc' or 'auto'")
    if backend == "auto":
        if theon.is_chamber_grid and exact_cost(theon, vs) <= cap:
            return "exact"
        return "mc"
    return backend


def distribution_on(theon: EuclideanStructure, n, backend: str = "auto", budget: int = 10**5,
                    seed: int = 0, workers: int = 1) -> DistributionTable:
    """Distribution of the realized structure on [n] (or on the given vertex set)."""
    vs = _vertices(n)
    if resolve_backend(theon, vs, backend) == "exact":
        return exact_distribution(theon, vs)
    return mc_distribution(theon, vs, budget, seed, workers=workers)


def _check_language(theon: EuclideanStructure, k: Structure) -> None:
    if theon.language.signature() != k.language.signature():
        raise ValueError("structure and theon languages differ")


def t_ind_exact(theon: EuclideanStructure, k: Structure) -> Fraction:
    _check_language(theon, k)
    return exact_distribution(theon, k.vertices).prob(k)


def t_ind_mc(theon: EuclideanStructure, k: Structure, samples: int, seed: int = 0,
             workers: int = 1) -> DensityEstimate:
    _check_language(theon, k)
    if samples < 1:
        raise ValueError("need at least one sample")
    bits = sample_bits(theon, k.vertices, seed, samples, workers=workers)
    target = StructureCodec(theon.language, k.vertices).encode(k)
    hits = int(np.all(bits == target, axis=1).sum())
    return DensityEstimate.from_counts(hits, samples)


def t_ind(theon: EuclideanStructure, k: Structure, backend: str = "auto", samples: int = 10**5,
          seed: int = 0, workers: int = 1) -> DensityEstimate:
    if resolve_backend(theon, k.vertices, backend) == "exact":
        return DensityEstimate.from_rational(t_ind_exact(theon, k))
    return t_ind_mc(theon, k, samples, seed, workers)


def labelings(k: Structure) -> set[Structure]:
    """All structures on V(K) isomorphic to K."""
    vs = k.vertices
    return {relabel(k, dict(zip(vs, perm))) for perm in itertools.permutations(vs)}


def phi(theon: EuclideanStructure, k: Structure, backend: str = "auto", samples: int = 10**5,
        seed: int = 0, workers: int = 1) -> DensityEstimate:
    """Probability that the sampled structure on V(K) is isomorphic to K.

    Exact: |K|!/|Aut(K)| * t_ind(K).  Monte Carlo counts isomorphic samples directly.
    """
    _check_language(theon, k)
    if resolve_backend(theon, k.vertices, backend) == "exact":
        factor = math.factorial(len(k)) // automorphism_count(k)
        return DensityEstimate.from_rational(factor * t_ind_exact(theon, k))
    iso = labelings(k)
    bits = sample_bits(theon, k.vertices, seed, samples, workers=workers)
    codec = StructureCodec(theon.language, k.vertices)
    structs, _, counts = codec.group(bits)
    hits = sum(int(c) for s, c in zip(structs, counts) if s in iso)
    return DensityEstimate.from_counts(hits, samples)


# ---------------------------------------------------------------- equivalence

@dataclass
class EquivalenceReport:
    equivalent: bool
    method: str
    total_variation: float
    p_value: float | None
    statistic: float | None
    significance: float
    n: int
    witness: dict | None = None
    tables: tuple = ()

    @property
    def verdict(self) -> str:
        return "equivalent" if self.equivalent else "not equivalent"

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "method": self.method, "total_variation": self.total_variation,
                "p_value": self.p_value, "statistic": self.statistic, "significance": self.significance,
                "n": self.n, "witness": self.witness}

    def __str__(self):
        p = "exact" if self.p_value is None else f"p={self.p_value:.4g}"
        return f"{self.verdict} ({p}, TV={self.total_variation:.4g})"


def align_languages(n1: EuclideanStructure, n2: EuclideanStructure) -> EuclideanStructure:
    """N2 renamed positionally into N1's language (same arities required)."""
    if n1.language.signature() == n2.language.signature():
        return n2
    a1 = [p.arity for p in n1.language]
    a2 = [p.arity for p in n2.language]
    if a1 != a2:
        raise ValueError(f"languages differ: {n1.language.signature()} vs {n2.language.signature()}")
    return rename_theon(n2, {q.name: p.name for p, q in zip(n1.language, n2.language)})


def _retag(table: DistributionTable, language) -> DistributionTable:
    if table.language.signature() == language.signature() and table.language == language:
        return table
    def conv(k):
        return Structure(language, k.vertices, k.relations)
    return DistributionTable(language, table.vertices, {conv(k): v for k, v in table.probs.items()},
                             table.exact, table.samples, {conv(k): v for k, v in table.counts.items()})


def compare_tables(t1: DistributionTable, t2: DistributionTable, significance: float = 0.01) -> EquivalenceReport:
    """Exact vs exact compares rationals; exact vs MC is a goodness-of-fit test;
    MC vs MC a two-sample chi-square homogeneity test."""
    if t1.vertices != t2.vertices:
        raise ValueError("tables live on different vertex sets")
    t2 = _retag(t2, t1.language)
    keys = sorted(set(t1.probs) | set(t2.probs), key=lambda k: k.dumps())
    tv = 0.5 * sum(abs(float(t1.prob(k)) - float(t2.prob(k))) for k in keys)
    n = t1.n
    if t1.exact and t2.exact:
        diff = [k for k in keys if t1.prob(k) != t2.prob(k)]
        witness = None
        if diff:
            k = max(diff, key=lambda k: abs(t1.prob(k) - t2.prob(k)))
            witness = {"structure": k.to_json(), "first": str(t1.prob(k)), "second": str(t2.prob(k))}
        exact_tv = sum((abs(t1.prob(k) - t2.prob(k)) for k in keys), Fraction(0)) / 2
        return EquivalenceReport(not diff, "exact", float(exact_tv), None, None, significance, n, witness, (t1, t2))
    if t1.exact or t2.exact:
        ex, mc = (t1, t2) if t1.exact else (t2, t1)
        impossible = [k for k in mc.counts if ex.prob(k) == 0]
        if impossible:
            k = max(impossible, key=lambda k: mc.counts[k])
            witness = {"structure": k.to_json(), "exact": "0", "observed": mc.counts[k]}
            return EquivalenceReport(False, "goodness-of-fit", tv, 0.0, math.inf, significance, n, witness, (t1, t2))
        support = ex.support()
        obs = np.array([mc.counts.get(k, 0) for k in support], dtype=float)
        exp = np.array([float(ex.prob(k)) for k in support]) * mc.samples
        exp *= obs.sum() / exp.sum()
        if len(support) == 1:
            stat, p = 0.0, 1.0
        else:
            stat, p = stats.chisquare(obs, exp)
        witness = None
        if p < significance:
            i = int(np.argmax((obs - exp) ** 2 / exp))
            witness = {"structure": support[i].to_json(), "exact": str(ex.prob(support[i])),
                       "observed": int(obs[i]), "expected": float(exp[i])}
        return EquivalenceReport(p >= significance, "goodness-of-fit", tv, float(p), float(stat), significance, n,
                                 witness, (t1, t2))
    obs = np.array([[t.counts.get(k, 0) for k in keys] for t in (t1, t2)], dtype=float)
    if obs.shape[1] <= 1:
        stat, p = 0.0, 1.0
    else:
        stat, p, _, _ = stats.chi2_contingency(obs, correction=False)
    witness = None
    if p < significance:
        i = int(np.argmax(np.abs(obs[0] / obs[0].sum() - obs[1] / obs[1].sum())))
        witness = {"structure": keys[i].to_json(), "first": int(obs[0, i]), "second": int(obs[1, i])}
    return EquivalenceReport(p >= significance, "two-sample", tv, float(p), float(stat), significance, n, witness,
                             (t1, t2))


def equivalence_test(n1: EuclideanStructure, n2: EuclideanStructure, n: int, samples: int = 10**5,
                     significance: float = 0.01, seed: int = 0, backend: str = "auto",
                     workers: int = 1) -> EquivalenceReport:
    """Compare the distributions the two theons induce on [n].

    ``backend`` applies to both sides; with "auto" each side is exact when it
    is chamber-grid and cheap enough.  The two Monte Carlo sides use distinct
    seed streams.
    """
    n2 = align_languages(n1, n2)
    vs = _vertices(n)
    t1 = distribution_on(n1, vs, backend, samples, seed, workers)
    t2 = distribution_on(n2, vs, backend, samples, seed + 1 if not t1.exact else seed, workers)
    return compare_tables(t1, t2, significance)
