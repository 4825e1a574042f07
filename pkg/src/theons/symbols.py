"""Relational languages, canonical finite structures and quantifier-free formulas.

Structures are canonical: every tuple in every relation has pairwise distinct
entries.  Vertex labels are any mutually comparable hashable values (the
library itself uses the integers 1..n) and are kept in sorted order.
"""

from __future__ import annotations

import itertools
import json
from math import comb
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

from .space import Injection

STRUCTURE_CAP = 2**24
AUTOMORPHISM_CAP = 8


@dataclass(frozen=True)
class Predicate:
    """A predicate symbol.

    ``symmetric`` is metadata: it says the intended relations are closed under
    permuting the tuple (graphs, hypergraphs) and only affects enumeration.
    """

    name: str
    arity: int
    symmetric: bool = field(default=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name:
            raise ValueError("predicate name must be a non-empty string")
        if int(self.arity) != self.arity or self.arity < 1:
            raise ValueError(f"arity of {self.name!r} must be a positive integer")


@dataclass(frozen=True)
class Language:
    predicates: tuple[Predicate, ...] = ()

    def __post_init__(self):
        names = [p.name for p in self.predicates]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate predicate names in {names}")

    @classmethod
    def of(cls, *specs) -> "Language":
        """Build from ``Predicate`` objects or ``(name, arity[, symmetric])`` tuples."""
        preds = []
        for s in specs:
            preds.append(s if isinstance(s, Predicate) else Predicate(*s))
        return cls(tuple(preds))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.predicates)

    def __iter__(self) -> Iterator[Predicate]:
        return iter(self.predicates)

    def __len__(self) -> int:
        return len(self.predicates)

    def __contains__(self, name) -> bool:
        return name in self.names

    def predicate(self, name: str) -> Predicate:
        for p in self.predicates:
            if p.name == name:
                return p
        raise KeyError(f"unknown predicate {name!r}")

    def arity(self, name: str) -> int:
        return self.predicate(name).arity

    def max_arity(self) -> int:
        return max((p.arity for p in self.predicates), default=0)

    def restrict(self, names: Iterable[str]) -> "Language":
        keep = set(names)
        missing = keep - set(self.names)
        if missing:
            raise ValueError(f"not a sublanguage: unknown symbols {sorted(missing)}")
        return Language(tuple(p for p in self.predicates if p.name in keep))

    def signature(self) -> tuple[tuple[str, int], ...]:
        return tuple((p.name, p.arity) for p in self.predicates)

    def to_json(self) -> list:
        out = []
        for p in self.predicates:
            d = {"name": p.name, "arity": p.arity}
            if p.symmetric:
                d["symmetric"] = True
            out.append(d)
        return out

    @classmethod
    def from_json(cls, data: Sequence[Mapping]) -> "Language":
        return cls(tuple(Predicate(d["name"], int(d["arity"]), bool(d.get("symmetric", False)))
                         for d in data))


GRAPH = Language.of(("E", 2, True))
DIGRAPH = Language.of(("P", 2))


def _sorted_labels(vertices) -> tuple:
    vs = tuple(sorted(set(vertices)))
    if len(vs) != len(tuple(vertices)):
        raise ValueError("duplicate vertex labels")
    return vs


class Structure:
    """A canonical finite structure.  Immutable, hashable, compared by content."""

    __slots__ = ("language", "vertices", "_rel", "_key")

    def __init__(self, language: Language, vertices: Iterable, relations: Mapping | None = None):
        vs = _sorted_labels(list(vertices))
        relations = dict(relations or {})
        unknown = set(relations) - set(language.names)
        if unknown:
            raise ValueError(f"relations for unknown symbols {sorted(unknown)}")
        vset = set(vs)
        rel = {}
        for p in language:
            tuples = frozenset(tuple(t) for t in relations.get(p.name, ()))
            for t in tuples:
                if len(t) != p.arity:
                    raise ValueError(f"tuple {t} has wrong length for {p.name}/{p.arity}")
                if len(set(t)) != len(t):
                    raise ValueError(f"non-injective tuple {t} in {p.name} (structures are canonical)")
                if not set(t) <= vset:
                    raise ValueError(f"tuple {t} uses undeclared vertices")
            rel[p.name] = tuples
        self.language = language
        self.vertices = vs
        self._rel = rel
        pos = {v: i for i, v in enumerate(vs)}
        self._key = (language.signature(), vs,
                     tuple((name, tuple(sorted(rel[name], key=lambda t: [pos[v] for v in t])))
                           for name in language.names))

    def relation(self, name: str) -> frozenset:
        return self._rel[name]

    @property
    def relations(self) -> dict[str, frozenset]:
        return dict(self._rel)

    def holds(self, name: str, tup) -> bool:
        return tuple(tup) in self._rel[name]

    def __len__(self) -> int:
        return len(self.vertices)

    def __eq__(self, other) -> bool:
        return isinstance(other, Structure) and self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __repr__(self) -> str:
        rels = ", ".join(f"{n}={sorted(self._rel[n])}" for n in self.language.names)
        return f"Structure(V={list(self.vertices)}, {rels})"

    def to_json(self) -> dict:
        return {
            "language": self.language.to_json(),
            "vertices": list(self.vertices),
            "relations": {name: [list(t) for t in tuples] for name, tuples in self._key[2]},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"))

    @classmethod
    def from_json(cls, data) -> "Structure":
        if isinstance(data, str):
            data = json.loads(data)
        lang = Language.from_json(data["language"])
        return cls(lang, data["vertices"], {k: [tuple(t) for t in v] for k, v in data["relations"].items()})


# ---------------------------------------------------------------- formulas

class Formula:
    """Quantifier-free formula over variables x1..xn (1-based indices)."""

    def __and__(self, other):
        return And((self, other))

    def __or__(self, other):
        return Or((self, other))

    def __invert__(self):
        return Not(self)

    def max_var(self) -> int:
        raise NotImplementedError

    def atoms(self) -> Iterator["Atom"]:
        raise NotImplementedError


@dataclass(frozen=True)
class Atom(Formula):
    pred: str
    args: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(int(a) for a in self.args))
        if any(a < 1 for a in self.args):
            raise ValueError("variable indices are 1-based")

    def max_var(self) -> int:
        return max(self.args, default=0)

    def atoms(self):
        yield self


@dataclass(frozen=True)
class Eq(Formula):
    i: int
    j: int

    def max_var(self) -> int:
        return max(self.i, self.j)

    def atoms(self):
        return iter(())


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula

    def max_var(self) -> int:
        return self.arg.max_var()

    def atoms(self):
        return self.arg.atoms()


@dataclass(frozen=True)
class And(Formula):
    args: tuple[Formula, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))

    def max_var(self) -> int:
        return max((a.max_var() for a in self.args), default=0)

    def atoms(self):
        for a in self.args:
            yield from a.atoms()


@dataclass(frozen=True)
class Or(Formula):
    args: tuple[Formula, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))

    def max_var(self) -> int:
        return max((a.max_var() for a in self.args), default=0)

    def atoms(self):
        for a in self.args:
            yield from a.atoms()


TRUE = And(())
FALSE = Or(())


def atom(pred: str, *args: int) -> Atom:
    return Atom(pred, tuple(args))


def nnf(f: Formula, negate: bool = False) -> Formula:
    """Negation normal form: negations pushed down to atoms."""
    if isinstance(f, Not):
        return nnf(f.arg, not negate)
    if isinstance(f, And):
        parts = tuple(nnf(a, negate) for a in f.args)
        return Or(parts) if negate else And(parts)
    if isinstance(f, Or):
        parts = tuple(nnf(a, negate) for a in f.args)
        return And(parts) if negate else Or(parts)
    return Not(f) if negate else f


def check_formula(f: Formula, language: Language, n: int) -> None:
    if f.max_var() > n:
        raise ValueError(f"formula uses x{f.max_var()} but only {n} variables are declared")
    for a in f.atoms():
        if a.pred not in language:
            raise ValueError(f"atom uses unknown symbol {a.pred!r}")
        if len(a.args) != language.arity(a.pred):
            raise ValueError(f"arity mismatch in atom {a.pred}{a.args}")


def eval_formula(f: Formula, m: Structure, assignment: Sequence) -> bool:
    """Evaluate ``f`` in ``m`` with x_i := assignment[i-1].

    Predicate atoms on repeated vertices are false (canonicity).
    """
    assignment = tuple(assignment)
    if f.max_var() > len(assignment):
        raise ValueError("assignment shorter than the formula's variable count")
    if isinstance(f, Atom):
        if len(f.args) != m.language.arity(f.pred):
            raise ValueError(f"arity mismatch in atom {f.pred}{f.args}")
        tup = tuple(assignment[i - 1] for i in f.args)
        if len(set(tup)) != len(tup):
            return False
        return m.holds(f.pred, tup)
    if isinstance(f, Eq):
        return assignment[f.i - 1] == assignment[f.j - 1]
    if isinstance(f, Not):
        return not eval_formula(f.arg, m, assignment)
    if isinstance(f, And):
        return all(eval_formula(a, m, assignment) for a in f.args)
    if isinstance(f, Or):
        return any(eval_formula(a, m, assignment) for a in f.args)
    raise TypeError(f"not a formula: {f!r}")


@dataclass(frozen=True)
class Interpretation:
    """Maps each symbol P of ``source`` to a formula over ``target`` in k(P) variables."""

    source: Language
    target: Language
    formulas: Mapping[str, Formula]

    def __post_init__(self):
        object.__setattr__(self, "formulas", dict(self.formulas))
        if set(self.formulas) != set(self.source.names):
            raise ValueError("interpretation must give exactly one formula per source symbol")
        for p in self.source:
            check_formula(self.formulas[p.name], self.target, p.arity)

    def __getitem__(self, name: str) -> Formula:
        return self.formulas[name]

    def __hash__(self):
        return hash((self.source, self.target, tuple(sorted(self.formulas.items(), key=lambda kv: kv[0]))))


def reduct_interpretation(full: Language, names: Iterable[str]) -> Interpretation:
    """The interpretation sending each kept symbol to itself."""
    sub = full.restrict(names)
    return Interpretation(sub, full, {p.name: Atom(p.name, tuple(range(1, p.arity + 1))) for p in sub})


def interpret_structure(interp: Interpretation, m: Structure) -> Structure:
    if m.language.signature() != interp.target.signature():
        raise ValueError("structure is not in the interpretation's target language")
    rel = {}
    for p in interp.source:
        f = interp.formulas[p.name]
        rel[p.name] = [t for t in itertools.permutations(m.vertices, p.arity) if eval_formula(f, m, t)]
    return Structure(interp.source, m.vertices, rel)


# ---------------------------------------------------------------- structure maps

def pullback_structure(alpha: Injection, m: Structure) -> Structure:
    """P holds on beta in the result iff P holds on alpha∘beta in m."""
    if not set(alpha.image) <= set(m.vertices):
        raise ValueError("injection image is not inside the structure's vertices")
    inv = {b: a for a, b in alpha.mapping.items()}
    rel = {}
    for p in m.language:
        rel[p.name] = [tuple(inv[v] for v in t) for t in m.relation(p.name) if all(v in inv for v in t)]
    return Structure(m.language, alpha.domain, rel)


def restrict(m: Structure, subset: Iterable) -> Structure:
    """Induced substructure on ``subset`` (pullback along the inclusion)."""
    sub = tuple(sorted(set(subset)))
    return pullback_structure(Injection({v: v for v in sub}, m.vertices), m)


def relabel(m: Structure, mapping: Mapping) -> Structure:
    """Push ``m`` forward along a bijection old label -> new label."""
    if len(set(mapping.values())) != len(mapping) or set(mapping) != set(m.vertices):
        raise ValueError("relabeling must be a bijection on the vertex set")
    rel = {p.name: [tuple(mapping[v] for v in t) for t in m.relation(p.name)] for p in m.language}
    return Structure(m.language, mapping.values(), rel)


def reduct(m: Structure, sub: Language | Iterable[str]) -> Structure:
    names = sub.names if isinstance(sub, Language) else tuple(sub)
    lang = m.language.restrict(names)
    return Structure(lang, m.vertices, {n: m.relation(n) for n in lang.names})


def fresh_name(name: str, taken: Iterable[str]) -> str:
    taken = set(taken)
    out = name
    while out in taken:
        out += "_2"
    return out


def disjoint_union_language(l1: Language, l2: Language) -> tuple[Language, dict[str, str]]:
    """L1 ⊔ L2 with colliding names of L2 renamed; also returns the L2 renaming."""
    taken = set(l1.names)
    rename = {}
    preds = list(l1.predicates)
    for p in l2:
        new = fresh_name(p.name, taken)
        taken.add(new)
        rename[p.name] = new
        preds.append(Predicate(new, p.arity, p.symmetric))
    return Language(tuple(preds)), rename


def disjoint_union_structure(m1: Structure, m2: Structure) -> Structure:
    if m1.vertices != m2.vertices:
        raise ValueError("disjoint union needs identical vertex sets")
    lang, rename = disjoint_union_language(m1.language, m2.language)
    rel = {n: m1.relation(n) for n in m1.language.names}
    rel.update({rename[n]: m2.relation(n) for n in m2.language.names})
    return Structure(lang, m1.vertices, rel)


# ---------------------------------------------------------------- enumeration

def relation_slots(language: Language, vertices: Sequence) -> list[tuple[str, tuple]]:
    """All (symbol, injective tuple) slots, lexicographic in the sorted vertex order."""
    vs = tuple(sorted(vertices))
    return [(p.name, t) for p in language for t in itertools.permutations(vs, p.arity)]


def enumerate_structures(language: Language, vertices: Iterable, cap: int = STRUCTURE_CAP) -> list[Structure]:
    """Every canonical structure on ``vertices``.

    Symmetric symbols range over sets of k-sets; the rest over sets of injective tuples.
    """
    vs = _sorted_labels(list(vertices))
    units = []  # each unit is a list of slots switched on together
    for p in language:
        if p.symmetric:
            for s in itertools.combinations(vs, p.arity):
                units.append((p.name, list(itertools.permutations(s))))
        else:
            for t in itertools.permutations(vs, p.arity):
                units.append((p.name, [t]))
    if 2 ** len(units) > cap:
        raise ValueError(f"{2 ** len(units)} structures exceed the enumeration cap {cap}")
    out = []
    for bits in itertools.product((False, True), repeat=len(units)):
        rel = {p.name: [] for p in language}
        for on, (name, tuples) in zip(bits, units):
            if on:
                rel[name].extend(tuples)
        out.append(Structure(language, vs, rel))
    return out


def automorphism_count(k: Structure, cap: int = AUTOMORPHISM_CAP) -> int:
    """Number of vertex permutations preserving every relation (brute force)."""
    vs = k.vertices
    if len(vs) > cap:
        raise ValueError(f"{len(vs)} vertices exceed the automorphism cap {cap}")
    count = 0
    for perm in itertools.permutations(vs):
        f = dict(zip(vs, perm))
        if all({tuple(f[v] for v in t) for t in k.relation(n)} == k.relation(n) for n in k.language.names):
            count += 1
    return count


def orientation_violations(m: Structure, name: str) -> int:
    """Number of k-sets not carrying exactly one tuple of ``name``."""
    k = m.language.arity(name)
    counts = {}
    for t in m.relation(name):
        s = frozenset(t)
        counts[s] = counts.get(s, 0) + 1
    bad = sum(1 for c in counts.values() if c != 1)
    return bad + (comb(len(m.vertices), k) - len(counts))
