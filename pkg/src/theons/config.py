"""Declarative theon specifications and experiment configs (JSON or TOML).

A theon spec is one of

- a gallery name: ``"qr_graph"``
- ``{"gallery": "kqrO_0theon", "k": 3}``
- ``{"couple": [spec, spec]}``: independent coupling
- ``{"union": [spec, spec]}``: predicates side by side over one space
- ``{"reduct": spec, "keep": ["E"]}``
- ``{"interpret": spec, "source": [{"name": "E", "arity": 2}], "formulas": {"E": ["not", ["atom", "E", 1, 2]]}}``
- ``{"pull": spec, "i_max": 6}``: strip the order variables
- ``{"simulate": spec, "ell": 1, "part": "interpreted" | "G" | "H"}``
- ``{"chamber_table": {...}}``: an explicit chamber-grid peon (see ``chamber_table_theon``)

Formulas are nested lists: ``["atom", P, i, ...]``, ``["eq", i, j]``,
``["not", f]``, ``["and", f, ...]``, ``["or", f, ...]``, ``true``, ``false``.
"""

from __future__ import annotations

import inspect
import json
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .peon import (ChamberGridPeon, ChamberLayout, EuclideanStructure, GALLERY, disjoint_union_theon, gallery,
                   independent_coupling, interpret_theon, reduct_theon)
from .space import Mask, SpaceDescriptor
from .symbols import FALSE, TRUE, And, Atom, Eq, Formula, Interpretation, Language, Not, Or, Predicate

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    """A theon spec or experiment config that does not type-check."""


# ---------------------------------------------------------------- formulas

def formula_from_json(data) -> Formula:
    if data is True:
        return TRUE
    if data is False:
        return FALSE
    if not isinstance(data, list) or not data:
        raise ConfigError(f"bad formula {data!r}")
    head, *rest = data
    if head == "atom":
        return Atom(rest[0], tuple(rest[1:]))
    if head == "eq":
        return Eq(int(rest[0]), int(rest[1]))
    if head == "not":
        return Not(formula_from_json(rest[0]))
    if head == "and":
        return And(tuple(formula_from_json(f) for f in rest))
    if head == "or":
        return Or(tuple(formula_from_json(f) for f in rest))
    raise ConfigError(f"unknown formula head {head!r}")


def formula_to_json(f: Formula):
    if isinstance(f, Atom):
        return ["atom", f.pred, *f.args]
    if isinstance(f, Eq):
        return ["eq", f.i, f.j]
    if isinstance(f, Not):
        return ["not", formula_to_json(f.arg)]
    if isinstance(f, And):
        return True if not f.args else ["and", *map(formula_to_json, f.args)]
    if isinstance(f, Or):
        return False if not f.args else ["or", *map(formula_to_json, f.args)]
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------- theon specs

def _gallery_params(name: str, params: Mapping) -> dict:
    if name not in GALLERY:
        raise ConfigError(f"unknown gallery entry {name!r}; known: {sorted(GALLERY)}")
    accepted = inspect.signature(GALLERY[name]).parameters
    unknown = set(params) - set(accepted)
    if unknown:
        raise ConfigError(f"{name} does not take parameters {sorted(unknown)}")
    return dict(params)


def chamber_table_theon(spec: Mapping) -> EuclideanStructure:
    """An explicit chamber-grid peon.

    Keys: symbol, arity, symmetric, weight_width, order_degree, grid,
    weights [[subset, component], ...], ranked (same form), orders
    [[subset, slot], ...], and members: a list of {"cells": [...],
    "keys": [...], "orders": [...]} chambers in which the predicate holds.
    """
    try:
        arity = int(spec["arity"])
        grid = int(spec["grid"])
        desc = SpaceDescriptor(int(spec.get("weight_width", 1)), int(spec.get("order_degree", 0)))
        weights = [(tuple(sorted(a)), int(c)) for a, c in spec.get("weights", [])]
        ranked = {(tuple(sorted(a)), int(c)) for a, c in spec.get("ranked", [])}
        orders = [(tuple(sorted(a)), int(j)) for a, j in spec.get("orders", [])]
        members = spec.get("members", [])
    except (KeyError, TypeError) as e:
        raise ConfigError(f"bad chamber table: {e}") from None
    layout = ChamberLayout.build(weights, ranked, orders, grid)
    table = set()
    for m in members:
        cells = tuple(int(c) for c in m.get("cells", []))
        keys = tuple(int(k) for k in m.get("keys", [0] * len(cells)))
        ords = tuple(int(o) for o in m.get("orders", []))
        if len(cells) != len(weights) or len(ords) != len(orders):
            raise ConfigError("each member needs one cell per weight coordinate and one index per order coordinate")
        table.add((cells, keys, ords))

    def fn(x):
        return np.array([k in table for k in layout.locate(x)], dtype=bool)

    mask = Mask(frozenset(weights), frozenset(orders))
    symbol = spec.get("symbol", "R")
    pe = ChamberGridPeon(arity, desc, fn, mask, grid=grid, ranked=ranked, name=spec.get("name", "chamber_table"))
    lang = Language((Predicate(symbol, arity, bool(spec.get("symmetric", False))),))
    return EuclideanStructure(lang, {symbol: pe}, desc, name=spec.get("name", "chamber_table"))


def build_theon(spec: Any, overrides: Mapping | None = None) -> EuclideanStructure:
    """Build a theon from a spec; ``overrides`` are gallery parameters applied when accepted."""
    overrides = dict(overrides or {})
    if isinstance(spec, str):
        spec = {"gallery": spec}
    if not isinstance(spec, Mapping):
        raise ConfigError(f"bad theon spec {spec!r}")
    try:
        if "gallery" in spec:
            name = spec["gallery"]
            params = {k: v for k, v in spec.items() if k != "gallery"}
            if name in GALLERY:
                accepted = inspect.signature(GALLERY[name]).parameters
                params.update({k: v for k, v in overrides.items() if k in accepted and v is not None})
            return gallery(name, **_gallery_params(name, params))
        if "couple" in spec:
            a, b = spec["couple"]
            return independent_coupling(build_theon(a, overrides), build_theon(b, overrides))
        if "union" in spec:
            a, b = spec["union"]
            return disjoint_union_theon(build_theon(a, overrides), build_theon(b, overrides))
        if "reduct" in spec:
            return reduct_theon(build_theon(spec["reduct"], overrides), spec["keep"])
        if "interpret" in spec:
            target = build_theon(spec["interpret"], overrides)
            source = Language.from_json(spec["source"])
            formulas = {k: formula_from_json(v) for k, v in spec["formulas"].items()}
            return interpret_theon(Interpretation(source, target.language, formulas), target)
        if "pull" in spec:
            from .realization import strip_orders
            return strip_orders(build_theon(spec["pull"], overrides), int(spec.get("i_max", 6)))
        if "simulate" in spec:
            from .realization import simulate_orders
            bundle = simulate_orders(build_theon(spec["simulate"], overrides), int(spec.get("ell", 1)))
            part = spec.get("part", "interpreted")
            if part == "G":
                return bundle.G
            if part == "H":
                return bundle.H
            if part == "interpreted":
                return bundle.interpreted()
            raise ConfigError(f"unknown simulate part {part!r}")
        if "chamber_table" in spec:
            return chamber_table_theon(spec["chamber_table"])
    except ConfigError:
        raise
    except (ValueError, KeyError, TypeError) as e:
        raise ConfigError(f"theon spec does not type-check: {e}") from None
    raise ConfigError(f"theon spec needs one of gallery/couple/union/reduct/interpret/pull/simulate/chamber_table; "
                      f"got keys {sorted(spec)}")


def parse_theon_arg(text: str) -> Any:
    """A CLI --theon value: gallery name, inline JSON, or a path to a JSON/TOML file."""
    text = text.strip()
    if text.startswith("{") or text.startswith('"'):
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"bad inline JSON theon spec: {e}") from None
    path = Path(text)
    if path.suffix in (".json", ".toml") or path.is_file():
        data = load_file(path)
        return data.get("theon", data)
    return text


def load_file(path) -> dict:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from None
    try:
        if path.suffix == ".toml":
            return tomllib.loads(raw.decode())
        return json.loads(raw)
    except (ValueError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"cannot parse {path}: {e}") from None


# ---------------------------------------------------------------- experiment configs

@dataclass
class ExperimentConfig:
    theon: Any = None
    n: int | None = None
    backend: str = "auto"
    samples: int = 10**5
    trials: int = 10**5
    significance: float = 0.01
    seed: int | None = None
    out: str | None = None
    workers: int | None = None  # None: all available cores
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_mapping(cls, data: Mapping) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)} - {"extra"}
        kwargs = {k: v for k, v in data.items() if k in known}
        extra = {k: v for k, v in data.items() if k not in known}
        cfg = cls(**kwargs, extra=extra)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_mapping(load_file(path))

    def merged(self, **flags) -> "ExperimentConfig":
        """Copy with every non-None flag overriding the config field."""
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data.update({k: v for k, v in flags.items() if v is not None and k in data})
        out = ExperimentConfig(**data)
        out.validate()
        return out

    def validate(self, stochastic: bool = False) -> None:
        if self.backend not in ("auto", "exact", "mc"):
            raise ConfigError("backend must be auto, exact or mc")
        if self.n is not None and int(self.n) < 0:
            raise ConfigError("n must be non-negative")
        if not 0 < float(self.significance) < 1:
            raise ConfigError("significance must lie in (0,1)")
        if stochastic and self.seed is None:
            raise ConfigError("a seed is required for stochastic runs")
        if self.theon is not None:
            build_theon(self.theon)
