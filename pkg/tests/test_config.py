import json

import numpy as np
import pytest

from theons.config import (ConfigError, ExperimentConfig, build_theon, chamber_table_theon, formula_from_json,
                           formula_to_json, load_file, parse_theon_arg)
from theons.density import distribution_on, equivalence_test
from theons.peon import gallery, kqrO_1theon
from theons.space import sample_points


def test_gallery_specs_and_overrides():
    assert build_theon("qr_graph").name == gallery("qr_graph").name
    t = build_theon({"gallery": "kqrO_1theon", "k": 3})
    assert t.language.max_arity() == 3
    assert build_theon("kqrO_1theon", {"k": 2}).language.max_arity() == 2
    # overrides are ignored by entries that take no such parameter
    assert build_theon("qr_graph", {"k": 5}).language.names == ("E",)
    with pytest.raises(ConfigError):
        build_theon({"gallery": "qr_graph", "k": 2})
    with pytest.raises(ConfigError):
        build_theon("no_such_theon")
    with pytest.raises(ConfigError):
        build_theon({"mystery": 1})


def test_composition_tree():
    both = build_theon({"couple": ["qr_graph", {"gallery": "kqrO_1theon", "k": 2}]})
    assert both.language.names == ("E", "P")
    only = build_theon({"reduct": {"couple": ["qr_graph", "qr_tournament_0"]}, "keep": ["P"]})
    assert only.language.names == ("P",)
    comp = build_theon({"interpret": "qr_graph", "source": [{"name": "N", "arity": 2, "symmetric": True}],
                        "formulas": {"N": ["and", ["not", ["atom", "E", 1, 2]], ["not", ["eq", 1, 2]]]}})
    x = sample_points((1, 2), comp.descriptor, seed=0, size=500)
    assert np.array_equal(comp["N"].evaluate(x), ~gallery("qr_graph")["E"].evaluate(x))
    pulled = build_theon({"pull": {"gallery": "kqrO_1theon", "k": 2}})
    assert pulled.descriptor.d == 0
    sim = build_theon({"simulate": {"gallery": "kqrO_1theon", "k": 2}, "ell": 1, "part": "G"})
    assert len(sim.language) == 3
    with pytest.raises(ConfigError):
        build_theon({"union": ["qr_graph", {"gallery": "kqrO_1theon", "k": 2}]})  # different spaces
    with pytest.raises(ConfigError):
        build_theon({"simulate": "qr_graph", "part": "G"})  # needs one order variable


def test_formula_round_trip():
    data = ["or", ["atom", "E", 1, 2], ["and", ["eq", 1, 2], True], ["not", False]]
    assert formula_to_json(formula_from_json(data)) == data
    with pytest.raises(ConfigError):
        formula_from_json(["xor", 1])


def test_chamber_table_reproduces_qr_graph():
    spec = {"symbol": "E", "arity": 2, "symmetric": True, "grid": 2, "weights": [[[1, 2], 0]],
            "members": [{"cells": [0]}]}
    t = chamber_table_theon(spec)
    assert t.is_chamber_grid
    assert equivalence_test(t, gallery("qr_graph"), 3).equivalent
    with pytest.raises(ConfigError):
        chamber_table_theon({"arity": 2})
    with pytest.raises(ConfigError):
        chamber_table_theon({**spec, "members": [{"cells": [0, 1]}]})


def test_theon_arguments(tmp_path):
    assert parse_theon_arg("qr_graph") == "qr_graph"
    assert parse_theon_arg('{"gallery": "kqrO_1theon", "k": 3}') == {"gallery": "kqrO_1theon", "k": 3}
    f = tmp_path / "t.toml"
    f.write_text('[theon]\ngallery = "kqrO_0theon"\nk = 3\n')
    assert parse_theon_arg(str(f)) == {"gallery": "kqrO_0theon", "k": 3}
    with pytest.raises(ConfigError):
        parse_theon_arg("{broken")


def test_experiment_configs(tmp_path):
    toml = tmp_path / "exp.toml"
    toml.write_text('theon = "twist_graph"\nn = 3\nbackend = "mc"\nsamples = 5000\nseed = 4\nlabel = "x"\n')
    cfg = ExperimentConfig.load(toml)
    assert (cfg.n, cfg.backend, cfg.samples, cfg.seed) == (3, "mc", 5000, 4)
    assert cfg.extra == {"label": "x"}
    js = tmp_path / "exp.json"
    js.write_text(json.dumps({"theon": {"gallery": "kqrO_1theon", "k": 2}, "n": 3}))
    assert ExperimentConfig.load(js).theon == {"gallery": "kqrO_1theon", "k": 2}
    merged = cfg.merged(n=4, seed=None)
    assert merged.n == 4 and merged.seed == 4
    assert distribution_on(build_theon(cfg.theon), merged.n, "mc", 1000, merged.seed).samples == 1000


def test_config_validation(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping({"backend": "quantum"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping({"significance": 2})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping({"theon": {"gallery": "nope"}})
    with pytest.raises(ConfigError):
        ExperimentConfig(theon="qr_graph").validate(stochastic=True)
    bad = tmp_path / "bad.toml"
    bad.write_text("theon = ")
    with pytest.raises(ConfigError):
        load_file(bad)
    with pytest.raises(ConfigError):
        load_file(tmp_path / "missing.json")
