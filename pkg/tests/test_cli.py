import json
import subprocess
import sys


from theons.cli import build_parser, run
from theons.density import csv_to_rows
from theons.peon import GALLERY
from theons.symbols import Structure


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_density_example(capsys):
    code, out, err = call(capsys, "density", "--theon", "qr_graph", "--k", "2", "--structure", "edge",
                          "--backend", "exact")
    assert code == 0 and out.strip() == "1/2"
    assert "chambers" in err  # the exact engine announces its cost


def test_equiv_example(capsys):
    code, out, err = call(capsys, "equiv", "--a", "twist_graph", "--b", "qr_graph", "--n", "3",
                          "--samples", "100000", "--seed", "7")
    assert code == 0 and out.startswith("equivalent (p=")
    assert "seed 7" in err
    code, out, _ = call(capsys, "equiv", "--a", "bipartite_graph", "--b", "qr_graph", "--n", "3")
    assert code == 1 and out.startswith("not equivalent")


def test_suite_example(capsys):
    code, out, _ = call(capsys, "suite", "--seed", "1", "--trials", "20000", "--samples", "20000",
                        "--trials-per-cell", "2000")
    assert code == 0 and "suite passed (seed 1)" in out
    assert out.count("\n") == 8


def test_usage_errors(capsys):
    assert call(capsys, "bogus")[0] == 2
    assert call(capsys)[0] == 2
    code, _, err = call(capsys, "density", "--theon", "nope", "--structure", "edge")
    assert code == 2 and "unknown gallery entry" in err
    code, _, err = call(capsys, "table", "--theon", "qr_graph")
    assert code == 2 and "--n" in err
    code, _, err = call(capsys, "density", "--theon", "qr_graph", "--structure", "pentagon")
    assert code == 2 and "unknown structure" in err


def test_every_subcommand_has_help(capsys):
    sub = next(a for a in build_parser()._actions if a.dest == "command")
    assert set(sub.choices) == {"gallery", "sample", "density", "table", "equiv", "realize", "quasitest", "suite"}
    for name in sub.choices:
        code, out, _ = call(capsys, name, "--help")
        assert code == 0 and "--json" in out


def test_json_everywhere(capsys):
    cases = [
        ["gallery"],
        ["sample", "--theon", "qr_graph", "--n", "3", "--count", "2", "--out", "/dev/null"],
        ["density", "--theon", "twist_graph", "--structure", "edge", "--samples", "2000"],
        ["table", "--theon", "qr_graph", "--n", "2"],
        ["equiv", "--a", "qr_graph", "--b", "kqrO_0theon", "--k", "2", "--n", "2"],
        ["realize", "--theon", "kqrO_1theon", "--k", "2", "--points", "1000", "--samples", "2000"],
        ["quasitest", "--theon", "qr_graph", "--property", "ucouple", "--n", "3", "--trials", "2000"],
    ]
    for argv in cases:
        code, out, err = call(capsys, *argv, "--json")
        assert code in (0, 1), (argv, err)
        json.loads(out)
        assert "seed" not in err  # the seed travels inside the JSON instead


def test_gallery_listing(capsys):
    code, out, _ = call(capsys, "gallery")
    assert code == 0 and len(out.strip().splitlines()) == len(GALLERY)
    code, out, _ = call(capsys, "gallery", "--name", "kqrO_1theon", "--k", "3", "--json")
    assert json.loads(out)[0]["descriptor"] == {"weight_width": 1, "order_degree": 1}


def test_sample_jsonl_is_reproducible(capsys, tmp_path):
    argv = ["sample", "--theon", "twist_graph", "--n", "4", "--count", "20", "--seed", "3"]
    code, a, err = call(capsys, *argv)
    assert code == 0 and "seed 3" in err
    _, b, _ = call(capsys, *argv, "--workers", "3")
    assert a == b
    lines = a.strip().splitlines()
    assert len(lines) == 20
    assert all(len(Structure.from_json(line).vertices) == 4 for line in lines)
    _, c, _ = call(capsys, *argv[:-1], "4")
    assert c != a
    out = tmp_path / "s.jsonl"
    code, msg, _ = call(capsys, *argv, "--out", str(out))
    assert out.read_text() == a and "wrote 20" in msg


def test_table_csv(capsys, tmp_path):
    code, out, _ = call(capsys, "table", "--theon", "kqrO_1theon", "--k", "3", "--n", "3")
    rows = csv_to_rows(out)
    assert code == 0 and len(rows) == 6 and {r["value"] for r in rows} == {"1/6"}
    code, out, _ = call(capsys, "table", "--theon", "qr_tournament_0", "--n", "2", "--all")
    assert len(csv_to_rows(out)) == 4  # zero rows for the non-tournaments are kept
    target = tmp_path / "t.csv"
    call(capsys, "table", "--theon", "qr_graph", "--n", "3", "--out", str(target))
    assert len(csv_to_rows(target.read_text())) == 8


def test_density_csv_row_and_phi(capsys, tmp_path):
    target = tmp_path / "d.csv"
    code, out, _ = call(capsys, "density", "--theon", "qr_graph", "--structure", "triangle", "--phi",
                        "--out", str(target))
    assert code == 0 and out.strip() == "1/8"
    assert csv_to_rows(target.read_text())[0]["value"] == "1/8"
    inline = json.dumps({"vertices": [1, 2, 3], "relations": {"E": [[1, 2], [2, 1]]}})
    code, out, _ = call(capsys, "density", "--theon", "qr_graph", "--structure", inline)
    assert out.strip() == "1/8"


def test_config_file_with_flag_override(capsys, tmp_path):
    cfg = tmp_path / "exp.toml"
    cfg.write_text('n = 2\nseed = 5\n\n[theon]\ngallery = "kqrO_1theon"\nk = 2\n')
    code, out, _ = call(capsys, "table", "--config", str(cfg))
    assert code == 0 and len(csv_to_rows(out)) == 2
    code, out, _ = call(capsys, "table", "--config", str(cfg), "--n", "3")
    assert len(csv_to_rows(out)) == 8
    jcfg = tmp_path / "exp.json"
    jcfg.write_text(json.dumps({"theon": "twist_graph", "n": 3, "samples": 3000, "seed": 9}))
    _, a, _ = call(capsys, "table", "--config", str(jcfg))
    _, b, _ = call(capsys, "table", "--config", str(jcfg), "--seed", "9")
    _, c, _ = call(capsys, "table", "--config", str(jcfg), "--seed", "10")
    assert a == b and a != c
    bad = tmp_path / "bad.toml"
    bad.write_text('backend = "quantum"\n')
    assert call(capsys, "table", "--config", str(bad), "--theon", "qr_graph")[0] == 2


def test_realize_modes(capsys):
    code, out, _ = call(capsys, "realize", "--theon", "kqrO_1theon", "--k", "2", "--points", "2000",
                        "--samples", "20000")
    assert code == 0 and out.count("pass") == 3
    code, out, _ = call(capsys, "realize", "--theon", "kqrO_1theon", "--k", "2", "--mode", "simulate-orders",
                        "--verify", "agreement,rank", "--points", "2000", "--json")
    data = json.loads(out)
    assert code == 0 and data["checks"]["agreement"]["agreement"] >= 0.999
    assert call(capsys, "realize", "--theon", "qr_graph", "--mode", "simulate-orders")[0] == 2
    assert call(capsys, "realize", "--theon", "kqrO_1theon", "--verify", "nonsense")[0] == 2


def test_quasitest_exit_codes(capsys):
    argv = ["quasitest", "--theon", "disc_3hypergraph", "--property", "ucouple", "--n", "4", "--trials", "20000"]
    code, out, _ = call(capsys, *argv)
    assert code == 1 and "rejected" in out
    assert call(capsys, *argv, "--expect", "rejected")[0] == 0
    assert call(capsys, *argv, "--expect", "consistent")[0] == 1
    code, out, _ = call(capsys, "quasitest", "--theon", "disc_3hypergraph", "--property", "disc", "--n", "3",
                        "--json")
    assert code == 0 and json.loads(out)["verdict"] == "consistent"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "theons", "density", "--theon", "qr_graph", "--structure", "edge"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip() == "1/2"
