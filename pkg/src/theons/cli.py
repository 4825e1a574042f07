"""Command-line front end.

Exit codes: 0 success, 1 a verdict came out against the property being
checked, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import density, quasitest
from .config import ConfigError, ExperimentConfig, build_theon, parse_theon_arg
from .peon import GALLERY, EuclideanStructure, dependency_check, gallery
from .sampler import StructureCodec, sample_bits
from .space import SpaceDescriptor, sample_points
from .symbols import Structure

EXIT_OK, EXIT_VERDICT, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------- helpers

def _emit(args, text: str, payload) -> None:
    if args.json:
        print(json.dumps(payload, sort_keys=True, default=_json_default))
    else:
        print(text)


def _json_default(o):
    if isinstance(o, Fraction):
        return str(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if getattr(args, "config", None) else ExperimentConfig()
    flags = {k: getattr(args, k, None) for k in ("n", "backend", "samples", "trials", "significance", "seed",
                                                  "out", "workers")}
    theon = getattr(args, "theon", None)
    if theon is not None:
        flags["theon"] = parse_theon_arg(theon)
    data = {k: getattr(cfg, k) for k in ("theon", "n", "backend", "samples", "trials", "significance", "seed",
                                         "out", "workers")}
    data.update({k: v for k, v in flags.items() if v is not None})
    out = ExperimentConfig(**data, extra=cfg.extra)
    if out.backend not in ("auto", "exact", "mc"):
        raise ConfigError("backend must be auto, exact or mc")
    if out.seed is None:
        out.seed = 0
    if out.workers is None:
        out.workers = os.cpu_count() or 1
    return out


def _announce_cost(theon: EuclideanStructure, vertices, backend: str) -> None:
    """Print the exact engine's chamber count on stderr before it runs."""
    vs = tuple(vertices)
    if density.resolve_backend(theon, vs, backend) == "exact" and theon.is_chamber_grid:
        print(f"exact engine: {density.exact_cost(theon, vs)} chambers on {len(vs)} vertices", file=sys.stderr)


def _seed_note(args, seed, stochastic: bool = True) -> None:
    """Text mode: echo the seed on stderr so a stochastic run can be reproduced."""
    if stochastic and not args.json:
        print(f"seed {seed}", file=sys.stderr)


def _theon(cfg: ExperimentConfig, args) -> EuclideanStructure:
    if cfg.theon is None:
        raise ConfigError("a theon is required (--theon or a config file)")
    return build_theon(cfg.theon, {"k": getattr(args, "k", None)})


def _write(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def named_structure(theon: EuclideanStructure, name: str, n: int | None) -> Structure:
    """edge / nonedge / triangle / empty / complete, or a structure in JSON (inline or @file).

    edge: the tuple (1..k) of the first symbol on [k] (with its symmetric closure);
    nonedge: nothing on [k]; triangle: every tuple on [3]; empty/complete on [n].
    """
    lang = theon.language
    k = lang.max_arity()
    if name.startswith("@"):
        name = Path(name[1:]).read_text()
    if name.lstrip().startswith("{"):
        data = json.loads(name)
        rel = {p: [tuple(t) for t in ts] for p, ts in data.get("relations", {}).items()}
        return Structure(lang, data["vertices"], rel)
    import itertools
    if name in ("edge", "nonedge"):
        vs = list(range(1, k + 1))
        if name == "nonedge":
            return Structure(lang, vs, {})
        p = next(iter(lang))
        top = tuple(range(1, p.arity + 1))
        tuples = list(itertools.permutations(top)) if p.symmetric else [top]
        return Structure(lang, vs, {p.name: tuples})
    size = 3 if name == "triangle" else n
    if name in ("triangle", "complete", "empty"):
        if size is None:
            raise ConfigError(f"structure {name!r} needs --n")
        vs = list(range(1, size + 1))
        if name == "empty":
            return Structure(lang, vs, {})
        return Structure(lang, vs, {p.name: list(itertools.permutations(vs, p.arity)) for p in lang})
    raise ConfigError(f"unknown structure {name!r}; use edge, nonedge, triangle, empty, complete or JSON")


# ---------------------------------------------------------------- subcommands

def cmd_gallery(args) -> int:
    rows = []
    names = [args.name] if args.name else sorted(GALLERY)
    for name in names:
        if name not in GALLERY:
            raise ConfigError(f"unknown gallery entry {name!r}")
        t = build_theon({"gallery": name}, {"k": args.k})
        rows.append({"name": name, "language": t.language.to_json(),
                     "descriptor": {"weight_width": t.descriptor.p, "order_degree": t.descriptor.d},
                     "chamber_grid": t.is_chamber_grid,
                     "masks": {p: {"weights": sorted([list(a), c] for a, c in pe.mask.weights),
                                   "orders": sorted([list(a), j] for a, j in pe.mask.orders)}
                               for p, pe in t.peons.items()}})
    text = "\n".join(f"{r['name']:<18} {','.join(p['name'] + '/' + str(p['arity']) for p in r['language']):<8} "
                     f"p={r['descriptor']['weight_width']} d={r['descriptor']['order_degree']} "
                     f"{'chamber-grid' if r['chamber_grid'] else 'monte-carlo'}" for r in rows)
    _emit(args, text, rows)
    return EXIT_OK


def cmd_sample(args) -> int:
    cfg = _config(args)
    theon = _theon(cfg, args)
    if cfg.n is None:
        raise ConfigError("--n is required")
    vs = tuple(range(1, cfg.n + 1))
    bits = sample_bits(theon, vs, cfg.seed, args.count, workers=cfg.workers)
    codec = StructureCodec(theon.language, vs)
    lines = [codec.decode(b).dumps() for b in bits]
    _write(cfg.out, "".join(line + "\n" for line in lines))
    if cfg.out in (None, "-"):
        _seed_note(args, cfg.seed)
    else:
        print(json.dumps({"written": len(lines), "out": cfg.out, "seed": cfg.seed}) if args.json
              else f"wrote {len(lines)} structures to {cfg.out} (seed {cfg.seed})")
    return EXIT_OK


def cmd_density(args) -> int:
    cfg = _config(args)
    theon = _theon(cfg, args)
    n = cfg.n if cfg.n is not None else args.k
    k = named_structure(theon, args.structure, n)
    fn = density.phi if args.phi else density.t_ind
    _announce_cost(theon, k.vertices, cfg.backend)
    est = fn(theon, k, cfg.backend, cfg.samples, cfg.seed, cfg.workers)
    row = (StructureCodec(theon.language, k.vertices).key(k).hex() or "0", k.dumps(),
           str(est.rational) if est.exact else repr(est.value), est.ci_low, est.ci_high, est.exact)
    if cfg.out:
        _write(cfg.out, density.rows_to_csv([row]))
    payload = {"structure": k.to_json(), "value": str(est.rational) if est.exact else est.value,
               "exact": est.exact, "samples": est.samples, "half_width": est.half_width,
               "ci": [est.ci_low, est.ci_high], "seed": None if est.exact else cfg.seed}
    _emit(args, str(est), payload)
    _seed_note(args, cfg.seed, not est.exact)
    return EXIT_OK


def cmd_table(args) -> int:
    cfg = _config(args)
    theon = _theon(cfg, args)
    if cfg.n is None:
        raise ConfigError("--n is required")
    _announce_cost(theon, range(1, cfg.n + 1), cfg.backend)
    table = density.distribution_on(theon, cfg.n, cfg.backend, cfg.samples, cfg.seed, cfg.workers)
    rows = table.rows(all_structures=args.all)
    csv_text = density.rows_to_csv(rows)
    if args.json:
        payload = table.to_json()
        payload["seed"] = None if table.exact else cfg.seed
        if cfg.out:
            _write(cfg.out, csv_text)
        print(json.dumps(payload, sort_keys=True, default=_json_default))
    else:
        _write(cfg.out, csv_text)
        _seed_note(args, cfg.seed, not table.exact)
    return EXIT_OK


def cmd_equiv(args) -> int:
    cfg = _config(args)
    a = build_theon(parse_theon_arg(args.a), {"k": args.k})
    b = build_theon(parse_theon_arg(args.b), {"k": args.k})
    if cfg.n is None:
        raise ConfigError("--n is required")
    for t in (a, b):
        _announce_cost(t, range(1, cfg.n + 1), cfg.backend)
    rep = density.equivalence_test(a, b, cfg.n, cfg.samples, cfg.significance, cfg.seed, cfg.backend, cfg.workers)
    payload = rep.to_json()
    payload["seed"] = cfg.seed
    _emit(args, str(rep), payload)
    _seed_note(args, cfg.seed, rep.method != "exact")
    return EXIT_OK if rep.equivalent else EXIT_VERDICT


def _static_independence(theon: EuclideanStructure) -> int:
    """Largest ell such that no peon mask mentions a subset of size <= ell."""
    sizes = [len(a) for pe in theon.peons.values() for a in pe.mask.subsets()]
    return (min(sizes) - 1) if sizes else theon.language.max_arity()


def cmd_realize(args) -> int:
    from .realization import (RealizationFamily, hat_f, hat_g, simulate_orders, strip_orders)
    cfg = _config(args)
    theon = _theon(cfg, args)
    checks = [c for c in args.verify.split(",") if c]
    unknown = set(checks) - {"roundtrip", "equiv", "rank", "agreement"}
    if unknown:
        raise ConfigError(f"unknown checks {sorted(unknown)}")
    n = cfg.n if cfg.n is not None else max(theon.language.max_arity(), 2)
    report = {"mode": args.mode, "theon": theon.name, "seed": cfg.seed, "checks": {}}
    if args.mode == "strip-orders":
        family = RealizationFamily(theon.descriptor.d)
        pulled = strip_orders(theon)
        for c in checks:
            if c == "roundtrip":
                bad, degenerate = 0, 0
                for i in range(1, min(n, 4) + 1):
                    vs = tuple(range(1, i + 1))
                    x = sample_points(vs, family.inverse_source, cfg.seed, args.points, stream=i)
                    gx, deg = hat_g(x, family)
                    back = hat_f(gx, family)
                    keep = ~deg.rows
                    degenerate += deg.count
                    for s in range(i):
                        bad += int(np.any(back.weights[s][:, keep, 0] != x.weights[s][:, keep, 0]))
                        if s and family.d:
                            bad += int(np.any(back.ranks[s][:, keep] != x.ranks[s][:, keep]))
                report["checks"]["roundtrip"] = {"pass": bad == 0, "mismatched_levels": bad,
                                                 "degenerate": degenerate, "points": args.points}
            elif c == "equiv":
                rep = density.equivalence_test(pulled, theon, n, cfg.samples, cfg.significance, cfg.seed, cfg.backend)
                report["checks"]["equiv"] = {"pass": rep.equivalent, **rep.to_json()}
            elif c == "rank":
                ell = _static_independence(theon)
                subsets = [a for a in _subsets(theon.language.max_arity(), ell - 1)]
                flips = []
                for name, pe in pulled.peons.items():
                    for a in subsets:
                        if len(a) <= pe.arity and not dependency_check(pe, a, args.points, cfg.seed):
                            flips.append([name, list(a)])
                report["checks"]["rank"] = {"pass": not flips, "source_independence": ell,
                                            "checked_sizes": max(ell - 1, 0), "flips": flips}
            else:
                raise ConfigError(f"check {c!r} does not apply to strip-orders")
    else:
        bundle = simulate_orders(theon, args.ell)
        interpreted = bundle.interpreted()
        for c in checks:
            if c in ("agreement", "roundtrip"):
                agree, total = 0, 0
                for p in theon.language:
                    vs = tuple(range(1, p.arity + 1))
                    x = sample_points(vs, theon.descriptor, cfg.seed, args.points)
                    agree += int((interpreted.peons[p.name].evaluate(x) == theon.peons[p.name].evaluate(x)).sum())
                    total += args.points
                report["checks"]["agreement"] = {"pass": agree / total >= 0.999, "agreement": agree / total}
            elif c == "equiv":
                rep = density.equivalence_test(interpreted, theon, n, cfg.samples, cfg.significance, cfg.seed,
                                               cfg.backend)
                report["checks"]["equiv"] = {"pass": rep.equivalent, **rep.to_json()}
            elif c == "rank":
                flips = []
                for name, pe in bundle.H.peons.items():
                    for a in _subsets(pe.arity, args.ell + 1):
                        if len(a) == args.ell + 1 and not dependency_check(pe, a, args.points, cfg.seed, "orders"):
                            flips.append([name, list(a)])
                report["checks"]["rank"] = {"pass": not flips, "flips": flips}
    ok = all(v["pass"] for v in report["checks"].values())
    report["pass"] = ok
    text = "\n".join(f"{k:<10} {'pass' if v['pass'] else 'FAIL'}" for k, v in report["checks"].items())
    _emit(args, text or "no checks requested", report)
    _seed_note(args, cfg.seed)
    return EXIT_OK if ok else EXIT_VERDICT


def _subsets(k: int, max_size: int):
    import itertools
    for s in range(1, max(max_size, 0) + 1):
        yield from itertools.combinations(range(1, k + 1), s)


def cmd_quasitest(args) -> int:
    cfg = _config(args)
    theon = _theon(cfg, args)
    if args.property == "disc":
        rep = quasitest.disc_test(theon, args.ell, cfg.n, args.bins, args.trials_per_cell, cfg.significance,
                                  cfg.seed, args.expect)
    else:
        rep = quasitest.ucouple_test(theon, args.ell, cfg.n, args.bins, cfg.trials, cfg.significance, cfg.seed,
                                     args.expect)
    _emit(args, rep.line(), rep.to_json())
    _seed_note(args, cfg.seed)
    if args.expect:
        return EXIT_OK if rep.ok is not False else EXIT_VERDICT
    return EXIT_OK if rep.verdict == "consistent" else EXIT_VERDICT


def cmd_suite(args) -> int:
    seed = 0 if args.seed is None else args.seed
    res = quasitest.counterexample_suite(seed, args.trials, args.trials_per_cell, args.samples, args.significance)
    text = "\n".join(r.line() for r in res.reports) + f"\nsuite {'passed' if res.passed else 'FAILED'} (seed {seed})"
    _emit(args, text, {"seed": seed, "passed": res.passed, "reports": [r.to_json() for r in res.reports]})
    return EXIT_OK if res.passed else EXIT_VERDICT


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="theons", description="Sample, measure and test exchangeable random structures.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p, theon=True, sampling=True):
        p.add_argument("--json", action="store_true", help="machine-readable output")
        if theon:
            p.add_argument("--theon", help="gallery name, inline JSON spec, or JSON/TOML file")
            p.add_argument("--config", help="experiment config (JSON or TOML); flags override it")
            p.add_argument("--k", type=int, help="gallery parameter k for builders that take one")
        if sampling:
            p.add_argument("--seed", type=int, help="root seed (default 0)")
            p.add_argument("--workers", type=int, help="sampling threads, default all cores (results do not depend on it)")

    p = sub.add_parser("gallery", help="list gallery theons")
    p.add_argument("--name", help="show one entry")
    p.add_argument("--k", type=int)
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(fn=cmd_gallery)

    p = sub.add_parser("sample", help="sample structures as JSON lines")
    common(p)
    p.add_argument("--n", type=int, help="number of vertices")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(fn=cmd_sample)

    p = sub.add_parser("density", help="t_ind (or phi) of one structure")
    common(p)
    p.add_argument("--structure", required=True,
                   help="edge, nonedge, triangle, empty, complete, inline JSON or @file")
    p.add_argument("--n", type=int, help="vertex count for empty/complete")
    p.add_argument("--backend", choices=["auto", "exact", "mc"])
    p.add_argument("--samples", type=int)
    p.add_argument("--phi", action="store_true", help="isomorphism-class density instead of labeled")
    p.add_argument("--out", help="also write a CSV row here")
    p.set_defaults(fn=cmd_density)

    p = sub.add_parser("table", help="distribution table on [n] as CSV")
    common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--backend", choices=["auto", "exact", "mc"])
    p.add_argument("--samples", type=int)
    p.add_argument("--all", action="store_true", help="include zero-probability structures")
    p.add_argument("--out", help="CSV file (default stdout)")
    p.set_defaults(fn=cmd_table)

    p = sub.add_parser("equiv", help="test whether two theons induce the same distributions on [n]")
    common(p, theon=False)
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--config", help="experiment config (JSON or TOML)")
    p.add_argument("--n", type=int)
    p.add_argument("--backend", choices=["auto", "exact", "mc"])
    p.add_argument("--samples", type=int)
    p.add_argument("--significance", type=float)
    p.set_defaults(fn=cmd_equiv)

    p = sub.add_parser("realize", help="strip or simulate order variables and verify")
    common(p)
    p.add_argument("--mode", choices=["strip-orders", "simulate-orders"], default="strip-orders")
    p.add_argument("--ell", type=int, default=1)
    p.add_argument("--verify", default="roundtrip,equiv,rank",
                   help="comma list of roundtrip, equiv, rank, agreement")
    p.add_argument("--n", type=int)
    p.add_argument("--backend", choices=["auto", "exact", "mc"])
    p.add_argument("--samples", type=int)
    p.add_argument("--significance", type=float)
    p.add_argument("--points", type=int, default=10**4, help="random points per pointwise check")
    p.set_defaults(fn=cmd_realize)

    p = sub.add_parser("quasitest", help="Disc[ell] or UCouple[ell] test")
    common(p)
    p.add_argument("--property", choices=["disc", "ucouple"], required=True)
    p.add_argument("--ell", type=int, default=1)
    p.add_argument("--n", type=int)
    p.add_argument("--bins", type=int, default=2)
    p.add_argument("--trials", type=int, help="samples for ucouple")
    p.add_argument("--trials-per-cell", dest="trials_per_cell", type=int, default=2000)
    p.add_argument("--significance", type=float)
    p.add_argument("--expect", choices=["consistent", "rejected"], help="exit 1 only if the verdict differs")
    p.set_defaults(fn=cmd_quasitest)

    p = sub.add_parser("suite", help="run the counterexample suite")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int, default=10**5)
    p.add_argument("--trials-per-cell", dest="trials_per_cell", type=int, default=4000)
    p.add_argument("--samples", type=int, default=10**5)
    p.add_argument("--significance", type=float, default=0.01)
    p.set_defaults(fn=cmd_suite)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --help
        return int(e.code or 0)
    if not getattr(args, "command", None):
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except (ConfigError, UsageError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())
