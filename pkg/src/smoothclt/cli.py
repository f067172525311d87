"""Command-line interface: ``smoothclt <command> [options]``.

Exit codes: 0 all checks pass, 2 a bound is violated, 1 usage or I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import bounds, lab
from .config import ConfigError, load_config
from .entropy import differential_entropy, kl_to_std_normal, mc_entropy_oracle, scenario_moments
from .model import Scenario
from .spectral import GridError, GridSpec, density_to_text, exact_mixture_density, integral_conditions, zero_condition

EXIT_OK, EXIT_USAGE, EXIT_VIOLATION = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="YAML scenario file")
    p.add_argument("--out", help="output directory (default: stdout)")
    p.add_argument("--format", choices=["csv", "jsonl", "plotdata"], default=None)
    p.add_argument("--seed", type=int, default=None, help="seed (Monte Carlo oracle, corpus)")
    p.add_argument("--grid-nodes", type=int, default=None)
    p.add_argument("--grid-window", type=float, default=None)
    p.add_argument("--n", type=int, default=None, help="single n instead of the configured list")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="smoothclt", description="Entropic CLT for smoothed lattice sums.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name, help_ in [
        ("density", "emit the density of Z_n on the grid"),
        ("entropy", "differential entropy h(Z_n)"),
        ("kl", "relative entropy D(Z_n || N(0,1))"),
        ("sweep", "convergence sweep over n"),
        ("dichotomy", "zero condition vs terminal D for a list of noises"),
        ("check-bounds", "randomized corpus run of every inequality checker"),
        ("zero-cond", "check f(pi k) = 0 for the configured noise"),
        ("cond-integrals", "classify the CF integrability conditions"),
    ]:
        p = sub.add_parser(name, help=help_)
        _common(p)
        if name == "entropy":
            p.add_argument("--mc", type=int, default=0, help="also run the Monte Carlo oracle with N samples")
        if name == "zero-cond":
            p.add_argument("--K", type=int, default=16)
        if name == "check-bounds":
            p.add_argument("--per-checker", type=int, default=None)
    return parser


def _grid(args, cfg) -> GridSpec:
    g = cfg.grid
    kw = {}
    if args.grid_nodes is not None:
        kw["nodes"] = args.grid_nodes
    if args.grid_window is not None:
        kw["window"] = args.grid_window
    return dataclasses.replace(g, **kw) if kw else g


def _scenario(args, cfg) -> Scenario:
    sc = cfg.scenario
    if args.n is not None:
        comps = tuple(dataclasses.replace(c, n_values=(args.n,)) for c in sc.components)
        sc = dataclasses.replace(sc, n_values=(args.n,), components=comps)
    return sc


def _write(args, name: str, text: str):
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text)
    else:
        sys.stdout.write(text)


def _table(rows: list[dict], fmt: str) -> str:
    if fmt == "jsonl":
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows)
    cols = list(rows[0]) if rows else []
    lines = [",".join(cols)]
    for r in rows:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in r.values()))
    return "\n".join(lines) + "\n"


def _run(args) -> int:
    cfg = load_config(args.config)
    spec = _grid(args, cfg)
    cmd = args.command
    fmt = args.format

    if cmd == "density":
        sc = _scenario(args, cfg)
        if sc.dimension != 1:
            raise UsageError("density output is one-dimensional")
        for n in sc.n_values:
            _write(args, f"density_n{n}.txt", density_to_text(exact_mixture_density(sc, n, spec)))
        return EXIT_OK

    if cmd in ("entropy", "kl"):
        sc = _scenario(args, cfg)
        rows = []
        if sc.dimension != 1:
            res = lab.run_sweep(sc, spec, cross_check=False)
            key = "h" if cmd == "entropy" else "D"
            rows = [{"n": r.n, key: getattr(r, key)} for r in res.rows]
        for n in sc.n_values if sc.dimension == 1 else ():
            p = exact_mixture_density(sc, n, spec)
            h = differential_entropy(p)
            if cmd == "entropy":
                row = {"n": n, "h": h}
                if args.mc:
                    est = mc_entropy_oracle(lab.scenario_sampler(sc, n), args.mc, seed=args.seed or 0)
                    row.update(mc_estimate=est.estimate, mc_std_error=est.std_error)
                rows.append(row)
            else:
                rows.append({"n": n, "D": kl_to_std_normal(p, scenario_moments(sc, n), entropy=h)})
        _write(args, f"{cmd}.{fmt or 'csv'}", _table(rows, fmt or "csv"))
        return EXIT_OK

    if cmd == "sweep":
        sc = _scenario(args, cfg)
        fmt = fmt or "csv"
        res = lab.run_sweep(sc, spec, keep_densities=(fmt == "plotdata"))
        if args.out:
            lab.emit_outputs(res, fmt, args.out)
        elif fmt == "plotdata":
            raise UsageError("plotdata output needs --out")
        else:
            sys.stdout.write(lab.sweep_csv(res) if fmt == "csv" else lab.sweep_jsonl(res))
        return EXIT_OK

    if cmd == "dichotomy":
        sc = _scenario(args, cfg)
        rows = lab.dichotomy_experiment(cfg.noises, sc.step, sc.n_values, spec)
        recs = [dataclasses.asdict(r) for r in rows]
        _write(args, f"dichotomy.{fmt or 'csv'}", _table(recs, fmt or "csv"))
        return EXIT_OK

    if cmd == "check-bounds":
        seed = args.seed if args.seed is not None else int(cfg.corpus.get("seed", 0))
        per = args.per_checker or int(cfg.corpus.get("per_checker", 100))
        res = bounds.run_corpus(seed=seed, per_checker=per, spec=spec)
        _write(args, "bounds.jsonl", res.jsonl())
        for name, rep in res.violations:
            print(f"VIOLATION {name} {rep.anchor}: lhs={rep.lhs!r} rhs={rep.rhs!r}", file=sys.stderr)
        return EXIT_OK if res.passed else EXIT_VIOLATION

    if cmd == "zero-cond":
        zc = zero_condition(cfg.scenario.noise, args.K)
        rows = [{"k": k, "value": repr(v)} for k, v in zc.values]
        rows.append({"k": "verdict", "value": f"{zc.verdict} offender={zc.offender} max={zc.max_abs!r}"})
        _write(args, f"zero_cond.{fmt or 'csv'}", _table(rows, fmt or "csv"))
        return EXIT_OK

    if cmd == "cond-integrals":
        res = integral_conditions(cfg.scenario.noise)
        rows = [{"condition": k, "status": v.status, "ratios": " ".join(f"{r:.6g}" for r in v.ratios)} for k, v in res.items()]
        _write(args, f"cond_integrals.{fmt or 'csv'}", _table(rows, fmt or "csv"))
        return EXIT_OK

    raise UsageError("a command is required")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required")
        return _run(args)
    except (UsageError, ConfigError, GridError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
