"""Command-line front end: ``gauss-deanon {generate,attack,sweep,scaling,thresholds}``.

Exit codes: 0 for a completed run (an unsuccessful attack is still a
completed run), 1 for bad input files or I/O problems, 2 for usage errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io as fio
from .adversary import AdversaryKnowledge, attack
from .anonymizer import anonymize, sample_permutation
from .core import AttackConfig, Regime, delta_n, delta_structure, required_m
from .generator import GeneratorConfig, PSDRetryExhausted, sample_population, sample_traces
from .harness import CellConfig, SweepSpec, derive_seed, scaling_experiment, sweep

SEED_ENV = "GAUSS_DEANON_SEED"


class CLIError(Exception):
    pass


def resolve_seed(flag, from_file=None) -> int:
    if flag is not None:
        return int(flag)
    if from_file is not None:
        return int(from_file)
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise CLIError(f"{SEED_ENV}={env!r} is not an integer") from None
    return 0


def _csv_ints(text):
    try:
        return tuple(int(t) for t in text.replace(",", " ").split())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from None


def cmd_generate(args) -> int:
    conf = fio.read_keyvalue(args.config, fio.GENERATOR_SCHEMA)
    m = conf.pop("m", args.m)
    if m is None or m < 1:
        raise CLIError("the number of observations 'm' must be given (config key or --m) and be >= 1")
    seed = resolve_seed(args.seed, conf.pop("seed", None))
    try:
        cfg = GeneratorConfig(**conf)
    except (TypeError, ValueError) as exc:
        raise CLIError(f"{args.config}: {exc}") from None
    try:
        pop = sample_population(cfg, derive_seed(seed, 1))
    except PSDRetryExhausted as exc:
        raise CLIError(str(exc)) from None
    x = sample_traces(pop, m, derive_seed(seed, 2))
    perm = sample_permutation(cfg.n, derive_seed(seed, 3))
    y = anonymize(x, perm)

    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    fio.write_population(out / "population.txt", pop)
    fio.write_traces(out / "traces.txt", y, pop.sigma2)
    fio.write_permutation(out / "permutation.txt", perm)

    min_eig = min(float(np.linalg.eigvalsh(pop.group_block(g))[0]) for g in pop.graph.groups)
    print(f"n: {pop.n}")
    print(f"m: {m}")
    print(f"groups: {len(pop.graph.groups)} (sizes {sorted({len(g) for g in pop.graph.groups})})")
    print(f"edges: {len(pop.graph.edges)}")
    print(f"min block eigenvalue: {fio.fmt_real(min_eig)}")
    print(f"seed: {seed}")
    print(f"wrote: {out / 'population.txt'}, {out / 'traces.txt'}, {out / 'permutation.txt'}")
    return 0


def cmd_attack(args) -> int:
    y, _ = fio.read_traces(args.traces)
    pop = fio.read_population(args.knowledge)
    if pop.n != y.n:
        raise CLIError(f"trace file has {y.n} rows but knowledge file describes {pop.n} users")
    perm = fio.read_permutation(args.perm) if args.perm else None
    if perm is not None and perm.n != y.n:
        raise CLIError(f"permutation covers {perm.n} users but trace file has {y.n} rows")
    cfg = AttackConfig(
        alpha=args.alpha,
        c_const=args.c,
        regime=args.regime,
        edge_threshold_exponent=args.threshold_exponent,
    )
    knowledge = AdversaryKnowledge(cfg.regime, pop, args.target)
    result = attack(y, knowledge, cfg, permutation=perm)
    print(json.dumps(result.to_dict(), indent=2, sort_keys=True))
    return 0


def _sweep_spec(path, args) -> SweepSpec:
    conf = fio.read_keyvalue(path, fio.SWEEP_SCHEMA)
    if "n" not in conf:
        raise CLIError(f"{path}: sweep spec needs an 'n' grid")
    seed = resolve_seed(args.seed, conf.pop("seed", None))
    cell_keys = {
        "rho_range", "mean_interval", "sigma2", "topology", "target_user",
        "edge_threshold_exponent", "max_group_size_for_matching",
    }
    cell_kw = {k: conf.pop(k) for k in list(conf) if k in cell_keys}
    if args.trials is not None:
        conf["trials"] = args.trials
    jobs = args.jobs if args.jobs is not None else conf.pop("jobs", 1)
    conf.pop("jobs", None)
    try:
        return SweepSpec(seed=seed, jobs=jobs, base_cell=replace(CellConfig(), **cell_kw), **conf)
    except ValueError as exc:
        raise CLIError(f"{path}: {exc}") from None


def cmd_sweep(args) -> int:
    spec = _sweep_spec(args.spec, args)
    rows = sweep(spec)
    text = fio.sweep_csv(rows)
    with open(args.output, "w", encoding="ascii", newline="\n") as fh:
        fh.write(text)
    if args.emit_gnuplot:
        gp = Path(args.output).with_suffix(".gp")
        with open(gp, "w", encoding="ascii", newline="\n") as fh:
            fh.write(fio.gnuplot_script(args.output, [r.value for r in spec.regime]))
    for row in rows:
        if row.error:
            print(f"cell regime={row.cell.regime.value} n={row.cell.n} s={row.cell.s}: {row.error}", file=sys.stderr)
    print(f"wrote {len(rows)} rows to {args.output}")
    return 0


def cmd_scaling(args) -> int:
    seed = resolve_seed(args.seed)
    report = scaling_experiment(
        args.regime, args.s, args.alpha, args.n_grid, args.trials,
        c=args.c, seed=seed, jobs=args.jobs or 1, m=args.m,
    )
    print("\n".join(report.lines()))
    if args.output:
        with open(args.output, "w", encoding="ascii", newline="\n") as fh:
            fh.write(fio.sweep_csv(report.rows))
    return 0


THRESHOLD_HEADER = ("n", "s", "alpha", "c", "delta_n", "delta_struct", "m_full", "m_struct", "m_indep")


def thresholds_table(n_grid, s_grid, alpha: float, c: float) -> str:
    lines = [",".join(THRESHOLD_HEADER)]
    for n in n_grid:
        for s in s_grid:
            lines.append(
                ",".join(
                    [
                        str(n),
                        str(s),
                        fio.fmt_real(alpha),
                        fio.fmt_real(c),
                        format(delta_n(n, s, alpha), ".15g"),
                        format(delta_structure(n, s, alpha), ".15g"),
                        str(required_m(n, s, alpha, c, Regime.FULL_KNOWLEDGE)),
                        str(required_m(n, s, alpha, c, Regime.STRUCTURE_ONLY)),
                        str(required_m(n, s, alpha, c, Regime.INDEPENDENT)),
                    ]
                )
            )
    return "\n".join(lines) + "\n"


def cmd_thresholds(args) -> int:
    sys.stdout.write(thresholds_table(args.n_grid, args.s, args.alpha, args.c))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gauss-deanon", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample a population and write anonymized traces")
    p.add_argument("config")
    p.add_argument("output", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--m", type=int, help="observations per user if the config omits 'm'")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("attack", help="run the attack on a trace file")
    p.add_argument("traces")
    p.add_argument("knowledge", help="population file the adversary knows")
    p.add_argument("--perm", help="true permutation file, used only for scoring")
    p.add_argument("--regime", default="full_knowledge", choices=[r.value for r in Regime])
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--target", type=int, default=0)
    p.add_argument("--threshold-exponent", type=float, default=-0.2)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("sweep", help="run a parameter grid and write a CSV")
    p.add_argument("spec")
    p.add_argument("output")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--emit-gnuplot", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("scaling", help="error decay along an n grid at the regime's required m")
    p.add_argument("--regime", default="full_knowledge", choices=[r.value for r in Regime])
    p.add_argument("--s", type=int, default=2)
    p.add_argument("--alpha", type=float, default=1.5)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--n-grid", type=_csv_ints, default=(20, 40, 80, 160))
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--m", type=int, help="override m for every cell")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--output", help="optional CSV path")
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("thresholds", help="print required m and radii")
    p.add_argument("--n-grid", type=_csv_ints, default=(10, 100, 1000))
    p.add_argument("--s", type=_csv_ints, default=(2,))
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--c", type=float, default=1.0)
    p.set_defaults(func=cmd_thresholds)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CLIError, fio.FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
