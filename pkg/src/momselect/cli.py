"""Command-line front end.

Subcommands: generate (synthetic dataset to CSV), select (run the
tournament on a dataset), experiment (contamination sweep), bounds
(evaluate the guarantee constants), check (verify the block-system
lemmas).  Progress goes to stderr; data goes to files or stdout.  Exit
status is 0 only when the requested artifact was fully produced;
failures print a single 'error: ...' line to stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from . import bounds as bounds_mod
from . import dataset as dataset_mod
from .config import ConfigFileError, load_config
from .ensemble import run_ensemble
from .learners import Erm, Lasso
from .partition import block_size, verify_lemmas
from .selection import write_comparator_csv

log = logging.getLogger("momselect")


class CliError(Exception):
    """Fatal CLI failure with a user-facing message."""


def _resolve_seed(args, cfg) -> int:
    if args.seed is not None:
        return args.seed
    seed = cfg.seed()
    if seed is None:
        raise CliError(
            "no seed given: pass --seed or set 'seed' in [run] "
            "(randomized commands refuse to run unseeded)"
        )
    return seed


def _resolve_threads(args, cfg) -> int:
    if args.threads is not None:
        if args.threads < 1:
            raise CliError("--threads must be >= 1")
        return args.threads
    return cfg.threads()


def _cmd_generate(args) -> int:
    cfg = load_config(args.config)
    seed = _resolve_seed(args, cfg)
    out = Path(args.out) if args.out else Path(cfg.output_dir() or ".") / "dataset.csv"
    spec = cfg.synthetic_spec(seed=seed)
    data, _ = dataset_mod.generate_synthetic(spec)
    out.parent.mkdir(parents=True, exist_ok=True)
    dataset_mod.save_csv(data, out)
    n_hard = int((data.provenance == dataset_mod.HARD_OUTLIER).sum())
    n_heavy = int((data.provenance == dataset_mod.HEAVY_OUTLIER).sum())
    log.info("wrote %s", out)
    print(f"rows={data.n} features={data.d} hard_outliers={n_hard} heavy_outliers={n_heavy} seed={seed}")
    return 0


def _describe_learner(learner) -> str:
    if isinstance(learner, Lasso):
        return f"lasso(lam={learner.lam:g})"
    if isinstance(learner, Erm):
        return f"erm(dim={len(learner.subspace)})"
    return repr(learner)


def _cmd_select(args) -> int:
    cfg = load_config(args.config)
    threads = _resolve_threads(args, cfg)
    data = dataset_mod.load_csv(args.data)
    econf = cfg.ensemble_config()
    started = time.perf_counter()
    result = run_ensemble(
        data, econf, threads=threads, include_matrix=args.comparator_csv is not None
    )
    elapsed = time.perf_counter() - started

    chosen = result.chosen
    print(f"candidates={len(result.candidates)}")
    print(
        f"selected learner={_describe_learner(econf.learners[chosen.learner_index])} "
        f"level={chosen.block.level} index={chosen.block.index}"
    )
    print(f"minmax_value={result.selection.minmax_value:.17g}")
    print(f"training_block_size={block_size(data.n, chosen.block)}")
    print(f"risk_evaluations={result.evaluation_count}")
    print(f"wall_time_s={elapsed:.3f}")

    out_dir = Path(args.out) if args.out else Path(cfg.output_dir() or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    beta_path = out_dir / "beta.csv"
    with open(beta_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("coordinate,beta\n")
        for j, value in enumerate(result.estimator.beta, start=1):
            fh.write(f"{j},{format(value, '.17g')}\n")
    log.info("wrote %s", beta_path)
    if args.comparator_csv is not None:
        write_comparator_csv(result.selection, args.comparator_csv)
        log.info("wrote %s", args.comparator_csv)
    return 0


def _cmd_experiment(args) -> int:
    cfg = load_config(args.config)
    seed = _resolve_seed(args, cfg)
    threads = _resolve_threads(args, cfg)
    out_dir = args.out or cfg.output_dir()
    if out_dir is None:
        raise CliError("no output directory: pass --out or set 'output_dir' in [run]")
    econf = cfg.experiment_config(seed=seed, output_dir=out_dir, threads=threads)
    from .experiment import run_sweep

    records = run_sweep(econf)
    print(f"records={len(records)} output_dir={out_dir}")
    return 0


def _cmd_bounds(args) -> int:
    inp = bounds_mod.BoundsInput(
        chi=args.chi,
        sigma=args.sigma,
        epsilon=args.epsilon,
        v_count=args.v,
        n=args.n,
        grid_size=args.grid_size,
        c0=args.c0,
        c1=args.c1,
        zeta_norm=args.zeta_norm,
        sparsity=args.sparsity,
        dim=args.dim,
        chi_lambda=args.chi_lambda,
        sigma_lambda=args.sigma_lambda,
        d_lambda=args.d_lambda,
    )
    consts = bounds_mod.oracle_inequality_constants(inp)
    print(f"a={consts.a:.6g}{' (vacuous: a >= 1)' if consts.vacuous else ''}")
    print(f"b={consts.b:.6g}")
    print(f"prob={consts.prob:.6g}")
    size = bounds_mod.effective_block_size(args.n, args.v, args.k_min)
    print(f"effective_block_size={size}")
    if args.sparsity is not None and args.dim is not None:
        block = args.block_size if args.block_size is not None else size
        print(f"lasso_rate={bounds_mod.lasso_rate(inp, block):.6g} (block_size={block})")
    if args.d_lambda is not None:
        block = args.block_size if args.block_size is not None else size
        print(f"erm_rate={bounds_mod.erm_rate(inp, block):.6g} (block_size={block})")
    return 0


def _cmd_check(args) -> int:
    sizes = [int(v) for v in args.sizes.split(",") if v.strip()]
    if not sizes:
        raise CliError("no dataset sizes given")
    all_ok = True
    for n in sizes:
        report = verify_lemmas(n, v_max=args.v_max)
        for line in report.lines():
            print(line)
        all_ok = all_ok and report.ok
    print("ALL PASS" if all_ok else "FAILURES FOUND")
    return 0 if all_ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="momselect",
        description="Outlier-robust estimator selection by minmax median-of-means tournaments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="generate a synthetic corrupted dataset as CSV")
    p_gen.add_argument("--config", required=True, help="run configuration file")
    p_gen.add_argument("--seed", type=int, help="overrides the config seed")
    p_gen.add_argument("--out", help="output CSV path")
    p_gen.set_defaults(func=_cmd_generate)

    p_sel = sub.add_parser("select", help="run the tournament on a dataset")
    p_sel.add_argument("--data", required=True, help="dataset CSV path")
    p_sel.add_argument("--config", required=True)
    p_sel.add_argument("--threads", type=int, help="parallel fit threads")
    p_sel.add_argument("--out", help="directory for beta.csv")
    p_sel.add_argument("--comparator-csv", help="also dump the comparison matrix here")
    p_sel.add_argument("--seed", type=int, help=argparse.SUPPRESS)  # accepted, unused
    p_sel.set_defaults(func=_cmd_select)

    p_exp = sub.add_parser("experiment", help="run the contamination sweep")
    p_exp.add_argument("--config", required=True)
    p_exp.add_argument("--seed", type=int, help="overrides the config seed")
    p_exp.add_argument("--threads", type=int)
    p_exp.add_argument("--out", help="output directory for records.csv / aggregate.csv")
    p_exp.set_defaults(func=_cmd_experiment)

    p_b = sub.add_parser("bounds", help="evaluate the guarantee constants")
    p_b.add_argument("--chi", type=float, required=True)
    p_b.add_argument("--sigma", type=float, required=True)
    p_b.add_argument("--epsilon", type=float, required=True)
    p_b.add_argument("--v", type=int, required=True, help="comparison-block count V")
    p_b.add_argument("--n", type=int, required=True, help="dataset size")
    p_b.add_argument("--grid-size", type=int, required=True, help="number of candidates")
    p_b.add_argument("--k-min", type=int, default=3)
    p_b.add_argument("--c0", type=float, default=1.0)
    p_b.add_argument("--c1", type=float, default=1.0)
    p_b.add_argument("--zeta-norm", type=float, default=1.0)
    p_b.add_argument("--sparsity", type=int)
    p_b.add_argument("--dim", type=int)
    p_b.add_argument("--block-size", type=int)
    p_b.add_argument("--chi-lambda", type=float)
    p_b.add_argument("--sigma-lambda", type=float)
    p_b.add_argument("--d-lambda", type=int)
    p_b.set_defaults(func=_cmd_bounds)

    p_chk = sub.add_parser("check", help="verify the block-system lemmas exhaustively")
    p_chk.add_argument("--sizes", required=True, help="comma-separated dataset sizes")
    p_chk.add_argument("--v-max", type=int, help="cap on V (default n/8)")
    p_chk.set_defaults(func=_cmd_check)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ConfigFileError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
