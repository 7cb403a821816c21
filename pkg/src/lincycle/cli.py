"""Command-line entry point: ``lincycle <subcommand> ...``.

Every subcommand writes JSON (or CSV for ``bench``) to a file or stdout.
Failures exit with status 1 and a JSON object ``{"error", "message"}`` on
stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .algorithms import ALGORITHMS, AlgorithmConfig, run_algorithm
from .experiments import DataSet, ExperimentSpec, exact_dataset, sample_data
from .harness import BenchmarkConfig, random_experiments, run_benchmark, write_outputs
from .identifiability import coverage_report, plan_experiments
from .model import LinearCyclicModel, random_model, variable_names

logger = logging.getLogger("lincycle")


class CliError(Exception):
    pass


def _emit(obj, out: Optional[str]) -> None:
    text = obj if isinstance(obj, str) else json.dumps(obj, indent=2)
    if out:
        Path(out).write_text(text + ("" if text.endswith("\n") else "\n"))
    else:
        print(text)


def load_specs(path: str, n: Optional[int] = None) -> tuple[list[ExperimentSpec], int]:
    """Read ``[{"J":..,"U":..,"L":..}, ...]`` or ``{"n": k, "experiments": [...]}``."""
    raw = json.loads(Path(path).read_text())
    if isinstance(raw, dict):
        n = raw.get("n", n)
        raw = raw.get("experiments", [])
    if not isinstance(raw, list):
        raise CliError(f"{path}: expected a list of experiments")
    names = None
    if n is not None:
        names = variable_names(int(n))
    specs = [ExperimentSpec.from_dict(d, names) for d in raw]
    sizes = {s.n for s in specs} | ({int(n)} if n is not None else set())
    if len(sizes) != 1:
        raise CliError("cannot determine a common number of variables; pass --n"
                       if not sizes else f"experiments disagree on n: {sorted(sizes)}")
    return specs, sizes.pop()


def _specs_json(specs: Sequence[ExperimentSpec], n: int) -> dict:
    names = variable_names(n)
    return {"n": n, "experiments": [s.to_dict(names) for s in specs]}


def _algorithm_config(args, datasets: Sequence[DataSet]) -> AlgorithmConfig:
    kw = {"seed": args.seed, "alpha": args.alpha}
    if args.max_cond_size is not None:
        kw["max_cond_size"] = args.max_cond_size
    if args.zero_tol is not None:
        kw["zero_tol"] = args.zero_tol
    if args.exact:
        return AlgorithmConfig.exact(**kw)
    return AlgorithmConfig.for_datasets(datasets, **kw)


# -- subcommands -------------------------------------------------------------

def cmd_gen_model(args) -> None:
    m = random_model(args.n, args.edge_prob, args.confounder_prob, rng_seed=args.seed)
    _emit(m.to_dict(), args.out)


def cmd_gen_experiments(args) -> None:
    specs = random_experiments(args.n, args.count, args.seed)
    _emit(_specs_json(specs, args.n), args.out)


def cmd_simulate(args) -> None:
    model = LinearCyclicModel.load(args.model)
    specs, _ = load_specs(args.specs, model.n)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for k, spec in enumerate(specs):
        if args.exact:
            d = exact_dataset(model, spec)
        else:
            d = sample_data(model, spec, args.samples, None if args.seed is None else [args.seed, k])
        written += [str(p) for p in d.save(out_dir / f"experiment{k + 1}")]
    _emit({"files": written}, None)


def cmd_discover(args) -> None:
    seen, datasets = set(), []
    for f in args.data:
        stem = Path(f).with_suffix("")
        if stem not in seen:
            seen.add(stem)
            datasets.append(DataSet.load(f))
    if not datasets:
        raise CliError("no data files given")
    config = _algorithm_config(args, datasets)
    pred = run_algorithm(args.algorithm, datasets, config)
    out = pred.to_dict()
    out["algorithm"] = args.algorithm
    _emit(out, args.out)


def cmd_check_id(args) -> None:
    specs, n = load_specs(args.specs, args.n)
    _emit(coverage_report(specs, n), args.out)


def cmd_plan(args) -> None:
    specs, n = load_specs(args.specs, args.n) if args.specs else ([], args.n)
    if n is None:
        raise CliError("plan needs --n or a specs file")
    plan = plan_experiments(n, specs)
    _emit(coverage_report([*specs, *plan], n, plan), args.out)


def cmd_bench(args) -> None:
    cfg = BenchmarkConfig.from_json(args.config) if args.config else BenchmarkConfig()
    overrides = {"seed": args.seed, "alpha": args.alpha}
    if args.max_cond_size is not None:
        overrides["max_cond_size"] = args.max_cond_size
    if args.zero_tol is not None:
        overrides["zero_tol"] = args.zero_tol
    if args.full:
        overrides["model_count"] = 100
    if args.exact:
        overrides["sample_sizes"] = ["infinite"]
    for k, v in overrides.items():
        setattr(cfg, k, v)
    cfg.__post_init__()
    stem = args.out or cfg.output or "bench"
    table = run_benchmark(cfg, raw_path=Path(stem).with_suffix(".jsonl"))
    paths = write_outputs(table, stem)
    print(table)
    print("wrote " + ", ".join(str(p) for p in paths), file=sys.stderr)


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--alpha", type=float, default=0.05, help="independence test level")
    common.add_argument("--max-cond-size", type=int, default=None,
                        help="largest conditioning set in the faithfulness search")
    common.add_argument("--zero-tol", type=float, default=None,
                        help="magnitude below which an effect counts as zero")
    common.add_argument("--exact", action="store_true", help="infinite-sample mode")
    common.add_argument("--out", "-o", default=None, help="output file (default stdout)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="lincycle", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("gen-model", parents=[common], help="random weakly stable model")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--edge-prob", type=float, default=0.2)
    s.add_argument("--confounder-prob", type=float, default=0.15)
    s.set_defaults(func=cmd_gen_model)

    s = sub.add_parser("gen-experiments", parents=[common], help="random J/U/L partitions")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--count", type=int, default=5)
    s.set_defaults(func=cmd_gen_experiments)

    s = sub.add_parser("simulate", parents=[common], help="model + experiments -> data files")
    s.add_argument("--model", required=True)
    s.add_argument("--specs", required=True)
    s.add_argument("--samples", type=int, default=1000)
    s.add_argument("--out-dir", default=".")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("discover", parents=[common], help="run a discovery algorithm")
    s.add_argument("--algorithm", choices=ALGORITHMS, required=True)
    s.add_argument("--data", nargs="+", required=True, help="data files (.csv or .json)")
    s.set_defaults(func=cmd_discover)

    s = sub.add_parser("check-id", parents=[common], help="pair-condition coverage report")
    s.add_argument("--specs", required=True)
    s.add_argument("--n", type=int, default=None)
    s.set_defaults(func=cmd_check_id)

    s = sub.add_parser("plan", parents=[common], help="experiments completing identifiability")
    s.add_argument("--n", type=int, default=None)
    s.add_argument("--specs", default=None)
    s.set_defaults(func=cmd_plan)

    s = sub.add_parser("bench", parents=[common], help="simulation benchmark -> CSV + JSON")
    s.add_argument("--config", default=None, help="JSON file with BenchmarkConfig fields")
    s.add_argument("--full", action="store_true", help="100 models instead of 20")
    s.set_defaults(func=cmd_bench)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except Exception as err:
        print(json.dumps({"error": type(err).__name__, "message": str(err)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
