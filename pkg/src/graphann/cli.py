"""Command-line entry point.

Subcommands: bench (run the update protocol for one or more deletion
methods), control (estimate controller parameters, then run the controlled
protocol), gt (exact k-NN ground truth to ivecs), synth (generate a
synthetic dataset), convert (Glove text to fvecs). All orchestration is
single threaded and driven by one seed.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config
from .controller import DeletionController
from .datasets import (
    DatasetBundle,
    bundle_from_files,
    convert_glove,
    load_fvecs,
    synth_dataset,
    write_fvecs,
    write_ivecs,
)
from .deletion import DeletionMethod
from .errors import GraphAnnError
from .harness import StepMetrics, emit_results, ground_truth_oracle, run_protocol
from .index import construct


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GraphAnnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphann",
        description="HNSW-style index benchmarks for deletion strategies",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    bench = sub.add_parser("bench", help="run the update protocol per deletion method")
    bench.add_argument("--config", required=True, help="flat key=value config file")
    bench.add_argument("--out", help="output directory (overrides config)")
    bench.add_argument("--seed", type=int, help="master seed (overrides config)")
    bench.set_defaults(func=cmd_bench)

    control = sub.add_parser("control", help="estimate and run deletion control")
    control.add_argument("--config", required=True, help="config file with alpha set")
    control.add_argument("--out", help="output directory (overrides config)")
    control.add_argument("--seed", type=int, help="master seed (overrides config)")
    control.set_defaults(func=cmd_control)

    gt = sub.add_parser("gt", help="write exact k-NN ground truth as ivecs")
    gt.add_argument("--base", required=True, help="base vectors (fvecs)")
    gt.add_argument("--query", required=True, help="query vectors (fvecs)")
    gt.add_argument("--k", type=int, default=10)
    gt.add_argument("--metric", default="l2", choices=["l2", "angular"])
    gt.add_argument("--out", required=True, help="output ivecs path")
    gt.set_defaults(func=cmd_gt)

    synth = sub.add_parser("synth", help="generate a synthetic dataset as fvecs")
    synth.add_argument("--points", type=int, default=20000)
    synth.add_argument("--dim", type=int, default=32)
    synth.add_argument("--clusters", type=int, default=8)
    synth.add_argument("--queries", type=int, default=200)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out", required=True, help="output directory")
    synth.set_defaults(func=cmd_synth)

    convert = sub.add_parser("convert", help="convert Glove text embeddings to fvecs")
    convert.add_argument("input", help="Glove-style text file")
    convert.add_argument("output", help="output fvecs path")
    convert.set_defaults(func=cmd_convert)
    return parser


def _load_with_overrides(args) -> RunConfig:
    cfg = load_config(args.config)
    if args.out is not None:
        cfg = replace(cfg, out=args.out)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def _load_bundle(cfg: RunConfig) -> DatasetBundle:
    if cfg.dataset == "files":
        bundle = bundle_from_files(cfg.base_path, cfg.query_path, metric=cfg.metric)
    else:
        bundle = synth_dataset(
            n_o=cfg.n_total,
            d=cfg.synth_dim,
            n_clusters=cfg.synth_clusters,
            seed=cfg.seed,
            n_queries=cfg.synth_queries,
        )
    queries = bundle.queries
    if cfg.max_queries is not None:
        queries = queries[: cfg.max_queries]
    return DatasetBundle(bundle.name, cfg.metric, bundle.base, queries)


def cmd_bench(args) -> int:
    cfg = _load_with_overrides(args)
    bundle = _load_bundle(cfg)
    methods = cfg.methods or ("logical", "physical", "rebuild")
    proto = cfg.protocol_config(DeletionMethod.LOGICAL)
    shared = construct(bundle.base[: cfg.n], proto.index_params(bundle.queries.shape[1]))

    all_metrics: list[StepMetrics] = []
    for name in methods:
        method_cfg = cfg.protocol_config(DeletionMethod.from_string(name))
        all_metrics.extend(
            run_protocol(bundle.base, bundle.queries, method_cfg, initial_index=shared)
        )
    paths = emit_results(all_metrics, cfg.out, plots=cfg.plots)
    _print_summary(all_metrics)
    print(f"wrote {', '.join(paths)}")
    return 0


def cmd_control(args) -> int:
    cfg = _load_with_overrides(args)
    if cfg.alpha is None:
        raise GraphAnnError("control requires alpha in the config")
    bundle = _load_bundle(cfg)
    queries = bundle.queries
    if queries.shape[0] < 2:
        raise GraphAnnError("control needs at least 2 queries to split")

    rng = np.random.default_rng(cfg.seed)
    order = rng.permutation(queries.shape[0])
    n_train = max(1, int(round(cfg.training_fraction * queries.shape[0])))
    train_q = queries[order[:n_train]]
    test_q = queries[order[n_train:]]
    if test_q.shape[0] == 0:
        raise GraphAnnError("training fraction leaves no test queries")

    proto = cfg.protocol_config(DeletionMethod.PHYSICAL)
    shared = construct(bundle.base[: cfg.n], proto.index_params(queries.shape[1]))
    print(f"training: {n_train} queries, test: {test_q.shape[0]} queries")
    physical_run = run_protocol(bundle.base, train_q, proto, initial_index=shared)
    logical_run = run_protocol(
        bundle.base, train_q, cfg.protocol_config(DeletionMethod.LOGICAL), initial_index=shared
    )
    controller = DeletionController.from_training(physical_run, logical_run, cfg.alpha)
    print(controller.describe())
    period = controller.policy.rebuild_period
    print(
        f"estimated: floor={controller.params.recall_floor:.4f} "
        f"slope={controller.params.recall_slope:+.5f} "
        f"period={'-' if period is None else period}"
    )

    controlled = run_protocol(
        bundle.base, test_q, cfg.protocol_config(controller), initial_index=shared
    )
    paths = emit_results(controlled, cfg.out, plots=cfg.plots)
    _print_summary(controlled)
    breaches = [m.step for m in controlled if m.recall.recall < cfg.alpha]
    if breaches:
        print(f"target recall {cfg.alpha} breached at steps {breaches}")
    else:
        print(f"target recall {cfg.alpha} held at every step")
    print(f"wrote {', '.join(paths)}")
    return 0


def cmd_gt(args) -> int:
    base = load_fvecs(args.base)
    queries = load_fvecs(args.query)
    if len(base) == 0 or len(queries) == 0:
        raise GraphAnnError("gt requires non-empty base and query files")
    records = [(i + 1, base[i]) for i in range(len(base))]
    truth = ground_truth_oracle(records, queries, args.k, metric=args.metric)
    write_ivecs(args.out, np.array(truth.top_k, dtype=np.int32))
    print(f"wrote {args.out}: {len(queries)} rows of {args.k} ids (ids are 1-based)")
    return 0


def cmd_synth(args) -> int:
    bundle = synth_dataset(
        n_o=args.points,
        d=args.dim,
        n_clusters=args.clusters,
        seed=args.seed,
        n_queries=args.queries,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    base_path = out / "base.fvecs"
    query_path = out / "query.fvecs"
    write_fvecs(base_path, np.stack([r.vector for r in bundle.base]))
    write_fvecs(query_path, bundle.queries)
    print(f"wrote {base_path} ({args.points} vectors) and {query_path} ({args.queries} queries)")
    return 0


def cmd_convert(args) -> int:
    count = convert_glove(args.input, args.output)
    print(f"wrote {args.output}: {count} vectors")
    return 0


def _print_summary(metrics: list[StepMetrics]) -> None:
    header = f"{'step':>4} {'method':<12} {'recall':>8} {'qps_search':>12} {'qps_add':>12} {'qps_delete':>12} {'total_MB':>9}"
    print(header)
    print("-" * len(header))
    for m in metrics:
        add_q = f"{m.qps_add.qps:12.1f}" if m.qps_add else " " * 12
        del_q = f"{m.qps_delete.qps:12.1f}" if m.qps_delete else " " * 12
        event = f"  {m.controller_event}" if m.controller_event else ""
        print(
            f"{m.step:>4} {m.method:<12} {m.recall.recall:8.4f} "
            f"{m.qps_search.qps:12.1f} {add_q} {del_q} "
            f"{m.memory.total_bytes / 1e6:9.3f}{event}"
        )


if __name__ == "__main__":
    sys.exit(main())
