"""Command-line interface: ``synthcog train|eval|bench|report|synth``.

Exit codes: 0 success, 1 usage, 2 data error, 3 capacity, 4 internal.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import kmer_centroid, majority_baseline
from .core import Model, load_model, save_model
from .datasets import (
    DatasetManifest,
    MotifSpec,
    load_dataset,
    load_manifest,
    validate_dataset,
    write_synthetic,
)
from .encoder import WindowConfig, window_count
from .episodic import EpisodicCognitionClassifier, VoteDistribution
from .exceptions import CapacityError, ConfigMismatchError, SynthCogError
from .metrics import (
    ScoreMatrix,
    group_average,
    per_class_auc,
    published_results,
    rank_rows_csv,
    rank_table,
    roc_auc_binary,
    summary_rows_csv,
    summary_stats,
)

log = logging.getLogger("synthcog")

OUT_ENV = "SYNTHCOG_OUT"
EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CAPACITY, EXIT_INTERNAL = 0, 1, 2, 3, 4
MODEL_COLUMN = "synthcog"
# Timing fields are the only report content allowed to differ between runs.
TIMING_FIELDS = ("wall_clock_seconds",)


@dataclass(frozen=True)
class RunConfig:
    window: int = 5
    stride: int = 1
    merge_threshold: float = 0.8
    branch_threshold: float = 0.4
    max_representations: int | None = 5_000_000
    seed: int = 7
    positive_label: str | None = None
    out: str = "synthcog-out"

    def estimator(self, label_order) -> EpisodicCognitionClassifier:
        return EpisodicCognitionClassifier(
            window=self.window,
            stride=self.stride,
            merge_threshold=self.merge_threshold,
            branch_threshold=self.branch_threshold,
            max_representations=self.max_representations,
            label_order=list(label_order),
        )


def slug(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-") or "dataset"


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, CapacityError):
        return EXIT_CAPACITY
    if isinstance(exc, (SynthCogError, ValueError, OSError)):
        return EXIT_DATA
    return EXIT_INTERNAL


def _dump(doc, path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _config_snapshot(model: Model) -> dict:
    return model.config_dict()


def train_dataset(manifest: DatasetManifest, cfg: RunConfig) -> tuple[Model, dict]:
    start = time.perf_counter()
    train = load_dataset(manifest, "train")
    est = cfg.estimator(train.label_order).fit(train.sequences, train.labels)
    model = est.model_
    summary = {
        "dataset": manifest.name,
        "config": _config_snapshot(model),
        "label_order": list(model.labels),
        "n_train_samples": len(train),
        "n_train_windows": model.trained_count,
        "n_representations": model.n_nodes,
        "n_leaves": model.n_leaves,
        "validation": validate_dataset(train, manifest).warnings,
        "wall_clock_seconds": round(time.perf_counter() - start, 3),
    }
    return model, summary


def _positive_label(label_order, requested):
    if requested is not None:
        if requested not in label_order:
            raise ConfigMismatchError(f"positive label {requested!r} not among {list(label_order)}")
        return requested
    return label_order[-1]


def score_distributions(dists: list[VoteDistribution], labels, label_order, positive_label=None):
    """AUC of one set of distributions: binary on the positive class, else macro OvR."""
    order = list(label_order)
    per_class = per_class_auc(dists, labels, order)
    if len(order) == 2:
        pos = _positive_label(order, positive_label)
        auc = roc_auc_binary([d.prob(pos) for d in dists], labels, pos_label=pos)
        return auc, per_class, pos
    return float(np.mean(list(per_class.values()))), per_class, None


def evaluate_model(
    model: Model, manifest: DatasetManifest, cfg: RunConfig, verbose=False, check_window=True
) -> dict:
    start = time.perf_counter()
    if check_window and (cfg.window, cfg.stride) != (model.window.n, model.window.stride):
        raise ConfigMismatchError(
            f"requested window n={cfg.window}, stride={cfg.stride} but the model was "
            f"trained with n={model.window.n}, stride={model.window.stride}"
        )
    test = load_dataset(manifest, "test")
    unseen = set(test.label_order) - set(model.labels)
    if unseen:
        raise ConfigMismatchError(f"test labels {sorted(unseen)} were never seen in training")
    est = EpisodicCognitionClassifier.from_model(model)
    dists = est.vote_distributions(test.sequences)
    order = list(model.labels)
    auc, per_class, pos = score_distributions(dists, test.labels, order, cfg.positive_label)
    n_windows = [window_count(len(s), model.window) for s in test.sequences]
    report = {
        "dataset": manifest.name,
        "task_group": manifest.group,
        "config": _config_snapshot(model),
        "label_order": order,
        "positive_label": pos,
        "auc": auc,
        "per_class_auc": {str(k): v for k, v in per_class.items()},
        "n_train_windows": model.trained_count,
        "n_representations": model.n_nodes,
        "n_leaves": model.n_leaves,
        "n_test_samples": len(test),
        "n_test_windows": int(sum(n_windows)),
        "validation": validate_dataset(test, manifest).warnings,
        "wall_clock_seconds": round(time.perf_counter() - start, 3),
    }
    published = _published_auc(manifest)
    if published is not None:
        report["published_auc"] = published
    if verbose:
        report["samples"] = [
            dict(d.to_dict(), label=lab, n_votes=d.n_votes) for d, lab in zip(dists, test.labels)
        ]
    return report


def _published_auc(manifest: DatasetManifest):
    table = published_results()
    for name in (manifest.name, manifest.group):
        if name in table.tasks:
            return float(table.row(name)[table.models.index("SynthCog")])
    return None


def baseline_scores(manifest: DatasetManifest, cfg: RunConfig) -> dict:
    train, test = load_dataset(manifest, "train"), load_dataset(manifest, "test")
    order = list(train.label_order)
    out = {}
    k = min(5, train.stats.min_length, test.stats.min_length)
    for name, dists in (
        ("majority", majority_baseline(train, test)),
        (f"kmer{k}-centroid", kmer_centroid(train, test, k)),
    ):
        out[name] = score_distributions(dists, test.labels, order, cfg.positive_label)[0]
    return out


def run_dataset(manifest: DatasetManifest, cfg: RunConfig, baselines=False, model_dir=None) -> dict:
    """Train a fresh model on one dataset and evaluate it; errors are captured."""
    try:
        model, summary = train_dataset(manifest, cfg)
        if model_dir is not None:
            name = slug(manifest.name) + f"-n{cfg.window}.model"
            Path(model_dir).mkdir(parents=True, exist_ok=True)
            save_model(model, Path(model_dir) / name)
        report = evaluate_model(model, manifest, cfg)
        report["wall_clock_seconds"] = round(
            report["wall_clock_seconds"] + summary["wall_clock_seconds"], 3
        )
        report["window"] = cfg.window
        if baselines:
            report["baselines"] = baseline_scores(manifest, cfg)
        return report
    except Exception as exc:  # recorded per dataset; bench continues
        return {
            "dataset": manifest.name,
            "task_group": manifest.group,
            "window": cfg.window,
            "error": f"{type(exc).__name__}: {exc}",
            "exit_code": exit_code_for(exc),
        }


def _row_name(name: str, window: int, sweep: bool) -> str:
    return f"{name} [n={window}]" if sweep else name


def bench_matrix(reports: list[dict], sweep: bool, baselines: bool) -> tuple[ScoreMatrix, dict]:
    ok = [r for r in reports if "error" not in r]
    tasks = [_row_name(r["dataset"], r["window"], sweep) for r in ok]
    models = [MODEL_COLUMN]
    if baselines:
        models += sorted({k for r in ok for k in r.get("baselines", {})})
    grid = np.full((len(tasks), len(models)), np.nan)
    for i, r in enumerate(ok):
        grid[i, 0] = r["auc"]
        for j, m in enumerate(models[1:], start=1):
            grid[i, j] = r.get("baselines", {}).get(m, np.nan)
    groups = {}
    for r, t in zip(ok, tasks):
        if r["task_group"] != r["dataset"]:
            groups[t] = _row_name(r["task_group"], r["window"], sweep)
    return ScoreMatrix(tasks, models, grid), groups


def attach_published(sm: ScoreMatrix) -> ScoreMatrix:
    table = published_results()
    for m in table.models:
        values = {}
        for t in sm.tasks:
            base = re.sub(r" \[n=\d+\]$", "", t)
            if base in table.tasks:
                values[t] = float(table.row(base)[table.models.index(m)])
        sm = sm.with_column(f"published:{m}", values)
    return sm


def write_analytics(sm: ScoreMatrix, out: Path, rank_method="average") -> list:
    out.mkdir(parents=True, exist_ok=True)
    sm.save(out / "matrix.csv")
    complete = [t for t, row in zip(sm.tasks, sm.scores) if not np.isnan(row).any()]
    if not complete:
        log.warning("no complete rows; rank and summary tables skipped")
        return []
    sub = sm.subset(complete)
    ranks = rank_table(sub, rank_method)
    (out / "ranks.csv").write_text(rank_rows_csv(ranks), encoding="utf-8")
    (out / "summary.csv").write_text(summary_rows_csv(summary_stats(sub)), encoding="utf-8")
    return ranks


def _print_ranks(ranks, file=None):
    file = file or sys.stdout
    for r in ranks:
        print(
            f"{r.model:<28} wins {r.wins:>3} ({100 * r.win_fraction:6.2f}%)  avg rank {r.average_rank:.3f}",
            file=file,
        )


# -- commands ------------------------------------------------------------------


def _run_config(args) -> RunConfig:
    return RunConfig(
        window=args.window,
        stride=args.stride,
        merge_threshold=args.merge_threshold,
        branch_threshold=args.branch_threshold,
        max_representations=None if args.max_reps == 0 else args.max_reps,
        seed=getattr(args, "seed", 7),
        positive_label=getattr(args, "positive_label", None),
        out=args.out,
    )


def cmd_train(args) -> int:
    cfg = _run_config(args)
    manifest = load_manifest(args.manifest)
    WindowConfig(cfg.window, cfg.stride)
    model, summary = train_dataset(manifest, cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    model_path = out / f"{slug(manifest.name)}.model"
    save_model(model, model_path)
    summary["model_file"] = model_path.name
    _dump(summary, out / f"{slug(manifest.name)}.train.json")
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_eval(args) -> int:
    model = load_model(args.model)
    manifest = load_manifest(args.manifest)
    window = args.window if args.window is not None else model.window.n
    stride = args.stride if args.stride is not None else model.window.stride
    args.window, args.stride = window, stride
    cfg = _run_config(args)
    report = evaluate_model(model, manifest, cfg, verbose=args.verbose)
    out = Path(cfg.out)
    _dump(report, out / f"{slug(manifest.name)}.report.json")
    brief = {k: report[k] for k in ("dataset", "auc", "n_representations") if k in report}
    if "published_auc" in report:
        brief["published_auc"] = report["published_auc"]
    print(json.dumps(brief, sort_keys=True))
    return EXIT_OK


def _manifest_paths(items) -> list[Path]:
    paths = []
    for item in items:
        p = Path(item)
        paths.extend(sorted(p.glob("**/manifest.json")) if p.is_dir() else [p])
    return paths


def cmd_bench(args) -> int:
    out = Path(args.out)
    if args.fixtures_only:
        sm = published_results()
        ranks = write_analytics(sm, out, args.rank_method)
        _print_ranks(ranks)
        return EXIT_OK
    if not args.manifest:
        print("bench: --manifest is required unless --fixtures-only is given", file=sys.stderr)
        return EXIT_USAGE
    base = _run_config(args)
    windows = args.sweep or [base.window]
    sweep = bool(args.sweep)
    manifests = [load_manifest(p) for p in _manifest_paths(args.manifest)]
    jobs = [(m, RunConfig(**dict(asdict(base), window=w))) for m in manifests for w in windows]
    model_dir = out / "models"
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            futures = [pool.submit(run_dataset, m, c, args.baselines, model_dir) for m, c in jobs]
            reports = [f.result() for f in futures]
    else:
        reports = [run_dataset(m, c, args.baselines, model_dir) for m, c in jobs]
    for r in reports:
        name = slug(r["dataset"]) + (f"-n{r['window']}" if sweep else "")
        _dump(r, out / "reports" / f"{name}.json")
    sm, groups = bench_matrix(reports, sweep, args.baselines)
    if groups:
        sm = group_average(sm, groups)
    if args.compare_published:
        sm = attach_published(sm)
    ranks = write_analytics(sm, out, args.rank_method)
    rows = [
        {
            k: r.get(k)
            for k in ("dataset", "window", "auc", "published_auc", "n_representations", "wall_clock_seconds", "error")
            if k in r
        }
        for r in reports
    ]
    _dump({"runs": rows, "tasks": sm.tasks}, out / "bench.json")
    for row in rows:
        if "error" in row:
            print(f"{row['dataset']} [n={row['window']}]: FAILED {row['error']}", file=sys.stderr)
        else:
            pub = row.get("published_auc")
            pub = f" (published {pub:.3f})" if pub is not None else ""
            print(f"{row['dataset']} [n={row['window']}]: auc {row['auc']:.4f}{pub}")
    if ranks:
        _print_ranks(ranks)
    codes = [r["exit_code"] for r in reports if "error" in r]
    return max(codes) if codes else EXIT_OK


def cmd_report(args) -> int:
    sm = ScoreMatrix.load(args.matrix) if args.matrix else published_results()
    if args.groups:
        groups = json.loads(Path(args.groups).read_text(encoding="utf-8"))
        sm = group_average(sm, groups)
    out = Path(args.out)
    ranks = write_analytics(sm, out, args.rank_method)
    _print_ranks(ranks)
    return EXIT_OK


def cmd_synth(args) -> int:
    spec = MotifSpec(
        {"a": args.motif_a.split(","), "b": args.motif_b.split(",")},
        n_train=args.n_train,
        n_test=args.n_test,
        length=args.length,
        name=args.name,
    )
    manifest = write_synthetic(spec, args.seed, args.out)
    print(Path(args.out) / "manifest.json")
    log.info("wrote %s", manifest.name)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("window sizes must be positive")
    return values


def build_parser() -> argparse.ArgumentParser:
    default_out = os.environ.get(OUT_ENV, "synthcog-out")
    parser = _Parser(prog="synthcog", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def run_options(p, eval_mode=False):
        p.add_argument("--window", type=int, default=None if eval_mode else 5)
        p.add_argument("--stride", type=int, default=None if eval_mode else 1)
        p.add_argument("--merge-threshold", type=float, default=0.8)
        p.add_argument("--branch-threshold", type=float, default=0.4)
        p.add_argument("--max-reps", type=int, default=5_000_000, help="0 means unbounded")
        p.add_argument("--positive-label", default=None)
        p.add_argument("--out", default=default_out)

    p = sub.add_parser("train", help="train a model on a dataset's train split")
    p.add_argument("--manifest", required=True)
    run_options(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved model on a dataset's test split")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--verbose", action="store_true", help="include per-sample vote distributions")
    run_options(p, eval_mode=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="train and evaluate a fresh model per dataset")
    p.add_argument("--manifest", action="append", default=[], help="manifest file or directory (repeatable)")
    p.add_argument("--sweep", type=_int_list, default=None, help="window sizes, e.g. 5,10")
    p.add_argument("--fixtures-only", action="store_true", help="analyse the bundled published table only")
    p.add_argument("--compare-published", action="store_true", help="join published scores as extra columns")
    p.add_argument("--baselines", action="store_true", help="also score majority and k-mer centroid baselines")
    p.add_argument("--rank-method", default="average", choices=["average", "min", "max", "dense", "ordinal"])
    p.add_argument("--jobs", type=int, default=1)
    run_options(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="win counts, average ranks and mean/std from a score table")
    p.add_argument("--matrix", default=None, help="score table CSV (default: bundled published table)")
    p.add_argument("--groups", default=None, help="JSON map task -> group for averaging")
    p.add_argument("--rank-method", default="average", choices=["average", "min", "max", "dense", "ordinal"])
    p.add_argument("--out", default=default_out)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("synth", help="write a planted-motif dataset and its manifest")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--motif-a", default="AAAAA")
    p.add_argument("--motif-b", default="TTTTT")
    p.add_argument("--n-train", type=int, default=200)
    p.add_argument("--n-test", type=int, default=200)
    p.add_argument("--length", type=int, default=40)
    p.add_argument("--name", default="planted-motif")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Exception as exc:
        code = exit_code_for(exc)
        kind = "capacity error" if code == EXIT_CAPACITY else "error"
        if code == EXIT_INTERNAL:
            log.exception("internal error")
        print(f"synthcog: {kind}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
