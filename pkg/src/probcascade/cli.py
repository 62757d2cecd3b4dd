"""Command-line entry point: train, predict, evaluate, bench and synth.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
import warnings
from dataclasses import dataclass, field

from . import _backend, synth
from .corpus import read_corpus
from .errors import DataError, EmptyTrainingSetWarning, ModelStrategyMismatch, NonFiniteLoss, SingleClassDataWarning
from .evaluation import EvalReport, evaluate, format_table, recall_at_k, table_csv
from .hierarchy import read_hierarchy
from .linear import TrainConfig
from .strategies import (
    FlatModel,
    HierModel,
    build_features,
    cascade_predict_batch,
    flat_log_scores,
    flat_predict_batch,
    load_model,
    ppath_log_scores,
    save_model,
    top_k_batch,
    train_flat,
    train_hierarchical,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
STRATEGIES = ("flat", "cascade", "ppath")
COLUMN_NAMES = {"flat": "Flat", "cascade": "Cascade", "ppath": "P_path"}


class UsageError(Exception):
    pass


@dataclass
class RunSpec:
    command: str
    hierarchy: str | None = None
    train: str | None = None
    test: str | None = None
    model: str | None = None
    out: str | None = None
    predictions: str | None = None
    curve: str | None = None
    strategy: str | None = None
    cfg: TrainConfig = field(default_factory=TrainConfig)
    k_max: int = 1
    feature_mode: str = "tfidf"
    n_jobs: int = 1
    synth: synth.SynthConfig | None = None

    def require(self, *names: str) -> None:
        missing = [f"--{n.replace('_', '-')}" for n in names if getattr(self, n) is None]
        if missing:
            raise UsageError(f"{self.command}: missing required option(s) {', '.join(missing)}")
        if self.k_max < 1:
            raise UsageError("--k-max must be >= 1")


def _train_models(spec: RunSpec, which: set[str]):
    h = read_hierarchy(spec.hierarchy)
    raw = read_corpus(spec.train)
    X, idf = build_features(raw, spec.feature_mode)
    kw = dict(feature_mode=spec.feature_mode, idf=idf, n_jobs=spec.n_jobs)
    models = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SingleClassDataWarning)
        warnings.simplefilter("ignore", EmptyTrainingSetWarning)
        if which & {"cascade", "ppath"}:
            models["hier"] = train_hierarchical(h, X, spec.cfg, **kw)
        if "flat" in which:
            models["flat"] = train_flat(h, X, spec.cfg, **kw)
    return h, models


def _report_degenerate(model, err) -> None:
    for n, info in model.stats.items():
        if info.status == "single-class":
            err.write(
                f"warning: node {n}: single-class training data "
                f"({info.n_positive} positive, {info.n_negative} negative); constant classifier used\n"
            )
        elif info.status == "empty":
            err.write(f"warning: node {n}: no training documents; zero classifier used\n")
        elif not info.converged:
            err.write(f"warning: node {n}: stopped at gradient norm {info.grad_norm:.3g} after {info.iterations} iterations\n")


def cmd_train(spec: RunSpec, out=sys.stdout, err=sys.stderr) -> None:
    spec.require("hierarchy", "train", "model")
    strategy = spec.strategy or "ppath"
    _, models = _train_models(spec, {strategy})
    model = models["flat" if strategy == "flat" else "hier"]
    for n, info in model.stats.items():
        out.write(
            f"node {n} pos {info.n_positive} neg {info.n_negative} status {info.status} "
            f"iters {info.iterations} grad {info.grad_norm:.3g} objective {info.objective:.6g}\n"
        )
    _report_degenerate(model, err)
    save_model(model, spec.model)
    kind = "flat" if isinstance(model, FlatModel) else "hierarchical"
    out.write(f"wrote {kind} model with {len(model.stats)} classifiers to {spec.model}\n")


def _resolve_strategy(model, strategy: str | None) -> str:
    if strategy is None:
        return "flat" if isinstance(model, FlatModel) else "ppath"
    if isinstance(model, FlatModel) and strategy != "flat":
        raise ModelStrategyMismatch(f"a flat model cannot predict with strategy {strategy!r}")
    if isinstance(model, HierModel) and strategy == "flat":
        raise ModelStrategyMismatch("a hierarchical model cannot predict with strategy 'flat'")
    return strategy


def predict_lines(model, raw_test, strategy: str, k_max: int) -> list[str]:
    """One output line per test document: prediction, then ranked ``leaf:log_score`` pairs when k_max > 1."""
    if strategy == "cascade" and k_max > 1:
        raise ModelStrategyMismatch("cascade has no global ranking; use --k-max 1")
    X = model.prepare(raw_test)
    if strategy == "cascade":
        return [str(int(p)) for p in cascade_predict_batch(model, X)]
    leaf_ids, scores = ppath_log_scores(model, X) if strategy == "ppath" else flat_log_scores(model, X)
    ranked = top_k_batch(leaf_ids, scores, k_max)
    if k_max == 1:
        return [str(int(r[0])) for r in ranked]
    col = {int(l): j for j, l in enumerate(leaf_ids)}
    lines = []
    for i, row in enumerate(ranked):
        pairs = " ".join(f"{int(l)}:{scores[i, col[int(l)]]:.17g}" for l in row)
        lines.append(f"{int(row[0])} {pairs}")
    return lines


def cmd_predict(spec: RunSpec, out=sys.stdout, err=sys.stderr) -> None:
    spec.require("model", "test", "out")
    model = load_model(spec.model)
    strategy = _resolve_strategy(model, spec.strategy)
    raw = read_corpus(spec.test)
    lines = predict_lines(model, raw, strategy, spec.k_max)
    with open(spec.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(line + "\n" for line in lines)
    out.write(f"wrote {len(lines)} {strategy} predictions to {spec.out}\n")


def read_predictions(path) -> tuple[list[int], list[list[int]]]:
    preds, ranked = [], []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens:
                continue
            try:
                preds.append(int(tokens[0]))
                ranked.append([int(t.split(":", 1)[0]) for t in tokens[1:]])
            except ValueError:
                raise DataError(f"{path}: line {line_no}: malformed prediction") from None
    return preds, ranked


def cmd_evaluate(spec: RunSpec, out=sys.stdout, err=sys.stderr) -> None:
    spec.require("hierarchy", "test", "predictions")
    h = read_hierarchy(spec.hierarchy)
    gold = read_corpus(spec.test).labels.tolist()
    preds, ranked = read_predictions(spec.predictions)
    report = evaluate(h, gold, preds)
    text = report.to_text()
    out.write(text)
    if spec.out:
        with open(spec.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    if spec.curve:
        if not all(ranked) or len(ranked) != len(gold):
            raise DataError("recall curve needs ranked predictions (predict with --k-max > 1)")
        k = min(spec.k_max, min(len(r) for r in ranked))
        curve = recall_at_k(h, gold, ranked, k)
        with open(spec.curve, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(curve.to_csv())


@dataclass
class BenchResult:
    reports: dict[str, EvalReport]
    curves: dict[str, object]
    seconds: dict[str, float]


def run_bench(spec: RunSpec) -> BenchResult:
    t0 = time.perf_counter()
    h, models = _train_models(spec, set(STRATEGIES))
    t_train = time.perf_counter() - t0
    hier, flat = models["hier"], models["flat"]
    test = read_corpus(spec.test)
    gold = test.labels.tolist()
    X = hier.prepare(test)
    k_max = spec.k_max

    t1 = time.perf_counter()
    pred_cascade = cascade_predict_batch(hier, X)
    leaf_ids, p_scores = ppath_log_scores(hier, X)
    f_ids, f_scores = flat_log_scores(flat, X)
    ranked_ppath = top_k_batch(leaf_ids, p_scores, k_max)
    ranked_flat = top_k_batch(f_ids, f_scores, k_max)
    t_pred = time.perf_counter() - t1

    predictions = {
        "flat": ranked_flat[:, 0].tolist(),
        "cascade": pred_cascade.tolist(),
        "ppath": ranked_ppath[:, 0].tolist(),
    }
    reports = {COLUMN_NAMES[s]: evaluate(h, gold, predictions[s]) for s in STRATEGIES}
    curves = {
        "flat": recall_at_k(h, gold, ranked_flat.tolist(), k_max),
        "ppath": recall_at_k(h, gold, ranked_ppath.tolist(), k_max),
    }
    return BenchResult(reports, curves, {"train": t_train, "predict": t_pred})


def cmd_bench(spec: RunSpec, out=sys.stdout, err=sys.stderr) -> BenchResult:
    spec.require("hierarchy", "train", "test")
    res = run_bench(spec)
    table = format_table(res.reports)
    out.write(table)
    out.write(f"recall@1..{spec.k_max}\n")
    for name, curve in res.curves.items():
        out.write(f"  {COLUMN_NAMES[name]:<7} " + " ".join(f"{r:.3f}" for r in curve.recalls) + "\n")
    out.write(f"train {res.seconds['train']:.2f}s  predict {res.seconds['predict']:.2f}s  kernels {_backend.BACKEND}\n")
    if spec.out:
        os.makedirs(spec.out, exist_ok=True)
        files = {
            "table.txt": table,
            "table.csv": table_csv(res.reports),
            "recall_flat.csv": res.curves["flat"].to_csv(),
            "recall_ppath.csv": res.curves["ppath"].to_csv(),
        }
        for name, report in res.reports.items():
            files[f"report_{name.lower()}.txt"] = report.to_text()
        for name, text in files.items():
            with open(os.path.join(spec.out, name), "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
    return res


def cmd_synth(spec: RunSpec, out=sys.stdout, err=sys.stderr) -> None:
    spec.require("out")
    data = synth.generate(spec.synth)
    paths = synth.write(data, spec.out)
    out.write(
        f"{len(data.hierarchy.leaves)} leaves, {len(data.train)} train and {len(data.test)} test documents\n"
    )
    for key, path in paths.items():
        out.write(f"{key}: {path}\n")


COMMANDS = {
    "train": cmd_train,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "bench": cmd_bench,
    "synth": cmd_synth,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="probcascade", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def files(p, *names):
        for n in names:
            p.add_argument(f"--{n}", metavar="PATH")

    def training(p):
        p.add_argument("--c", type=float, default=1.0, help="inverse regularization strength (default 1)")
        p.add_argument("--max-iterations", type=int, default=1000)
        p.add_argument("--tolerance", type=float, default=1e-6)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--features", choices=("tf", "tfidf"), default="tfidf")
        p.add_argument("--jobs", type=int, default=1, help="worker threads for per-node training")

    p = sub.add_parser("train", help="train a flat or hierarchical model")
    files(p, "hierarchy", "train", "model")
    p.add_argument("--strategy", choices=STRATEGIES, default="ppath")
    training(p)

    p = sub.add_parser("predict", help="predict leaves for a test corpus")
    files(p, "model", "test", "out")
    p.add_argument("--strategy", choices=STRATEGIES)
    p.add_argument("--k-max", type=int, default=1)

    p = sub.add_parser("evaluate", help="score a predictions file against gold labels")
    files(p, "hierarchy", "test", "predictions", "out", "curve")
    p.add_argument("--k-max", type=int, default=10)

    p = sub.add_parser("bench", help="compare flat, cascade and ppath on one train/test split")
    files(p, "hierarchy", "train", "test", "out")
    p.add_argument("--k-max", type=int, default=10)
    training(p)

    p = sub.add_parser("synth", help="generate a synthetic hierarchy with train/test corpora")
    files(p, "out")
    defaults = synth.SynthConfig()
    p.add_argument("--depth", type=int, default=defaults.depth)
    p.add_argument("--branching", type=int, default=defaults.branching)
    p.add_argument("--docs-per-leaf", type=int, default=defaults.docs_per_leaf)
    p.add_argument("--test-docs-per-leaf", type=int, default=defaults.test_docs_per_leaf)
    p.add_argument("--vocab", type=int, default=defaults.vocab_size)
    p.add_argument("--noise", type=float, default=defaults.noise)
    p.add_argument("--tokens-per-node", type=float, default=defaults.tokens_per_node)
    p.add_argument("--seed", type=int, default=defaults.seed)
    return parser


def spec_from_args(args: argparse.Namespace) -> RunSpec:
    get = lambda name, default=None: getattr(args, name, default)  # noqa: E731
    cfg = TrainConfig()
    if hasattr(args, "c"):
        cfg = TrainConfig(c=args.c, max_iterations=args.max_iterations, tolerance=args.tolerance, seed=args.seed)
    synth_cfg = None
    if args.command == "synth":
        synth_cfg = synth.SynthConfig(
            depth=args.depth,
            branching=args.branching,
            docs_per_leaf=args.docs_per_leaf,
            test_docs_per_leaf=args.test_docs_per_leaf,
            vocab_size=args.vocab,
            noise=args.noise,
            tokens_per_node=args.tokens_per_node,
            seed=args.seed,
        )
    return RunSpec(
        command=args.command,
        hierarchy=get("hierarchy"),
        train=get("train"),
        test=get("test"),
        model=get("model"),
        out=get("out"),
        predictions=get("predictions"),
        curve=get("curve"),
        strategy=get("strategy"),
        cfg=cfg,
        k_max=get("k_max", 1),
        feature_mode=get("features", "tfidf"),
        n_jobs=get("jobs", 1),
        synth=synth_cfg,
    )


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        spec = spec_from_args(args)
        COMMANDS[spec.command](spec, out=out, err=err)
    except (UsageError, ModelStrategyMismatch) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_USAGE
    except ValueError as exc:
        # DataError subclasses ValueError; bad numeric options land here too.
        err.write(f"error: {exc}\n")
        return EXIT_DATA if isinstance(exc, DataError) else EXIT_USAGE
    except OSError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_DATA
    except (NonFiniteLoss, ArithmeticError) as exc:
        err.write(f"error: numeric failure: {exc}\n")
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
