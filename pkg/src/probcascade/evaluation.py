"""Accuracy, macro precision/recall/F1, tree-induced error and recall@K."""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from collections.abc import Sequence
from dataclasses import astuple, dataclass, fields

from .errors import LengthMismatch, NonLeafLabel
from .hierarchy import Hierarchy, tree_distance

MEASURES = (
    ("accuracy", "Accuracy", max),
    ("macro_f1", "Macro F-measure", max),
    ("macro_precision", "Macro Precision", max),
    ("macro_recall", "Macro Recall", max),
    ("tree_induced_error", "Tree Induced Error", min),
)


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    tree_induced_error: float
    n_test: int

    def to_text(self) -> str:
        return "".join(f"{f.name}={_fmt(getattr(self, f.name))}\n" for f in fields(self))

    @staticmethod
    def csv_header() -> str:
        return ",".join(f.name for f in fields(EvalReport))

    def to_csv_row(self) -> str:
        return ",".join(_fmt(v) for v in astuple(self))

    @classmethod
    def from_text(cls, text: str) -> EvalReport:
        kv = dict(line.split("=", 1) for line in text.splitlines() if "=" in line)
        return cls(**{f.name: (int if f.name == "n_test" else float)(kv[f.name]) for f in fields(cls)})


@dataclass(frozen=True)
class PerClass:
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0


@dataclass(frozen=True)
class RecallCurve:
    points: tuple[tuple[int, float], ...]

    def __getitem__(self, k: int) -> float:
        for kk, r in self.points:
            if kk == k:
                return r
        raise KeyError(k)

    @property
    def recalls(self) -> list[float]:
        return [r for _, r in self.points]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "recall"])
        for k, r in self.points:
            w.writerow([k, _fmt(r)])
        return buf.getvalue()


def _fmt(v) -> str:
    return str(v) if isinstance(v, int) else repr(float(v))


def _check(h: Hierarchy | None, gold: Sequence[int], *others: Sequence) -> None:
    for o in others:
        if len(o) != len(gold):
            raise LengthMismatch(f"{len(gold)} gold labels but {len(o)} predictions")
    if h is not None:
        for seq in (gold, *others):
            for n in seq:
                if n not in h.leaves:
                    raise NonLeafLabel(f"{n} is not a leaf")


def per_class_counts(gold: Sequence[int], predicted: Sequence[int]) -> dict[int, PerClass]:
    tp, fp, fn = Counter(), Counter(), Counter()
    for g, p in zip(gold, predicted):
        if g == p:
            tp[g] += 1
        else:
            fp[p] += 1
            fn[g] += 1
    classes = sorted(set(gold) | set(predicted))
    return {c: PerClass(tp[c], fp[c], fn[c]) for c in classes}


def evaluate(h: Hierarchy, gold: Sequence[int], predicted: Sequence[int]) -> EvalReport:
    """Score single-label predictions.

    Macro averages run over the leaves seen in ``gold`` or ``predicted``;
    0/0 counts as 0. Tree-induced error is the mean edge distance between
    gold and predicted leaves.
    """
    gold = [int(g) for g in gold]
    predicted = [int(p) for p in predicted]
    _check(h, gold, predicted)
    n = len(gold)
    if n == 0:
        raise LengthMismatch("need at least one test instance")
    counts = per_class_counts(gold, predicted)
    k = len(counts)
    accuracy = sum(g == p for g, p in zip(gold, predicted)) / n
    tie = sum(tree_distance(h, g, p) for g, p in zip(gold, predicted)) / n
    return EvalReport(
        accuracy=accuracy,
        # fsum is exactly rounded, so the result ignores class order
        macro_precision=math.fsum(c.precision for c in counts.values()) / k,
        macro_recall=math.fsum(c.recall for c in counts.values()) / k,
        macro_f1=math.fsum(c.f1 for c in counts.values()) / k,
        tree_induced_error=tie,
        n_test=n,
    )


def recall_at_k(h: Hierarchy | None, gold: Sequence[int], ranked: Sequence[Sequence[int]], k_max: int) -> RecallCurve:
    """Fraction of instances whose gold leaf is in the first k entries, k = 1..k_max."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    gold = [int(g) for g in gold]
    _check(None, gold, ranked)
    if h is not None:
        _check(h, gold)
    n = len(gold)
    hits = [0] * (k_max + 1)
    for g, r in zip(gold, ranked):
        for pos, leaf in enumerate(list(r)[:k_max]):
            if int(leaf) == g:
                hits[pos + 1] += 1
                break
    points = []
    total = 0
    for k in range(1, k_max + 1):
        total += hits[k]
        points.append((k, total / n if n else 0.0))
    return RecallCurve(tuple(points))


def format_table(reports: dict[str, EvalReport]) -> str:
    """Measures as rows, strategies as columns; the best value per row gets a ``*``."""
    names = list(reports)
    header = ["Evaluation Measure", *names]
    rows = [header]
    for attr, label, pick in MEASURES:
        vals = [getattr(reports[n], attr) for n in names]
        best = pick(vals)
        rows.append([label, *(f"{v:.3f}" + ("*" if v == best else "") for v in vals)])
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = []
    for i, r in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[j]) if j == 0 else cell.rjust(widths[j]) for j, cell in enumerate(r)))
        if i == 0:
            lines.append("-" * len(lines[0]))
    return "\n".join(lines) + "\n"


def table_csv(reports: dict[str, EvalReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["measure", *reports])
    for attr, label, _ in MEASURES:
        w.writerow([label, *(_fmt(getattr(r, attr)) for r in reports.values())])
    return buf.getvalue()
