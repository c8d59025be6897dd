"""Confusion counting and the four detection metrics, plus report rendering.

Vulnerable (label 1) is the positive class. Metrics with a zero denominator
are reported as 0 and flagged with a warning string on the report.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import DataError


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass
class EvalReport:
    confusion: ConfusionMatrix
    accuracy: float
    precision: float
    recall: float
    f1: float
    per_kind: dict[str, "EvalReport"] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


def confusion(preds: list[int], truth: list[int]) -> ConfusionMatrix:
    if len(preds) != len(truth):
        raise DataError(f"length mismatch: {len(preds)} predictions vs {len(truth)} labels")
    tp = tn = fp = fn = 0
    for p, t in zip(preds, truth):
        if p not in (0, 1) or t not in (0, 1):
            raise DataError(f"labels must be 0 or 1, got pred={p} truth={t}")
        if p == 1 and t == 1:
            tp += 1
        elif p == 0 and t == 0:
            tn += 1
        elif p == 1 and t == 0:
            fp += 1
        else:
            fn += 1
    return ConfusionMatrix(tp=tp, tn=tn, fp=fp, fn=fn)


def metrics(c: ConfusionMatrix) -> EvalReport:
    if c.total == 0:
        raise DataError("empty confusion matrix")
    warns: list[str] = []

    def ratio(num: int, den: int, name: str) -> float:
        if den == 0:
            warns.append(f"{name} denominator is zero, reported as 0")
            return 0.0
        return num / den

    accuracy = (c.tp + c.tn) / c.total
    precision = ratio(c.tp, c.tp + c.fp, "precision")
    recall = ratio(c.tp, c.tp + c.fn, "recall")
    if precision + recall > 0:
        f1 = 2.0 * precision * recall / (precision + recall)
    else:
        warns.append("f1 denominator is zero, reported as 0")
        f1 = 0.0
    return EvalReport(
        confusion=c, accuracy=accuracy, precision=precision,
        recall=recall, f1=f1, warnings=warns,
    )


def evaluate(preds: list[int], truth: list[int]) -> EvalReport:
    return metrics(confusion(preds, truth))


def render_report(report: EvalReport, name: str = "gcn") -> str:
    """Aligned table with one-decimal percentages plus a key=value block."""
    lines = []
    header = f"{'model':<14}{'Acc':>8}{'Precision':>11}{'Recall':>8}{'F1':>8}"
    lines.append(header)

    def row(label: str, r: EvalReport) -> str:
        return (
            f"{label:<14}{100 * r.accuracy:>8.1f}{100 * r.precision:>11.1f}"
            f"{100 * r.recall:>8.1f}{100 * r.f1:>8.1f}"
        )

    lines.append(row(name, report))
    for kind in sorted(report.per_kind):
        lines.append(row(f"  {kind}", report.per_kind[kind]))
    lines.append("")
    c = report.confusion
    lines.append(f"tp={c.tp} tn={c.tn} fp={c.fp} fn={c.fn}")
    lines.append(
        f"accuracy={report.accuracy:.17g} precision={report.precision:.17g} "
        f"recall={report.recall:.17g} f1={report.f1:.17g}"
    )
    for w in report.warnings:
        lines.append(f"warning: {w}")
    return "\n".join(lines) + "\n"
