"""
Metrics
-------

Classification metrics (accuracy and macro-averaged precision, recall and
F1) and the information measures used to track how much a generated feature
set tells about the target: the empirical conditional entropy H(Y|F) over
equal-frequency bins, and the information gain H(Y|F0) - H(Y|F).
"""
import json
from dataclasses import asdict, dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.stats import entropy
from sklearn.metrics import precision_recall_fscore_support

from .errors import LengthMismatch, UnknownColumn
from .tabular import Dataset, FeatureKind

METRICS = ("accuracy", "macro_f1", "macro_precision", "macro_recall")
METRICS_KEYS = ("accuracy", "macro_precision", "macro_recall", "macro_f1", "info_gain_bits")
DEFAULT_BINS = 4


@dataclass(frozen=True)
class MetricsReport:
    """Classification metrics, macro-averaged over the classes present in y_true.

    ``per_class`` rows are (class, precision, recall, f1); ``support`` holds
    the matching y_true counts.
    """

    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    per_class: Tuple[Tuple[object, float, float, float], ...]
    support: Tuple[int, ...]

    def get(self, metric: str) -> float:
        if metric not in METRICS:
            raise ValueError(f"Unknown metric {metric!r}; expected one of {METRICS}.")
        return getattr(self, metric)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["per_class"] = [list(row) for row in self.per_class]
        out["support"] = list(self.support)
        return out

    @classmethod
    def from_dict(cls, payload: dict) -> "MetricsReport":
        return cls(
            accuracy=payload["accuracy"],
            macro_precision=payload["macro_precision"],
            macro_recall=payload["macro_recall"],
            macro_f1=payload["macro_f1"],
            per_class=tuple(tuple(row) for row in payload["per_class"]),
            support=tuple(payload["support"]),
        )


def classification_report(y_true, y_pred, classes: Optional[Sequence] = None) -> MetricsReport:
    """Accuracy and macro precision/recall/F1.

    Per-class ratios with a zero denominator are 0. If `classes` is given,
    the per-class rows name ``classes[code]`` instead of the code.
    """
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise LengthMismatch(f"y_true has {y_true.size} labels but y_pred has {y_pred.size}.")
    if y_true.size == 0:
        raise LengthMismatch("Cannot score an empty prediction.")
    labels = np.unique(y_true)
    precision, recall, f1, support = precision_recall_fscore_support(
        y_true, y_pred, labels=labels, average=None, zero_division=0
    )
    names = [classes[int(c)] if classes is not None else c.item() for c in labels]
    per_class = tuple(
        (name, float(p), float(r), float(f)) for name, p, r, f in zip(names, precision, recall, f1)
    )
    return MetricsReport(
        accuracy=float(np.mean(y_true == y_pred)),
        macro_precision=float(np.mean(precision)),
        macro_recall=float(np.mean(recall)),
        macro_f1=float(np.mean(f1)),
        per_class=per_class,
        support=tuple(int(s) for s in support),
    )


@dataclass(frozen=True)
class EntropyEstimate:
    bits: float
    n_cells: int
    binning: int


def discretize(values: np.ndarray, bins: int) -> np.ndarray:
    """Equal-frequency bin index of each value.

    Edges are the interior quantiles of `values`; identical edges merge, so
    heavily tied columns get fewer than `bins` bins.
    """
    edges = np.unique(np.quantile(values, np.arange(1, bins) / bins))
    return np.searchsorted(edges, values, side="right")


def _cell_codes(d: Dataset, names: Sequence[str], bins: int) -> np.ndarray:
    if not names:
        return np.zeros(d.n_rows, dtype=np.intp)
    codes = []
    for name in names:
        if name not in d:
            raise UnknownColumn(f"No feature named {name!r}.")
        values = d.column(name)
        if d.meta(name).kind is FeatureKind.CATEGORICAL:
            codes.append(values.astype(np.intp))
        else:
            codes.append(discretize(values, bins))
    _, cells = np.unique(np.column_stack(codes), axis=0, return_inverse=True)
    return np.asarray(cells).reshape(-1)


def conditional_entropy(d: Dataset, feature_names: Sequence[str], bins: int = DEFAULT_BINS) -> EntropyEstimate:
    """Empirical H(Y|F) in bits over the joint bin cells of `feature_names`.

    With no features this is the marginal entropy of the target. The
    estimate shrinks towards 0 as cells become singletons; ``n_cells`` shows
    how fine the partition is.
    """
    if bins < 2:
        raise ValueError(f"Need at least 2 bins, got {bins}.")
    cells = _cell_codes(d, list(feature_names), bins)
    n_cells = int(cells.max()) + 1
    table = np.zeros((n_cells, d.n_classes), dtype=np.float64)
    np.add.at(table, (cells, d.target), 1.0)
    sizes = table.sum(axis=1)
    h = entropy(table, base=2, axis=1)
    bits = float(np.sum(sizes / d.n_rows * h))
    return EntropyEstimate(bits=max(bits, 0.0), n_cells=n_cells, binning=bins)


def information_gain(
    d0_features: Sequence[str], d_features: Sequence[str], d: Dataset, bins: int = DEFAULT_BINS
) -> float:
    """H(Y|F0) - H(Y|F) under the same binning; F0 must be a subset of F."""
    missing = set(d0_features) - set(d_features)
    if missing:
        raise ValueError(f"Base features {sorted(missing)} are not in the expanded feature set.")
    h0 = conditional_entropy(d, d0_features, bins).bits
    h = conditional_entropy(d, d_features, bins).bits
    return h0 - h


def feature_correlations(d: Dataset, generated: Sequence[str], originals: Sequence[str]) -> pd.DataFrame:
    """Pearson correlation of each generated feature with each original one.

    Pairs involving a constant column are NaN.
    """
    out = pd.DataFrame(index=list(generated), columns=list(originals), dtype=float)
    for g in generated:
        x = d.column(g)
        for o in originals:
            y = d.column(o)
            if np.ptp(x) == 0 or np.ptp(y) == 0:
                out.loc[g, o] = np.nan
            else:
                out.loc[g, o] = float(np.corrcoef(x, y)[0, 1])
    return out


def render_report(report: MetricsReport, title: str = "") -> str:
    """Fixed-order plain-text rendering of a :class:`MetricsReport`."""
    lines = [title] if title else []
    for key in ("accuracy", "macro_precision", "macro_recall", "macro_f1"):
        lines.append(f"{key:<16}{getattr(report, key):.4f}")
    lines.append("")
    lines.append(f"{'class':<16}{'precision':>10}{'recall':>10}{'f1':>10}{'support':>10}")
    for (name, p, r, f), n in zip(report.per_class, report.support):
        lines.append(f"{str(name):<16}{p:>10.4f}{r:>10.4f}{f:>10.4f}{n:>10d}")
    return "\n".join(lines) + "\n"


def render_correlations(table: pd.DataFrame) -> str:
    if table.empty:
        return "(no generated features)\n"
    return table.to_string(float_format=lambda v: f"{v:.3f}", na_rep="nan") + "\n"


def metrics_dict(report: MetricsReport, info_gain_bits: float) -> Dict[str, float]:
    return {
        "accuracy": report.accuracy,
        "macro_precision": report.macro_precision,
        "macro_recall": report.macro_recall,
        "macro_f1": report.macro_f1,
        "info_gain_bits": float(info_gain_bits),
    }


def write_metrics(path, report: MetricsReport, info_gain_bits: float) -> None:
    """Write the five headline values as a JSON object, in fixed key order."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(metrics_dict(report, info_gain_bits), f, indent=2)
        f.write("\n")
