"""
Tabular data model
------------------

A :class:`Dataset` is an immutable table of feature columns plus a class
target. Columns are stored as float vectors: numeric columns hold their
(median-imputed) values, categorical columns hold integer codes assigned in
first-appearance order, with the original strings kept in the column's
:class:`FeatureMeta`.

Appending a feature never mutates a dataset; it returns a new one that shares
the untouched column arrays.
"""
import enum, logging, math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from sklearn.model_selection import KFold, StratifiedKFold, train_test_split

from .errors import (
    DuplicateHeader,
    EmptyTable,
    FoldError,
    LengthMismatch,
    NameCollision,
    SingleClassTarget,
    UnknownColumn,
)

MISSING_TOKENS = {"", "na", "nan"}


class FeatureKind(enum.Enum):
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"


@dataclass(frozen=True)
class FeatureMeta:
    """Metadata for one feature column.

    Parameters
    ----------
    name : str
        unique, non-empty column name
    kind : FeatureKind
        numeric or categorical
    description : str
        free text. Ingestion appends a note when missing cells were imputed.
    origin : int or None
        None for original columns, otherwise the engine iteration at which a
        generated feature was adopted.
    categories : tuple of str
        original category strings, indexed by code (categorical columns only)
    formula : str
        source formula of a generated feature
    """

    name: str
    kind: FeatureKind = FeatureKind.NUMERIC
    description: str = ""
    origin: Optional[int] = None
    categories: Tuple[str, ...] = ()
    formula: str = ""

    def __post_init__(self):
        if not self.name:
            raise ValueError("Feature names must be non-empty.")

    @property
    def generated(self) -> bool:
        return self.origin is not None


class Dataset(object):
    """Immutable feature table with a class target.

    Parameters
    ----------
    columns : sequence of (FeatureMeta, np.ndarray)
        ordered feature columns; every vector has length ``n_rows``
    target : np.ndarray
        integer class codes, one per row
    classes : sequence of str
        class label for each code
    description : str
        the dataset's textual description
    target_name : str
        name of the target column, used when writing the table back out
    """

    def __init__(
        self,
        columns: Sequence[Tuple[FeatureMeta, np.ndarray]],
        target: np.ndarray,
        classes: Sequence[str],
        description: str = "",
        target_name: str = "target",
    ):
        target = np.asarray(target, dtype=np.intp)
        n_rows = target.shape[0]
        names = set()
        metas, values = [], []
        for meta, vector in columns:
            vector = np.asarray(vector, dtype=np.float64)
            if vector.shape != (n_rows,):
                raise LengthMismatch(
                    f"Column {meta.name!r} has {vector.shape[0]} values, expected {n_rows}."
                )
            if meta.name in names or meta.name == target_name:
                raise NameCollision(f"Column {meta.name!r} already exists.")
            names.add(meta.name)
            vector.setflags(write=False)
            metas.append(meta)
            values.append(vector)
        if len(np.unique(target)) < 2:
            raise SingleClassTarget("The target must contain at least 2 distinct classes.")
        target.setflags(write=False)
        self._metas = tuple(metas)
        self._values = tuple(values)
        self._index = {m.name: i for i, m in enumerate(metas)}
        self.target = target
        self.classes = tuple(classes)
        self.description = description
        self.target_name = target_name

    def __repr__(self):
        return (
            f"Dataset(n_rows={self.n_rows}, features={list(self.feature_names)}, "
            f"classes={list(self.classes)})"
        )

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self._metas == other._metas
            and all(np.array_equal(a, b) for a, b in zip(self._values, other._values))
            and np.array_equal(self.target, other.target)
            and self.classes == other.classes
            and self.description == other.description
            and self.target_name == other.target_name
        )

    @property
    def n_rows(self) -> int:
        return self.target.shape[0]

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @property
    def schema(self) -> List[FeatureMeta]:
        return list(self._metas)

    @property
    def feature_names(self) -> Tuple[str, ...]:
        return tuple(m.name for m in self._metas)

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def meta(self, name: str) -> FeatureMeta:
        try:
            return self._metas[self._index[name]]
        except KeyError:
            raise UnknownColumn(f"No feature named {name!r}.") from None

    def column(self, name: str) -> np.ndarray:
        try:
            return self._values[self._index[name]]
        except KeyError:
            raise UnknownColumn(f"No feature named {name!r}.") from None

    def columns(self) -> Dict[str, np.ndarray]:
        return {m.name: v for m, v in zip(self._metas, self._values)}

    def matrix(self, names: Optional[Sequence[str]] = None) -> np.ndarray:
        """(n_rows x n_features) float matrix of the named features, in order."""
        if names is None:
            names = self.feature_names
        if not names:
            return np.empty((self.n_rows, 0))
        return np.column_stack([self.column(n) for n in names])

    def feature_counts(self) -> Tuple[int, int]:
        """(original, generated) feature counts."""
        generated = sum(1 for m in self._metas if m.generated)
        return len(self._metas) - generated, generated

    def append_feature(self, meta: FeatureMeta, values) -> "Dataset":
        """Return a copy of this dataset with one more column, ordered last."""
        if meta.name in self._index or meta.name == self.target_name:
            raise NameCollision(f"Column {meta.name!r} already exists.")
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (self.n_rows,):
            raise LengthMismatch(
                f"Feature {meta.name!r} has {values.size} values, dataset has {self.n_rows} rows."
            )
        columns = list(zip(self._metas, self._values)) + [(meta, values.copy())]
        return Dataset(columns, self.target, self.classes, self.description, self.target_name)

    def with_description(self, description: str) -> "Dataset":
        return Dataset(
            list(zip(self._metas, self._values)),
            self.target,
            self.classes,
            description,
            self.target_name,
        )

    def decoded_target(self) -> np.ndarray:
        return np.asarray(self.classes, dtype=object)[self.target]


def append_feature(d: Dataset, meta: FeatureMeta, values) -> Dataset:
    return d.append_feature(meta, values)


def _is_missing(cell: str) -> bool:
    return cell.strip().lower() in MISSING_TOKENS


def _parse_number(cell: str) -> Optional[float]:
    try:
        return float(cell)
    except ValueError:
        return None


def _encode_target(cells: List[str]) -> Tuple[np.ndarray, Tuple[str, ...]]:
    numbers = [_parse_number(c) for c in cells]
    if all(n is not None and math.isfinite(n) for n in numbers):
        # numeric labels are coded in ascending numeric order
        by_value = {}
        for cell, n in zip(cells, numbers):
            by_value.setdefault(n, cell)
        classes = tuple(by_value[n] for n in sorted(by_value))
        lookup = {n: i for i, n in enumerate(sorted(by_value))}
        return np.array([lookup[n] for n in numbers], dtype=np.intp), classes
    classes = tuple(dict.fromkeys(cells))
    lookup = {c: i for i, c in enumerate(classes)}
    return np.array([lookup[c] for c in cells], dtype=np.intp), classes


def _ingest_column(name: str, cells: List[str]) -> Tuple[FeatureMeta, np.ndarray]:
    parsed = []
    numeric = True
    for cell in cells:
        if _is_missing(cell):
            parsed.append(None)
            continue
        n = _parse_number(cell)
        if n is None:
            numeric = False
            break
        # +/-inf is treated like a missing cell
        parsed.append(n if math.isfinite(n) else None)
    present = [p for p in parsed if p is not None] if numeric else []
    if numeric and present:
        n_missing = len(cells) - len(present)
        values = np.array([np.nan if p is None else p for p in parsed])
        description = ""
        if n_missing:
            median = float(np.median(present))
            values[np.isnan(values)] = median
            description = f"({n_missing} missing values imputed with median {median!r})"
            logging.info(f"Column {name!r}: imputed {n_missing} missing values with {median!r}")
        return FeatureMeta(name, FeatureKind.NUMERIC, description), values
    categories = tuple(dict.fromkeys(cells))
    lookup = {c: i for i, c in enumerate(categories)}
    values = np.array([lookup[c] for c in cells], dtype=np.float64)
    return FeatureMeta(name, FeatureKind.CATEGORICAL, categories=categories), values


def _read_header_comment(path: Path) -> int:
    """number of leading ``#`` comment lines"""
    skip = 0
    with open(path, "r", encoding="utf-8", newline="") as f:
        for line in f:
            if line.startswith("#"):
                skip += 1
            else:
                break
    return skip


def load_csv(path, target_name: str, description: str = "") -> Dataset:
    """Read a CSV file with a header row into a :class:`Dataset`.

    A column is numeric if every non-missing cell parses as a decimal number,
    otherwise it is categorical. Missing numeric cells ("", "NA", "NaN") are
    replaced with the column median. Leading ``#`` comment lines are skipped.

    Parameters
    ----------
    path : str or Path
        CSV file (RFC-4180 quoting, UTF-8)
    target_name : str
        header of the class column
    description : str, optional
        dataset description text

    Returns
    -------
    Dataset
        the ingested dataset, rows in file order
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"No such data file: {path}")
    skip = _read_header_comment(path)
    try:
        raw = pd.read_csv(
            path,
            header=None,
            dtype=str,
            keep_default_na=False,
            skiprows=skip,
            encoding="utf-8",
            skip_blank_lines=True,
        )
    except pd.errors.EmptyDataError:
        raise EmptyTable(f"{path} contains no header row.") from None
    if raw.shape[0] == 0:
        raise EmptyTable(f"{path} contains no header row.")
    header = [str(h) for h in raw.iloc[0].tolist()]
    seen = set()
    for h in header:
        if h in seen:
            raise DuplicateHeader(f"Duplicate header {h!r} in {path}.")
        seen.add(h)
    if target_name not in seen:
        raise UnknownColumn(f"Target {target_name!r} is not a column of {path}.")
    body = raw.iloc[1:]
    if body.shape[0] == 0:
        raise EmptyTable(f"{path} has a header but no rows.")
    columns = []
    target_cells = None
    for j, name in enumerate(header):
        cells = body.iloc[:, j].tolist()
        if name == target_name:
            target_cells = cells
        else:
            columns.append(_ingest_column(name, cells))
    target, classes = _encode_target(target_cells)
    if len(classes) < 2:
        raise SingleClassTarget(f"Target {target_name!r} has a single class {classes!r}.")
    logging.info(
        f"Loaded {path.name}: {body.shape[0]} rows, {len(columns)} features, {len(classes)} classes"
    )
    return Dataset(columns, target, classes, description, target_name)


def _format_number(v: float) -> str:
    return repr(float(v))


def write_csv(d: Dataset, path, header_comment: Optional[str] = None) -> None:
    """Write `d` back out as CSV, target column last.

    Categorical columns are written with their original strings and numeric
    columns in shortest round-trip form, so reading the file back with
    :func:`load_csv` yields an identical dataset. Imputed cells are written
    as their imputed values; the imputation note in the column description
    is not carried over.
    """
    frame = {}
    for meta in d.schema:
        values = d.column(meta.name)
        if meta.kind is FeatureKind.CATEGORICAL:
            frame[meta.name] = [meta.categories[int(v)] for v in values]
        else:
            frame[meta.name] = [_format_number(v) for v in values]
    frame[d.target_name] = list(d.decoded_target())
    with open(path, "w", encoding="utf-8", newline="") as f:
        if header_comment is not None:
            f.write(f"# {header_comment}\n")
        pd.DataFrame(frame, dtype=str).to_csv(f, index=False, lineterminator="\n")


@dataclass
class FoldPlan:
    """Assignment of rows to cross-validation folds.

    ``assignments[i]`` is the fold of row ``i``, or -1 for rows outside the
    plan (e.g. the held-out test rows).
    """

    k: int
    seed: int
    assignments: np.ndarray
    stratified: bool = field(default=True)

    def folds(self):
        """yield (train_rows, test_rows) for each fold in order"""
        for fold in range(self.k):
            test = np.flatnonzero(self.assignments == fold)
            train = np.flatnonzero((self.assignments != fold) & (self.assignments >= 0))
            yield train, test

    @property
    def rows(self) -> np.ndarray:
        return np.flatnonzero(self.assignments >= 0)

    def sizes(self) -> List[int]:
        return [int(np.sum(self.assignments == f)) for f in range(self.k)]


def make_folds(d: Dataset, k: int, seed: int, rows: Optional[np.ndarray] = None) -> FoldPlan:
    """Partition rows (all, or `rows`) into `k` folds.

    Folds are stratified by class when every class has at least `k` rows,
    otherwise plain shuffled folds are used. Fold sizes differ by at most one,
    and the plan is a pure function of (target, rows, k, seed).
    """
    rows = np.arange(d.n_rows) if rows is None else np.asarray(rows, dtype=np.intp)
    if k < 2:
        raise FoldError(f"Need at least 2 folds, got k={k}.")
    if rows.size < k:
        raise FoldError(f"Cannot make {k} folds from {rows.size} rows.")
    y = d.target[rows]
    counts = np.bincount(y, minlength=d.n_classes)
    stratified = bool(np.all(counts[counts > 0] >= k))
    if stratified:
        splitter = StratifiedKFold(n_splits=k, shuffle=True, random_state=seed)
    else:
        logging.debug(f"A class has fewer than {k} rows; folds are not stratified")
        splitter = KFold(n_splits=k, shuffle=True, random_state=seed)
    assignments = np.full(d.n_rows, -1, dtype=np.intp)
    for fold, (_, test) in enumerate(splitter.split(np.zeros((rows.size, 1)), y)):
        assignments[rows[test]] = fold
    return FoldPlan(k=k, seed=seed, assignments=assignments, stratified=stratified)


def holdout_split(d: Dataset, test_fraction: float, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Split rows into (train_rows, test_rows), stratified when possible.

    A `test_fraction` of 0 returns every row as training and no test rows.
    """
    rows = np.arange(d.n_rows)
    if test_fraction <= 0:
        return rows, np.empty(0, dtype=np.intp)
    if not 0 < test_fraction < 1:
        raise FoldError(f"test_fraction must be in [0, 1), got {test_fraction}.")
    counts = np.bincount(d.target, minlength=d.n_classes)
    n_test = math.ceil(test_fraction * d.n_rows)
    stratify = d.target if counts.min() >= 2 and n_test >= d.n_classes else None
    train, test = train_test_split(
        rows, test_size=test_fraction, random_state=seed, stratify=stratify
    )
    return np.sort(train), np.sort(test)
