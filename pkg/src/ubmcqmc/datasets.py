"""Benchmark dataset ingestion and synthetic fixtures.

The six benchmark datasets are not bundled; each registry entry records
where to fetch the file, how to parse it, and the processed shape the
loader must reproduce. Loading is deterministic and order-preserving, and
a sha256 of the processed design matrix is printed so downstream results
tie to the exact data. synthetic_benchmark builds offline stand-ins with
identical shapes (the German stand-in goes through the real categorical
expansion path).
"""
from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit, ndtr

__all__ = [
    "DatasetSpec",
    "LoadedDataset",
    "BENCHMARKS",
    "load_dataset",
    "expand_categorical",
    "design_checksum",
    "synthetic_regression",
    "synthetic_benchmark",
]


@dataclass(frozen=True)
class DatasetSpec:
    """Parsing recipe plus the processed shape the loader must reproduce.

    expected_p counts the intercept column when add_intercept is set.
    predictors lists column names (header files) or integer indices; None
    means every non-response column. zero_missing names numeric columns
    where a literal 0 encodes a missing measurement.
    """

    name: str
    filename: str
    url: str
    model: str  # linear | probit | logistic
    expected_n: int
    expected_p: int
    response: str | int
    predictors: tuple | None = None
    categorical: tuple = ()
    delimiter: str | None = None  # None = any whitespace
    has_header: bool = False
    na_values: tuple = ("", "?", "NA", "NaN", "na", "nan")
    zero_missing: tuple = ()
    response_map: tuple | None = None  # ((raw label, value), ...)
    add_intercept: bool = True
    notes: str = ""


@dataclass
class LoadedDataset:
    design: np.ndarray
    response: np.ndarray
    checksum: str
    dropped_rows: int = 0
    name: str = ""

    def __iter__(self):
        return iter((self.design, self.response))


BENCHMARKS = {
    "boston": DatasetSpec(
        name="boston",
        filename="housing.data",
        url="http://lib.stat.cmu.edu/datasets/boston_corrected.txt"
        " (or https://archive.ics.uci.edu/ml/machine-learning-databases/housing/housing.data)",
        model="linear",
        expected_n=506,
        expected_p=14,
        response=13,
        notes="whitespace table, 13 covariates then MEDV; intercept prepended",
    ),
    "california": DatasetSpec(
        name="california",
        filename="cal_housing.data",
        url="https://www.dcc.fc.up.pt/~ltorgo/Regression/cal_housing.tgz",
        model="linear",
        expected_n=20640,
        expected_p=9,
        response=8,
        delimiter=",",
        notes="8 covariates then median house value; intercept prepended",
    ),
    "vaso": DatasetSpec(
        name="vaso",
        filename="vaso.csv",
        url="https://vincentarelbundock.github.io/Rdatasets/csv/robustbase/vaso.csv",
        model="probit",
        expected_n=39,
        expected_p=3,
        response="Y",
        predictors=("Volume", "Rate"),
        delimiter=",",
        has_header=True,
        notes="vasoconstriction data; intercept + Volume + Rate",
    ),
    "mroz": DatasetSpec(
        name="mroz",
        filename="Mroz.csv",
        url="https://vincentarelbundock.github.io/Rdatasets/csv/carData/Mroz.csv",
        model="probit",
        expected_n=753,
        expected_p=8,
        response="lfp",
        predictors=("k5", "k618", "age", "wc", "hc", "lwg", "inc"),
        categorical=("wc", "hc"),
        delimiter=",",
        has_header=True,
        response_map=(("yes", 1.0), ("no", 0.0)),
        notes="labor-force participation; 7 covariates + intercept",
    ),
    "pima": DatasetSpec(
        name="pima",
        filename="pima-indians-diabetes.csv",
        url="https://raw.githubusercontent.com/jbrownlee/Datasets/master/pima-indians-diabetes.csv",
        model="logistic",
        expected_n=392,
        expected_p=9,
        response=8,
        delimiter=",",
        zero_missing=(1, 2, 3, 4, 5),
        notes="768 raw rows; complete cases after dropping zero-coded"
        " glucose/pressure/triceps/insulin/bmi leave n=392",
    ),
    "german": DatasetSpec(
        name="german",
        filename="german.data",
        url="https://archive.ics.uci.edu/ml/machine-learning-databases/statlog/german/german.data",
        model="logistic",
        expected_n=1000,
        expected_p=49,
        response=20,
        categorical=(0, 2, 3, 5, 6, 8, 9, 11, 13, 14, 16, 18, 19),
        response_map=(("1", 0.0), ("2", 1.0)),
        notes="13 qualitative attributes expand to reference-dropped"
        " indicators; 49 predictors including the intercept",
    ),
}


def design_checksum(design: np.ndarray) -> str:
    """sha256 hex of the processed design matrix bytes (row-major float64)."""
    d = np.ascontiguousarray(np.asarray(design, dtype=np.float64))
    return hashlib.sha256(d.tobytes()).hexdigest()


def _read_rows(path, delimiter):
    with open(path, newline="") as fh:
        if delimiter is None:
            rows = [line.split() for line in fh if line.strip()]
        else:
            rows = [row for row in csv.reader(fh, delimiter=delimiter) if row]
    if not rows:
        raise ValueError(f"no rows parsed from {path}")
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ValueError(f"ragged row {i} in {path}: {len(row)} fields, expected {width}")
    return rows


def _resolve(column, header, path):
    if isinstance(column, str):
        if header is None or column not in header:
            raise ValueError(f"column {column!r} not found in {path}")
        return header.index(column)
    return int(column)


def expand_categorical(rows, categorical_columns) -> np.ndarray:
    """String table -> numeric design; categorical columns become c-1
    indicators with the first-seen level as the dropped reference."""
    rows = [list(r) for r in rows]
    if not rows:
        raise ValueError("empty table")
    n_cols = len(rows[0])
    categorical = set(int(c) for c in categorical_columns)
    blocks = []
    for j in range(n_cols):
        col = [row[j] for row in rows]
        if j in categorical:
            levels = []
            for v in col:
                if v not in levels:
                    levels.append(v)
            for lev in levels[1:]:
                blocks.append(np.asarray([1.0 if v == lev else 0.0 for v in col]))
        else:
            try:
                blocks.append(np.asarray([float(v) for v in col]))
            except ValueError as exc:
                raise ValueError(f"non-numeric value in column {j}: {exc}") from exc
    return np.column_stack(blocks)


def load_dataset(spec: DatasetSpec, path=None, verbose: bool = True) -> LoadedDataset:
    """Parse, clean, expand, and intercept a dataset per its spec.

    Rows containing declared missing markers (string markers or zero-coded
    numeric columns) are dropped and counted. The processed design must
    match (expected_n, expected_p) exactly or the load fails.
    """
    path = Path(path) if path is not None else Path(spec.filename)
    if not path.exists():
        raise FileNotFoundError(
            f"{spec.name}: {path} not found; download it from {spec.url}"
        )
    rows = _read_rows(path, spec.delimiter)
    header = None
    if spec.has_header:
        header, rows = rows[0], rows[1:]

    resp_idx = _resolve(spec.response, header, path)
    if spec.predictors is None:
        pred_idx = [j for j in range(len(rows[0])) if j != resp_idx]
    else:
        pred_idx = [_resolve(c, header, path) for c in spec.predictors]
    cat_idx = {_resolve(c, header, path) for c in spec.categorical}
    zero_idx = {_resolve(c, header, path) for c in spec.zero_missing}
    used = [resp_idx] + pred_idx
    if resp_idx >= len(rows[0]):
        raise ValueError(f"{spec.name}: response column {resp_idx} out of range")

    na = set(spec.na_values)
    kept, dropped = [], 0
    for row in rows:
        if any(row[j].strip() in na for j in used):
            dropped += 1
            continue
        if zero_idx and any(float(row[j]) == 0.0 for j in zero_idx):
            dropped += 1
            continue
        kept.append(row)
    if not kept:
        raise ValueError(f"{spec.name}: every row was rejected as missing")

    resp_map = dict(spec.response_map) if spec.response_map else None
    y = np.empty(len(kept))
    for i, row in enumerate(kept):
        raw = row[resp_idx].strip()
        if resp_map is not None:
            if raw not in resp_map:
                raise ValueError(f"{spec.name}: unmapped response label {raw!r}")
            y[i] = resp_map[raw]
        else:
            y[i] = float(raw)

    table = [[row[j] for j in pred_idx] for row in kept]
    local_cat = [pred_idx.index(j) for j in cat_idx if j in pred_idx]
    design = expand_categorical(table, local_cat)
    if spec.add_intercept:
        design = np.column_stack([np.ones(design.shape[0]), design])

    if design.shape != (spec.expected_n, spec.expected_p):
        raise ValueError(
            f"{spec.name}: processed shape {design.shape} differs from expected "
            f"({spec.expected_n}, {spec.expected_p})"
        )
    checksum = design_checksum(design)
    if verbose:
        print(
            f"dataset {spec.name}: n={design.shape[0]} p={design.shape[1]} "
            f"dropped={dropped} sha256={checksum}"
        )
    return LoadedDataset(design, y, checksum, dropped, spec.name)


def synthetic_regression(kind: str, n: int, p: int, seed: int, noise_sd: float = 1.0):
    """Synthetic (design, response, true beta) for the named model kind.

    The design is an intercept column plus IID standard-normal covariates;
    beta alternates in sign and shrinks with the index so responses stay
    in a moderate range at any p.
    """
    if not n >= p >= 1:
        raise ValueError(f"need n >= p >= 1, got n={n}, p={p}")
    if kind not in ("linear", "probit", "logistic"):
        raise ValueError(f"unknown kind {kind!r}")
    rng = np.random.default_rng(seed)
    design = np.column_stack([np.ones(n), rng.standard_normal((n, p - 1))])
    beta = np.array([(-1.0) ** j * (1.0 + j % 5) / (2.0 + j) for j in range(p)])
    lin = design @ beta
    if kind == "linear":
        y = lin + noise_sd * rng.standard_normal(n)
    elif kind == "probit":
        y = (rng.random(n) < ndtr(lin)).astype(np.float64)
    else:
        y = (rng.random(n) < expit(lin)).astype(np.float64)
    return design, y, beta


_GERMAN_LEVELS = (4, 5, 10, 5, 5, 4, 3, 4, 3, 3, 4, 2, 2)  # sum(c-1) = 41


def _german_standin_rows(n: int, rng) -> tuple[list, list]:
    """Raw mixed table shaped like the credit data: 7 numeric columns and
    13 categorical ones whose reference-dropped expansion has 41 columns."""
    cols = []
    for count in _GERMAN_LEVELS:
        labels = [f"A{count}{lev}" for lev in range(count)]
        draws = rng.integers(0, count, size=n)
        draws[:count] = np.arange(count)  # every level occurs, in declared order
        cols.append([labels[v] for v in draws])
    cat_positions = list(range(13))
    for _ in range(7):
        cols.append([f"{v:.6f}" for v in rng.standard_normal(n)])
    rows = [[cols[j][i] for j in range(20)] for i in range(n)]
    return rows, cat_positions


def synthetic_benchmark(name: str, seed: int = 0) -> LoadedDataset:
    """Offline stand-in with the exact processed shape of a benchmark."""
    if name not in BENCHMARKS:
        raise ValueError(f"unknown benchmark {name!r}; choices: {sorted(BENCHMARKS)}")
    spec = BENCHMARKS[name]
    if name == "german":
        rng = np.random.default_rng(seed)
        rows, cat = _german_standin_rows(spec.expected_n, rng)
        design = expand_categorical(rows, cat)
        design = np.column_stack([np.ones(spec.expected_n), design])
        beta = np.array(
            [(-1.0) ** j * (1.0 + j % 5) / (2.0 + j) for j in range(spec.expected_p)]
        )
        y = (rng.random(spec.expected_n) < expit(design @ beta)).astype(np.float64)
    else:
        design, y, _ = synthetic_regression(
            spec.model, spec.expected_n, spec.expected_p, seed
        )
    if design.shape != (spec.expected_n, spec.expected_p):
        raise AssertionError(f"stand-in shape {design.shape} broke its contract")
    return LoadedDataset(design, y, design_checksum(design), 0, f"{name}-standin")
