"""Tabular datasets, unit scaling and the DED common-feature formulas."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    ColumnCountMismatch,
    DataError,
    EmptyData,
    IndexOutOfRange,
    MissingFile,
    NonNumericCell,
    ShapeMismatch,
)


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Regression data from one domain: ``inputs`` (N, n_in), ``outputs`` (N, n_out)."""

    domain_id: str
    inputs: np.ndarray
    outputs: np.ndarray
    feature_names: tuple[str, ...] = ()
    output_names: tuple[str, ...] = ()

    def __post_init__(self):
        X = np.array(self.inputs, dtype=float, copy=True)
        Y = np.array(self.outputs, dtype=float, copy=True)
        if X.ndim == 1:
            X = X[:, None]
        if Y.ndim == 1:
            Y = Y[:, None]
        if X.ndim != 2 or Y.ndim != 2:
            raise ShapeMismatch("inputs and outputs must be 2-D")
        if X.shape[0] != Y.shape[0]:
            raise ShapeMismatch(f"row counts differ: {X.shape[0]} inputs vs {Y.shape[0]} outputs")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise DataError(f"dataset {self.domain_id!r} contains non-finite values")
        X.setflags(write=False)
        Y.setflags(write=False)
        object.__setattr__(self, "inputs", X)
        object.__setattr__(self, "outputs", Y)
        fnames = tuple(self.feature_names) or tuple(f"x{i}" for i in range(X.shape[1]))
        onames = tuple(self.output_names) or tuple(f"y{i}" for i in range(Y.shape[1]))
        if len(fnames) != X.shape[1] or len(onames) != Y.shape[1]:
            raise ShapeMismatch("name count does not match column count")
        if len(set(fnames)) != len(fnames):
            raise DataError("feature names must be unique")
        object.__setattr__(self, "feature_names", fnames)
        object.__setattr__(self, "output_names", onames)

    @property
    def n_rows(self) -> int:
        return self.inputs.shape[0]

    def __len__(self) -> int:
        return self.n_rows

    @property
    def n_in(self) -> int:
        return self.inputs.shape[1]

    @property
    def n_out(self) -> int:
        return self.outputs.shape[1]

    @property
    def rows(self) -> np.ndarray:
        """Concatenated ``[x, y]`` vectors, one per row."""
        return np.hstack([self.inputs, self.outputs])

    def __eq__(self, other):
        if not isinstance(other, LabeledDataset):
            return NotImplemented
        return (
            self.domain_id == other.domain_id
            and self.feature_names == other.feature_names
            and self.output_names == other.output_names
            and np.array_equal(self.inputs, other.inputs)
            and np.array_equal(self.outputs, other.outputs)
        )

    __hash__ = None

    def replace(self, inputs=None, outputs=None, domain_id=None) -> "LabeledDataset":
        return LabeledDataset(
            domain_id=self.domain_id if domain_id is None else domain_id,
            inputs=self.inputs if inputs is None else inputs,
            outputs=self.outputs if outputs is None else outputs,
            feature_names=self.feature_names,
            output_names=self.output_names,
        )

    def subset(self, indices) -> "LabeledDataset":
        """Rows at ``indices`` in the given order. May be empty."""
        idx = np.asarray(indices, dtype=int).reshape(-1)
        if idx.size and (idx.min() < 0 or idx.max() >= self.n_rows):
            raise IndexOutOfRange(f"index out of range for {self.n_rows} rows")
        return LabeledDataset(
            self.domain_id,
            self.inputs[idx].reshape(idx.size, self.n_in),
            self.outputs[idx].reshape(idx.size, self.n_out),
            self.feature_names,
            self.output_names,
        )


def empty_like(ds: LabeledDataset, domain_id: str | None = None) -> LabeledDataset:
    return ds.subset([]).replace(domain_id=domain_id)


def concat(first: LabeledDataset, *others: LabeledDataset, domain_id: str | None = None) -> LabeledDataset:
    parts = (first,) + others
    for p in others:
        if p.n_in != first.n_in or p.n_out != first.n_out:
            raise ShapeMismatch("cannot concatenate datasets with different widths")
    return LabeledDataset(
        first.domain_id if domain_id is None else domain_id,
        np.vstack([p.inputs for p in parts]),
        np.vstack([p.outputs for p in parts]),
        first.feature_names,
        first.output_names,
    )


def remove_row(ds: LabeledDataset, i: int) -> LabeledDataset:
    """Copy of ``ds`` without row ``i``; remaining order is preserved."""
    if not 0 <= i < ds.n_rows:
        raise IndexOutOfRange(f"row {i} out of range for {ds.n_rows} rows")
    keep = np.delete(np.arange(ds.n_rows), i)
    return ds.subset(keep)


def insert_row(ds: LabeledDataset, i: int, x, y) -> LabeledDataset:
    if not 0 <= i <= ds.n_rows:
        raise IndexOutOfRange(f"insert position {i} out of range for {ds.n_rows} rows")
    X = np.insert(ds.inputs, i, np.asarray(x, dtype=float), axis=0)
    Y = np.insert(ds.outputs, i, np.asarray(y, dtype=float), axis=0)
    return ds.replace(inputs=X, outputs=Y)


def load_csv(path, n_in: int, n_out: int, domain_id: str | None = None) -> LabeledDataset:
    """Read a headed CSV whose first ``n_in`` columns are inputs and last ``n_out`` outputs.

    Row and column numbers in :class:`NonNumericCell` are 1-based and count
    data rows only (the header is not row 1).
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"dataset file not found: {path}")
    if n_in < 1 or n_out < 1:
        raise DataError("n_in and n_out must be positive")
    width = n_in + n_out
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise EmptyData(f"{path}: file is empty") from None
        if len(header) != width:
            raise ColumnCountMismatch(f"{path}: header has {len(header)} columns, expected {width}")
        values = []
        for r, raw in enumerate(reader, start=1):
            if not raw or all(not c.strip() for c in raw):
                continue
            if len(raw) != width:
                raise ColumnCountMismatch(f"{path}: row {r} has {len(raw)} columns, expected {width}")
            row = []
            for c, cell in enumerate(raw, start=1):
                try:
                    v = float(cell)
                except ValueError:
                    raise NonNumericCell(r, c, cell) from None
                if not math.isfinite(v):
                    raise NonNumericCell(r, c, cell)
                row.append(v)
            values.append(row)
    if not values:
        raise EmptyData(f"{path}: no data rows after the header")
    arr = np.array(values)
    return LabeledDataset(
        domain_id if domain_id is not None else path.stem,
        arr[:, :n_in],
        arr[:, n_in:],
        tuple(header[:n_in]),
        tuple(header[n_in:]),
    )


def write_csv(ds: LabeledDataset, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(ds.feature_names + ds.output_names)
        for row in ds.rows:
            w.writerow([repr(float(v)) for v in row])


# ---------------------------------------------------------------------------
# unit scaling


@dataclass(frozen=True, eq=False)
class ScalingSpec:
    """Per-column min/max over inputs followed by outputs."""

    mins: np.ndarray
    maxs: np.ndarray
    n_in: int
    fitted_on: str = ""
    column_names: tuple[str, ...] = field(default=())

    @property
    def degenerate(self) -> np.ndarray:
        return self.maxs == self.mins

    @property
    def span(self) -> np.ndarray:
        s = self.maxs - self.mins
        return np.where(s == 0, 1.0, s)

    def degenerate_columns(self) -> list[str]:
        names = self.column_names or tuple(f"col{i}" for i in range(self.mins.size))
        return [n for n, d in zip(names, self.degenerate) if d]


def fit_unit_scaler(*datasets: LabeledDataset) -> ScalingSpec:
    """Joint min/max over the union of the rows of all ``datasets``."""
    datasets = [d for d in datasets if d is not None]
    if not datasets:
        raise EmptyData("no datasets to fit a scaler on")
    first = datasets[0]
    for d in datasets[1:]:
        if d.n_in != first.n_in or d.n_out != first.n_out:
            raise ShapeMismatch("datasets disagree on n_in/n_out")
    rows = np.vstack([d.rows for d in datasets])
    if rows.shape[0] == 0:
        raise EmptyData("cannot fit a scaler on zero rows")
    return ScalingSpec(
        mins=rows.min(axis=0),
        maxs=rows.max(axis=0),
        n_in=first.n_in,
        fitted_on="+".join(d.domain_id for d in datasets),
        column_names=first.feature_names + first.output_names,
    )


def _scale(values, mins, maxs):
    span = maxs - mins
    out = (values - mins) / np.where(span == 0, 1.0, span)
    return np.where(span == 0, 0.0, out)


def apply_scaler(spec: ScalingSpec, ds: LabeledDataset) -> LabeledDataset:
    if ds.n_in + ds.n_out != spec.mins.size or ds.n_in != spec.n_in:
        raise ShapeMismatch("dataset columns do not match the scaler")
    k = spec.n_in
    return ds.replace(
        inputs=_scale(ds.inputs, spec.mins[:k], spec.maxs[:k]),
        outputs=_scale(ds.outputs, spec.mins[k:], spec.maxs[k:]),
    )


def invert_outputs(spec: ScalingSpec, Y) -> np.ndarray:
    """Map scaled predictions back to original output units.

    Degenerate output columns come back as their constant value.
    """
    Y = np.asarray(Y, dtype=float)
    k = spec.n_in
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.shape[1] != spec.mins.size - k:
        raise ShapeMismatch("prediction width does not match the scaler outputs")
    span = spec.maxs[k:] - spec.mins[k:]
    return Y * span + spec.mins[k:]


def invert_scaler(spec: ScalingSpec, ds: LabeledDataset) -> LabeledDataset:
    k = spec.n_in
    if ds.n_in + ds.n_out != spec.mins.size:
        raise ShapeMismatch("dataset columns do not match the scaler")
    span = spec.maxs - spec.mins
    return ds.replace(
        inputs=ds.inputs * span[:k] + spec.mins[:k],
        outputs=ds.outputs * span[k:] + spec.mins[k:],
    )


# ---------------------------------------------------------------------------
# DED-LB/p and DED-LB/w common parameters

WIRE_DIAMETER_MM = 1.2
DENSITY_SS316L = 7.98
DENSITY_DSS2209 = 7.8


@dataclass(frozen=True)
class ProcessFeatureRow:
    """Raw process parameters for one deposition track.

    For DED-LB/p ``feed_rate`` is the powder feed rate in g/min and ``speed``
    the scanning speed in mm/min. For DED-LB/w ``feed_rate`` is the wire feed
    rate in m/min and ``speed`` the travel speed in mm/s.
    """

    process_kind: str
    feed_rate: float
    speed: float
    laser_power: float
    electrical_power: float = 0.0
    density: float = DENSITY_SS316L

    def __post_init__(self):
        if self.process_kind not in ("DED-LB/p", "DED-LB/w"):
            raise DataError(f"unknown process kind {self.process_kind!r}")
        for name in ("feed_rate", "speed", "laser_power", "density"):
            if not getattr(self, name) > 0:
                raise DataError(f"{name} must be strictly positive")
        if self.electrical_power < 0:
            raise DataError("electrical_power must be >= 0")


def derive_common_features(row: ProcessFeatureRow) -> tuple[float, float, float]:
    """Return (material feed rate mm^3/s, travel speed mm/s, energy density J/mm^3)."""
    if row.process_kind == "DED-LB/p":
        mfr = row.feed_rate / row.density * 1000.0 / 60.0
        ts = row.speed / 60.0
        heat = row.laser_power
    else:
        # m/min -> cm/min, times wire cross-section in cm^2 (radius 0.06 cm), cm^3 -> mm^3
        mfr = row.feed_rate * 100.0 * math.pi * 0.06**2 * 1000.0 / 60.0
        ts = row.speed
        heat = row.laser_power + row.electrical_power
    if mfr == 0:
        raise ZeroDivisionError("material feed rate is zero")
    return mfr, ts, heat / mfr


def common_feature_dataset(
    rows: Sequence[ProcessFeatureRow], widths, domain_id: str
) -> LabeledDataset:
    """Build an (MFR, TS, ED) -> melt pool width dataset."""
    feats = np.array([derive_common_features(r) for r in rows], dtype=float)
    return LabeledDataset(domain_id, feats, np.asarray(widths, dtype=float).reshape(-1, 1),
                          ("MFR", "TS", "ED"), ("width",))
