"""Dataset ingestion, scaling, FSDS/CDS construction, and result persistence.

File formats: CSV with a header row, comma delimiter, UTF-8 and '.' decimals;
IDX image/label pairs (big-endian magic 0x00000803 / 0x00000801, unsigned
bytes). All writes go through a temp-file-then-rename so partial files never
appear under the final name.
"""

from __future__ import annotations

import csv
import json
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ensemble import REMatrix, SelectionResult
from .evaluate import EvalReport
from .exceptions import DataError, FormatError, ParameterError, ParseError
from .sampling import LabeledDataset

SCALING_MODES = ("unit_interval", "symmetric_unit")


# ---------------------------------------------------------------------------
# CSV

def load_csv(path, label, minority_label=None) -> LabeledDataset:
    """Load a numeric CSV with a header row into a LabeledDataset.

    ``label`` is the label column name or 0-based index. The label column
    must hold exactly two distinct values; the rarer one maps to 1, with
    ``minority_label`` as explicit override (required on a tie).
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("file is empty", line=1) from None
        if isinstance(label, int):
            if not 0 <= label < len(header):
                raise DataError(f"label column index {label} out of range")
            label_idx = label
        else:
            if label not in header:
                raise DataError(f"label column {label!r} not in header {header}")
            label_idx = header.index(label)
        feature_names = [h for i, h in enumerate(header) if i != label_idx]

        rows, raw_labels = [], []
        for lineno, record in enumerate(reader, start=2):
            if len(record) != len(header):
                raise ParseError(
                    f"expected {len(header)} fields, found {len(record)}", line=lineno
                )
            values = []
            for i, cell in enumerate(record):
                if i == label_idx:
                    continue
                try:
                    values.append(float(cell))
                except ValueError:
                    raise ParseError(
                        f"non-numeric value {cell!r} in column {header[i]!r}", line=lineno
                    ) from None
            rows.append(values)
            raw_labels.append(record[label_idx])

    if not rows:
        raise DataError(f"{path}: no data rows")
    distinct = sorted(set(raw_labels))
    if len(distinct) != 2:
        raise DataError(
            f"label column must hold exactly two distinct values, found {distinct}"
        )
    counts = {v: raw_labels.count(v) for v in distinct}
    if minority_label is not None:
        minority = str(minority_label)
        if minority not in counts:
            raise DataError(f"minority label {minority!r} not among {distinct}")
    elif counts[distinct[0]] == counts[distinct[1]]:
        raise DataError(
            "classes are the same size; pass an explicit minority label"
        )
    else:
        minority = min(counts, key=counts.get)

    y = np.array([1 if v == minority else 0 for v in raw_labels], dtype=np.int64)
    return LabeledDataset(X=np.array(rows, dtype=np.float64), y=y, feature_names=feature_names)


def save_csv(dataset: LabeledDataset, path, label_name: str = "label") -> None:
    """Write a LabeledDataset as CSV; floats keep full round-trip precision."""
    names = dataset.feature_names or [f"f{i}" for i in range(dataset.n_features)]
    lines = [",".join(list(names) + [label_name])]
    for row, label in zip(dataset.X, dataset.y):
        lines.append(",".join([repr(float(v)) for v in row] + [str(int(label))]))
    write_text_atomic(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# IDX (MNIST-style image archives)

_IDX_IMAGES_MAGIC = 0x00000803
_IDX_LABELS_MAGIC = 0x00000801


def _read_idx(path, expected_magic: int) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    with path.open("rb") as fh:
        raw = fh.read()
    if len(raw) < 4:
        raise FormatError(f"{path}: truncated IDX header")
    (magic,) = struct.unpack(">I", raw[:4])
    if magic != expected_magic:
        raise FormatError(
            f"{path}: bad IDX magic 0x{magic:08X}, expected 0x{expected_magic:08X}"
        )
    ndim = magic & 0xFF
    header_end = 4 + 4 * ndim
    if len(raw) < header_end:
        raise FormatError(f"{path}: truncated IDX dimension header")
    dims = struct.unpack(f">{ndim}I", raw[4:header_end])
    data = np.frombuffer(raw, dtype=np.uint8, offset=header_end)
    if data.size != int(np.prod(dims)):
        raise FormatError(f"{path}: payload size does not match dimensions {dims}")
    return data.reshape(dims)


def load_idx_images(images_path, labels_path, class_pair, counts=None) -> LabeledDataset:
    """Load an IDX image/label pair filtered to two classes.

    ``class_pair`` is (majority_label, minority_label); ``counts`` optionally
    caps each class at (n_majority, n_minority) rows, taking the first
    occurrences in file order. Pixels are flattened row-major.
    """
    images = _read_idx(images_path, _IDX_IMAGES_MAGIC)
    labels = _read_idx(labels_path, _IDX_LABELS_MAGIC)
    if images.shape[0] != labels.shape[0]:
        raise FormatError(
            f"image count {images.shape[0]} != label count {labels.shape[0]}"
        )
    flat = images.reshape(images.shape[0], -1).astype(np.float64)

    x_parts, y_parts = [], []
    for target, (value, cap) in enumerate(
        zip(class_pair, counts if counts is not None else (None, None))
    ):
        idx = np.flatnonzero(labels == value)
        if len(idx) == 0:
            raise DataError(f"no rows with label {value!r}")
        if cap is not None:
            if len(idx) < cap:
                raise DataError(
                    f"label {value!r} has {len(idx)} rows, fewer than requested {cap}"
                )
            idx = idx[:cap]
        x_parts.append(flat[idx])
        y_parts.append(np.full(len(idx), target, dtype=np.int64))

    names = [f"px{i}" for i in range(flat.shape[1])]
    return LabeledDataset(
        X=np.vstack(x_parts), y=np.concatenate(y_parts), feature_names=names
    )


# ---------------------------------------------------------------------------
# FSDS / CDS construction

@dataclass(frozen=True)
class DatasetSplitSpec:
    """How to carve the selection dataset out of the full pool."""

    fsds_fraction: float = 0.75
    split_seed: int = 0
    minority_subsample: int = None

    def __post_init__(self):
        if not 0.0 < self.fsds_fraction < 1.0:
            raise ParameterError("fsds_fraction must lie in (0, 1)")
        if self.minority_subsample is not None and self.minority_subsample < 2:
            raise ParameterError("minority_subsample must be at least 2")


def build_fsds_cds(data: LabeledDataset, spec: DatasetSplitSpec):
    """Split into disjoint (selection, classification) datasets, stratified.

    An optional minority subsample (uniform, without replacement) is applied
    first; each class then contributes round(fsds_fraction * class size)
    rows to the selection side. Deterministic given split_seed.
    """
    rng = np.random.default_rng(spec.split_seed)
    if spec.minority_subsample is not None:
        minority_idx = np.flatnonzero(data.y == 1)
        if spec.minority_subsample > len(minority_idx):
            raise DataError(
                f"minority_subsample {spec.minority_subsample} exceeds minority size "
                f"{len(minority_idx)}"
            )
        keep_min = rng.choice(minority_idx, size=spec.minority_subsample, replace=False)
        keep = np.sort(np.concatenate([np.flatnonzero(data.y == 0), keep_min]))
        data = data.subset(keep)

    fsds_idx, cds_idx = [], []
    for c in (0, 1):
        idx = np.flatnonzero(data.y == c)
        if len(idx) < 2:
            raise DataError(f"class {c} has {len(idx)} rows; need at least 2 to split")
        n_fs = int(round(spec.fsds_fraction * len(idx)))
        n_fs = min(max(n_fs, 1), len(idx) - 1)
        perm = rng.permutation(idx)
        fsds_idx.append(perm[:n_fs])
        cds_idx.append(perm[n_fs:])
    fsds = data.subset(np.sort(np.concatenate(fsds_idx)))
    cds = data.subset(np.sort(np.concatenate(cds_idx)))
    return fsds, cds


# ---------------------------------------------------------------------------
# Feature scaling

@dataclass
class ScalingParams:
    """Per-feature affine map fit on training data; later data is clipped."""

    mode: str
    minimums: np.ndarray
    maximums: np.ndarray

    def __post_init__(self):
        if self.mode not in SCALING_MODES:
            raise ParameterError(f"unknown scaling mode {self.mode!r}")
        self.minimums = np.asarray(self.minimums, dtype=np.float64)
        self.maximums = np.asarray(self.maximums, dtype=np.float64)
        if np.any(self.maximums < self.minimums):
            raise DataError("per-feature max must be >= min")

    @property
    def target_range(self):
        return (0.0, 1.0) if self.mode == "unit_interval" else (-1.0, 1.0)


def fit_scaling(train_matrix, mode: str) -> ScalingParams:
    x = np.asarray(train_matrix, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise DataError("scaling needs a non-empty 2-D matrix")
    return ScalingParams(mode=mode, minimums=x.min(axis=0), maximums=x.max(axis=0))


def apply_scaling(params: ScalingParams, matrix) -> np.ndarray:
    """Map features into the target range; constant features hit the midpoint."""
    x = np.asarray(matrix, dtype=np.float64)
    span = params.maximums - params.minimums
    lo, hi = params.target_range
    midpoint = (lo + hi) / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        unit = (x - params.minimums) / span
    scaled = lo + unit * (hi - lo)
    scaled = np.where(span == 0, midpoint, scaled)
    return np.clip(scaled, lo, hi)


def invert_scaling(params: ScalingParams, scaled) -> np.ndarray:
    """Inverse of apply_scaling for non-clipped values; constants map to their min."""
    s = np.asarray(scaled, dtype=np.float64)
    span = params.maximums - params.minimums
    lo, hi = params.target_range
    unit = (s - lo) / (hi - lo)
    return np.where(span == 0, params.minimums, params.minimums + unit * span)


# ---------------------------------------------------------------------------
# Result persistence

def write_text_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_json(obj, path) -> None:
    write_text_atomic(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def selection_to_dict(result: SelectionResult) -> dict:
    doc = {
        "delta_quantile": result.delta_quantile,
        "threshold": result.threshold,
        "n_selected": int(result.n_selected),
        "selected": [int(i) for i in result.selected],
        "delta": [float(v) for v in result.delta],
    }
    if result.l_min is not None:
        doc["l_min"] = [float(v) for v in result.l_min]
    if result.l_maj is not None:
        doc["l_maj"] = [float(v) for v in result.l_maj]
    return doc


def save_selection(result: SelectionResult, path) -> None:
    save_json(selection_to_dict(result), path)


def load_selection(path) -> SelectionResult:
    with Path(path).open(encoding="utf-8") as fh:
        doc = json.load(fh)
    try:
        return SelectionResult(
            delta=np.array(doc["delta"], dtype=np.float64),
            delta_quantile=doc["delta_quantile"],
            threshold=doc["threshold"],
            selected=np.array(doc["selected"], dtype=np.int64),
            l_min=np.array(doc["l_min"]) if "l_min" in doc else None,
            l_maj=np.array(doc["l_maj"]) if "l_maj" in doc else None,
        )
    except KeyError as exc:
        raise ParseError(f"{path}: selection file missing key {exc}") from None


def selection_summary_table(results) -> str:
    lines = ["delta_quantile,threshold,n_selected"]
    for r in results:
        lines.append(f"{r.delta_quantile!r},{r.threshold!r},{r.n_selected}")
    return "\n".join(lines) + "\n"


def _quantile_cell(dq) -> str:
    return "baseline" if dq is None else repr(float(dq))


def report_rows_table(report: EvalReport) -> str:
    lines = ["classifier,delta_quantile,trial,n_features,auroc,sensitivity,note"]
    for r in report.rows:
        lines.append(
            f"{r.classifier},{_quantile_cell(r.delta_quantile)},{r.trial},"
            f"{r.n_features},{r.auroc!r},{r.sensitivity!r},{r.note}"
        )
    return "\n".join(lines) + "\n"


def report_summary_table(report: EvalReport) -> str:
    lines = [
        "classifier,delta_quantile,n_features,auroc_mean,auroc_std,"
        "sensitivity_mean,sensitivity_std,note"
    ]
    for s in report.summaries:
        lines.append(
            f"{s.classifier},{_quantile_cell(s.delta_quantile)},{s.n_features},"
            f"{s.auroc_mean!r},{s.auroc_std!r},{s.sensitivity_mean!r},"
            f"{s.sensitivity_std!r},{s.note}"
        )
    return "\n".join(lines) + "\n"


def report_to_dict(report: EvalReport) -> dict:
    return {
        "rows": [vars(r).copy() for r in report.rows],
        "summaries": [vars(s).copy() for s in report.summaries],
    }


def export_q_csv(q: REMatrix, path, feature_names=None) -> None:
    """Write the stacked error matrix with its label column (K x (J+1))."""
    names = feature_names or [f"f{i}" for i in range(q.n_features)]
    if len(names) != q.n_features:
        raise DataError("feature_names length must match Q columns")
    lines = [",".join(list(names) + ["label"])]
    for row, label in zip(q.Q, q.labels):
        lines.append(",".join([repr(float(v)) for v in row] + [str(int(label))]))
    write_text_atomic(path, "\n".join(lines) + "\n")
