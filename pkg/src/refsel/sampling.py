"""Per-component train/test construction for the imbalanced input.

Each ensemble component trains on majority-class rows only and is tested on
a balanced set: every minority row plus an equal number of majority rows
drawn uniformly without replacement. Draws are independent across
components, so the same majority row may appear in several components' test
sets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DataError

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _splitmix64(z: int) -> int:
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    """Decorrelated 64-bit child seed: SplitMix64 output stream of master_seed.

    Child ``index`` is the SplitMix64 finalizer applied to
    ``master_seed + (index + 1) * golden_gamma`` (mod 2**64), the canonical
    SplitMix64 sequence. Fixed here so runs are reproducible everywhere.
    """
    if index < 0:
        raise ValueError("index must be non-negative")
    return _splitmix64((master_seed + (index + 1) * _GAMMA) & _MASK64)


@dataclass
class LabeledDataset:
    """Row-major numeric matrix with binary labels; label 1 is the minority."""

    X: np.ndarray
    y: np.ndarray
    feature_names: list = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y)
        if self.X.ndim != 2:
            raise DataError(f"X must be 2-D, got shape {self.X.shape}")
        if self.y.shape != (self.X.shape[0],):
            raise DataError("y length must equal the number of rows of X")
        values = set(np.unique(self.y).tolist())
        if not values <= {0, 1}:
            raise DataError(f"labels must be 0/1, got values {sorted(values)}")
        if values != {0, 1}:
            raise DataError("dataset must contain both classes")
        self.y = self.y.astype(np.int64)
        if self.n_minority >= self.n_majority:
            raise DataError(
                f"label 1 must be the minority class "
                f"({self.n_minority} >= {self.n_majority})"
            )
        if self.feature_names is not None and len(self.feature_names) != self.X.shape[1]:
            raise DataError("feature_names length must equal the number of columns")

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def n_minority(self) -> int:
        return int(np.sum(self.y == 1))

    @property
    def n_majority(self) -> int:
        return int(np.sum(self.y == 0))

    def subset(self, row_indices) -> "LabeledDataset":
        return LabeledDataset(
            X=self.X[row_indices], y=self.y[row_indices], feature_names=self.feature_names
        )


@dataclass
class ComponentSplit:
    """One component's majority-only training set and balanced test set.

    Test rows are ordered minority first, then the sampled majority rows;
    consumers must not rely on that order for statistics.
    """

    train: np.ndarray
    test: np.ndarray
    test_labels: np.ndarray
    component_seed: int


def build_component_split(data: LabeledDataset, component_seed: int) -> ComponentSplit:
    """Sample one component's split from the imbalanced dataset.

    The test set holds all |O| minority rows plus |O| distinct majority rows
    drawn uniformly without replacement with ``component_seed``; the training
    set is the remaining majority rows. Deterministic given (data, seed).
    """
    minority_idx = np.flatnonzero(data.y == 1)
    majority_idx = np.flatnonzero(data.y == 0)
    n_min, n_maj = len(minority_idx), len(majority_idx)
    if n_min == 0 or n_maj == 0:
        raise DataError("both classes must be present")
    if n_maj <= n_min:
        raise DataError(
            f"need more majority than minority rows, got |M|={n_maj} <= |O|={n_min}"
        )

    rng = np.random.default_rng(component_seed)
    test_maj = rng.choice(majority_idx, size=n_min, replace=False)
    in_test = np.zeros(data.n_rows, dtype=bool)
    in_test[test_maj] = True
    train_idx = majority_idx[~in_test[majority_idx]]

    test_idx = np.concatenate([minority_idx, test_maj])
    labels = np.concatenate([np.ones(n_min, dtype=np.int64), np.zeros(n_min, dtype=np.int64)])
    return ComponentSplit(
        train=data.X[train_idx],
        test=data.X[test_idx],
        test_labels=labels,
        component_seed=component_seed,
    )
