"""
Dataset Index and Splits
Loads the path,score index and partitions it for training, testing and
cross validation
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Literal, Optional, Union

import numpy as np
import pandas as pd

from app.errors import ArgumentError, IndexValidationError
from app.tensor import Rng

SCORE_MIN = 1.0
SCORE_MAX = 5.0

Provenance = Literal["scut-fbp", "synthetic"]
PROVENANCES = ("scut-fbp", "synthetic")

# index.csv is tagged by index.provenance written alongside it
PROVENANCE_SUFFIX = ".provenance"


@dataclass(frozen=True)
class IndexRecord:
    """One labelled face image"""

    path: Path
    score: float

    @property
    def stem(self) -> str:
        return self.path.stem


@dataclass
class DatasetIndex:
    """Ordered records plus where they came from"""

    records: List[IndexRecord]
    provenance: Provenance = "scut-fbp"

    def __len__(self) -> int:
        return len(self.records)

    def paths(self, subset: List[int]) -> List[Path]:
        return [self.records[i].path for i in subset]

    def scores(self, subset: List[int]) -> np.ndarray:
        return np.array([self.records[i].score for i in subset], dtype=np.float64)

    def validate(self) -> None:
        seen = set()
        for row, record in enumerate(self.records, start=1):
            if not SCORE_MIN <= record.score <= SCORE_MAX:
                raise IndexValidationError(
                    f"score {record.score} outside [{SCORE_MIN:g}, {SCORE_MAX:g}]", row
                )
            if record.path in seen:
                raise IndexValidationError(f"duplicate path {record.path}", row)
            seen.add(record.path)


@dataclass
class Split:
    """Disjoint train/test index lists into a DatasetIndex"""

    train: List[int] = field(default_factory=list)
    test: List[int] = field(default_factory=list)


def read_provenance(csv_path: Union[str, Path]) -> Provenance:
    sidecar = Path(csv_path).with_suffix(PROVENANCE_SUFFIX)
    if not sidecar.exists():
        return "scut-fbp"
    tag = sidecar.read_text(encoding="utf-8").strip()
    if tag not in PROVENANCES:
        raise IndexValidationError(f"unknown provenance {tag!r} in {sidecar.name}, expected one of {list(PROVENANCES)}")
    return tag


def load_index(csv_path: Union[str, Path], provenance: Optional[Provenance] = None) -> DatasetIndex:
    """
    Load a path,score CSV

    Args:
        csv_path: UTF-8 CSV with header `path,score`; relative image paths are
            resolved against the CSV's directory
        provenance: Tag stored with the index; read from the CSV's
            provenance sidecar when omitted, "scut-fbp" if there is none

    Returns:
        DatasetIndex in file order
    """
    csv_path = Path(csv_path)
    frame = pd.read_csv(csv_path, dtype=str, encoding="utf-8", keep_default_na=False)
    if list(frame.columns) != ["path", "score"]:
        raise IndexValidationError(f"expected header 'path,score', got {','.join(frame.columns)}")

    records = []
    for row, (raw_path, raw_score) in enumerate(frame.itertuples(index=False), start=1):
        try:
            score = float(raw_score)
        except ValueError:
            raise IndexValidationError(f"score {raw_score!r} is not a number", row) from None
        path = Path(raw_path)
        if not path.is_absolute():
            path = csv_path.parent / path
        records.append(IndexRecord(path=path, score=score))

    index = DatasetIndex(records=records, provenance=provenance or read_provenance(csv_path))
    index.validate()
    return index


def write_index(index: DatasetIndex, csv_path: Union[str, Path]) -> None:
    """Write an index as path,score with paths relative to the CSV's directory"""
    csv_path = Path(csv_path)
    rows = []
    for record in index.records:
        try:
            path = record.path.relative_to(csv_path.parent)
        except ValueError:
            path = record.path
        rows.append({"path": path.as_posix(), "score": repr(record.score)})
    pd.DataFrame(rows, columns=["path", "score"]).to_csv(csv_path, index=False, encoding="utf-8")
    csv_path.with_suffix(PROVENANCE_SUFFIX).write_text(index.provenance + "\n", encoding="utf-8")


def split_train_test(index: DatasetIndex, n_train: int, seed: int) -> Split:
    """
    Seeded shuffle followed by a prefix/suffix split

    Args:
        index: Dataset to partition
        n_train: Number of training records (400 of 500 in the standard protocol)
        seed: Shuffle seed

    Returns:
        Split with |train| = n_train and the remaining records as test
    """
    if not 0 < n_train < len(index):
        raise ArgumentError(f"n_train must lie in (0, {len(index)}), got {n_train}")
    order = Rng(seed).permutation(len(index)).tolist()
    return Split(train=order[:n_train], test=order[n_train:])


def kfold(index: DatasetIndex, k: int = 5, seed: int = 0) -> List[Split]:
    """
    Seeded shuffle into k contiguous folds whose sizes differ by at most one;
    fold i is the test set of split i. Earlier folds take the remainder.
    """
    if k < 2:
        raise ArgumentError(f"k must be >= 2, got {k}")
    if k > len(index):
        raise ArgumentError(f"k={k} exceeds the {len(index)} records")
    order = Rng(seed).permutation(len(index))
    folds = [fold.tolist() for fold in np.array_split(order, k)]
    splits = []
    for i, test in enumerate(folds):
        train = [j for f, fold in enumerate(folds) if f != i for j in fold]
        splits.append(Split(train=train, test=test))
    return splits
