"""Flatten epochs into a labeled feature matrix and serialize it as CSV.

Column order is frozen: channel-major, feature names alphabetical within each
channel, names "ch<i>_<feature>". The CSV header is the feature names followed
by song_id,subject_id,epoch_index,enjoyment,familiarity; floats are written
with enough digits to round-trip float64 exactly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ..core import Epoch
from .dfa import dfa
from .entropy import entropy_features
from .spectral import EEG_BANDS, BandDefinition, spectopo_bandpower
from .wavelet import wavedec_bandpower

FEATURE_FAMILIES = ("spectopo", "wavedec", "dfa", "entropy")

META_COLUMNS = ("song_id", "subject_id", "epoch_index", "enjoyment", "familiarity")


@dataclass(frozen=True)
class Dataset:
    """Per-epoch feature rows with labels and provenance.

    labels is the prediction target; it equals song_id unless the dataset was
    relabeled (e.g. for rating prediction).
    """

    X: np.ndarray
    feature_names: tuple[str, ...]
    labels: np.ndarray
    song_id: np.ndarray
    subject_id: np.ndarray
    epoch_index: np.ndarray
    enjoyment: np.ndarray
    familiarity: np.ndarray

    def __post_init__(self):
        n, d = self.X.shape
        if len(self.feature_names) != d:
            raise ValueError(
                f"{len(self.feature_names)} names for {d} feature columns"
            )
        if len(set(self.feature_names)) != d:
            raise ValueError("feature names are not unique")
        for name in ("labels",) + tuple(META_COLUMNS):
            field = getattr(self, "song_id" if name == "song_id" else name)
            if field.shape != (n,):
                raise ValueError(f"{name} must have one entry per row")

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def width(self) -> int:
        return self.X.shape[1]

    def subset(self, indices: np.ndarray) -> Dataset:
        indices = np.asarray(indices)
        return Dataset(
            X=self.X[indices],
            feature_names=self.feature_names,
            labels=self.labels[indices],
            song_id=self.song_id[indices],
            subject_id=self.subject_id[indices],
            epoch_index=self.epoch_index[indices],
            enjoyment=self.enjoyment[indices],
            familiarity=self.familiarity[indices],
        )

    def relabeled(self, labels: np.ndarray) -> Dataset:
        labels = np.asarray(labels)
        if labels.shape != (self.n_rows,):
            raise ValueError("labels must have one entry per row")
        return replace(self, labels=labels)


def _channel_features(
    epoch: Epoch, selection: tuple[str, ...], bands: BandDefinition
) -> dict[str, np.ndarray]:
    """Feature name -> per-channel values for one epoch."""
    out: dict[str, np.ndarray] = {}
    if "spectopo" in selection:
        bp = spectopo_bandpower(epoch.data, epoch.sample_rate_hz, bands)
        for j, band in enumerate(bp.band_names):
            out[f"spectopo_{band}"] = bp.power_db[:, j]
    if "wavedec" in selection:
        we = wavedec_bandpower(epoch.data, epoch.sample_rate_hz)
        for j, level in enumerate(we.level_names):
            out[f"wavedec_{level}"] = we.relative_energy[:, j]
    if "dfa" in selection:
        results = [dfa(epoch.data[c]) for c in range(epoch.n_channels)]
        out["dfa_alpha"] = np.array([r.alpha for r in results])
        out["dfa_dim"] = np.array([r.dim for r in results])
        out["dfa_intercept"] = np.array([r.intercept for r in results])
        n_sizes = len(results[0].fluctuations)
        for i in range(n_sizes):
            out[f"dfa_f{i:02d}"] = np.array(
                [r.fluctuations[i][1] for r in results]
            )
    if "entropy" in selection:
        pairs = [entropy_features(epoch.data[c]) for c in range(epoch.n_channels)]
        out["entropy_log_energy"] = np.array([p.log_energy for p in pairs])
        out["entropy_shannon"] = np.array([p.shannon for p in pairs])
    return out


def build_feature_matrix(
    epochs: list[Epoch] | tuple[Epoch, ...],
    selection: tuple[str, ...] | list[str] | set[str],
    bands: BandDefinition = EEG_BANDS,
    ratings: dict[tuple[int, int], tuple[int, int]] | None = None,
) -> Dataset:
    """Compute the selected feature families for every epoch.

    ratings maps (subject_id, song_id) to (enjoyment, familiarity); epochs with
    no entry get zeros in those meta columns.
    """
    selection = tuple(sorted(set(selection)))
    if not selection:
        raise ValueError("feature selection is empty")
    unknown = set(selection) - set(FEATURE_FAMILIES)
    if unknown:
        raise ValueError(
            f"unknown feature families {sorted(unknown)}; "
            f"choose from {FEATURE_FAMILIES}"
        )
    if not epochs:
        raise ValueError("no epochs to featurize")

    rows = []
    names: tuple[str, ...] | None = None
    for pos, epoch in enumerate(epochs):
        per_channel = _channel_features(epoch, selection, bands)
        feature_order = sorted(per_channel)
        epoch_names = tuple(
            f"ch{c}_{fname}"
            for c in range(epoch.n_channels)
            for fname in feature_order
        )
        if names is None:
            names = epoch_names
        elif names != epoch_names:
            raise ValueError(
                f"epoch {pos} produced a different feature layout "
                "(mixed channel counts or lengths?)"
            )
        row = np.concatenate(
            [
                np.array([per_channel[fname][c] for fname in feature_order])
                for c in range(epoch.n_channels)
            ]
        )
        bad = np.nonzero(~np.isfinite(row))[0]
        if bad.size:
            raise ValueError(
                f"non-finite feature value: epoch {pos} "
                f"(song {epoch.song_id}, index {epoch.epoch_index}), "
                f"column {names[bad[0]]}"
            )
        rows.append(row)

    X = np.vstack(rows)
    song_id = np.array([ep.song_id for ep in epochs], dtype=np.int64)
    subject_id = np.array([ep.subject_id for ep in epochs], dtype=np.int64)
    epoch_index = np.array([ep.epoch_index for ep in epochs], dtype=np.int64)
    enjoy = np.zeros(len(epochs), dtype=np.int64)
    familiar = np.zeros(len(epochs), dtype=np.int64)
    if ratings is not None:
        for i, ep in enumerate(epochs):
            if (ep.subject_id, ep.song_id) in ratings:
                enjoy[i], familiar[i] = ratings[(ep.subject_id, ep.song_id)]
    return Dataset(
        X=X,
        feature_names=names,
        labels=song_id.copy(),
        song_id=song_id,
        subject_id=subject_id,
        epoch_index=epoch_index,
        enjoyment=enjoy,
        familiarity=familiar,
    )


def write_dataset_csv(dataset: Dataset, path: str | Path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(list(dataset.feature_names) + list(META_COLUMNS))
        for i in range(dataset.n_rows):
            writer.writerow(
                ["%.17g" % v for v in dataset.X[i]]
                + [
                    int(dataset.song_id[i]),
                    int(dataset.subject_id[i]),
                    int(dataset.epoch_index[i]),
                    int(dataset.enjoyment[i]),
                    int(dataset.familiarity[i]),
                ]
            )


def read_dataset_csv(path: str | Path) -> Dataset:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty dataset file") from None
        if len(header) < len(META_COLUMNS) + 1 or tuple(
            header[-len(META_COLUMNS) :]
        ) != META_COLUMNS:
            raise ValueError(
                f"{path}: header must end with {','.join(META_COLUMNS)}"
            )
        feature_names = tuple(header[: -len(META_COLUMNS)])
        X_rows, meta_rows = [], []
        for row_number, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ValueError(
                    f"{path}: row {row_number}: {len(row)} fields, "
                    f"expected {len(header)}"
                )
            X_rows.append([float(v) for v in row[: len(feature_names)]])
            meta_rows.append([int(v) for v in row[len(feature_names) :]])
    if not X_rows:
        raise ValueError(f"{path}: dataset has no rows")
    X = np.array(X_rows, dtype=np.float64)
    meta = np.array(meta_rows, dtype=np.int64)
    return Dataset(
        X=X,
        feature_names=feature_names,
        labels=meta[:, 0].copy(),
        song_id=meta[:, 0],
        subject_id=meta[:, 1],
        epoch_index=meta[:, 2],
        enjoyment=meta[:, 3],
        familiarity=meta[:, 4],
    )
