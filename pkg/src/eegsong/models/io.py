"""Trained-model serialization as a versioned .npz archive."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .common import TrainedModel

FORMAT_VERSION = 1
_PARAM_PREFIX = "param_"


def save_model(model: TrainedModel, path: str | Path) -> Path:
    path = Path(path)
    payload: dict[str, np.ndarray] = {
        "format_version": np.asarray(FORMAT_VERSION),
        "kind": np.asarray(model.kind),
        "classes": model.classes,
        "feature_mean": model.feature_mean,
        "feature_std": model.feature_std,
    }
    if model.cluster_labels is not None:
        payload["cluster_labels"] = model.cluster_labels
    for name, value in model.params.items():
        payload[_PARAM_PREFIX + name] = np.asarray(value)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        np.savez(fh, **payload)
    return path


def load_model(path: str | Path) -> TrainedModel:
    path = Path(path)
    with np.load(path, allow_pickle=False) as archive:
        version = int(archive["format_version"])
        if version != FORMAT_VERSION:
            raise ValueError(
                f"{path}: unsupported model format version {version}"
            )
        params = {
            key[len(_PARAM_PREFIX) :]: archive[key]
            for key in archive.files
            if key.startswith(_PARAM_PREFIX)
        }
        cluster_labels = (
            archive["cluster_labels"] if "cluster_labels" in archive.files else None
        )
        return TrainedModel(
            kind=str(archive["kind"]),
            classes=archive["classes"],
            feature_mean=archive["feature_mean"],
            feature_std=archive["feature_std"],
            params=params,
            cluster_labels=cluster_labels,
        )
