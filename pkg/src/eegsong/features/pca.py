"""PCA projection for visualization.

Columns are standardized to zero mean and unit variance first; zero-variance
columns are dropped with a warning. Component signs are fixed so the largest-
magnitude loading is positive, which keeps repeat runs byte-identical.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PcaProjection:
    coordinates: np.ndarray  # rows x dims
    explained_variance_ratio: np.ndarray  # per kept component
    eigenvalues: np.ndarray  # variance along each projected axis
    dropped_columns: tuple[int, ...] = ()


def pca_project(data, dims: int = 2) -> PcaProjection:
    """Project rows onto the top `dims` principal axes of the standardized
    feature covariance. `data` is a feature matrix or anything with an `.X`."""
    X = np.asarray(getattr(data, "X", data), dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("expected a 2-D feature matrix")
    n, d = X.shape
    if n < dims:
        raise ValueError(f"need at least {dims} rows for a {dims}-D projection")

    std = X.std(axis=0, ddof=0)
    # constant columns can land at std ~ 1e-15 instead of exactly 0 through
    # cancellation, so the cut is relative to the column's magnitude
    tiny = 1e-12 * np.maximum(1.0, np.abs(X.mean(axis=0)))
    keep = std > tiny
    dropped = tuple(int(i) for i in np.nonzero(~keep)[0])
    if dropped:
        warnings.warn(
            f"dropping {len(dropped)} zero-variance feature column(s)",
            stacklevel=2,
        )
    Xs = (X[:, keep] - X[:, keep].mean(axis=0)) / std[keep]
    if Xs.shape[1] < dims:
        raise ValueError(
            f"only {Xs.shape[1]} non-constant columns for a {dims}-D projection"
        )

    cov = (Xs.T @ Xs) / max(n - 1, 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:dims]
    components = eigvecs[:, order]
    # sign convention: largest-|loading| entry positive
    for j in range(components.shape[1]):
        k = np.argmax(np.abs(components[:, j]))
        if components[k, j] < 0:
            components[:, j] = -components[:, j]

    coords = Xs @ components
    total = eigvals.sum()
    ratio = eigvals[order] / total if total > 0 else np.zeros(dims)
    return PcaProjection(
        coordinates=coords,
        explained_variance_ratio=ratio,
        eigenvalues=eigvals[order],
        dropped_columns=dropped,
    )
