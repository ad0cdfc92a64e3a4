"""Detrended fluctuation analysis.

Mean-center, integrate to a profile, split the profile into non-overlapping
boxes per box size, linearly detrend each box, and take the RMS residual
F(n). The scaling exponent alpha is the least-squares slope of log2 F(n)
against log2 n; dim = 3 - alpha is the fractal-dimension reading of the same
fit. White noise gives alpha near 0.5, 1/f noise near 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_N_BOX_SIZES = 12
MIN_BOX_SIZE = 4

# F(n) at or below this is numerically indistinguishable from a flat profile;
# the log-log fit would be meaningless.
DEGENERATE_FLUCTUATION = 1e-10


class DegenerateFluctuationsError(ValueError):
    """Raised when some F(n) is effectively zero ("degenerate fluctuations")."""


@dataclass(frozen=True)
class DfaResult:
    alpha: float
    intercept: float
    fluctuations: tuple[tuple[int, float], ...]  # (box size n, F(n))

    @property
    def dim(self) -> float:
        return 3.0 - self.alpha


def default_box_sizes(n_samples: int) -> np.ndarray:
    """12 log-spaced integer box sizes from 4 to n/4, deduplicated."""
    largest = n_samples // 4
    if largest < MIN_BOX_SIZE:
        raise ValueError(
            f"signal of {n_samples} samples too short for DFA "
            f"(needs >= {4 * MIN_BOX_SIZE})"
        )
    sizes = np.unique(
        np.round(
            np.exp(np.linspace(np.log(MIN_BOX_SIZE), np.log(largest), DEFAULT_N_BOX_SIZES))
        ).astype(int)
    )
    return sizes


def dfa(signal: np.ndarray, box_sizes: np.ndarray | None = None) -> DfaResult:
    """DFA of a single channel; see module docstring for the recipe."""
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("dfa takes a single channel (1-D signal)")
    n = x.shape[0]
    if box_sizes is None:
        box_sizes = default_box_sizes(n)
    else:
        box_sizes = np.unique(np.asarray(box_sizes, dtype=int))
        box_sizes = box_sizes[(box_sizes >= MIN_BOX_SIZE) & (box_sizes <= n // 4)]
    if len(box_sizes) < 3:
        raise ValueError(
            f"need at least 3 usable box sizes in [4, {n // 4}], "
            f"got {len(box_sizes)}"
        )

    profile = np.cumsum(x - x.mean())
    fluctuations = []
    for size in box_sizes:
        n_boxes = n // size
        boxes = profile[: n_boxes * size].reshape(n_boxes, size)
        # least-squares line per box against t = 0..size-1
        t = np.arange(size, dtype=np.float64)
        t_centered = t - t.mean()
        denom = (t_centered**2).sum()
        slopes = (boxes * t_centered).sum(axis=1) / denom
        intercepts = boxes.mean(axis=1)
        residuals = boxes - (intercepts[:, None] + slopes[:, None] * t_centered)
        f_n = np.sqrt((residuals**2).mean())
        fluctuations.append((int(size), float(f_n)))

    f_values = np.array([f for _, f in fluctuations])
    if np.any(f_values <= DEGENERATE_FLUCTUATION):
        raise DegenerateFluctuationsError(
            "degenerate fluctuations: F(n) is effectively zero for some box "
            "size (flat profile after detrending)"
        )

    log_n = np.log2(box_sizes.astype(np.float64))
    log_f = np.log2(f_values)
    slope, intercept = np.polyfit(log_n, log_f, 1)
    return DfaResult(
        alpha=float(slope),
        intercept=float(intercept),
        fluctuations=tuple(fluctuations),
    )
