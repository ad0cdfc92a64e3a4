"""Core domain types: session recordings, event markers, epochs, channel masks.

All types are immutable after construction (frozen dataclasses; numpy arrays
are flagged read-only), so they can be shared freely across workers.
Signal values are microvolts, held as float64 in memory.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Marker kinds, in the order they occur in the listening protocol.
MARKER_KINDS = (
    "silence_start",
    "beep_single",
    "song_start",
    "song_end",
    "beep_double",
    "rating_screen",
)

# Kinds that must carry a song_id; all others must not.
SONG_MARKER_KINDS = frozenset({"song_start", "song_end"})

EXPECTED_SAMPLE_RATES = (250, 1000)

BASELINE_SECONDS = 10


class PipelineError(Exception):
    """A pipeline stage could not produce a valid result."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class EventMarker:
    """A protocol event pinned to a sample index.

    song_id is required for song_start/song_end and forbidden otherwise.
    """

    kind: str
    sample_index: int
    song_id: int | None = None

    def __post_init__(self):
        if self.kind not in MARKER_KINDS:
            raise ValueError(f"unknown marker kind {self.kind!r}")
        if self.sample_index < 0:
            raise ValueError(f"negative sample_index {self.sample_index}")
        if self.kind in SONG_MARKER_KINDS:
            if self.song_id is None:
                raise ValueError(f"{self.kind} marker requires a song_id")
        elif self.song_id is not None:
            raise ValueError(f"{self.kind} marker must not carry a song_id")


@dataclass(frozen=True)
class SessionRecording:
    """One subject's full multichannel recording with markers and ratings.

    samples: channels x time, microvolts.
    ratings: song_id -> (enjoyment 1-5, familiarity 1-5).
    """

    subject_id: int
    sample_rate_hz: int
    samples: np.ndarray
    markers: tuple[EventMarker, ...]
    ratings: dict[int, tuple[int, int]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "samples", _freeze(self.samples))
        object.__setattr__(self, "markers", tuple(self.markers))
        if self.samples.ndim != 2:
            raise ValueError(
                f"samples must be 2-D channels x time, got shape {self.samples.shape}"
            )

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_seconds(self) -> float:
        return self.n_samples / self.sample_rate_hz

    def song_ids(self) -> list[int]:
        """Song ids with a song_start marker, in temporal order."""
        return [m.song_id for m in self.markers if m.kind == "song_start"]


@dataclass(frozen=True)
class Epoch:
    """A labeled channels x samples window plus its 10 s pre-song baseline."""

    subject_id: int
    song_id: int
    epoch_index: int
    data: np.ndarray
    baseline: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        object.__setattr__(self, "data", _freeze(self.data))
        object.__setattr__(self, "baseline", _freeze(self.baseline))
        if self.data.ndim != 2 or self.baseline.ndim != 2:
            raise ValueError("data and baseline must be 2-D channels x samples")
        if self.baseline.shape[0] != self.data.shape[0]:
            raise ValueError("baseline channel count differs from data")
        expected = BASELINE_SECONDS * self.sample_rate_hz
        if self.baseline.shape[1] != expected:
            raise ValueError(
                f"baseline must cover {BASELINE_SECONDS} s "
                f"({expected} samples), got {self.baseline.shape[1]}"
            )

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    @property
    def duration_seconds(self) -> float:
        return self.n_samples / self.sample_rate_hz

    def with_data(self, new_data: np.ndarray) -> Epoch:
        """New epoch with replaced data, same identity and baseline."""
        return Epoch(
            subject_id=self.subject_id,
            song_id=self.song_id,
            epoch_index=self.epoch_index,
            data=new_data,
            baseline=self.baseline,
            sample_rate_hz=self.sample_rate_hz,
        )


REJECTION_MEASURES = ("probability", "kurtosis", "spectrum")


@dataclass(frozen=True)
class ChannelMask:
    """Per-channel keep/reject flags with the measures that tripped."""

    good: np.ndarray
    reasons: dict[int, frozenset[str]] = field(default_factory=dict)

    def __post_init__(self):
        good = np.asarray(self.good, dtype=bool).copy()
        good.flags.writeable = False
        object.__setattr__(self, "good", good)
        for ch, why in self.reasons.items():
            bad = set(why) - set(REJECTION_MEASURES)
            if bad:
                raise ValueError(f"unknown rejection reasons {bad} for channel {ch}")

    @property
    def n_good(self) -> int:
        return int(self.good.sum())

    @property
    def n_channels(self) -> int:
        return self.good.shape[0]

    @classmethod
    def all_good(cls, n_channels: int) -> ChannelMask:
        return cls(good=np.ones(n_channels, dtype=bool))


def validate_session(session: SessionRecording) -> list[str]:
    """Collect every invariant violation; an empty list means the session is valid.

    Violations are data, not failures: nothing raises here.
    """
    violations: list[str] = []
    if session.sample_rate_hz not in EXPECTED_SAMPLE_RATES:
        violations.append(
            f"unusual sample rate {session.sample_rate_hz} Hz "
            f"(expected one of {EXPECTED_SAMPLE_RATES})"
        )
    n = session.n_samples
    prev = -1
    for i, m in enumerate(session.markers):
        if m.sample_index >= n:
            violations.append(
                f"marker out of range: {m.kind} at sample {m.sample_index} "
                f">= recording length {n}"
            )
        if m.sample_index < prev:
            violations.append(
                f"markers not sorted: index {i} ({m.kind} at {m.sample_index}) "
                f"precedes an earlier marker at {prev}"
            )
        prev = max(prev, m.sample_index)

    started = {m.song_id for m in session.markers if m.kind == "song_start"}
    rated = set(session.ratings)
    for song in sorted(started - rated):
        violations.append(f"missing rating for song {song}")
    for song in sorted(rated - started):
        violations.append(f"rating for song {song} which has no song_start marker")
    for song, (enjoy, familiar) in sorted(session.ratings.items()):
        if not (1 <= enjoy <= 5) or not (1 <= familiar <= 5):
            violations.append(
                f"rating for song {song} out of 1-5 range: "
                f"enjoyment={enjoy}, familiarity={familiar}"
            )
    return violations


def extract_segment(
    session: SessionRecording, start_sample: int, end_sample: int
) -> np.ndarray:
    """Copy out samples[:, start:end]. The copy never aliases the session."""
    n = session.n_samples
    if not (0 <= start_sample < end_sample <= n):
        raise IndexError(
            f"segment [{start_sample}, {end_sample}) out of range "
            f"for recording of {n} samples"
        )
    return session.samples[:, start_sample:end_sample].copy()
