"""Protocol-faithful synthetic session generation and the on-disk session format.

Timeline per subject: lead silence, then each song followed by a short silence
(the rating period), except the last song which runs straight into the trail
silence. Markers are emitted at every transition.

Signal model per channel: 1/f background noise, a 50 Hz mains sinusoid, and
during songs a song-specific 5-band noise signature whose per-band amplitudes
are a permutation-derived profile scaled by class_separation and by a per-
(subject, song) gain. Enjoyment ratings are the within-subject quantile of
that gain, so enjoyment is positively (Kendall) associated with signature
strength by construction. A few channels are replaced outright by
high-variance noise so bad-channel rejection has something to find.

All randomness comes from numpy's PCG64 generator seeded from
(config.seed, subject_id), so identical inputs produce bit-identical sessions.

On-disk layout (per subject): ``subject_<id>/manifest.txt`` (plain-text
key: value header plus rating lines), ``subject_<id>/samples.f32``
(channel-major little-endian float32), ``subject_<id>/events.csv``.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import EventMarker, SessionRecording

# Canonical EEG band edges, [low, high) Hz. Shared with the feature modules.
BAND_EDGES = (
    ("delta", 1.0, 4.0),
    ("theta", 4.0, 8.0),
    ("alpha", 8.0, 13.0),
    ("beta", 13.0, 30.0),
    ("gamma", 30.0, 45.0),
)

# Baseline amplitude of the 1/f background, microvolts RMS per channel.
BACKGROUND_RMS_UV = 10.0

# The background's 1/f shaping stops below this frequency: infra-slow drift
# would make same-song epochs (adjacent in time) resemble each other even with
# no planted signature, which is a label leak, and real acquisition filters
# remove it anyway.
BACKGROUND_HIGHPASS_HZ = 0.5

# Signature RMS at class_separation = 1 and unit gain, microvolts.
SIGNATURE_RMS_UV = 6.0

# Bad channel k is white noise at BACKGROUND_RMS_UV * BAD_CHANNEL_SCALE_BASE * 4**k.
# Amplitudes are graded so the worst offender clears a z-score threshold of 5
# even when several planted channels deflate each other's z-scores, yet stay
# small enough that they do not drown the common average when re-referencing
# runs before rejection.
BAD_CHANNEL_SCALE_BASE = 4.0

_SIGNATURE_BASE_PROFILE = np.linspace(0.2, 1.4, 5)


class SessionFormatError(ValueError):
    """On-disk session data is missing, truncated, or malformed."""


@dataclass(frozen=True)
class GeneratorConfig:
    n_subjects: int = 20
    n_songs: int = 12
    song_seconds: int = 120
    inter_song_silence_seconds: int = 10
    lead_silence_seconds: int = 120
    trail_silence_seconds: int = 120
    sample_rate_hz: int = 250
    n_channels: int = 32
    line_noise_amplitude_uv: float = 5.0
    n_bad_channels: int = 2
    class_separation: float = 1.0
    seed: int = 0

    def __post_init__(self):
        for name in (
            "n_subjects",
            "n_songs",
            "song_seconds",
            "inter_song_silence_seconds",
            "lead_silence_seconds",
            "trail_silence_seconds",
            "sample_rate_hz",
            "n_channels",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.class_separation < 0:
            raise ValueError("class_separation must be >= 0")
        if self.n_bad_channels < 0:
            raise ValueError("n_bad_channels must be >= 0")
        if self.n_bad_channels >= self.n_channels:
            raise ValueError("n_bad_channels must leave at least one clean channel")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    @property
    def session_seconds(self) -> int:
        return (
            self.lead_silence_seconds
            + self.n_songs * self.song_seconds
            + (self.n_songs - 1) * self.inter_song_silence_seconds
            + self.trail_silence_seconds
        )

    @property
    def session_samples(self) -> int:
        return self.session_seconds * self.sample_rate_hz


def song_band_profile(song_id: int, n_songs: int) -> np.ndarray:
    """Distinct 5-band amplitude profile for a song: a fixed permutation of a
    base ramp, spread evenly through the 120 permutations of 5 elements."""
    perms = list(itertools.permutations(range(5)))
    idx = ((song_id - 1) * (len(perms) // max(n_songs, 1))) % len(perms)
    return _SIGNATURE_BASE_PROFILE[list(perms[idx])]


def _pink_noise(
    rng: np.random.Generator,
    n_channels: int,
    n_samples: int,
    sample_rate_hz: float,
) -> np.ndarray:
    """1/f noise via spectral shaping: white noise, scale DFT bins by 1/sqrt(f),
    invert. Bins below BACKGROUND_HIGHPASS_HZ are zeroed so distant windows of
    the same recording are uncorrelated. Normalized to unit RMS per channel."""
    white = rng.standard_normal((n_channels, n_samples))
    spec = np.fft.rfft(white, axis=1)
    k = np.arange(spec.shape[1], dtype=np.float64)
    k[0] = 1.0
    spec /= np.sqrt(k)
    freqs = np.fft.rfftfreq(n_samples, d=1.0 / sample_rate_hz)
    spec[:, freqs < BACKGROUND_HIGHPASS_HZ] = 0.0
    x = np.fft.irfft(spec, n=n_samples, axis=1)
    return x / x.std(axis=1, keepdims=True)


def _band_envelope(freqs: np.ndarray, profile: np.ndarray) -> np.ndarray:
    env = np.zeros_like(freqs)
    for (name, lo, hi), amp in zip(BAND_EDGES, profile):
        env[(freqs >= lo) & (freqs < hi)] = amp
    return env


def _signature_noise(
    rng: np.random.Generator,
    n_channels: int,
    n_samples: int,
    sample_rate_hz: int,
    profile: np.ndarray,
) -> np.ndarray:
    """Band-limited noise whose per-band amplitudes follow the profile,
    an independent realization per channel, unit RMS per channel."""
    white = rng.standard_normal((n_channels, n_samples))
    spec = np.fft.rfft(white, axis=1)
    freqs = np.fft.rfftfreq(n_samples, d=1.0 / sample_rate_hz)
    spec *= _band_envelope(freqs, profile)
    x = np.fft.irfft(spec, n=n_samples, axis=1)
    std = x.std(axis=1, keepdims=True)
    std[std == 0] = 1.0
    return x / std


def generate_session(config: GeneratorConfig, subject_id: int) -> SessionRecording:
    """Generate one subject's session. Pure in (config, subject_id)."""
    if subject_id < 0:
        raise ValueError("subject_id must be non-negative")
    fs = config.sample_rate_hz
    n_total = config.session_samples
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, subject_id]))

    # Draw order is frozen: changing it silently changes every session.
    channel_gains = rng.uniform(0.8, 1.2, config.n_channels)
    bad_channels = np.sort(
        rng.choice(config.n_channels, size=config.n_bad_channels, replace=False)
    )
    song_gains = rng.uniform(0.5, 1.5, config.n_songs)
    familiarity = rng.integers(1, 6, config.n_songs)

    samples = BACKGROUND_RMS_UV * _pink_noise(rng, config.n_channels, n_total, fs)

    t = np.arange(n_total) / fs
    line_phases = rng.uniform(0.0, 2.0 * np.pi, config.n_channels)
    samples += config.line_noise_amplitude_uv * np.sin(
        2.0 * np.pi * 50.0 * t[None, :] + line_phases[:, None]
    )

    markers: list[EventMarker] = [
        EventMarker("beep_single", 0),
        EventMarker("silence_start", 0),
    ]
    song_len = config.song_seconds * fs
    gap_len = config.inter_song_silence_seconds * fs
    pos = config.lead_silence_seconds * fs
    for s in range(1, config.n_songs + 1):
        sig = _signature_noise(
            rng, config.n_channels, song_len, fs, song_band_profile(s, config.n_songs)
        )
        amp = (
            SIGNATURE_RMS_UV
            * config.class_separation
            * song_gains[s - 1]
            * channel_gains[:, None]
        )
        samples[:, pos : pos + song_len] += amp * sig

        end = pos + song_len
        markers.append(EventMarker("song_start", pos, song_id=s))
        markers.append(EventMarker("song_end", end, song_id=s))
        markers.append(EventMarker("beep_double", end))
        markers.append(EventMarker("rating_screen", end))
        markers.append(EventMarker("silence_start", end))
        pos = end + (gap_len if s < config.n_songs else 0)

    for k, ch in enumerate(bad_channels):
        scale = BACKGROUND_RMS_UV * BAD_CHANNEL_SCALE_BASE * 4.0**k
        samples[ch] = scale * rng.standard_normal(n_total)

    # Enjoyment = within-subject quantile of the signature gain (1-5).
    order = np.argsort(song_gains)
    rank = np.empty(config.n_songs, dtype=np.int64)
    rank[order] = np.arange(config.n_songs)
    enjoyment = 1 + (rank * 5) // config.n_songs

    ratings = {
        s: (int(enjoyment[s - 1]), int(familiarity[s - 1]))
        for s in range(1, config.n_songs + 1)
    }
    return SessionRecording(
        subject_id=subject_id,
        sample_rate_hz=fs,
        samples=samples,
        markers=tuple(markers),
        ratings=ratings,
    )


# ---------------------------------------------------------------------------
# On-disk format
# ---------------------------------------------------------------------------

MANIFEST_NAME = "manifest.txt"
SAMPLES_NAME = "samples.f32"
EVENTS_NAME = "events.csv"


def session_dir_name(subject_id: int) -> str:
    return f"subject_{subject_id}"


def write_session(session: SessionRecording, directory: str | Path) -> Path:
    """Write manifest + raw float32 samples + events CSV; returns manifest path."""
    root = Path(directory) / session_dir_name(session.subject_id)
    root.mkdir(parents=True, exist_ok=True)

    lines = [
        f"subject_id: {session.subject_id}",
        f"sample_rate_hz: {session.sample_rate_hz}",
        f"n_channels: {session.n_channels}",
        f"n_samples: {session.n_samples}",
    ]
    for song in sorted(session.ratings):
        enjoy, familiar = session.ratings[song]
        lines.append(f"rating,{song},{enjoy},{familiar}")
    manifest = root / MANIFEST_NAME
    manifest.write_text("\n".join(lines) + "\n")

    (root / SAMPLES_NAME).write_bytes(
        session.samples.astype("<f4").tobytes(order="C")
    )

    with open(root / EVENTS_NAME, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["sample_index", "kind", "song_id"])
        for m in session.markers:
            writer.writerow(
                [m.sample_index, m.kind, "" if m.song_id is None else m.song_id]
            )
    return manifest


def _parse_manifest(path: Path) -> tuple[dict[str, int], dict[int, tuple[int, int]]]:
    header: dict[str, int] = {}
    ratings: dict[int, tuple[int, int]] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("rating,"):
            parts = line.split(",")
            if len(parts) != 4:
                raise SessionFormatError(
                    f"{path}:{lineno}: rating line needs 4 fields, got {len(parts)}"
                )
            try:
                song, enjoy, familiar = (int(p) for p in parts[1:])
            except ValueError as e:
                raise SessionFormatError(f"{path}:{lineno}: {e}") from None
            ratings[song] = (enjoy, familiar)
        elif ":" in line:
            key, _, value = line.partition(":")
            try:
                header[key.strip()] = int(value)
            except ValueError:
                raise SessionFormatError(
                    f"{path}:{lineno}: non-integer value for {key.strip()!r}"
                ) from None
        else:
            raise SessionFormatError(f"{path}:{lineno}: unparseable line {line!r}")
    for key in ("subject_id", "sample_rate_hz", "n_channels", "n_samples"):
        if key not in header:
            raise SessionFormatError(f"{path}: missing manifest key {key!r}")
    return header, ratings


def _parse_events(path: Path) -> tuple[EventMarker, ...]:
    markers: list[EventMarker] = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            head = next(reader)
        except StopIteration:
            raise SessionFormatError(f"{path}: empty events file") from None
        if head != ["sample_index", "kind", "song_id"]:
            raise SessionFormatError(f"{path}: bad events header {head!r}")
        for row_number, row in enumerate(reader, start=2):
            if len(row) != 3:
                raise SessionFormatError(
                    f"{path}: row {row_number}: expected 3 fields, got {len(row)}"
                )
            idx_str, kind, song_str = row
            try:
                idx = int(idx_str)
                song = int(song_str) if song_str != "" else None
            except ValueError as e:
                raise SessionFormatError(f"{path}: row {row_number}: {e}") from None
            try:
                markers.append(EventMarker(kind=kind, sample_index=idx, song_id=song))
            except ValueError as e:
                raise SessionFormatError(f"{path}: row {row_number}: {e}") from None
    return tuple(markers)


def read_session(manifest_path: str | Path) -> SessionRecording:
    """Read a session written by write_session.

    Round-trips exactly except that samples pass through float32 quantization.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise FileNotFoundError(manifest_path)
    root = manifest_path.parent
    header, ratings = _parse_manifest(manifest_path)

    bin_path = root / SAMPLES_NAME
    if not bin_path.exists():
        raise FileNotFoundError(bin_path)
    expected = header["n_channels"] * header["n_samples"] * 4
    blob = bin_path.read_bytes()
    if len(blob) != expected:
        raise SessionFormatError(
            f"{bin_path}: length mismatch: expected {expected} bytes "
            f"({header['n_channels']} channels x {header['n_samples']} samples "
            f"x 4), got {len(blob)}"
        )
    samples = (
        np.frombuffer(blob, dtype="<f4")
        .reshape(header["n_channels"], header["n_samples"])
        .astype(np.float64)
    )

    events_path = root / EVENTS_NAME
    if not events_path.exists():
        raise FileNotFoundError(events_path)
    markers = _parse_events(events_path)

    return SessionRecording(
        subject_id=header["subject_id"],
        sample_rate_hz=header["sample_rate_hz"],
        samples=samples,
        markers=markers,
        ratings=ratings,
    )
