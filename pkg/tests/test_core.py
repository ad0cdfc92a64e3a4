"""Domain types: markers, sessions, epochs, masks, validation, extraction."""

import numpy as np
import pytest

from eegsong import EventMarker, PipelineError, SessionRecording, extract_segment, validate_session
from eegsong.core import BASELINE_SECONDS, ChannelMask, Epoch, MARKER_KINDS


def make_session(n_channels=4, n_samples=1000, markers=(), ratings=None, fs=250):
    rng = np.random.default_rng(7)
    return SessionRecording(
        subject_id=1,
        sample_rate_hz=fs,
        samples=rng.normal(size=(n_channels, n_samples)),
        markers=tuple(markers),
        ratings=dict(ratings or {}),
    )


class TestEventMarker:
    def test_song_markers_require_song_id(self):
        with pytest.raises(ValueError, match="requires a song_id"):
            EventMarker(kind="song_start", sample_index=0)

    def test_non_song_markers_refuse_song_id(self):
        with pytest.raises(ValueError, match="must not carry"):
            EventMarker(kind="beep_single", sample_index=0, song_id=3)

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown marker kind"):
            EventMarker(kind="coffee_break", sample_index=0)

    def test_negative_index(self):
        with pytest.raises(ValueError, match="negative"):
            EventMarker(kind="beep_single", sample_index=-1)

    def test_all_kinds_constructible(self):
        for kind in MARKER_KINDS:
            song = 1 if kind in ("song_start", "song_end") else None
            EventMarker(kind=kind, sample_index=5, song_id=song)


class TestSessionRecording:
    def test_samples_are_read_only(self):
        s = make_session()
        with pytest.raises(ValueError):
            s.samples[0, 0] = 99.0

    def test_shape_properties(self):
        s = make_session(n_channels=6, n_samples=500)
        assert s.n_channels == 6
        assert s.n_samples == 500
        assert s.duration_seconds == 2.0

    def test_rejects_1d_samples(self):
        with pytest.raises(ValueError, match="2-D"):
            SessionRecording(1, 250, np.zeros(100), (), {})

    def test_song_ids_in_temporal_order(self):
        markers = [
            EventMarker("song_start", 10, song_id=2),
            EventMarker("song_end", 20, song_id=2),
            EventMarker("song_start", 30, song_id=1),
            EventMarker("song_end", 40, song_id=1),
        ]
        s = make_session(markers=markers, ratings={1: (3, 3), 2: (4, 4)})
        assert s.song_ids() == [2, 1]


class TestEpoch:
    def test_baseline_length_enforced(self):
        fs = 250
        with pytest.raises(ValueError, match="baseline must cover 10 s"):
            Epoch(1, 1, 0, np.zeros((4, fs * 10)), np.zeros((4, fs * 3)), fs)

    def test_baseline_channel_count_enforced(self):
        fs = 250
        with pytest.raises(ValueError, match="channel count"):
            Epoch(1, 1, 0, np.zeros((4, fs * 10)), np.zeros((3, fs * BASELINE_SECONDS)), fs)

    def test_with_data_keeps_identity(self):
        fs = 250
        e = Epoch(2, 5, 3, np.ones((2, fs * 10)), np.zeros((2, fs * BASELINE_SECONDS)), fs)
        e2 = e.with_data(np.full((2, fs * 10), 7.0))
        assert (e2.subject_id, e2.song_id, e2.epoch_index) == (2, 5, 3)
        assert np.all(e2.data == 7.0)
        assert e2.baseline is e.baseline


class TestChannelMask:
    def test_reason_vocabulary_enforced(self):
        with pytest.raises(ValueError, match="unknown rejection reasons"):
            ChannelMask(good=np.ones(4, dtype=bool), reasons={0: frozenset({"vibes"})})

    def test_counts(self):
        m = ChannelMask(good=np.array([True, False, True]))
        assert m.n_good == 2
        assert m.n_channels == 3

    def test_all_good_factory(self):
        assert ChannelMask.all_good(5).n_good == 5


class TestValidateSession:
    def test_well_formed_synthetic_session_is_clean(self, tiny_session):
        assert validate_session(tiny_session) == []

    def test_marker_out_of_range(self):
        s = make_session(n_samples=100, markers=[EventMarker("beep_single", 101)])
        msgs = validate_session(s)
        assert any("marker out of range" in v for v in msgs)

    def test_unsorted_markers(self):
        markers = [EventMarker("beep_single", 50), EventMarker("beep_double", 10)]
        msgs = validate_session(make_session(markers=markers))
        assert any("not sorted" in v for v in msgs)

    def test_missing_rating_reported_per_song(self):
        markers = [
            EventMarker("song_start", 10, song_id=1),
            EventMarker("song_end", 20, song_id=1),
            EventMarker("song_start", 30, song_id=2),
            EventMarker("song_end", 40, song_id=2),
        ]
        msgs = validate_session(make_session(markers=markers, ratings={1: (3, 3)}))
        assert "missing rating for song 2" in msgs

    def test_orphan_rating(self):
        msgs = validate_session(make_session(ratings={9: (2, 2)}))
        assert any("no song_start marker" in v for v in msgs)

    def test_rating_out_of_range(self):
        markers = [
            EventMarker("song_start", 10, song_id=1),
            EventMarker("song_end", 20, song_id=1),
        ]
        msgs = validate_session(make_session(markers=markers, ratings={1: (6, 3)}))
        assert any("out of 1-5 range" in v for v in msgs)

    def test_odd_sample_rate_flagged_not_fatal(self):
        msgs = validate_session(make_session(fs=300))
        assert any("unusual sample rate" in v for v in msgs)


class TestExtractSegment:
    def test_full_range_is_identity(self):
        s = make_session(n_samples=200)
        seg = extract_segment(s, 0, 200)
        assert np.array_equal(seg, s.samples)

    def test_single_column(self):
        s = make_session(n_samples=200)
        assert extract_segment(s, 199, 200).shape == (4, 1)

    def test_out_of_range(self):
        s = make_session(n_samples=100)
        with pytest.raises(IndexError, match="out of range"):
            extract_segment(s, 0, 101)
        with pytest.raises(IndexError):
            extract_segment(s, 50, 50)

    def test_copy_never_aliases(self):
        s = make_session(n_samples=100)
        before = s.samples.copy()
        seg = extract_segment(s, 10, 20)
        seg[:] = 1e9
        assert np.array_equal(s.samples, before)

    def test_song_segment_column_count_at_250hz(self, tiny_session, tiny_config):
        # song_end - song_start spans exactly song_seconds * fs columns
        start = next(m.sample_index for m in tiny_session.markers if m.kind == "song_start")
        expect = tiny_config.song_seconds * tiny_config.sample_rate_hz
        seg = extract_segment(tiny_session, start, start + expect)
        assert seg.shape[1] == expect

    def test_nonoverlapping_windows_tile_the_segment(self, tiny_session):
        """Concatenating consecutive 10 s windows reproduces the segment."""
        fs = tiny_session.sample_rate_hz
        start = next(m.sample_index for m in tiny_session.markers if m.kind == "song_start")
        end = next(m.sample_index for m in tiny_session.markers if m.kind == "song_end")
        whole = extract_segment(tiny_session, start, end)
        win = 10 * fs
        parts = [extract_segment(tiny_session, s0, s0 + win) for s0 in range(start, end, win)]
        assert np.array_equal(np.concatenate(parts, axis=1), whole)
