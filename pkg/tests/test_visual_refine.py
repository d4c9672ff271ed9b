import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import shift_scan
from recipealign.corpus_io import ClipLabel, DetectorTrack, Provenance
from recipealign.visual_refine import (
    DetectorMatch,
    frame_score,
    match_detectors,
    overlapping_frames,
    refine_clip,
    refine_interval,
    segment_score,
    shift_order,
)

ONE = DetectorMatch("x", frozenset({0}))


def _track(col, fps=1.0, names=("x",)):
    return DetectorTrack("v", fps, names, np.asarray(col, dtype=float).reshape(-1, len(names)))


def test_match_detectors():
    names = ["scrambled egg", "raw egg", "bacon"]
    assert match_detectors("egg", names).class_indices == {0, 1}
    assert match_detectors("sugar", ["bacon"]).class_indices == frozenset()
    assert match_detectors("the eggs", ["egg"]).class_indices == {0}


def test_frame_score():
    t = DetectorTrack("v", 1.0, ("a", "b"), [[0.2, 0.9]])
    assert frame_score(t, 0, DetectorMatch("", frozenset({0, 1}))) == 0.9
    assert frame_score(t, 0, DetectorMatch("", frozenset())) == 0.0
    assert frame_score(t, 0, DetectorMatch("", frozenset({0}))) == 0.2
    with pytest.raises(IndexError):
        frame_score(t, 1, ONE)


def test_segment_score():
    t = _track([0.4, 0.6, 0.1])
    assert segment_score(t, (0.0, 2.0), ONE) == pytest.approx(0.5)
    assert segment_score(t, (5.0, 7.0), ONE) == 0.0
    assert segment_score(t, (2.0, 3.0), ONE) == pytest.approx(0.1)


def test_overlapping_frames_half_open():
    t = _track([0.0] * 10, fps=2.0)
    assert overlapping_frames(t, 1.0, 2.0) == range(2, 4)
    assert overlapping_frames(t, 1.2, 2.1) == range(2, 5)


def test_shift_order():
    assert shift_order(2) == [0, -1, 1, -2, 2]


def test_flat_track_unchanged():
    t = _track([0.5] * 20)
    assert refine_interval(t, (5.0, 9.0), ONE) == ((5.0, 9.0), 0.5)


def test_empty_match_unchanged():
    t = _track([0.1, 0.9] * 10)
    assert refine_interval(t, (5.0, 9.0), DetectorMatch("", frozenset())) == ((5.0, 9.0), 0.0)


def test_impulse_after_window_shifts_forward():
    col = np.zeros(20)
    col[10:12] = 1.0
    # window [6, 10) touches frames 6..9; high scores 2 s after its end
    (s, e), score = refine_interval(_track(col), (6.0, 10.0), ONE)
    j, best = shift_scan(col, 1.0, 6.0, 10.0, 3.0)
    assert j == 2
    assert (s, e) == (8.0, 12.0) and score == best == 0.5


def test_shift_clipped_to_track():
    col = np.zeros(6)
    col[0] = 1.0
    # shift -3 covers frames 0,1 (mean 0.5) and beats -2 (frames 0..2, mean 1/3)
    (s, e), score = refine_interval(_track(col), (2.0, 5.0), ONE)
    assert (s, e) == (0.0, 2.0) and score == 0.5
    # shift -2 leaves only frame 0 in range (mean 1.0)
    (s, e), score = refine_interval(_track(col), (1.0, 3.0), ONE)
    assert (s, e) == (0.0, 1.0) and score == 1.0


@st.composite
def impulse_cases(draw):
    fps = draw(st.sampled_from([1.0, 2.0, 5.0]))
    n = draw(st.integers(4, 60))
    col = np.zeros(n)
    for _ in range(draw(st.integers(1, 3))):
        lo = draw(st.integers(0, n - 1))
        col[lo : lo + draw(st.integers(1, 4))] = draw(st.floats(0.1, 1.0))
    start_f = draw(st.integers(0, n - 1))
    length_f = draw(st.integers(1, max(1, n - start_f)))
    return fps, col, start_f / fps, (start_f + length_f) / fps


@given(impulse_cases())
@settings(max_examples=200, deadline=None)
def test_impulse_tracks_match_scan_oracle(case):
    fps, col, start, end = case
    (s, e), score = refine_interval(_track(col, fps), (start, end), ONE)
    j, best = shift_scan(col, fps, start, end, 3.0)
    assert score == pytest.approx(best, abs=1e-12)
    if j == 0:
        assert (s, e) == (start, end)
    else:
        duration = len(col) / fps
        assert s == pytest.approx(max(0.0, start + j / fps))
        assert e == pytest.approx(min(duration, end + j / fps))


@given(st.lists(st.floats(0, 1), min_size=2, max_size=40), st.data())
@settings(max_examples=150, deadline=None)
def test_refinement_properties(col, data):
    fps = data.draw(st.sampled_from([1.0, 3.0, 10.0]))
    t = _track(col, fps)
    start = data.draw(st.floats(0, t.duration - 1 / fps))
    end = data.draw(st.floats(start + 1e-3, t.duration))
    (s, e), score = refine_interval(t, (start, end), ONE)
    assert score >= segment_score(t, (start, end), ONE) - 1e-12
    assert abs(s - start) <= 3.0 + 1 / fps + 1e-9
    if (s, e) != (start, end) and s > 0 and e < t.duration:
        assert e - s == pytest.approx(end - start)


def test_refine_clip_sets_visual_score():
    col = np.zeros((20, 2))
    col[12:14, 1] = 1.0
    t = DetectorTrack("v", 1.0, ("bacon", "raw egg"), col)
    clip = ClipLabel("c", "v", "crack", ("eggs",), 8.0, 12.0, Provenance.KEYWORD)
    out = refine_clip(t, clip)
    assert out.visual_score == pytest.approx(0.5)
    assert out.interval == (10.0, 14.0)
    assert out.action == "crack" and out.clip_id == "c"
