"""Shift clip windows toward the frames where their objects are visible."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .corpus_io import ClipLabel, DetectorTrack
from .text import content_words

MAX_SHIFT = 3.0
_EPS = 1e-9
_SCORE_TOL = 1e-12


@dataclass(frozen=True)
class DetectorMatch:
    object: str
    class_indices: frozenset[int]


def match_detectors(obj: str, class_names) -> DetectorMatch:
    """Classes sharing a lemmatized, non-stopword token with the object name."""
    want = set(content_words(obj))
    hits = frozenset(i for i, name in enumerate(class_names) if want.intersection(content_words(name)))
    return DetectorMatch(obj, hits)


def frame_score(track: DetectorTrack, frame_index: int, match: DetectorMatch) -> float:
    if not 0 <= frame_index < track.num_frames:
        raise IndexError(f"frame {frame_index} outside track of {track.num_frames} frames")
    if not match.class_indices:
        return 0.0
    row = track.scores[frame_index]
    return float(max(row[i] for i in match.class_indices))


def overlapping_frames(track: DetectorTrack, start: float, end: float) -> range:
    """Frames f whose span [f/fps, (f+1)/fps) intersects [start, end)."""
    first = max(0, math.floor(start * track.fps + _EPS))
    last = min(track.num_frames - 1, math.ceil(end * track.fps - _EPS) - 1)
    return range(first, last + 1)


def segment_score(track: DetectorTrack, interval, match: DetectorMatch) -> float:
    """Mean frame score over the frames the interval touches; 0.0 if none."""
    frames = overlapping_frames(track, *interval)
    if len(frames) == 0 or not match.class_indices:
        return 0.0
    return sum(frame_score(track, f, match) for f in frames) / len(frames)


def shift_order(n: int) -> list[int]:
    """Frame shifts in preference order: 0, -1, +1, -2, +2, ..."""
    order = [0]
    for j in range(1, n + 1):
        order += [-j, j]
    return order


def refine_interval(track: DetectorTrack, interval, match: DetectorMatch, max_shift: float = MAX_SHIFT):
    """Best translation of the window by whole frames, up to ``max_shift`` seconds either way.

    Returns ``(interval, score)``. Ties go to the smallest shift, then the
    negative one. A shifted window is clipped to the track; an unshifted one
    is returned as is.
    """
    start, end = interval
    n = int(math.floor(max_shift * track.fps + _EPS))
    best_j, best = 0, None
    scored = [(j, segment_score(track, (start + j / track.fps, end + j / track.fps), match)) for j in shift_order(n)]
    top = max(s for _, s in scored)
    for j, s in scored:
        if s >= top - _SCORE_TOL:
            best_j, best = j, s
            break
    if best_j == 0:
        return (start, end), best
    delta = best_j / track.fps
    return (max(0.0, start + delta), min(track.duration, end + delta)), best


def refine_clip(track: DetectorTrack, clip: ClipLabel, max_shift: float = MAX_SHIFT) -> ClipLabel:
    """Refine a clip's interval using the union of detectors matching any of its objects."""
    indices = frozenset().union(*(match_detectors(o, track.class_names).class_indices for o in clip.objects))
    match = DetectorMatch(" ".join(clip.objects), indices)
    (start, end), score = refine_interval(track, clip.interval, match, max_shift)
    return replace(clip, start=start, end=end, visual_score=score)
