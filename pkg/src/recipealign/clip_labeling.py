"""Clip labeling by keyword spotting, HMM segments, and the hybrid of the two."""

from __future__ import annotations

from dataclasses import dataclass

from .corpus_io import ClipLabel, Provenance, Transcript
from .hmm_aligner import AlignedSegment, Alignment, coverage
from .recipe_parser import POS, AnnotatedToken, tag_words
from .text import cooking_verbs

WINDOW_BEFORE = 2.0
WINDOW_AFTER = 6.0
OBJECT_WINDOW = 5
MIN_COVERAGE = 0.5


@dataclass(frozen=True)
class KeywordHit:
    action: str
    token_index: int
    time: float


def tag_transcript(transcript: Transcript, whitelist=None) -> list[AnnotatedToken]:
    """POS-tag the transcript as one unpunctuated sentence."""
    return tag_words(transcript.words, whitelist)


def spot_keywords(transcript: Transcript, tagged_tokens=None, whitelist=None) -> list[KeywordHit]:
    """One hit per token tagged Verb whose lemma is whitelisted."""
    whitelist = cooking_verbs() if whitelist is None else frozenset(w.casefold() for w in whitelist)
    if not whitelist:
        return []
    if tagged_tokens is None:
        tagged_tokens = tag_transcript(transcript, whitelist)
    hits = []
    for i, (tok, tag) in enumerate(zip(transcript.tokens, tagged_tokens)):
        if tag.pos is POS.VERB and tag.lemma.casefold() in whitelist:
            hits.append(KeywordHit(tag.lemma.casefold(), i, tok.start))
    return hits


def keyword_window(hit_time: float, video_duration: float) -> tuple[float, float]:
    """[t - 2, t + 6] clipped to [0, video_duration]."""
    if not video_duration > 0:
        raise ValueError("video_duration must be positive")
    return max(0.0, hit_time - WINDOW_BEFORE), min(video_duration, hit_time + WINDOW_AFTER)


def asr_objects(transcript: Transcript, hit: KeywordHit, tagged_tokens) -> list[str]:
    """Noun tokens among the five tokens after the hit, in order, duplicates kept."""
    lo = hit.token_index + 1
    hi = min(len(tagged_tokens), hit.token_index + 1 + OBJECT_WINDOW)
    return [tagged_tokens[i].text.casefold() for i in range(lo, hi) if tagged_tokens[i].pos is POS.NOUN]


def _clip_id(video_id: str, kind: str, n: int) -> str:
    return f"{video_id}/{kind}/{n:05d}"


def label_keyword(
    transcript: Transcript,
    whitelist=None,
    duration: float | None = None,
    provenance: Provenance = Provenance.KEYWORD,
) -> list[ClipLabel]:
    """An 8 s clip per keyword hit, objects taken from nearby nouns in the transcript."""
    duration = transcript.duration if duration is None else duration
    whitelist = cooking_verbs() if whitelist is None else frozenset(w.casefold() for w in whitelist)
    tagged = tag_transcript(transcript, whitelist)
    clips = []
    kind = "kw" if provenance is Provenance.KEYWORD else "hyb"
    for n, hit in enumerate(spot_keywords(transcript, tagged, whitelist)):
        start, end = keyword_window(hit.time, duration)
        if end <= start:
            continue
        clips.append(
            ClipLabel(
                _clip_id(transcript.video_id, kind, n),
                transcript.video_id,
                hit.action,
                tuple(asr_objects(transcript, hit, tagged)),
                start,
                end,
                provenance,
            )
        )
    return clips


def segment_for_time(segments, t: float) -> AlignedSegment | None:
    """Segment containing ``t``; else the nearest one ending before it; else the nearest after."""
    segments = sorted(segments, key=lambda s: (s.start, s.end))
    for seg in segments:
        if seg.start <= t <= seg.end:
            return seg
    before = [s for s in segments if s.end <= t]
    if before:
        return max(before, key=lambda s: (s.end, s.start))
    after = [s for s in segments if s.start > t]
    return after[0] if after else None


def label_hybrid(
    transcript: Transcript,
    whitelist=None,
    duration: float | None = None,
    segments=(),
    K: int = 0,
    min_coverage: float = MIN_COVERAGE,
) -> list[ClipLabel]:
    """Keyword-spotted actions with objects from the aligned recipe step.

    Falls back to plain keyword spotting (provenance HybridFallback) unless
    at least ``min_coverage`` of the K steps are aligned.
    """
    segments = list(segments)
    if coverage(segments, K) < min_coverage:
        return label_keyword(transcript, whitelist, duration, Provenance.HYBRID_FALLBACK)
    duration = transcript.duration if duration is None else duration
    whitelist = cooking_verbs() if whitelist is None else frozenset(w.casefold() for w in whitelist)
    tagged = tag_transcript(transcript, whitelist)
    clips = []
    for n, hit in enumerate(spot_keywords(transcript, tagged, whitelist)):
        start, end = keyword_window(hit.time, duration)
        if end <= start:
            continue
        seg = segment_for_time(segments, hit.time)
        objects = seg.entities if seg is not None else ()
        clips.append(
            ClipLabel(
                _clip_id(transcript.video_id, "hyb", n),
                transcript.video_id,
                hit.action,
                tuple(objects),
                start,
                end,
                Provenance.HYBRID,
            )
        )
    return clips


def label_hmm(alignment: Alignment) -> list[ClipLabel]:
    """One clip per foreground segment, labeled with its recipe step's action and entities."""
    clips = []
    for n, seg in enumerate(alignment.segments):
        if seg.action is None or not seg.end > seg.start:
            continue
        clips.append(
            ClipLabel(
                _clip_id(alignment.video_id, "hmm", n),
                alignment.video_id,
                seg.action,
                tuple(seg.entities),
                seg.start,
                seg.end,
                Provenance.HMM,
            )
        )
    return clips
