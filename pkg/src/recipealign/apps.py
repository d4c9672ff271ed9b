"""Applications over aligned and labeled videos: within-video search and recipe illustration."""

from __future__ import annotations

from dataclasses import dataclass

from .corpus_io import ClipCorpus, ClipLabel, DetectorTrack, Provenance, dump_json, read_versioned_json
from .errors import FormatError
from .hmm_aligner import Alignment
from .text import content_words
from .visual_refine import DetectorMatch, frame_score, match_detectors, overlapping_frames

PLAN_FORMAT = "illustration-plan"
PLAN_VERSION = 1

# used only when clips carry no confidence
PROVENANCE_RANK = {
    Provenance.HYBRID: 0,
    Provenance.HMM: 1,
    Provenance.HYBRID_FALLBACK: 2,
    Provenance.KEYWORD: 3,
}


@dataclass(frozen=True)
class SearchQuery:
    action: str | None = None
    object: str | None = None
    max_results: int = 10

    def __post_init__(self):
        if not (self.action or self.object):
            raise ValueError("query needs an action or an object")


@dataclass(frozen=True)
class SearchResult:
    clip: ClipLabel
    rank: int

    @property
    def seek_time(self) -> float:
        return self.clip.start


def _matches(clip: ClipLabel, query: SearchQuery) -> bool:
    if query.action and clip.action.casefold() != query.action.casefold():
        return False
    if query.object:
        want = set(content_words(query.object))
        have = {w for o in clip.objects for w in content_words(o)}
        if not want & have:
            return False
    return True


def _order(clip: ClipLabel):
    if clip.confidence is not None:
        return (0, -clip.confidence, clip.clip_id)
    return (1, PROVENANCE_RANK[clip.provenance], clip.clip_id)


def search(corpus: ClipCorpus, query: SearchQuery) -> list[SearchResult]:
    """Clips matching the query, most confident first, each with a seek time."""
    hits = sorted((c for c in corpus if _matches(c, query)), key=_order)
    return [SearchResult(c, i) for i, c in enumerate(hits[: query.max_results], start=1)]


def format_results(results) -> str:
    lines = ["rank\tvideo_id\tseek_time\tconfidence\taction\tobjects"]
    for r in results:
        conf = "-" if r.clip.confidence is None else f"{r.clip.confidence:.4f}"
        lines.append(
            f"{r.rank}\t{r.clip.video_id}\t{r.seek_time:.2f}\t{conf}\t{r.clip.action}\t{', '.join(r.clip.objects)}"
        )
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class StepIllustration:
    step_index: int
    action: str | None
    text: str
    interval: tuple[float, float] | None
    keyframe_time: float | None


@dataclass(frozen=True)
class IllustrationPlan:
    video_id: str
    steps: tuple[StepIllustration, ...]


def pick_keyframe(hull, track: DetectorTrack | None, match: DetectorMatch | None) -> float:
    """Time of the best-matching frame inside the hull, or the hull midpoint.

    The frame time is the frame centre, clamped into the hull. Ties go to
    the earliest frame.
    """
    start, end = hull
    mid = (start + end) / 2
    if track is None or match is None or not match.class_indices:
        return mid
    frames = overlapping_frames(track, start, end)
    if len(frames) == 0:
        return mid
    best = max(frames, key=lambda f: (frame_score(track, f, match), -f))
    return min(max((best + 0.5) / track.fps, start), end)


def plan_illustration(alignment: Alignment, track: DetectorTrack | None = None) -> IllustrationPlan:
    hulls = alignment.hulls
    out = []
    for step in alignment.recipe.steps:
        hull = hulls.get(step.index)
        if hull is None:
            out.append(StepIllustration(step.index, step.action, step.source_text, None, None))
            continue
        match = None
        if track is not None:
            idx = frozenset().union(*(match_detectors(e, track.class_names).class_indices for e in step.entities))
            match = DetectorMatch(" ".join(step.entities), idx)
        out.append(StepIllustration(step.index, step.action, step.source_text, hull, pick_keyframe(hull, track, match)))
    return IllustrationPlan(alignment.video_id, tuple(out))


def write_plan(plan: IllustrationPlan, path) -> None:
    dump_json(
        {
            "format": PLAN_FORMAT,
            "version": PLAN_VERSION,
            "video_id": plan.video_id,
            "steps": [
                {
                    "step": s.step_index,
                    "action": s.action,
                    "text": s.text,
                    "interval": list(s.interval) if s.interval else None,
                    "keyframe_time": s.keyframe_time,
                }
                for s in plan.steps
            ],
        },
        path,
    )


def read_plan(path) -> IllustrationPlan:
    d = read_versioned_json(path, PLAN_FORMAT, PLAN_VERSION)
    try:
        steps = tuple(
            StepIllustration(
                int(s["step"]),
                s["action"],
                s["text"],
                tuple(s["interval"]) if s["interval"] else None,
                s["keyframe_time"],
            )
            for s in d["steps"]
        )
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"bad illustration plan: {e}", path) from None
    return IllustrationPlan(d["video_id"], steps)
