"""Data types and on-disk formats for recipes, transcripts, detector tracks,
embedding tables and labeled clip corpora."""

from __future__ import annotations

import enum
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError

RECIPE_KEYWORDS = ("recipe", "steps", "cook", "procedure", "preparation", "method")

_URL_RE = re.compile(r"https?://\S+")
_KEYWORD_RE = re.compile(r"[a-z]+")

CORPUS_FORMAT = "clip-corpus"
CORPUS_VERSION = 1


@dataclass(frozen=True)
class RecipeDocument:
    video_id: str
    description_sentences: tuple[str, ...]
    linked_texts: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.video_id:
            raise ValueError("video_id must be non-empty")
        object.__setattr__(self, "description_sentences", tuple(self.description_sentences))
        object.__setattr__(self, "linked_texts", tuple(self.linked_texts))


@dataclass(frozen=True)
class TimedToken:
    text: str
    start: float
    duration: float = 0.0

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("token text is empty")
        if not (self.start >= 0 and math.isfinite(self.start)):
            raise ValueError(f"token start must be >= 0, got {self.start}")
        if not (self.duration >= 0 and math.isfinite(self.duration)):
            raise ValueError(f"token duration must be >= 0, got {self.duration}")

    @property
    def end(self) -> float:
        return self.start + self.duration


@dataclass(frozen=True)
class Transcript:
    video_id: str
    tokens: tuple[TimedToken, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        for i in range(1, len(self.tokens)):
            if self.tokens[i].start < self.tokens[i - 1].start:
                raise ValueError(f"token {i} starts before token {i - 1}")

    def __len__(self):
        return len(self.tokens)

    @property
    def words(self) -> list[str]:
        return [t.text for t in self.tokens]

    @property
    def duration(self) -> float:
        """End time of the last token (0.5 s past its start if it has no duration)."""
        if not self.tokens:
            return 0.0
        last = self.tokens[-1]
        return last.end if last.duration > 0 else last.start + 0.5


@dataclass(frozen=True, eq=False)
class DetectorTrack:
    video_id: str
    fps: float
    class_names: tuple[str, ...]
    scores: np.ndarray  # [num_frames, num_classes]

    def __post_init__(self):
        if not (self.fps > 0 and math.isfinite(self.fps)):
            raise ValueError("fps must be positive")
        object.__setattr__(self, "class_names", tuple(self.class_names))
        scores = np.array(self.scores, dtype=float).reshape(-1, len(self.class_names))
        if scores.size and (scores.min() < 0 or scores.max() > 1):
            raise ValueError("detector scores must lie in [0, 1]")
        scores.setflags(write=False)
        object.__setattr__(self, "scores", scores)

    def __eq__(self, other):
        if not isinstance(other, DetectorTrack):
            return NotImplemented
        return (
            self.video_id == other.video_id
            and self.fps == other.fps
            and self.class_names == other.class_names
            and np.array_equal(self.scores, other.scores)
        )

    @property
    def num_frames(self) -> int:
        return self.scores.shape[0]

    @property
    def duration(self) -> float:
        return self.num_frames / self.fps

    def frame_interval(self, f: int) -> tuple[float, float]:
        return f / self.fps, (f + 1) / self.fps


@dataclass(frozen=True, eq=False)
class EmbeddingTable:
    dimension: int
    entries: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.dimension <= 0:
            raise ValueError("dimension must be positive")
        folded = {}
        for word, vec in self.entries.items():
            v = np.asarray(vec, dtype=float)
            if v.shape != (self.dimension,):
                raise ValueError(f"vector for {word!r} has shape {v.shape}")
            v.setflags(write=False)
            folded[word.casefold()] = v
        object.__setattr__(self, "entries", folded)

    def get(self, word: str) -> np.ndarray | None:
        return self.entries.get(word.casefold())

    def __contains__(self, word: str) -> bool:
        return word.casefold() in self.entries

    def __len__(self):
        return len(self.entries)

    def __eq__(self, other):
        if not isinstance(other, EmbeddingTable):
            return NotImplemented
        return (
            self.dimension == other.dimension
            and self.entries.keys() == other.entries.keys()
            and all(np.array_equal(v, other.entries[k]) for k, v in self.entries.items())
        )


class Provenance(str, enum.Enum):
    KEYWORD = "Keyword"
    HMM = "HMM"
    HYBRID = "Hybrid"
    HYBRID_FALLBACK = "HybridFallback"


@dataclass(frozen=True)
class ClipLabel:
    """One labeled video clip. ``visual_score`` is filled in by refinement."""

    clip_id: str
    video_id: str
    action: str
    objects: tuple[str, ...]
    start: float
    end: float
    provenance: Provenance
    confidence: float | None = None
    visual_score: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "provenance", Provenance(self.provenance))
        if not self.end > self.start:
            raise ValueError(f"clip {self.clip_id}: end {self.end} <= start {self.start}")

    @property
    def interval(self) -> tuple[float, float]:
        return self.start, self.end

    @property
    def length(self) -> float:
        return self.end - self.start

    def to_dict(self) -> dict:
        return {
            "clip_id": self.clip_id,
            "video_id": self.video_id,
            "action": self.action,
            "objects": list(self.objects),
            "start": self.start,
            "end": self.end,
            "provenance": self.provenance.value,
            "confidence": self.confidence,
            "visual_score": self.visual_score,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClipLabel":
        return cls(
            clip_id=d["clip_id"],
            video_id=d["video_id"],
            action=d["action"],
            objects=tuple(d["objects"]),
            start=float(d["start"]),
            end=float(d["end"]),
            provenance=Provenance(d["provenance"]),
            confidence=None if d.get("confidence") is None else float(d["confidence"]),
            visual_score=None if d.get("visual_score") is None else float(d["visual_score"]),
        )


@dataclass(frozen=True)
class ClipCorpus:
    clips: tuple[ClipLabel, ...] = ()
    index: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        clips = tuple(self.clips)
        object.__setattr__(self, "clips", clips)
        seen = set()
        index: dict[tuple[str, str], list[str]] = {}
        for clip in clips:
            if clip.clip_id in seen:
                raise ValueError(f"duplicate clip id {clip.clip_id!r}")
            seen.add(clip.clip_id)
            for obj in clip.objects:
                index.setdefault((clip.action, obj), []).append(clip.clip_id)
        object.__setattr__(self, "index", {k: tuple(v) for k, v in index.items()})

    def __len__(self):
        return len(self.clips)

    def __iter__(self):
        return iter(self.clips)

    def lookup(self, action: str, obj: str) -> list[ClipLabel]:
        ids = set(self.index.get((action, obj), ()))
        return [c for c in self.clips if c.clip_id in ids]


def extract_recipe_links(description_sentences) -> list[str]:
    """URLs mentioned in sentences that also contain a recipe keyword.

    Keyword matching is on whole, case-folded words; URLs themselves do not
    count as keyword carriers.
    """
    found: list[str] = []
    seen = set()
    for sentence in description_sentences:
        without_urls = _URL_RE.sub(" ", sentence)
        words = set(_KEYWORD_RE.findall(without_urls.casefold()))
        if not words.intersection(RECIPE_KEYWORDS):
            continue
        for url in _URL_RE.findall(sentence):
            if url not in seen:
                seen.add(url)
                found.append(url)
    return found


def split_sentences(text: str) -> list[str]:
    """Naive sentence splitter for linked recipe pages and descriptions."""
    parts = re.split(r"(?<=[.!?])\s+|\n+", text)
    return [p.strip() for p in parts if p.strip()]


def load_recipe_document(path) -> RecipeDocument:
    """Read a recipe document (JSON with video_id, description, linked texts)."""
    path = Path(path)
    try:
        d = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise FormatError(f"invalid JSON: {e.msg}", path, e.lineno) from None
    try:
        description = d["description_sentences"]
        if isinstance(description, str):
            description = split_sentences(description)
        return RecipeDocument(
            video_id=d.get("video_id") or path.stem,
            description_sentences=tuple(description),
            linked_texts=tuple(d.get("linked_texts", ())),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"bad recipe document: {e}", path) from None


def parse_transcript(lines, video_id: str = "", path=None) -> Transcript:
    tokens: list[TimedToken] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise FormatError(f"expected 3 tab-separated fields, got {len(parts)}", path, lineno)
        try:
            start, duration = float(parts[0]), float(parts[1])
            tok = TimedToken(parts[2], start, duration)
        except ValueError as e:
            raise FormatError(str(e), path, lineno) from None
        if tokens and tok.start < tokens[-1].start:
            raise FormatError(
                f"token {len(tokens)} starts at {tok.start} before previous token "
                f"at {tokens[-1].start}",
                path,
                lineno,
            )
        tokens.append(tok)
    if not tokens:
        raise FormatError("empty transcript", path)
    return Transcript(video_id, tuple(tokens))


def load_transcript(path, video_id: str | None = None) -> Transcript:
    """Read ``start<TAB>duration<TAB>token`` lines."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        return parse_transcript(fh, video_id or path.stem, path)


def format_transcript(transcript: Transcript) -> str:
    return "".join(f"{t.start!r}\t{t.duration!r}\t{t.text}\n" for t in transcript.tokens)


def write_transcript(transcript: Transcript, path) -> None:
    Path(path).write_text(format_transcript(transcript), encoding="utf-8")


_HEADER_RE = re.compile(r"^fps=(\S+)\s+classes=(.*)$")


def load_detector_track(path, video_id: str | None = None) -> DetectorTrack:
    """Read a detector track: header ``fps=<f> classes=<a,b,...>`` then one row per frame."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise FormatError("missing header", path, 1)
    m = _HEADER_RE.match(lines[0].strip())
    if not m:
        raise FormatError("header must be 'fps=<f> classes=<c1,c2,...>'", path, 1)
    try:
        fps = float(m.group(1))
    except ValueError:
        raise FormatError(f"bad fps {m.group(1)!r}", path, 1) from None
    if not (fps > 0 and math.isfinite(fps)):
        raise FormatError("fps must be positive", path, 1)
    classes = tuple(c.strip() for c in m.group(2).split(",") if c.strip())
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            row = [float(x) for x in line.split()]
        except ValueError:
            raise FormatError("non-numeric score", path, lineno) from None
        if len(row) != len(classes):
            raise FormatError(f"row has {len(row)} scores, header declares {len(classes)}", path, lineno)
        if any(not (0.0 <= x <= 1.0) for x in row):
            raise FormatError("score outside [0, 1]", path, lineno)
        rows.append(row)
    scores = np.array(rows, dtype=float).reshape(len(rows), len(classes))
    return DetectorTrack(video_id or path.stem, fps, classes, scores)


def write_detector_track(track: DetectorTrack, path) -> None:
    lines = [f"fps={track.fps!r} classes={','.join(track.class_names)}"]
    lines += [" ".join(repr(float(x)) for x in row) for row in track.scores]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_embeddings(path) -> EmbeddingTable:
    """Read ``word v1 ... vd`` lines."""
    path = Path(path)
    entries: dict[str, np.ndarray] = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) < 2:
                raise FormatError("word without vector", path, lineno)
            try:
                vec = np.array([float(x) for x in parts[1:]])
            except ValueError:
                raise FormatError("non-numeric vector component", path, lineno) from None
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise FormatError(f"vector has {len(vec)} components, expected {dim}", path, lineno)
            entries[parts[0]] = vec
    if dim is None:
        raise FormatError("empty embedding file", path)
    return EmbeddingTable(dim, entries)


def write_embeddings(table: EmbeddingTable, path) -> None:
    lines = [w + " " + " ".join(repr(float(x)) for x in v) for w, v in table.entries.items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def dump_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=False) + "\n", encoding="utf-8")


def read_versioned_json(path, kind: str, version: int) -> dict:
    """Load a JSON document carrying ``format``/``version`` keys and check both."""
    path = Path(path)
    try:
        d = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise FormatError(f"invalid or truncated {kind} file: {e.msg}", path, e.lineno) from None
    if not isinstance(d, dict) or d.get("format") != kind:
        raise FormatError(f"not a {kind} file", path)
    if d.get("version") != version:
        raise FormatError(f"unsupported {kind} version {d.get('version')!r}", path)
    return d


def write_clip_corpus(corpus: ClipCorpus, path) -> None:
    dump_json(
        {
            "format": CORPUS_FORMAT,
            "version": CORPUS_VERSION,
            "clips": [c.to_dict() for c in corpus.clips],
        },
        path,
    )


def read_clip_corpus(path) -> ClipCorpus:
    d = read_versioned_json(path, CORPUS_FORMAT, CORPUS_VERSION)
    try:
        return ClipCorpus(tuple(ClipLabel.from_dict(c) for c in d["clips"]))
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"bad clip record: {e}", path) from None
