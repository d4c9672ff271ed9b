"""Affordance model P(object | action) and clip confidence.

Action/object co-occurrence counts are turned into a TF-IDF matrix with
actions as documents, smoothed by a truncated SVD, and each row of the
low-rank matrix is exponentiated and normalized.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .corpus_io import ClipLabel, dump_json, read_versioned_json
from .errors import FormatError, PipelineError

MODEL_FORMAT = "affordance-model"
MODEL_VERSION = 1
DEFAULT_RANK = 50
DEFAULT_WEIGHTS = (0.5, 0.5)


@dataclass(frozen=True, eq=False)
class CooccurrenceCounts:
    actions: tuple[str, ...]
    objects: tuple[str, ...]
    counts: np.ndarray  # [A, O]


@dataclass(frozen=True, eq=False)
class AffordanceModel:
    actions: tuple[str, ...]
    objects: tuple[str, ...]
    lowrank_matrix: np.ndarray
    probs: np.ndarray
    rank: int

    def __eq__(self, other):
        if not isinstance(other, AffordanceModel):
            return NotImplemented
        return (
            self.actions == other.actions
            and self.objects == other.objects
            and self.rank == other.rank
            and np.array_equal(self.lowrank_matrix, other.lowrank_matrix)
            and np.array_equal(self.probs, other.probs)
        )

    def prob(self, action: str, obj: str) -> float | None:
        """P(obj | action), or None when either label is unknown."""
        try:
            a = self.actions.index(action)
            o = self.objects.index(obj)
        except ValueError:
            return None
        return float(self.probs[a, o])

    def clip_affordance(self, clip: ClipLabel) -> float:
        """Best affordance over the clip's objects; 0.0 if none is known."""
        vals = [p for o in clip.objects if (p := self.prob(clip.action, o)) is not None]
        return max(vals, default=0.0)


def build_counts(clips) -> CooccurrenceCounts:
    """Count, for every (action, object), the clips labeled with that pair."""
    pairs = [(c.action, o) for c in clips if c.action for o in dict.fromkeys(c.objects)]
    if not pairs:
        raise PipelineError("no clips carry both an action and an object")
    actions = tuple(sorted({a for a, _ in pairs}))
    objects = tuple(sorted({o for _, o in pairs}))
    ai = {a: i for i, a in enumerate(actions)}
    oi = {o: i for i, o in enumerate(objects)}
    counts = np.zeros((len(actions), len(objects)), dtype=np.int64)
    for a, o in pairs:
        counts[ai[a], oi[o]] += 1
    return CooccurrenceCounts(actions, objects, counts)


def idf_matrix(counts) -> np.ndarray:
    """tf(a, o) * idf(o), tf normalized per action, idf = log((1+A) / (1+df(o))) + 1."""
    c = np.asarray(counts.counts if isinstance(counts, CooccurrenceCounts) else counts, dtype=float)
    A = c.shape[0]
    row = c.sum(axis=1, keepdims=True)
    tf = np.divide(c, row, out=np.zeros_like(c), where=row > 0)
    df = (c > 0).sum(axis=0)
    idf = np.log((1.0 + A) / (1.0 + df)) + 1.0
    return tf * idf


def lowrank(matrix, r: int) -> np.ndarray:
    """Best rank-r approximation in Frobenius norm (truncated SVD)."""
    m = np.asarray(matrix, dtype=float)
    if not 1 <= r <= min(m.shape):
        raise ValueError(f"rank {r} outside [1, {min(m.shape)}]")
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    return (u[:, :r] * s[:r]) @ vt[:r]


def affordance_probs(lowrank_matrix) -> np.ndarray:
    """Row-wise softmax."""
    m = np.asarray(lowrank_matrix, dtype=float)
    e = np.exp(m - m.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def train_affordance(clips, rank: int | None = None) -> AffordanceModel:
    counts = build_counts(clips)
    M = idf_matrix(counts)
    full = min(M.shape)
    r = min(DEFAULT_RANK, full) if rank is None else min(rank, full)
    L = lowrank(M, r)
    return AffordanceModel(counts.actions, counts.objects, L, affordance_probs(L), r)


def clip_confidence(visual_score: float, affordance: float, weights=DEFAULT_WEIGHTS) -> float:
    wv, wa = weights
    if wv < 0 or wa < 0 or not math.isclose(wv + wa, 1.0, abs_tol=1e-9):
        raise ValueError("weights must be non-negative and sum to 1")
    return wv * visual_score + wa * affordance


def score_clips(clips, model: AffordanceModel, weights=DEFAULT_WEIGHTS) -> list[ClipLabel]:
    """Attach confidence to every clip; a clip never refined counts as visual score 0."""
    out = []
    for c in clips:
        visual = c.visual_score if c.visual_score is not None else 0.0
        out.append(replace(c, confidence=clip_confidence(visual, model.clip_affordance(c), weights)))
    return out


def filter_by_confidence(clips, threshold: float):
    """Clips with confidence >= threshold, most confident first; plus the retained fraction."""
    clips = list(clips)
    kept = [c for c in clips if c.confidence is not None and c.confidence >= threshold]
    kept.sort(key=lambda c: (-c.confidence, c.clip_id))
    return kept, (len(kept) / len(clips) if clips else 0.0)


def save_model(model: AffordanceModel, path) -> None:
    dump_json(
        {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "rank": model.rank,
            "actions": list(model.actions),
            "objects": list(model.objects),
            "lowrank": model.lowrank_matrix.tolist(),
            "probs": model.probs.tolist(),
        },
        path,
    )


def load_model(path) -> AffordanceModel:
    d = read_versioned_json(path, MODEL_FORMAT, MODEL_VERSION)
    try:
        actions, objects = tuple(d["actions"]), tuple(d["objects"])
        shape = (len(actions), len(objects))
        L = np.array(d["lowrank"], dtype=float).reshape(shape)
        P = np.array(d["probs"], dtype=float).reshape(shape)
        return AffordanceModel(actions, objects, L, P, int(d["rank"]))
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"bad affordance model: {e}", path) from None


def write_heatmap_csv(model: AffordanceModel, path) -> None:
    """P(object | action) as CSV, actions as rows."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["action", *model.objects])
        for a, row in zip(model.actions, model.probs):
            w.writerow([a, *(repr(float(x)) for x in row)])
