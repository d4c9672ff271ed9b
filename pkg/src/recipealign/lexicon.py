"""Word similarity from embedding distance, with an edit-distance fallback for OOV words."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from rapidfuzz.distance import Levenshtein

from .corpus_io import EmbeddingTable


class OOVMode(str, enum.Enum):
    EDIT_DISTANCE = "EditDistanceFallback"
    ZERO = "ZeroSimilarity"


@dataclass(frozen=True)
class SimilarityConfig:
    oov_mode: OOVMode = OOVMode.EDIT_DISTANCE
    distance_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "oov_mode", OOVMode(self.oov_mode))
        if not (self.distance_scale > 0 and math.isfinite(self.distance_scale)):
            raise ValueError("distance_scale must be a positive finite number")


DEFAULT_CONFIG = SimilarityConfig()


def word_similarity(a: str, b: str, table: EmbeddingTable | None, cfg: SimilarityConfig = DEFAULT_CONFIG) -> float:
    """Similarity in [0, 1]: ``1 / (1 + d / scale)`` for embedded words.

    A word missing from the table falls back to normalized Levenshtein
    similarity (or 0, depending on ``cfg.oov_mode``).
    """
    a, b = a.casefold(), b.casefold()
    if a == b:
        return 1.0
    va = table.get(a) if table is not None else None
    vb = table.get(b) if table is not None else None
    if va is not None and vb is not None:
        d = float(np.linalg.norm(va - vb))
        return 1.0 / (1.0 + d / cfg.distance_scale)
    if cfg.oov_mode is OOVMode.ZERO:
        return 0.0
    # min/max ordering keeps the result bit-identical under argument swap
    lo, hi = sorted((a, b))
    return float(Levenshtein.normalized_similarity(lo, hi))


def max_similarity(y: str, words, table: EmbeddingTable | None, cfg: SimilarityConfig = DEFAULT_CONFIG) -> float:
    """Best similarity of ``y`` to any word of ``words``; 0.0 for an empty set."""
    best = 0.0
    for x in words:
        s = word_similarity(y, x, table, cfg)
        if s > best:
            best = s
            if best == 1.0:
                break
    return best
