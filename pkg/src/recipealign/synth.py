"""Synthetic recipe/transcript pairs with known alignments, and alignment metrics."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .corpus_io import TimedToken, Transcript
from .hmm_aligner import AlignmentPath
from .recipe_parser import ParsedRecipe, RecipeStep
from .text import filler_words

TOKEN_SECONDS = 0.5

_ONSETS = "b d f g k l m n p r s t v z".split()
_NUCLEI = "a e i o u".split()


@dataclass(frozen=True)
class NoiseSpec:
    word_error_rate: float = 0.0
    background_pad: int = 0  # filler tokens spread over gaps before, between and after steps
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.word_error_rate <= 1.0:
            raise ValueError("word_error_rate must lie in [0, 1]")
        if self.background_pad < 0:
            raise ValueError("background_pad must be >= 0")


@dataclass(frozen=True)
class SynthCase:
    recipe: ParsedRecipe
    transcript: Transcript
    truth: AlignmentPath
    noise: NoiseSpec


def pseudo_word(rng: random.Random, syllables: int = 3) -> str:
    return "".join(rng.choice(_ONSETS) + rng.choice(_NUCLEI) for _ in range(syllables))


def random_recipe(K: int, words_per_step: int, seed: int = 0) -> ParsedRecipe:
    """A recipe whose steps use disjoint invented words (no overlap with the filler lexicon)."""
    rng = random.Random(seed)
    used = set(filler_words())
    steps = []
    for k in range(1, K + 1):
        words = []
        while len(words) < words_per_step:
            w = pseudo_word(rng)
            if w not in used:
                used.add(w)
                words.append(w)
        steps.append(
            RecipeStep(k, "mix", (words[0],), " ".join(["mix"] + words), frozenset(words))
        )
    return ParsedRecipe((), tuple(steps))


def synth_generate(recipe: ParsedRecipe, noise: NoiseSpec, seed: int | None = None, video_id: str = "synth") -> SynthCase:
    """Speak each step's words in order with filler runs in the gaps.

    Step k's content words are emitted once each (foreground, truth (k, 0)).
    Filler tokens (truth B=1) carry the step that was last spoken, or step 1
    before anything was spoken. Each foreground token is independently
    replaced by a filler word with probability ``word_error_rate``; its truth
    state stays foreground.
    """
    rng = random.Random(noise.seed if seed is None else seed)
    fillers = filler_words()
    K = recipe.K
    gaps = [0] * (K + 1)
    for _ in range(noise.background_pad):
        gaps[rng.randrange(K + 1)] += 1

    words: list[str] = []
    states: list[tuple[int, int]] = []

    def pad(n: int, r: int):
        for _ in range(n):
            words.append(rng.choice(fillers))
            states.append((r, 1))

    pad(gaps[0], 1)
    for k, step in enumerate(recipe.steps, start=1):
        spoken = sorted(step.words)
        rng.shuffle(spoken)
        for w in spoken:
            if rng.random() < noise.word_error_rate:
                w = rng.choice(fillers)
            words.append(w)
            states.append((k, 0))
        pad(gaps[k], k)

    tokens = tuple(TimedToken(w, i * TOKEN_SECONDS, TOKEN_SECONDS) for i, w in enumerate(words))
    return SynthCase(recipe, Transcript(video_id, tokens), AlignmentPath(tuple(states)), noise)


def _hulls(path: AlignmentPath) -> dict[int, tuple[int, int]]:
    hulls: dict[int, tuple[int, int]] = {}
    for t, (r, b) in enumerate(path.states):
        if b == 0:
            lo, hi = hulls.get(r, (t, t + 1))
            hulls[r] = (min(lo, t), max(hi, t + 1))
    return hulls


def _iou(a, b) -> float:
    if a is None or b is None:
        return 0.0
    inter = max(0, min(a[1], b[1]) - max(a[0], b[0]))
    union = max(a[1], b[1]) - min(a[0], b[0])
    return inter / union if union else 1.0


def evaluate_alignment(predicted: AlignmentPath, truth: AlignmentPath, K: int | None = None) -> dict:
    """Token accuracy on (R, B), per-step hull IoU in token-index space, and coverage.

    IoU is macro-averaged over steps that appear in either path; a step
    present in only one of them scores 0.
    """
    if len(predicted) != len(truth):
        raise ValueError(f"length mismatch: predicted {len(predicted)}, truth {len(truth)}")
    T = len(truth)
    correct = sum(p == t for p, t in zip(predicted.states, truth.states))
    if K is None:
        K = max((r for r, _ in truth.states), default=0)
    ph, th = _hulls(predicted), _hulls(truth)
    steps = sorted(set(ph) | set(th))
    step_iou = {k: _iou(ph.get(k), th.get(k)) for k in steps}
    return {
        "token_accuracy": correct / T if T else 1.0,
        "mean_iou": sum(step_iou.values()) / len(step_iou) if step_iou else 1.0,
        "step_iou": step_iou,
        "coverage": len(ph) / K if K else 0.0,
    }
