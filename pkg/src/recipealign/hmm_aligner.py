"""Factored HMM aligning recipe steps to transcript tokens.

Hidden state at token t is (R, B): R is the recipe step (1..K, never moving
backwards, advancing by at most one per token) and B says whether the token
is background chatter (B=1) or talk about step R (B=0). The two chains are
flattened into 2K states and decoded with Viterbi.

Foreground emission for word y under step k is a softmax over the transcript
vocabulary of ``max_similarity(y, X(k)) / tau``; background emission is the
add-one-smoothed unigram distribution of the transcript.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .corpus_io import EmbeddingTable, TimedToken, Transcript, dump_json, read_versioned_json
from .errors import FormatError, PipelineError
from .lexicon import DEFAULT_CONFIG, SimilarityConfig, max_similarity
from .recipe_parser import ParsedRecipe, recipe_from_dict, recipe_to_dict

DEFAULT_GAMMA = 0.7
DEFAULT_TAU = 0.2
ALIGNMENT_FORMAT = "alignment"
ALIGNMENT_VERSION = 1

NEG_INF = -math.inf
TIE_TOL = 1e-9


def _log(p: float) -> float:
    return math.log(p) if p > 0 else NEG_INF


@dataclass(frozen=True, eq=False)
class AlignmentHMM:
    K: int
    T: int
    alpha: float
    gamma: float
    background_dist: dict  # word -> probability
    emission_cache: np.ndarray  # [T, K] foreground log p(y_t | step k)
    background_logprob: np.ndarray  # [T] log p_hat(y_t)
    tau: float = DEFAULT_TAU

    def emission(self, t: int, r: int, b: int) -> float:
        """Log emission of token t (0-based) in state (r, b), r 1-based."""
        return float(self.background_logprob[t]) if b else float(self.emission_cache[t, r - 1])


@dataclass(frozen=True)
class AlignmentPath:
    states: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "states", tuple((int(r), int(b)) for r, b in self.states))

    def __len__(self):
        return len(self.states)

    @property
    def R(self) -> list[int]:
        return [r for r, _ in self.states]

    @property
    def B(self) -> list[int]:
        return [b for _, b in self.states]

    def is_valid(self, K: int | None = None) -> bool:
        """R(1) = 1, steps advance by 0 or 1, B in {0, 1}, R within 1..K."""
        if not self.states or self.states[0][0] != 1:
            return False
        prev = 1
        for r, b in self.states:
            if b not in (0, 1) or r - prev not in (0, 1) or (K is not None and r > K):
                return False
            prev = r
        return True


@dataclass(frozen=True)
class AlignedSegment:
    step_index: int
    first: int
    last: int
    start: float
    end: float
    action: str | None = None
    entities: tuple[str, ...] = ()

    @property
    def token_span(self) -> tuple[int, int]:
        return self.first, self.last

    @property
    def time_interval(self) -> tuple[float, float]:
        return self.start, self.end


def emission_table(scores: np.ndarray, tau: float = DEFAULT_TAU) -> np.ndarray:
    """Column-wise log-softmax of ``scores / tau`` over the vocabulary axis.

    ``scores`` is [V, K]; entry [v, k] is the similarity of vocabulary word v
    to step k. Each column of the result exponentiates to a distribution over V.
    """
    z = np.asarray(scores, dtype=float) / tau
    m = z.max(axis=0, keepdims=True)
    lse = m + np.log(np.exp(z - m).sum(axis=0, keepdims=True))
    return z - lse


def _alpha(K: int, T: int) -> float:
    if K > T:
        warnings.warn(f"recipe has more steps ({K}) than transcript tokens ({T}); clamping alpha to 1")
        return 1.0
    return K / T


def model_from_scores(token_ids, scores, gamma: float = DEFAULT_GAMMA, tau: float = DEFAULT_TAU, vocab=None) -> AlignmentHMM:
    """Build the HMM from integer token ids and a [V, K] similarity table.

    Background probabilities are the add-one-smoothed counts of ``token_ids``
    over the V vocabulary entries.
    """
    token_ids = np.asarray(token_ids, dtype=int)
    scores = np.asarray(scores, dtype=float)
    V, K = scores.shape
    T = len(token_ids)
    if K < 1:
        raise PipelineError("recipe has no steps")
    if T < 1:
        raise PipelineError("transcript has no tokens")
    if not 0 < gamma < 1:
        raise ValueError("gamma must lie in (0, 1)")
    counts = np.bincount(token_ids, minlength=V).astype(float)
    bg = (counts + 1.0) / (T + V)
    table = emission_table(scores, tau)
    vocab = list(vocab) if vocab is not None else [str(i) for i in range(V)]
    return AlignmentHMM(
        K=K,
        T=T,
        alpha=_alpha(K, T),
        gamma=float(gamma),
        background_dist=dict(zip(vocab, bg.tolist())),
        emission_cache=table[token_ids],
        background_logprob=np.log(bg)[token_ids],
        tau=float(tau),
    )


def build_model(
    recipe: ParsedRecipe,
    transcript: Transcript,
    gamma: float = DEFAULT_GAMMA,
    lexicon_cfg: SimilarityConfig = DEFAULT_CONFIG,
    embeddings: EmbeddingTable | None = None,
    tau: float = DEFAULT_TAU,
) -> AlignmentHMM:
    if recipe.K < 1:
        raise PipelineError("recipe has no steps")
    if len(transcript) < 1:
        raise PipelineError("transcript has no tokens")
    words = [t.text.casefold() for t in transcript.tokens]
    vocab = sorted(set(words))
    ids = {w: i for i, w in enumerate(vocab)}
    scores = np.array(
        [[max_similarity(v, step.words, embeddings, lexicon_cfg) for step in recipe.steps] for v in vocab]
    )
    return model_from_scores([ids[w] for w in words], scores, gamma, tau, vocab)


def transition_logprob(model: AlignmentHMM, src, dst) -> float:
    """log p((r, b) -> (r', b')) = log pR(r' | r) + log pB(b' | b)."""
    (r, b), (r2, b2) = src, dst
    if r2 == r + 1:
        pr = model.alpha
    elif r2 == r:
        pr = 1.0 - model.alpha
    else:
        pr = 0.0
    pb = model.gamma if b2 == b else 1.0 - model.gamma
    return _log(pr) + _log(pb)


def _transition_matrix(model: AlignmentHMM) -> np.ndarray:
    S = 2 * model.K
    A = np.full((S, S), NEG_INF)
    for i in range(S):
        for j in range(S):
            A[i, j] = transition_logprob(model, (i // 2 + 1, i % 2), (j // 2 + 1, j % 2))
    return A


def _first_near_max(values: np.ndarray, axis: int = 0) -> np.ndarray:
    """Index of the first entry within TIE_TOL (relative) of the maximum."""
    top = values.max(axis=axis, keepdims=True)
    slack = TIE_TOL * np.maximum(1.0, np.abs(np.where(np.isfinite(top), top, 0.0)))
    return np.argmax(values >= top - slack, axis=axis)


def viterbi_align(model: AlignmentHMM) -> AlignmentPath:
    """MAP state sequence.

    Flattened state index is 2*(R-1) + B, so taking the first (near-)maximum
    at every comparison prefers the lower step, then the foreground state.
    Scores within TIE_TOL count as ties: moving a step boundary inside a
    background run leaves the probability unchanged, and float rounding
    would otherwise break such ties arbitrarily.
    """
    K, T = model.K, model.T
    S = 2 * K
    A = _transition_matrix(model)
    emit = np.empty((T, S))
    emit[:, 0::2] = model.emission_cache
    emit[:, 1::2] = model.background_logprob[:, None]

    delta = np.full(S, NEG_INF)
    delta[0] = math.log(0.5) + emit[0, 0]
    delta[1] = math.log(0.5) + emit[0, 1]
    back = np.zeros((T, S), dtype=np.int64)
    for t in range(1, T):
        cand = delta[:, None] + A
        best = _first_near_max(cand, axis=0)
        back[t] = best
        delta = cand[best, np.arange(S)] + emit[t]

    s = int(_first_near_max(delta))
    states = [s]
    for t in range(T - 1, 0, -1):
        s = int(back[t, s])
        states.append(s)
    states.reverse()
    return AlignmentPath(tuple((s // 2 + 1, s % 2) for s in states))


def path_logprob(model: AlignmentHMM, path: AlignmentPath) -> float:
    """Joint log-probability of a state sequence and the observed tokens."""
    r, b = path.states[0]
    if r != 1:
        return NEG_INF
    total = math.log(0.5) + model.emission(0, r, b)
    for t in range(1, len(path)):
        total = total + transition_logprob(model, path.states[t - 1], path.states[t])
        total = total + model.emission(t, *path.states[t])
    return total


def _token_end(tokens, i: int) -> float:
    tok = tokens[i]
    if tok.duration > 0:
        return tok.end
    if i + 1 < len(tokens) and tokens[i + 1].start > tok.start:
        return tokens[i + 1].start
    return tok.start + 0.5


def extract_segments(path: AlignmentPath, recipe: ParsedRecipe | None, transcript: Transcript) -> list[AlignedSegment]:
    """Maximal foreground runs with a constant step become segments; background yields nothing."""
    if len(path) != len(transcript):
        raise ValueError(f"path has {len(path)} states for {len(transcript)} tokens")
    tokens = transcript.tokens
    segments: list[AlignedSegment] = []
    t = 0
    T = len(path)
    while t < T:
        r, b = path.states[t]
        if b == 1:
            t += 1
            continue
        u = t
        while u + 1 < T and path.states[u + 1] == (r, 0):
            u += 1
        action, entities = None, ()
        if recipe is not None:
            step = recipe.steps[r - 1]
            action, entities = step.action, step.entities
        segments.append(AlignedSegment(r, t, u, tokens[t].start, _token_end(tokens, u), action, tuple(entities)))
        t = u + 1
    return segments


def step_hull_intervals(segments) -> dict[int, tuple[float, float]]:
    """Smallest interval covering all of a step's segments; unaligned steps are absent."""
    hulls: dict[int, tuple[float, float]] = {}
    for seg in segments:
        if seg.step_index in hulls:
            s, e = hulls[seg.step_index]
            hulls[seg.step_index] = (min(s, seg.start), max(e, seg.end))
        else:
            hulls[seg.step_index] = (seg.start, seg.end)
    return dict(sorted(hulls.items()))


def coverage(segments, K: int) -> float:
    """Fraction of the K steps with at least one segment."""
    if K <= 0:
        return 0.0
    return len({s.step_index for s in segments}) / K


@dataclass(frozen=True)
class Alignment:
    """A decoded alignment with the recipe and transcript it refers to."""

    video_id: str
    recipe: ParsedRecipe
    transcript: Transcript
    path: AlignmentPath

    @property
    def segments(self) -> list[AlignedSegment]:
        return extract_segments(self.path, self.recipe, self.transcript)

    @property
    def hulls(self) -> dict[int, tuple[float, float]]:
        return step_hull_intervals(self.segments)


def align(
    recipe: ParsedRecipe,
    transcript: Transcript,
    gamma: float = DEFAULT_GAMMA,
    lexicon_cfg: SimilarityConfig = DEFAULT_CONFIG,
    embeddings: EmbeddingTable | None = None,
    tau: float = DEFAULT_TAU,
) -> Alignment:
    model = build_model(recipe, transcript, gamma, lexicon_cfg, embeddings, tau)
    return Alignment(transcript.video_id, recipe, transcript, viterbi_align(model))


def alignment_to_dict(al: Alignment) -> dict:
    return {
        "format": ALIGNMENT_FORMAT,
        "version": ALIGNMENT_VERSION,
        "video_id": al.video_id,
        "K": al.recipe.K,
        "tokens": [
            [tok.start, tok.duration, tok.text, r, b]
            for tok, (r, b) in zip(al.transcript.tokens, al.path.states)
        ],
        "hulls": [[k, s, e] for k, (s, e) in al.hulls.items()],
        "recipe": recipe_to_dict(al.recipe),
    }


def write_alignment(al: Alignment, path) -> None:
    dump_json(alignment_to_dict(al), path)


def read_alignment(path) -> Alignment:
    d = read_versioned_json(path, ALIGNMENT_FORMAT, ALIGNMENT_VERSION)
    try:
        recipe = recipe_from_dict(d["recipe"])
        tokens = tuple(TimedToken(text, float(s), float(dur)) for s, dur, text, _, _ in d["tokens"])
        states = tuple((int(r), int(b)) for _, _, _, r, b in d["tokens"])
        al = Alignment(d["video_id"], recipe, Transcript(d["video_id"], tokens), AlignmentPath(states))
        hulls = {int(k): (float(s), float(e)) for k, s, e in d["hulls"]}
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"bad alignment record: {e}", path) from None
    if int(d["K"]) != recipe.K or not al.path.is_valid(recipe.K):
        raise FormatError("alignment path inconsistent with recipe", path)
    if hulls != al.hulls:
        raise FormatError("step hulls do not match per-token states", path)
    return al
