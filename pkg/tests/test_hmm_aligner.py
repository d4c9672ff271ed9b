import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_force_path
from recipealign.corpus_io import TimedToken, Transcript
from recipealign.errors import FormatError
from recipealign.hmm_aligner import (
    AlignedSegment,
    Alignment,
    AlignmentPath,
    align,
    build_model,
    coverage,
    emission_table,
    extract_segments,
    model_from_scores,
    path_logprob,
    read_alignment,
    step_hull_intervals,
    transition_logprob,
    viterbi_align,
    write_alignment,
)
from recipealign.recipe_parser import ParsedRecipe, RecipeStep


def _recipe(*word_sets):
    return ParsedRecipe((), tuple(RecipeStep(i, "mix", (), "mix", frozenset(ws)) for i, ws in enumerate(word_sets, 1)))


def _transcript(words, dt=1.0):
    return Transcript("v", tuple(TimedToken(w, i * dt, dt) for i, w in enumerate(words)))


def _random_model(rng, K, T, gamma=None, tau=None):
    V = int(rng.integers(1, T + 2))
    ids = rng.integers(0, V, size=T)
    scores = rng.random((V, K))
    return model_from_scores(ids, scores, gamma if gamma is not None else rng.uniform(0.5, 0.9), tau or rng.uniform(0.2, 1.0))


def test_alpha():
    m = model_from_scores(np.zeros(100, dtype=int), np.zeros((1, 5)))
    assert m.alpha == pytest.approx(0.05)


def test_alpha_clamped_when_more_steps_than_tokens():
    with pytest.warns(UserWarning):
        m = model_from_scores([0, 0], np.zeros((1, 3)))
    assert m.alpha == 1.0


def test_background_unigram():
    m = build_model(_recipe({"x"}), _transcript(["a", "a", "b"]))
    assert m.background_dist == {"a": pytest.approx(3 / 5), "b": pytest.approx(2 / 5)}
    assert np.allclose(np.exp(m.background_logprob), [3 / 5, 3 / 5, 2 / 5])


def test_gamma_default():
    m = build_model(_recipe({"x"}), _transcript(["a", "b", "c", "d"]))
    assert m.gamma == 0.7
    # alpha = 1/4
    assert transition_logprob(m, (1, 0), (1, 0)) == pytest.approx(math.log(0.75 * 0.7))


def test_transitions():
    m = model_from_scores(np.zeros(100, dtype=int), np.zeros((1, 5)), gamma=0.7)
    assert transition_logprob(m, (2, 0), (3, 0)) == pytest.approx(math.log(0.05 * 0.7))
    assert transition_logprob(m, (2, 1), (3, 1)) == pytest.approx(math.log(0.05 * 0.7))
    assert transition_logprob(m, (3, 0), (2, 0)) == -math.inf
    assert transition_logprob(m, (2, 0), (4, 0)) == -math.inf
    assert transition_logprob(m, (2, 0), (2, 1)) == pytest.approx(math.log(0.95 * 0.3))


def test_emission_table_columns_are_distributions():
    rng = np.random.default_rng(1)
    t = emission_table(rng.random((7, 3)), tau=0.3)
    assert np.allclose(np.exp(t).sum(axis=0), 1.0)


def test_single_token():
    # foreground wins when the token matches its step strongly
    m = model_from_scores([0], np.array([[1.0], [0.0]]), tau=0.2)
    assert viterbi_align(m).states == ((1, 0),)
    # flat foreground over 5 words gives 1/5; background gives (1+1)/(1+5) = 1/3
    m = model_from_scores([0], np.zeros((5, 1)))
    assert viterbi_align(m).states == ((1, 1),)


def test_toy_k2_t4_matches_brute_force():
    scores = np.array([[1.0, 0.0], [0.2, 0.1], [0.0, 1.0], [0.3, 0.3]])
    m = model_from_scores([0, 1, 2, 3], scores, gamma=0.7, tau=0.2)
    path = viterbi_align(m)
    oracle, best = brute_force_path(m)
    assert path.states == oracle
    assert path_logprob(m, path) == pytest.approx(best)


def test_recipe_words_in_order_advance_through_steps():
    recipe = _recipe({"alpha"}, {"bravo"}, {"charlie"})
    tr = _transcript(["alpha", "bravo", "charlie"])
    from recipealign.lexicon import OOVMode, SimilarityConfig

    m = build_model(recipe, tr, lexicon_cfg=SimilarityConfig(OOVMode.ZERO))
    path = viterbi_align(m)
    assert path.states == ((1, 0), (2, 0), (3, 0))
    assert path.states == brute_force_path(m)[0]


@pytest.mark.filterwarnings("ignore:recipe has more steps")
def test_random_instances_match_brute_force():
    rng = np.random.default_rng(7)
    for _ in range(150):
        K, T = int(rng.integers(1, 4)), int(rng.integers(1, 6))
        m = _random_model(rng, K, T)
        assert viterbi_align(m).states == brute_force_path(m)[0]


@pytest.mark.filterwarnings("ignore:recipe has more steps")
@given(st.integers(1, 4), st.integers(1, 40), st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_paths_are_structurally_valid(K, T, seed):
    rng = np.random.default_rng(seed)
    m = _random_model(rng, K, T)
    path = viterbi_align(m)
    assert len(path) == T
    assert path.is_valid(K)
    assert path_logprob(m, path) > -math.inf


def test_extract_segments():
    tr = _transcript(["a", "b", "c"])
    assert extract_segments(AlignmentPath(((1, 1), (1, 1), (1, 1))), None, tr) == []
    segs = extract_segments(AlignmentPath(((1, 0), (1, 0), (2, 0))), None, tr)
    assert [(s.step_index, s.first, s.last, s.start, s.end) for s in segs] == [(1, 0, 1, 0.0, 2.0), (2, 2, 2, 2.0, 3.0)]
    segs = extract_segments(AlignmentPath(((1, 0), (1, 1), (1, 0))), None, tr)
    assert [(s.step_index, s.token_span) for s in segs] == [(1, (0, 0)), (1, (2, 2))]
    with pytest.raises(ValueError):
        extract_segments(AlignmentPath(((1, 0),)), None, tr)


def test_zero_duration_tokens_end_at_next_start():
    tr = Transcript("v", (TimedToken("a", 0.0), TimedToken("b", 1.5), TimedToken("c", 2.0)))
    segs = extract_segments(AlignmentPath(((1, 0), (1, 1), (1, 0))), None, tr)
    assert [s.time_interval for s in segs] == [(0.0, 1.5), (2.0, 2.5)]


def _seg(k, s, e):
    return AlignedSegment(k, 0, 0, s, e)


def test_hulls():
    assert step_hull_intervals([_seg(1, 2, 4), _seg(1, 8, 9)]) == {1: (2, 9)}
    assert step_hull_intervals([_seg(2, 1, 3)]) == {2: (1, 3)}
    assert 3 not in step_hull_intervals([_seg(1, 0, 1), _seg(2, 1, 2)])


def test_coverage():
    segs = [_seg(1, 0, 1), _seg(3, 1, 2), _seg(3, 2, 3), _seg(5, 3, 4)]
    assert coverage(segs, 5) == pytest.approx(0.6)
    assert coverage([], 5) == 0.0
    assert coverage([_seg(1, 0, 1), _seg(2, 1, 2)], 2) == 1.0


def test_alignment_roundtrip(tmp_path):
    recipe = _recipe({"alpha", "egg"}, {"bravo"})
    al = align(recipe, _transcript(["um", "alpha", "egg", "so", "bravo"], dt=0.5))
    write_alignment(al, tmp_path / "a.json")
    back = read_alignment(tmp_path / "a.json")
    assert back == al
    assert back.hulls == al.hulls


def test_alignment_hull_tamper_detected(tmp_path):
    al = align(_recipe({"alpha"}), _transcript(["alpha", "x"]))
    write_alignment(al, tmp_path / "a.json")
    d = json.loads((tmp_path / "a.json").read_text())
    d["hulls"] = [[1, 0.0, 99.0]]
    (tmp_path / "a.json").write_text(json.dumps(d))
    with pytest.raises(FormatError):
        read_alignment(tmp_path / "a.json")


def test_alignment_invalid_path_rejected(tmp_path):
    al = Alignment("v", _recipe({"a"}, {"b"}), _transcript(["a", "b"]), AlignmentPath(((2, 0), (1, 0))))
    write_alignment(al, tmp_path / "a.json")
    with pytest.raises(FormatError):
        read_alignment(tmp_path / "a.json")
