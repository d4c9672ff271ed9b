"""Acceptance criteria, one check per criterion.

Run under pytest (a PASS/FAIL line per criterion is printed in the terminal
summary) or directly: ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import random
import sys
import tempfile
import time
import warnings
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from oracles import brute_force_path, shift_scan  # noqa: E402
from recipealign.classifier import CLASS_ORDER, classify, precision_recall_f1, train  # noqa: E402
from recipealign.clip_labeling import keyword_window, label_hybrid  # noqa: E402
from recipealign.confidence import (  # noqa: E402
    affordance_probs,
    filter_by_confidence,
    idf_matrix,
    load_model,
    lowrank,
    save_model,
    score_clips,
    train_affordance,
)
from recipealign.config import Config, read_config, write_config  # noqa: E402
from recipealign.corpus_io import (  # noqa: E402
    ClipCorpus,
    ClipLabel,
    DetectorTrack,
    Provenance,
    TimedToken,
    Transcript,
    read_clip_corpus,
    write_clip_corpus,
)
from recipealign.hmm_aligner import (  # noqa: E402
    AlignedSegment,
    align,
    model_from_scores,
    read_alignment,
    viterbi_align,
    write_alignment,
)
from recipealign.synth import NoiseSpec, evaluate_alignment, random_recipe, synth_generate  # noqa: E402
from recipealign.visual_refine import DetectorMatch, refine_interval, segment_score  # noqa: E402

RESULTS: dict[int, tuple[bool, str, str]] = {}

TITLES = {
    1: "Viterbi equals brute-force argmax",
    2: "HMM structural invariants",
    3: "synthetic end-to-end alignment",
    4: "sentence classifier F1",
    5: "keyword window arithmetic",
    6: "hybrid fallback rule",
    7: "visual refinement",
    8: "affordance model",
    9: "confidence filtering raises quality",
    10: "serialization round-trips",
}


def _random_model(rng, K, T, gamma):
    V = int(rng.integers(1, T + 2))
    return model_from_scores(rng.integers(0, V, size=T), rng.random((V, K)), gamma, rng.uniform(0.1, 1.0))


def check_1():
    rng = np.random.default_rng(2024)
    n, bad = 600, 0
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for _ in range(n):
            K, T = int(rng.integers(1, 4)), int(rng.integers(1, 8))
            m = _random_model(rng, K, T, rng.uniform(0.5, 0.9))
            bad += viterbi_align(m).states != brute_force_path(m)[0]
    dt = time.perf_counter() - t0
    return bad == 0 and dt < 30, f"{n - bad}/{n} identical, {dt:.1f}s"


def check_2():
    rng = np.random.default_rng(99)
    n, bad = 1000, 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for _ in range(n):
            K, T = int(rng.integers(1, 9)), int(rng.integers(1, 61))
            path = viterbi_align(_random_model(rng, K, T, rng.uniform(0.5, 0.9)))
            R = path.R
            ok = R[0] == 1 and all(b - a in (0, 1) for a, b in zip(R, R[1:])) and max(R) <= K and len(path) == T
            bad += not ok
    return bad == 0, f"{n - bad}/{n} valid paths"


def check_3():
    t0 = time.perf_counter()
    summary = {}
    for wer in (0.0, 0.3):
        acc, iou = [], []
        for seed in range(100):
            recipe = random_recipe(8, 10, seed)
            case = synth_generate(recipe, NoiseSpec(wer, 20, seed))
            m = evaluate_alignment(align(recipe, case.transcript).path, case.truth, 8)
            acc.append(m["token_accuracy"])
            iou.append(m["mean_iou"])
        summary[wer] = (float(np.mean(acc)), float(np.mean(iou)))
    dt = time.perf_counter() - t0
    (a0, i0), (a3, i3) = summary[0.0], summary[0.3]
    ok = a0 >= 0.95 and i0 >= 0.9 and a3 >= 0.70 and dt < 60
    return ok, f"WER 0: acc {a0:.3f} IoU {i0:.3f}; WER 0.3: acc {a3:.3f} IoU {i3:.3f}; {dt:.1f}s"


def _nb_corpus(rng, per_class):
    core = {c: [f"{c.value[:3].lower()}{i}" for i in range(60)] for c in CLASS_ORDER}
    noise = [f"noise{i}" for i in range(40)]
    rows = []
    for c in CLASS_ORDER:
        for _ in range(per_class):
            n = rng.randint(5, 12)
            toks = [rng.choice(noise) if rng.random() < 0.2 else rng.choice(core[c]) for _ in range(n)]
            rows.append((" ".join(toks), c))
    return rows


def check_4():
    t0 = time.perf_counter()
    rng = random.Random(4)
    model = train(_nb_corpus(rng, 500))
    test = _nb_corpus(rng, 200)
    pred = [classify(model, s)[0] for s, _ in test]
    f1 = {c: v[2] for c, v in precision_recall_f1([c for _, c in test], pred).items()}
    dt = time.perf_counter() - t0
    ok = all(v >= 0.94 for v in f1.values()) and dt < 10
    return ok, ", ".join(f"{c.value} F1 {v:.3f}" for c, v in f1.items()) + f"; {dt:.1f}s"


def _run_property(test_fn):
    try:
        test_fn()
        return True, ""
    except Exception as e:  # a falsifying example
        return False, f"{type(e).__name__}: {str(e).splitlines()[0] if str(e) else ''}"


def check_5():
    @settings(max_examples=2000, deadline=None, database=None)
    @given(st.floats(0, 1e4, allow_nan=False), st.floats(1e-3, 1e4, allow_nan=False))
    def prop(t, d):
        t = min(t, d)
        s, e = keyword_window(t, d)
        assert abs(s - max(0.0, t - 2.0)) <= 1e-9
        assert abs(e - min(d, t + 6.0)) <= 1e-9
        assert 0.0 <= s <= e <= d
        assert e - s <= 8.0 + 1e-9

    ok, why = _run_property(prop)
    return ok, "2000 random (t, duration) pairs" + (f"; {why}" if why else "")


def check_6():
    words = "so we mix the flour then knead the dough".split()
    tr = Transcript("v", tuple(TimedToken(w, float(i), 1.0) for i, w in enumerate(words)))
    K = 10
    got = {}
    for n_aligned in (4, 5, 6):
        segs = [AlignedSegment(k, 0, 0, float(k), k + 0.5, "mix", ("flour",)) for k in range(1, n_aligned + 1)]
        clips = label_hybrid(tr, segments=segs, K=K)
        got[n_aligned / K] = {c.provenance for c in clips}
    want = {0.4: {Provenance.HYBRID_FALLBACK}, 0.5: {Provenance.HYBRID}, 0.6: {Provenance.HYBRID}}
    return got == want, ", ".join(f"coverage {k}: {sorted(p.value for p in v)}" for k, v in got.items())


def check_7():
    one = DetectorMatch("x", frozenset({0}))

    @settings(max_examples=500, deadline=None, database=None)
    @given(st.lists(st.floats(0, 1), min_size=2, max_size=60), st.sampled_from([1.0, 2.0, 5.0, 10.0]), st.data())
    def prop(col, fps, data):
        track = DetectorTrack("v", fps, ("x",), np.array(col).reshape(-1, 1))
        start = data.draw(st.floats(0, track.duration - 1 / fps))
        end = data.draw(st.floats(start + 1e-3, track.duration))
        (s, e), score = refine_interval(track, (start, end), one)
        assert score >= segment_score(track, (start, end), one) - 1e-12
        assert abs(s - start) <= 3.0 + 1 / fps + 1e-9
        if s > 0 and e < track.duration:
            assert abs((e - s) - (end - start)) <= 1e-9

    ok_prop, why = _run_property(prop)

    rng = np.random.default_rng(7)
    n, bad = 300, 0
    for _ in range(n):
        fps = float(rng.choice([1.0, 2.0, 5.0]))
        frames = int(rng.integers(10, 80))
        col = np.zeros(frames)
        for _ in range(int(rng.integers(1, 3))):
            lo = int(rng.integers(0, frames))
            col[lo : lo + int(rng.integers(1, 5))] = rng.uniform(0.2, 1.0)
        sf = int(rng.integers(0, frames - 1))
        ef = int(rng.integers(sf + 1, frames + 1))
        start, end = sf / fps, ef / fps
        track = DetectorTrack("v", fps, ("x",), col.reshape(-1, 1))
        (s, e), score = refine_interval(track, (start, end), one)
        j, best = shift_scan(col, fps, start, end, 3.0)
        want = (start, end) if j == 0 else (max(0.0, start + j / fps), min(track.duration, end + j / fps))
        bad += not (abs(score - best) <= 1e-12 and abs(s - want[0]) <= 1e-9 and abs(e - want[1]) <= 1e-9)
    ok = ok_prop and bad == 0
    return ok, f"properties {'hold' if ok_prop else 'fail: ' + why}; impulse oracle {n - bad}/{n}"


def check_8():
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    row_err = full_err = 0.0
    monotone = 0
    for _ in range(100):
        A, O = int(rng.integers(2, 12)), int(rng.integers(2, 15))
        m = idf_matrix(rng.poisson(1.0, size=(A, O)))
        errs = [np.linalg.norm(lowrank(m, r) - m) for r in range(1, min(A, O) + 1)]
        monotone += all(b <= a + 1e-12 for a, b in zip(errs, errs[1:]))
        full_err = max(full_err, errs[-1])
        row_err = max(row_err, float(np.abs(affordance_probs(lowrank(m, 1)).sum(axis=1) - 1).max()))
    clips = []
    for i, (a, o) in enumerate([("peel", "garlic")] * 5 + [("peel", "sugar")] + [("mix", "sugar")] * 4 + [("mix", "flour")] * 3 + [("chop", "garlic")] * 2):
        clips.append(ClipLabel(f"c{i}", "v", a, (o,), 0.0, 8.0, Provenance.KEYWORD))
    model = train_affordance(clips)
    order = model.prob("peel", "garlic") > model.prob("peel", "sugar")
    dt = time.perf_counter() - t0
    ok = row_err <= 1e-9 and full_err <= 1e-9 and monotone == 100 and order and dt < 10
    return ok, f"row-sum err {row_err:.1e}, full-rank err {full_err:.1e}, monotone {monotone}/100, peel garlic>sugar {order}; {dt:.1f}s"


def _quality_corpus(seed, n=20000):
    """Clips whose true quality is known.

    Good clips pair an action with one of its plausible objects and get
    Beta(5, 2) visual scores; bad (mislabeled) clips pair it with an
    implausible object and get Beta(2, 5).
    """
    rng = np.random.default_rng(seed)
    actions = [f"act{i}" for i in range(15)]
    objects = [f"obj{i}" for i in range(40)]
    plausible = {a: list(rng.choice(objects, size=4, replace=False)) for a in actions}
    clips, quality = [], {}
    for i in range(n):
        a = actions[int(rng.integers(len(actions)))]
        good = rng.random() < 0.6
        pool = plausible[a] if good else [x for x in objects if x not in plausible[a]]
        o = pool[int(rng.integers(len(pool)))]
        vis = float(rng.beta(5, 2) if good else rng.beta(2, 5))
        cid = f"v{i // 50}/kw/{i:06d}"
        clips.append(ClipLabel(cid, f"v{i // 50}", a, (o,), 0.0, 8.0, Provenance.KEYWORD, visual_score=vis))
        quality[cid] = 1.0 if good else 0.0
    return clips, quality


def check_9():
    details = []
    ok = True
    for seed in range(3):
        clips, quality = _quality_corpus(seed)
        scored = score_clips(clips, train_affordance(clips))
        conf = np.array([c.confidence for c in scored])
        thresholds = np.quantile(conf, np.linspace(0.0, 0.95, 20))
        means = []
        for th in thresholds:
            kept, _ = filter_by_confidence(scored, float(th))
            means.append(float(np.mean([quality[c.clip_id] for c in kept])))
        dips = [(k, a, b) for k, (a, b) in enumerate(zip(means, means[1:]), start=1) if b < a]
        ok &= not dips
        note = "".join(f", drop {a:.4f}->{b:.4f} at threshold {k + 1}" for k, a, b in dips)
        details.append(f"seed {seed}: {means[0]:.3f} -> {means[-1]:.3f}{note}")
    return ok, "; ".join(details) + " (20 thresholds each)"


def _random_clip(rng, i):
    start = round(rng.uniform(0, 100), 3)
    return ClipLabel(
        f"v{rng.randint(0, 3)}/x/{i:05d}",
        "v",
        rng.choice(["mix", "peel", "chop"]),
        tuple(rng.sample(["garlic", "sugar", "flour", "tomato sauce", "egg"], rng.randint(0, 3))),
        start,
        start + rng.uniform(0.01, 10),
        rng.choice(list(Provenance)),
        rng.choice([None, rng.random()]),
        rng.choice([None, rng.random()]),
    )


def check_10():
    rng = random.Random(10)
    counts = {"alignment": 0, "corpus": 0, "affordance": 0, "config": 0}
    bad = 0
    with tempfile.TemporaryDirectory() as d:
        d = Path(d)
        for i in range(40):
            recipe = random_recipe(rng.randint(1, 6), rng.randint(1, 6), i)
            case = synth_generate(recipe, NoiseSpec(rng.random(), rng.randint(0, 10), i))
            al = align(recipe, case.transcript, gamma=rng.uniform(0.5, 0.9))
            write_alignment(al, d / "a.json")
            bad += read_alignment(d / "a.json") != al
            counts["alignment"] += 1

            corpus = ClipCorpus(tuple(_random_clip(rng, k) for k in range(rng.randint(0, 15))))
            write_clip_corpus(corpus, d / "c.json")
            bad += read_clip_corpus(d / "c.json") != corpus
            counts["corpus"] += 1

            clips = [_random_clip(rng, k) for k in range(rng.randint(3, 30))]
            if not any(c.objects for c in clips):
                clips.append(ClipLabel("z", "v", "mix", ("egg",), 0.0, 1.0, Provenance.HMM))
            model = train_affordance(clips, rank=rng.randint(1, 4))
            save_model(model, d / "m.json")
            bad += load_model(d / "m.json") != model
            counts["affordance"] += 1

            wv = rng.random()
            cfg = Config(
                gamma=rng.uniform(0.01, 0.99),
                tau=rng.uniform(0.01, 5),
                rank=rng.randint(1, 100),
                max_shift=rng.uniform(0, 10),
                weight_visual=wv,
                weight_affordance=1 - wv,
                oov_mode=rng.choice(["EditDistanceFallback", "ZeroSimilarity"]),
            )
            write_config(cfg, d / "c.cfg")
            bad += read_config(d / "c.cfg") != cfg
            counts["config"] += 1
    total = sum(counts.values())
    return bad == 0, f"{total - bad}/{total} identical (" + ", ".join(f"{k} {v}" for k, v in counts.items()) + ")"


CHECKS = {i: globals()[f"check_{i}"] for i in range(1, 11)}


def _record(i):
    ok, detail = CHECKS[i]()
    RESULTS[i] = (ok, TITLES[i], detail)
    return ok, detail


def report_lines():
    return [f"{'PASS' if ok else 'FAIL'} criterion {i} ({title}): {detail}" for i, (ok, title, detail) in sorted(RESULTS.items())]


@pytest.mark.parametrize("criterion", list(CHECKS))
def test_criterion(criterion):
    ok, detail = _record(criterion)
    assert ok, detail


if __name__ == "__main__":
    for i in CHECKS:
        _record(i)
        print(report_lines()[-1], flush=True)
    sys.exit(0 if all(ok for ok, _, _ in RESULTS.values()) else 1)
