"""Three-class multinomial naive Bayes over bag-of-words sentence features."""

from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass

from .corpus_io import dump_json, read_versioned_json
from .errors import FormatError
from .text import bag_of_words

UNK = "<unk>"
MODEL_FORMAT = "nb-model"
MODEL_VERSION = 1


class SentenceLabel(str, enum.Enum):
    # declaration order is the tie-break order
    STEP = "RecipeStep"
    INGREDIENT = "Ingredient"
    BACKGROUND = "Background"


CLASS_ORDER = tuple(SentenceLabel)


@dataclass(frozen=True)
class NBModel:
    class_priors: dict  # SentenceLabel -> probability
    token_log_likelihoods: dict  # (SentenceLabel, token) -> log-probability; includes UNK
    vocabulary: frozenset
    smoothing: float

    def log_likelihood(self, label: SentenceLabel, token: str) -> float:
        return self.token_log_likelihoods[(label, token)]


def tokenize(sentence: str) -> list[str]:
    return bag_of_words(sentence)


def train(examples, smoothing: float = 1.0) -> NBModel:
    """Fit priors and add-``smoothing`` token distributions over vocabulary + UNK."""
    if not smoothing > 0:
        raise ValueError("smoothing must be > 0")
    class_counts: Counter = Counter()
    token_counts = {c: Counter() for c in CLASS_ORDER}
    for sentence, label in examples:
        label = SentenceLabel(label)
        class_counts[label] += 1
        token_counts[label].update(tokenize(sentence))
    missing = [c.value for c in CLASS_ORDER if class_counts[c] == 0]
    if missing:
        raise ValueError(f"training data has no examples for: {', '.join(missing)}")

    vocab = frozenset().union(*(tc.keys() for tc in token_counts.values()))
    n_docs = sum(class_counts.values())
    priors = {c: class_counts[c] / n_docs for c in CLASS_ORDER}
    loglik = {}
    support = len(vocab) + 1
    for c in CLASS_ORDER:
        total = sum(token_counts[c].values())
        denom = math.log(total + smoothing * support)
        for tok in vocab:
            loglik[(c, tok)] = math.log(token_counts[c][tok] + smoothing) - denom
        loglik[(c, UNK)] = math.log(smoothing) - denom
    return NBModel(priors, loglik, vocab, float(smoothing))


def classify(model: NBModel, sentence: str):
    """Return ``(label, posteriors)``.

    Tokens outside the vocabulary carry no evidence, so a sentence with no
    known tokens gets the priors back as its posterior.
    """
    scores = {}
    tokens = [t for t in tokenize(sentence) if t in model.vocabulary]
    for c in CLASS_ORDER:
        s = math.log(model.class_priors[c])
        for t in tokens:
            s += model.token_log_likelihoods[(c, t)]
        scores[c] = s
    top = max(scores.values())
    unnorm = {c: math.exp(s - top) for c, s in scores.items()}
    z = sum(unnorm.values())
    posteriors = {c: v / z for c, v in unnorm.items()}
    if not tokens:
        posteriors = dict(model.class_priors)
    best = max(CLASS_ORDER, key=lambda c: (posteriors[c], -CLASS_ORDER.index(c)))
    return best, posteriors


def filter_document(model: NBModel, sentences):
    """Route sentences to ingredient/step lists; keep a document only if it has both."""
    ingredients, steps = [], []
    for s in sentences:
        label, _ = classify(model, s)
        if label is SentenceLabel.INGREDIENT:
            ingredients.append(s)
        elif label is SentenceLabel.STEP:
            steps.append(s)
    return ingredients, steps, bool(ingredients and steps)


def precision_recall_f1(truth, predicted) -> dict:
    """Per-class (precision, recall, f1) for parallel label sequences."""
    out = {}
    for c in CLASS_ORDER:
        tp = sum(1 for t, p in zip(truth, predicted) if t == c and p == c)
        fp = sum(1 for t, p in zip(truth, predicted) if t != c and p == c)
        fn = sum(1 for t, p in zip(truth, predicted) if t == c and p != c)
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        out[c] = (prec, rec, f1)
    return out


def save_model(model: NBModel, path) -> None:
    dump_json(
        {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "smoothing": model.smoothing,
            "priors": {c.value: model.class_priors[c] for c in CLASS_ORDER},
            "log_likelihoods": {
                c.value: {
                    tok: model.token_log_likelihoods[(c, tok)]
                    for tok in sorted(model.vocabulary) + [UNK]
                }
                for c in CLASS_ORDER
            },
        },
        path,
    )


def load_model(path) -> NBModel:
    d = read_versioned_json(path, MODEL_FORMAT, MODEL_VERSION)
    try:
        priors = {SentenceLabel(k): float(v) for k, v in d["priors"].items()}
        loglik = {}
        vocab = set()
        for c, table in d["log_likelihoods"].items():
            for tok, v in table.items():
                loglik[(SentenceLabel(c), tok)] = float(v)
                if tok != UNK:
                    vocab.add(tok)
        return NBModel(priors, loglik, frozenset(vocab), float(d["smoothing"]))
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"bad model: {e}", path) from None


def read_labeled_sentences(path) -> list[tuple[str, SentenceLabel]]:
    """Read ``label<TAB>sentence`` lines (label is a class name, case-insensitive)."""
    by_name = {c.value.casefold(): c for c in CLASS_ORDER}
    by_name.update({"step": SentenceLabel.STEP})
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            label, sep, sentence = line.partition("\t")
            if not sep or label.strip().casefold() not in by_name:
                raise FormatError(f"expected '<label>\\t<sentence>', got {line[:40]!r}", path, lineno)
            out.append((sentence, by_name[label.strip().casefold()]))
    return out
