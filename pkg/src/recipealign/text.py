"""Shared text utilities: tokenization, rule-based lemmatization and word lists."""

from __future__ import annotations

import re
from functools import lru_cache
from importlib import resources
from pathlib import Path

_WORD_RE = re.compile(r"[0-9A-Za-z]+(?:-[0-9A-Za-z]+)*|'[A-Za-z]+|[^\s0-9A-Za-z]")
_ALNUM_RE = re.compile(r"[0-9a-z]+")

IRREGULAR = {
    "ate": "eat",
    "beaten": "beat",
    "bought": "buy",
    "broke": "break",
    "broken": "break",
    "brought": "bring",
    "chose": "choose",
    "did": "do",
    "done": "do",
    "eaten": "eat",
    "fell": "fall",
    "fed": "feed",
    "froze": "freeze",
    "frozen": "freeze",
    "got": "get",
    "gotten": "get",
    "ground": "grind",
    "had": "have",
    "held": "hold",
    "kept": "keep",
    "knives": "knife",
    "leaves": "leaf",
    "left": "leave",
    "let": "let",
    "loaves": "loaf",
    "made": "make",
    "put": "put",
    "ran": "run",
    "risen": "rise",
    "rose": "rise",
    "set": "set",
    "shook": "shake",
    "shaken": "shake",
    "spread": "spread",
    "stood": "stand",
    "taken": "take",
    "took": "take",
    "thrown": "throw",
    "threw": "throw",
    "was": "be",
    "were": "be",
    "went": "go",
    "gone": "go",
    "halves": "half",
    "children": "child",
    "teeth": "tooth",
}

_VOWELS = set("aeiou")


def _data_path(name: str):
    return resources.files("recipealign").joinpath("data", name)


def read_word_list(path) -> frozenset[str]:
    """Read a word-per-line file; blank lines and ``#`` comments are skipped."""
    if isinstance(path, (str, Path)):
        text = Path(path).read_text(encoding="utf-8")
    else:
        text = path.read_text(encoding="utf-8")
    words = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line.casefold())
    return frozenset(words)


@lru_cache(maxsize=None)
def cooking_verbs() -> frozenset[str]:
    """The shipped cooking-verb lexicon (also the keyword-spotting whitelist)."""
    return read_word_list(_data_path("cooking_verbs.txt"))


@lru_cache(maxsize=None)
def stopwords() -> frozenset[str]:
    return read_word_list(_data_path("stopwords.txt"))


@lru_cache(maxsize=None)
def filler_words() -> tuple[str, ...]:
    return tuple(sorted(read_word_list(_data_path("filler.txt"))))


def tokenize(text: str) -> list[str]:
    """Split into word and punctuation tokens, preserving case."""
    return _WORD_RE.findall(text)


def bag_of_words(text: str) -> list[str]:
    """Case-folded alphanumeric runs; everything else is a separator."""
    return _ALNUM_RE.findall(text.casefold())


def is_word(token: str) -> bool:
    return any(c.isalnum() for c in token)


def detokenize(tokens) -> str:
    """Join tokens with spaces, except before punctuation and clitics."""
    out = ""
    for tok in tokens:
        if out and (is_word(tok) and not tok.startswith("'") or tok in "([{"):
            out += " "
        out += tok
    return out.strip()


def _restore(stem: str, known: frozenset[str]) -> str:
    # chopped -> chopp -> chop ; baked -> bak -> bake
    if stem in known:
        return stem
    if stem + "e" in known:
        return stem + "e"
    if len(stem) >= 3 and stem[-1] == stem[-2] and stem[-1] not in "lsz":
        return stem[:-1]
    if (
        len(stem) >= 3
        and stem[-1] not in _VOWELS | {"w", "x", "y"}
        and stem[-2] in _VOWELS
        and stem[-3] not in _VOWELS
        and len(stem) <= 4
    ):
        # short CVC stems usually dropped a silent e: bak(e), slic(e)
        return stem + "e"
    return stem


def lemmatize(word: str, known: frozenset[str] | None = None) -> str:
    """Rule-based lemma: irregular table, then s/es/ed/ing suffix stripping.

    ``known`` is a set of base forms consulted to repair stripped stems; it
    defaults to the cooking-verb lexicon.
    """
    w = word.casefold()
    if known is None:
        known = cooking_verbs()
    if w in IRREGULAR:
        return IRREGULAR[w]
    if w in known or len(w) <= 3:
        return w
    if w.endswith("ing") and len(w) > 5:
        # only verbs: "pudding" and "dressing" stay nouns
        stem = _restore(w[:-3], known)
        return stem if stem in known else w
    if w.endswith("ied") and len(w) > 4:
        return w[:-3] + "y"
    if w.endswith("ed") and len(w) > 4:
        return _restore(w[:-2], known)
    if w.endswith("ies") and len(w) > 4:
        return w[:-3] + "y"
    if w.endswith(("ches", "shes", "sses", "xes", "zes", "oes")):
        return w[:-2]
    if w.endswith("s") and not w.endswith(("ss", "us", "is")):
        return w[:-1]
    return w


def content_words(text_or_tokens, known: frozenset[str] | None = None) -> list[str]:
    """Lemmatized, stopword-free words in order of appearance."""
    if isinstance(text_or_tokens, str):
        toks = bag_of_words(text_or_tokens)
    else:
        toks = [t.casefold() for t in text_or_tokens if is_word(t)]
    stop = stopwords()
    out = []
    for t in toks:
        if t in stop or t.isdigit():
            continue
        out.append(lemmatize(t, known))
    return out
