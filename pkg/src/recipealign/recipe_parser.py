"""Turn recipe step sentences into a ParsedRecipe.

There is no statistical parser here. A lexicon-driven tagger labels tokens,
conjunctions split a sentence into micro steps when a verb follows them, the
first verb of a micro step is its action, and the noun chunks it governs
(up to the first non-"of" preposition) are its objects.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

from .corpus_io import EmbeddingTable, dump_json, read_versioned_json, split_sentences
from .errors import FormatError, PipelineError
from .lexicon import DEFAULT_CONFIG, SimilarityConfig, word_similarity
from .text import cooking_verbs, detokenize, is_word, lemmatize, stopwords, tokenize

RECIPE_FORMAT = "parsed-recipe"
RECIPE_VERSION = 1


class POS(str, enum.Enum):
    VERB = "Verb"
    NOUN = "Noun"
    CONJ = "Conjunction"
    PREP = "Preposition"
    OTHER = "Other"


CONJUNCTIONS = frozenset({"and", "or", "but", "then", "nor", "plus"})
PREPOSITIONS = frozenset(
    """in on of to with into onto until for over at from by about under through
    across without within between around after before during inside atop per
    than like""".split()
)
DETERMINERS = frozenset(
    """a an the this that these those some any each every all both either
    another few several many much more most no half""".split()
)
PRONOUNS = frozenset(
    """i you he she it we they me him her us them my your his its our their
    mine yours ours theirs this that yourself itself everything something
    everyone someone""".split()
)
# Words that leave the following lexicon verb clause-initial.
_CLAUSE_OPENERS = frozenset(
    """then now just also and or first next finally meanwhile gently slowly
    carefully quickly please simply again to will can should must may might
    let's lets i you we they please go going gonna wanna want need""".split()
)
AUXILIARIES = frozenset(
    """is are was were be been being am do does did have has had will would
    can could should shall may might must 's 're 've 'll 'm""".split()
)
MEASURES = frozenset(
    """cup cups tablespoon tablespoons tbsp tbs teaspoon teaspoons tsp ounce
    ounces oz pound pounds lb lbs gram grams g kg kilogram kilograms ml
    milliliter milliliters liter liters l quart quarts pint pints pinch dash
    clove cloves slice slices piece pieces can cans stick sticks handful
    bunch package packages jar jars bottle bottles bag bags sprig sprigs""".split()
)
ADJECTIVES = frozenset(
    """hot cold warm large small medium big little fresh dry dried whole fine
    finely crisp golden brown soft tender thick thin smooth well together
    aside remaining extra each about approximately evenly lightly until
    about few more less good nice clean red green yellow white black sweet
    salty spicy ripe raw cooked""".split()
)
ADVERB_SUFFIX = "ly"
MEASURES_NUMERIC = frozenset(
    "one two three four five six seven eight nine ten twelve dozen".split()
)


@dataclass(frozen=True)
class AnnotatedToken:
    text: str
    lemma: str
    pos: POS


@dataclass(frozen=True)
class RecipeStep:
    index: int
    action: str | None
    entities: tuple[str, ...]
    source_text: str
    words: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "entities", tuple(self.entities))
        object.__setattr__(self, "words", frozenset(self.words))


@dataclass(frozen=True)
class ParsedRecipe:
    ingredients: tuple[str, ...]
    steps: tuple[RecipeStep, ...]

    def __post_init__(self):
        object.__setattr__(self, "ingredients", tuple(self.ingredients))
        object.__setattr__(self, "steps", tuple(self.steps))

    @property
    def K(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class ParserConfig:
    canon_threshold: float = 0.75
    similarity: SimilarityConfig = DEFAULT_CONFIG
    cooking_verbs: frozenset[str] | None = None  # None: shipped lexicon


def _heuristic_pos(word: str, prev: str | None, prev_pos: POS | None, verbs) -> POS:
    w = word.casefold()
    if not is_word(w):
        return POS.OTHER
    if w in CONJUNCTIONS:
        return POS.CONJ
    if w in PREPOSITIONS:
        return POS.PREP
    if w in DETERMINERS or w in PRONOUNS or w in AUXILIARIES or w in stopwords():
        return POS.OTHER
    if any(c.isdigit() for c in w) or w in MEASURES_NUMERIC:
        return POS.OTHER
    clause_start = (
        prev is None
        or prev_pos is POS.CONJ
        or prev == "to"
        or prev_pos is POS.OTHER
        and (prev in _CLAUSE_OPENERS or not is_word(prev) or prev in PRONOUNS or prev in AUXILIARIES)
    )
    if w in verbs:
        return POS.VERB if clause_start else POS.NOUN
    if w.endswith(("ing", "ed")) and lemmatize(w, verbs) in verbs:
        # "we're adding" vs "chopped onions"
        return POS.VERB if clause_start and prev is not None else POS.OTHER
    if w in ADJECTIVES or (w.endswith(ADVERB_SUFFIX) and len(w) > 4):
        return POS.OTHER
    return POS.NOUN


def tag_words(words, cooking_verbs_set=None) -> list[AnnotatedToken]:
    """Tag a token sequence. The first token is forced to Verb if it is a cooking verb."""
    verbs = cooking_verbs() if cooking_verbs_set is None else frozenset(v.casefold() for v in cooking_verbs_set)
    out: list[AnnotatedToken] = []
    prev, prev_pos = None, None
    for i, word in enumerate(words):
        pos = _heuristic_pos(word, prev, prev_pos, verbs)
        if i == 0 and word.casefold() in verbs:
            pos = POS.VERB
        lemma = lemmatize(word, verbs) if is_word(word) else word
        out.append(AnnotatedToken(word, lemma or word, pos))
        prev, prev_pos = word.casefold(), pos
    return out


def tag_tokens(sentence: str, cooking_verbs_set=None) -> list[AnnotatedToken]:
    return tag_words(tokenize(sentence), cooking_verbs_set)


def split_micro_steps(tokens) -> list[list[AnnotatedToken]]:
    """Split at a conjunction when the next non-Other token is a verb; drop that conjunction."""
    fragments: list[list[AnnotatedToken]] = []
    current: list[AnnotatedToken] = []
    for i, tok in enumerate(tokens):
        if tok.pos is POS.CONJ and current and _verb_follows(tokens, i + 1):
            fragments.append(current)
            current = []
            continue
        current.append(tok)
    if current:
        fragments.append(current)
    return fragments


def _verb_follows(tokens, start: int) -> bool:
    for tok in tokens[start:]:
        if tok.pos is POS.OTHER:
            continue
        return tok.pos is POS.VERB
    return False


def extract_action(step_tokens) -> str | None:
    for tok in step_tokens:
        if tok.pos is POS.VERB:
            return tok.lemma
    return None


def extract_objects(step_tokens) -> list[str]:
    """Noun chunks governed by the first verb.

    Chunks are maximal runs of nouns. Collection stops at the first
    preposition other than "of" (the start of an adjunct such as "in a pan"),
    and a chunk reached through "of" replaces the measure chunk before it.
    """
    verb_at = next((i for i, t in enumerate(step_tokens) if t.pos is POS.VERB), None)
    if verb_at is None:
        return []
    chunks: list[str] = []
    run: list[str] = []
    via_of = False

    def close():
        nonlocal run, via_of
        if run:
            words = [w for w in run if w not in MEASURES]
            if via_of and chunks:
                chunks.pop()
            chunks.append(" ".join(words or run))
        run = []
        via_of = False

    for tok in step_tokens[verb_at + 1 :]:
        if tok.pos is POS.NOUN:
            run.append(tok.text.casefold())
            continue
        if tok.pos is POS.PREP:
            if tok.text.casefold() == "of":
                measure_run = bool(run) and all(w in MEASURES for w in run)
                close()
                via_of = measure_run
                continue
            close()
            break
        if tok.pos is POS.VERB:
            close()
            break
        if run:
            close()
    else:
        close()
    return chunks


def stem_phrase(phrase: str) -> str:
    return " ".join(lemmatize(w) for w in phrase.split())


def phrase_similarity(a: str, b: str, table: EmbeddingTable | None, cfg: SimilarityConfig = DEFAULT_CONFIG) -> float:
    """Maximum word similarity over the cross product of content words."""
    stop = stopwords()
    wa = [w for w in a.casefold().split() if w not in stop] or a.casefold().split()
    wb = [w for w in b.casefold().split() if w not in stop] or b.casefold().split()
    best = 0.0
    for x in wa:
        for y in wb:
            best = max(best, word_similarity(x, y, table, cfg))
    return best


def canonicalize_entities(objects, ingredients, embeddings: EmbeddingTable | None, threshold: float = 0.75, cfg: SimilarityConfig = DEFAULT_CONFIG) -> list[str]:
    """Map each object to its most similar ingredient, or to its stemmed form."""
    out = []
    for obj in objects:
        exact = next((ing for ing in ingredients if ing.casefold() == obj.casefold()), None)
        if exact is not None:
            out.append(exact)
            continue
        best, best_sim = None, -1.0
        for ing in ingredients:
            s = phrase_similarity(obj, ing, embeddings, cfg)
            if s > best_sim:
                best, best_sim = ing, s
        if best is not None and best_sim >= threshold:
            out.append(best)
        else:
            out.append(stem_phrase(obj))
    return out


def resolve_zero_anaphora(steps) -> list[RecipeStep]:
    """Steps with no entities inherit the previous step's (already propagated) entities."""
    out: list[RecipeStep] = []
    for i, step in enumerate(steps):
        if i > 0 and not step.entities and out[-1].entities:
            step = replace(step, entities=out[-1].entities, words=step.words | _entity_words(out[-1].entities))
        out.append(step)
    return out


def _entity_words(entities) -> frozenset[str]:
    stop = stopwords()
    return frozenset(lemmatize(w) for e in entities for w in e.casefold().split() if w not in stop)


def ingredient_name(sentence: str) -> str:
    """Strip quantities, units and determiners from an ingredient line: "2 cups of flour" -> "flour"."""
    toks = tag_words(tokenize(sentence), frozenset())
    words = []
    for t in toks:
        w = t.text.casefold()
        if t.pos is POS.NOUN and w not in MEASURES:
            words.append(w)
        elif words and t.pos in (POS.PREP, POS.CONJ) and w != "of":
            break
        elif not is_word(w) and w in ",(;":
            if words:
                break
    return " ".join(words) if words else sentence.strip().casefold()


def parse_recipe(ingredients, step_sentences, embeddings: EmbeddingTable | None = None, config: ParserConfig | None = None) -> ParsedRecipe:
    """Tag, split, extract, drop verbless steps, canonicalize and resolve anaphora."""
    config = config or ParserConfig()
    ingredients = tuple(ingredients)
    names = list(dict.fromkeys(ingredient_name(i) for i in ingredients))
    verbs = config.cooking_verbs
    steps: list[RecipeStep] = []
    sentences = [s for entry in step_sentences for s in split_sentences(entry)]
    for sentence in sentences:
        tokens = tag_tokens(sentence, verbs)
        for frag in split_micro_steps(tokens):
            action = extract_action(frag)
            if action is None:
                continue
            objects = extract_objects(frag)
            entities = canonicalize_entities(objects, names, embeddings, config.canon_threshold, config.similarity)
            words = {
                t.lemma.casefold()
                for t in frag
                if is_word(t.text) and t.text.casefold() not in stopwords() and not t.text.isdigit()
            }
            words |= _entity_words(entities)
            text = detokenize([t.text for t in frag])
            steps.append(RecipeStep(len(steps) + 1, action, tuple(entities), text, frozenset(words)))
    if not steps:
        raise PipelineError("no usable steps")
    return ParsedRecipe(ingredients, tuple(resolve_zero_anaphora(steps)))


def recipe_to_dict(recipe: ParsedRecipe) -> dict:
    return {
        "format": RECIPE_FORMAT,
        "version": RECIPE_VERSION,
        "ingredients": list(recipe.ingredients),
        "steps": [
            {
                "index": s.index,
                "action": s.action,
                "entities": list(s.entities),
                "source_text": s.source_text,
                "words": sorted(s.words),
            }
            for s in recipe.steps
        ],
    }


def recipe_from_dict(d: dict) -> ParsedRecipe:
    steps = tuple(
        RecipeStep(
            int(s["index"]), s["action"], tuple(s["entities"]), s["source_text"], frozenset(s["words"])
        )
        for s in d["steps"]
    )
    return ParsedRecipe(tuple(d["ingredients"]), steps)


def write_recipe(recipe: ParsedRecipe, path) -> None:
    dump_json(recipe_to_dict(recipe), path)


def read_recipe(path) -> ParsedRecipe:
    d = read_versioned_json(path, RECIPE_FORMAT, RECIPE_VERSION)
    try:
        return recipe_from_dict(d)
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"bad recipe: {e}", path) from None


def read_recipe_text(path) -> tuple[list[str], list[str]]:
    """Read a plain recipe with ``[ingredients]`` and ``[steps]`` sections, one entry per line."""
    section = None
    ingredients: list[str] = []
    steps: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            low = line.casefold()
            if low in ("[ingredients]", "[steps]"):
                section = low[1:-1]
                continue
            entry = line.lstrip("-*0123456789.) ").strip() if section == "steps" else line.lstrip("-* ").strip()
            if section == "ingredients":
                ingredients.append(entry)
            elif section == "steps":
                steps.append(entry)
            else:
                raise FormatError("text before [ingredients] or [steps] header", path, lineno)
    return ingredients, steps
