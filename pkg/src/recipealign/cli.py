"""``recipealign`` command line.

Exit codes: 0 ok, 1 usage, 2 bad or missing input, 3 pipeline failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import apps, classifier, confidence
from .clip_labeling import label_hmm, label_hybrid, label_keyword
from .config import Config, read_config
from .corpus_io import (
    ClipCorpus,
    extract_recipe_links,
    load_detector_track,
    load_embeddings,
    load_recipe_document,
    load_transcript,
    read_clip_corpus,
    split_sentences,
    write_clip_corpus,
    write_transcript,
)
from .errors import FormatError, PipelineError
from .hmm_aligner import Alignment, align, read_alignment, write_alignment
from .recipe_parser import ParserConfig, parse_recipe, read_recipe, read_recipe_text, write_recipe
from .synth import NoiseSpec, evaluate_alignment, random_recipe, synth_generate
from .visual_refine import refine_clip

EXIT_OK, EXIT_USAGE, EXIT_FORMAT, EXIT_PIPELINE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _config(args) -> Config:
    cfg = read_config(args.config) if args.config else Config()
    return cfg.updated(
        gamma=args.gamma,
        tau=args.tau,
        min_coverage=args.min_coverage,
        max_shift=args.max_shift,
        rank=args.rank,
    )


def _embeddings(args):
    return load_embeddings(args.embeddings) if getattr(args, "embeddings", None) else None


def _load_recipe(args, cfg: Config):
    """A parsed recipe from JSON, a sectioned text file, or a recipe document plus classifier."""
    path = Path(args.recipe)
    parser_cfg = ParserConfig(cfg.canon_threshold, cfg.similarity)
    if path.suffix == ".json":
        head = json.loads(path.read_text(encoding="utf-8") or "{}") if path.exists() else None
        if head is None:
            raise FileNotFoundError(path)
        if head.get("format") == "parsed-recipe":
            return read_recipe(path)
        if not getattr(args, "classifier", None):
            raise UsageError("a recipe document needs --classifier to pick out ingredients and steps")
        doc = load_recipe_document(path)
        model = classifier.load_model(args.classifier)
        if extract_recipe_links(doc.description_sentences) and doc.linked_texts:
            sentences = [s for text in doc.linked_texts for s in split_sentences(text)]
        else:
            sentences = list(doc.description_sentences)
        ingredients, steps, kept = classifier.filter_document(model, sentences)
        if not kept:
            raise PipelineError("document has no ingredient list or no steps")
        return parse_recipe(ingredients, steps, _embeddings(args), parser_cfg)
    ingredients, steps = read_recipe_text(path)
    return parse_recipe(ingredients, steps, _embeddings(args), parser_cfg)


def cmd_classifier_train(args, cfg):
    model = classifier.train(classifier.read_labeled_sentences(args.data), cfg.smoothing)
    classifier.save_model(model, args.out)


def cmd_classifier_eval(args, cfg):
    model = classifier.load_model(args.model)
    data = classifier.read_labeled_sentences(args.data)
    pred = [classifier.classify(model, s)[0] for s, _ in data]
    scores = classifier.precision_recall_f1([label for _, label in data], pred)
    print("class\tprecision\trecall\tf1")
    for c, (p, r, f) in scores.items():
        print(f"{c.value}\t{p:.4f}\t{r:.4f}\t{f:.4f}")


def cmd_parse(args, cfg):
    write_recipe(_load_recipe(args, cfg), args.out)


def cmd_align(args, cfg):
    recipe = _load_recipe(args, cfg)
    transcript = load_transcript(args.transcript, args.video_id)
    al = align(recipe, transcript, cfg.gamma, cfg.similarity, _embeddings(args), cfg.tau)
    write_alignment(al, args.out)
    print(f"aligned {len(al.hulls)}/{recipe.K} steps")


def cmd_label(args, cfg):
    whitelist = None
    if args.whitelist:
        from .text import read_word_list

        whitelist = read_word_list(args.whitelist)
    if args.mode == "keyword":
        if not args.transcript:
            raise UsageError("keyword mode needs --transcript")
        clips = label_keyword(load_transcript(args.transcript, args.video_id), whitelist, args.duration)
    elif args.mode == "hmm":
        if not args.alignment:
            raise UsageError("hmm mode needs --alignment")
        clips = label_hmm(read_alignment(args.alignment))
    else:
        if not args.alignment:
            raise UsageError("hybrid mode needs --alignment")
        al = read_alignment(args.alignment)
        transcript = load_transcript(args.transcript, args.video_id) if args.transcript else al.transcript
        clips = label_hybrid(transcript, whitelist, args.duration, al.segments, al.recipe.K, cfg.min_coverage)
    write_clip_corpus(ClipCorpus(clips), args.out)
    print(f"{len(clips)} clips")


def cmd_refine(args, cfg):
    corpus = read_clip_corpus(args.corpus)
    tracks = {}
    for p in args.track:
        t = load_detector_track(p)
        tracks[t.video_id] = t
    only = next(iter(tracks.values())) if len(tracks) == 1 else None
    out = []
    for c in corpus:
        track = tracks.get(c.video_id, only)
        out.append(refine_clip(track, c, cfg.max_shift) if track is not None else c)
    write_clip_corpus(ClipCorpus(out), args.out)


def cmd_affordance_train(args, cfg):
    model = confidence.train_affordance(read_clip_corpus(args.corpus), cfg.rank)
    confidence.save_model(model, args.out)


def cmd_affordance_query(args, cfg):
    model = confidence.load_model(args.model)
    if args.action not in model.actions:
        raise PipelineError(f"unknown action {args.action!r}")
    objects = [args.object] if args.object else list(model.objects)
    rows = [(o, model.prob(args.action, o)) for o in objects]
    print("object\tprobability")
    for o, p in sorted(rows, key=lambda r: (-(r[1] or 0.0), r[0]))[: args.top]:
        print(f"{o}\t{'-' if p is None else f'{p:.6f}'}")


def cmd_affordance_heatmap(args, cfg):
    confidence.write_heatmap_csv(confidence.load_model(args.model), args.out)


def cmd_confidence(args, cfg):
    corpus = read_clip_corpus(args.corpus)
    model = confidence.load_model(args.model)
    scored = confidence.score_clips(corpus, model, cfg.weights)
    if args.threshold is not None:
        scored, frac = confidence.filter_by_confidence(scored, args.threshold)
        print(f"retained {len(scored)} clips ({frac:.3f})")
    write_clip_corpus(ClipCorpus(scored), args.out)


def cmd_search(args, cfg):
    if not (args.action or args.object):
        raise UsageError("search needs --action or --object")
    query = apps.SearchQuery(args.action, args.object, args.max_results)
    sys.stdout.write(apps.format_results(apps.search(read_clip_corpus(args.corpus), query)))


def cmd_illustrate(args, cfg):
    al = read_alignment(args.alignment)
    track = load_detector_track(args.track) if args.track else None
    apps.write_plan(apps.plan_illustration(al, track), args.out)


def cmd_synth(args, cfg):
    recipe = random_recipe(args.steps, args.words_per_step, args.seed)
    noise = NoiseSpec(args.wer, args.pad, args.seed)
    case = synth_generate(recipe, noise, video_id=args.video_id or f"synth{args.seed}")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_recipe(recipe, out / "recipe.json")
    write_transcript(case.transcript, out / "transcript.tsv")
    write_alignment(Alignment(case.transcript.video_id, recipe, case.transcript, case.truth), out / "truth.json")


def cmd_eval(args, cfg):
    pred, truth = read_alignment(args.predicted), read_alignment(args.truth)
    m = evaluate_alignment(pred.path, truth.path, truth.recipe.K)
    print(f"token_accuracy\t{m['token_accuracy']:.4f}")
    print(f"mean_iou\t{m['mean_iou']:.4f}")
    print(f"coverage\t{m['coverage']:.4f}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="config file (key = value)")
    common.add_argument("--gamma", type=float)
    common.add_argument("--tau", type=float)
    common.add_argument("--min-coverage", type=float)
    common.add_argument("--max-shift", type=float)
    common.add_argument("--rank", type=int)

    p = _Parser(prog="recipealign", description="Align recipes to video transcripts and label clips.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, sp=sub, **kw):
        q = sp.add_parser(name, parents=[common], **kw)
        q.set_defaults(func=func)
        return q

    cl = sub.add_parser("classifier", help="sentence classifier").add_subparsers(dest="action", required=True, parser_class=_Parser)
    q = add("train", cmd_classifier_train, cl)
    q.add_argument("--data", required=True)
    q.add_argument("--out", required=True)
    q = add("eval", cmd_classifier_eval, cl)
    q.add_argument("--model", required=True)
    q.add_argument("--data", required=True)

    def recipe_args(q):
        q.add_argument("--recipe", required=True, help="parsed recipe JSON, [ingredients]/[steps] text, or recipe document JSON")
        q.add_argument("--classifier", help="classifier model for recipe documents")
        q.add_argument("--embeddings")

    q = add("parse", cmd_parse, help="parse a recipe into steps")
    recipe_args(q)
    q.add_argument("--out", required=True)

    q = add("align", cmd_align, help="align a recipe to a transcript")
    recipe_args(q)
    q.add_argument("--transcript", required=True)
    q.add_argument("--video-id")
    q.add_argument("--out", required=True)

    q = add("label", cmd_label, help="label clips")
    q.add_argument("--mode", choices=["keyword", "hmm", "hybrid"], required=True)
    q.add_argument("--transcript")
    q.add_argument("--alignment")
    q.add_argument("--video-id")
    q.add_argument("--duration", type=float)
    q.add_argument("--whitelist", help="word-per-line verb list")
    q.add_argument("--out", required=True)

    q = add("refine", cmd_refine, help="shift clips toward detector evidence")
    q.add_argument("--corpus", required=True)
    q.add_argument("--track", required=True, action="append")
    q.add_argument("--out", required=True)

    af = sub.add_parser("affordance", help="affordance model").add_subparsers(dest="action", required=True, parser_class=_Parser)
    q = add("train", cmd_affordance_train, af)
    q.add_argument("--corpus", required=True)
    q.add_argument("--out", required=True)
    q = add("query", cmd_affordance_query, af)
    q.add_argument("--model", required=True)
    q.add_argument("--action", required=True)
    q.add_argument("--object")
    q.add_argument("--top", type=int, default=10)
    q = add("heatmap", cmd_affordance_heatmap, af)
    q.add_argument("--model", required=True)
    q.add_argument("--out", required=True)

    q = add("confidence", cmd_confidence, help="score clips")
    q.add_argument("--corpus", required=True)
    q.add_argument("--model", required=True)
    q.add_argument("--threshold", type=float)
    q.add_argument("--out", required=True)

    q = add("search", cmd_search, help="find clips by action/object")
    q.add_argument("--corpus", required=True)
    q.add_argument("--action")
    q.add_argument("--object")
    q.add_argument("--max-results", type=int, default=10)

    q = add("illustrate", cmd_illustrate, help="pick a keyframe per step")
    q.add_argument("--alignment", required=True)
    q.add_argument("--track")
    q.add_argument("--out", required=True)

    q = add("synth", cmd_synth, help="generate a synthetic case")
    q.add_argument("--steps", type=int, default=8)
    q.add_argument("--words-per-step", type=int, default=10)
    q.add_argument("--wer", type=float, default=0.0)
    q.add_argument("--pad", type=int, default=20)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--video-id")
    q.add_argument("--out-dir", required=True)

    q = add("eval", cmd_eval, help="score an alignment against truth")
    q.add_argument("--predicted", required=True)
    q.add_argument("--truth", required=True)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        args.func(args, cfg)
    except UsageError as e:
        print(f"recipealign: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, OSError, json.JSONDecodeError) as e:
        print(f"recipealign: input error: {e}", file=sys.stderr)
        return EXIT_FORMAT
    except PipelineError as e:
        print(f"recipealign: {e}", file=sys.stderr)
        return EXIT_PIPELINE
    except ValueError as e:
        print(f"recipealign: invalid value: {e}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
