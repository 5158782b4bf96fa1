"""Command-line entry point: ``nerprobe <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .corpus import ColumnConfig, Corpus, Sentence, build_dictionary, read_conll, write_conll
from .evaluation import EvalReport, score
from .experiment import ExperimentConfig, TaggerConfig, report_render, run
from .perturb import TransformSpec, apply_transform
from .synthgen import SyntheticSpec, generate
from .taggers import load_model, tag_corpus

SPLITS = ("train", "dev", "test")


def _write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _columns(args) -> ColumnConfig:
    return ColumnConfig(token_col=args.token_col, tag_col=args.tag_col)


def cmd_generate(args) -> int:
    knobs = {}
    if args.spec:
        with open(args.spec, encoding="utf-8") as fh:
            knobs = json.load(fh)
    for key in ("n_sentences", "zipf_s", "regularity", "mention_vocab", "n_contexts",
                "ambiguity", "seed"):
        value = getattr(args, key)
        if value is not None:
            knobs[key] = value
    if args.types:
        knobs["types"] = args.types.split(",")
    data = generate(SyntheticSpec.from_dict(knobs))
    out = Path(args.out)
    for split in SPLITS:
        _write_text(out / f"{split}.conll", write_conll(data[split]))
    _write_text(out / "metadata.json", data.metadata_json())
    print(f"wrote {', '.join(f'{s}={len(data[s])}' for s in SPLITS)} sentences to {out}")
    return 0


def cmd_transform(args) -> int:
    cols = _columns(args)
    corpora = {s: read_conll(getattr(args, s), cols, split_name=s)
               for s in SPLITS if getattr(args, s)}
    spec = TransformSpec(args.kind, args.ratio, args.seed)
    done, artifacts = apply_transform(spec, corpora, typed=args.typed,
                                      n_min=args.n_min, n_max=args.n_max)
    out = Path(args.out)
    for split, corpus in done.items():
        _write_text(out / f"{split}.conll", write_conll(corpus))
    if "replacement_map" in artifacts:
        _write_text(out / "replacement_map.tsv", artifacts["replacement_map"].to_tsv())
    print(f"{spec.label}: wrote {', '.join(done)} to {out}")
    return 0


def cmd_train(args) -> int:
    train = read_conll(args.train, _columns(args), split_name="train")
    tagger = TaggerConfig(kind=args.tagger, epochs=args.epochs,
                          word_identity=not args.no_word_identity, window=args.window,
                          casefold=args.casefold)
    model = tagger.train(train, args.seed)
    _write_text(args.out, model.dumps())
    print(f"trained {tagger.name} on {len(train)} sentences -> {args.out}")
    return 0


def cmd_tag(args) -> int:
    with open(args.model, encoding="utf-8") as fh:
        model = load_model(fh.read())
    corpus = read_conll(args.input, _columns(args))
    predicted = Corpus(tuple(Sentence(s.tokens, tuple(p))
                             for s, p in zip(corpus.sentences, tag_corpus(model, corpus))),
                       corpus.split_name)
    _write_text(args.out, write_conll(predicted))
    return 0


def cmd_score(args) -> int:
    cols = _columns(args)
    gold = read_conll(args.gold, cols)
    pred = read_conll(args.pred, cols)
    train = read_conll(args.train, cols)
    if [s.tokens for s in gold.sentences] != [s.tokens for s in pred.sentences]:
        print("error: gold and prediction tokens differ", file=sys.stderr)
        return 2
    report = score(gold, [list(s.mentions) for s in pred.sentences],
                   build_dictionary(train, casefold=args.casefold), typed=args.typed)
    if args.out:
        _write_text(args.out, report.to_json())
    if args.tsv:
        _write_text(args.tsv, report.to_tsv())
    m = report.all.all
    print(f"P={m.precision:.4f} R={m.recall:.4f} F1={m.f1:.4f} "
          f"(InDict F1={report.all.indict.f1:.4f}, OutDict F1={report.all.outdict.f1:.4f})")
    return 0


def cmd_run(args) -> int:
    config = ExperimentConfig.load(args.config)
    if args.output_dir:
        config.output_dir = args.output_dir
    if args.master_seed is not None:
        config.master_seed = args.master_seed
    result = run(config)
    for cell in result.manifest["cells"]:
        line = f"{cell['id']}: {cell['status']}"
        if cell["status"] == "ok":
            line += f" F1={result.reports[cell['id']].all.all.f1 * 100:.2f}"
        else:
            line += f" ({cell['error']})"
        print(line)
    return 0 if result.ok else 1


def cmd_render(args) -> int:
    reports = []
    for path in args.reports:
        with open(path, encoding="utf-8") as fh:
            reports.append(EvalReport.from_json(fh.read()))
    out = Path(args.out_dir)
    for name, text in report_render(reports).items():
        _write_text(out / name, text)
        print(out / name)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nerprobe",
        description="Randomization tests for NER corpora: transform, train, tag, score.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_columns(p):
        p.add_argument("--token-col", type=int, default=0)
        p.add_argument("--tag-col", type=int, default=-1)
        return p

    p = sub.add_parser("generate", help="write a synthetic train/dev/test corpus")
    p.add_argument("--spec", help="JSON file of generator knobs")
    p.add_argument("--n-sentences", type=int)
    p.add_argument("--zipf-s", type=float)
    p.add_argument("--regularity", type=float)
    p.add_argument("--mention-vocab", type=int)
    p.add_argument("--n-contexts", type=int)
    p.add_argument("--ambiguity", type=float)
    p.add_argument("--types", help="comma-separated entity types")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = with_columns(sub.add_parser("transform", help="apply one randomization transform"))
    p.add_argument("--kind", required=True, help="NP, MP, CR, MR or SR")
    p.add_argument("--ratio", type=float)
    p.add_argument("--seed", type=int, default=0)
    for split in SPLITS:
        p.add_argument(f"--{split}", required=split == "train")
    p.add_argument("--typed", action="store_true", help="key NP renaming by (surface, type)")
    p.add_argument("--n-min", type=int, default=1)
    p.add_argument("--n-max", type=int, default=3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_transform)

    p = with_columns(sub.add_parser("train", help="train a baseline tagger"))
    p.add_argument("--tagger", choices=["dict", "perceptron"], default="perceptron")
    p.add_argument("--train", required=True)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--window", type=int, default=2)
    p.add_argument("--no-word-identity", action="store_true",
                   help="context and shape features only")
    p.add_argument("--casefold", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = with_columns(sub.add_parser("tag", help="tag a CoNLL file with a trained model"))
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tag)

    p = with_columns(sub.add_parser("score", help="stratified span P/R/F1"))
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--train", required=True, help="training split defining the dictionary")
    p.add_argument("--typed", action="store_true")
    p.add_argument("--casefold", action="store_true")
    p.add_argument("--out", help="report JSON path")
    p.add_argument("--tsv", help="type x strata TSV path")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("run", help="run an experiment config")
    p.add_argument("--config", required=True)
    p.add_argument("--output-dir")
    p.add_argument("--master-seed", type=int)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("render", help="render report JSONs as TSV tables")
    p.add_argument("reports", nargs="+")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
