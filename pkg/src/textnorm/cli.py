"""Command-line entry point: ``textnorm <subcommand> ...``.

Exit status is 0 on success, 1 on a usage error and 2 on a data error
(missing or malformed input files).
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import corpus as corpus_mod
from .corpus import CorpusError, downsample_trivial, extract_windows, overlap_report, read_corpus
from .decoder import FilterBank, normalize_sentence, oracle_accuracy
from .evaluation import (
    AlignmentError,
    compare_runs,
    dump_errors,
    plot_comparison,
    plot_report,
    read_predictions,
    read_report,
    score_predictions,
    seen_unseen_scores,
    write_comparison,
    write_predictions,
    write_report,
)
from .grammars import GrammarError
from .scorers import (
    EmpiricalChannel,
    NgramModel,
    make_source_channel_scorer,
    perplexity,
    train_channel,
    train_ngram,
    verbalized_words,
)

log = logging.getLogger("textnorm")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


@dataclass
class RunConfig:
    """Inputs of a run; every referenced path must exist before work starts."""

    inputs: dict[str, Path] = field(default_factory=dict)

    @classmethod
    def from_args(cls, args: argparse.Namespace, names: Sequence[str]) -> "RunConfig":
        return cls({n: Path(getattr(args, n)) for n in names if getattr(args, n, None)})

    def validate(self) -> "RunConfig":
        missing = [f"--{k.replace('_', '-')} {p}" for k, p in self.inputs.items() if not p.exists()]
        if missing:
            raise DataError("missing input: " + ", ".join(missing))
        return self


def _bank(args) -> FilterBank | None:
    if not getattr(args, "filter", True):
        return None
    if getattr(args, "filters", None):
        return FilterBank.load(args.filters)
    return FilterBank.default(getattr(args, "measures", None), getattr(args, "currencies", None))


def _read_channel(path, bank) -> EmpiricalChannel:
    with open(path, encoding="utf-8") as f:
        return EmpiricalChannel.read(f, bank)


def _read_lm(path) -> NgramModel:
    with open(path, encoding="utf-8") as f:
        return NgramModel.read(f)


# ---------------------------------------------------------------------------
# subcommands


def cmd_train_channel(args) -> None:
    RunConfig.from_args(args, ["train"]).validate()
    channel = train_channel(read_corpus(args.train))
    with open(args.out, "w", encoding="utf-8") as f:
        channel.write(f)
    print(f"channel: {len(channel.table)} token types -> {args.out}")


def cmd_train_lm(args) -> None:
    RunConfig.from_args(args, ["train", "heldout"]).validate()
    streams = [verbalized_words(s) for s in read_corpus(args.train)]
    lm = train_ngram(streams, order=args.order, katz_threshold=args.katz_threshold,
                     min_count=args.min_count, vocab_cap=args.vocab_cap)
    with open(args.out, "w", encoding="utf-8") as f:
        lm.write(f)
    print(f"lm: order {lm.order}, |V| {len(lm.vocab)}, train perplexity {perplexity(lm, streams):.3f}")
    if args.heldout:
        held = [verbalized_words(s) for s in read_corpus(args.heldout)]
        print(f"heldout perplexity {perplexity(lm, held):.3f}")


def cmd_train_neural(args) -> None:
    from .neural import ModelConfig, train

    RunConfig.from_args(args, ["train"]).validate()
    sentences = read_corpus(args.train)
    examples = [w for s in sentences for w in extract_windows(s, args.width)]
    examples = downsample_trivial(examples, args.keep_rate, args.seed)
    if args.limit:
        examples = examples[:args.limit]
    config = ModelConfig(encoder_state_dim=args.state_dim, attention_dim=args.attention_dim)
    model = train(examples, config, epochs=args.epochs, seed=args.seed, lr=args.lr,
                  target_accuracy=args.target_accuracy)
    model.save(args.out)
    print(f"neural: {len(examples)} examples, {len(model.history)} epochs, "
          f"final loss {model.history[-1]:.4f} -> {args.out}")


def cmd_build_filters(args) -> None:
    RunConfig.from_args(args, ["measures", "currencies"]).validate()
    bank = FilterBank.default(args.measures, args.currencies)
    bank.save(args.out)
    for name, fst in bank.filters:
        print(f"{name}: {fst.num_states} states, {fst.num_arcs} arcs")


def _scorer(args, bank):
    if args.neural:
        from .neural import NeuralNormalizer, as_scorer

        if args.mode == "exp1":
            raise UsageError("exp1 decoding needs --channel and --lm, not --neural")
        return as_scorer(NeuralNormalizer.load(args.neural))
    if not args.channel:
        raise UsageError("normalize needs --channel (and --lm) or --neural")
    channel = _read_channel(args.channel, bank)
    lm = _read_lm(args.lm) if args.lm else None
    return make_source_channel_scorer(channel, lm, args.lm_weight)


def cmd_normalize(args) -> None:
    RunConfig.from_args(args, ["input", "channel", "lm", "neural", "filters"]).validate()
    sentences = read_corpus(args.input)
    bank = _bank(args)
    scorer = _scorer(args, bank)
    predicted = []
    flagged = 0
    for s in sentences:
        for p in normalize_sentence(s, scorer, bank, args.mode, width=args.width, beam=args.beam,
                                    max_len=args.max_len, prune=(args.hi, args.lo, args.n)):
            predicted.append(p.output)
            flagged += p.flagged
    with open(args.out, "w", encoding="utf-8") as f:
        write_predictions(sentences, predicted, f)
    print(f"normalized {len(predicted)} tokens ({flagged} flagged) -> {args.out}")


def _load_scored(args):
    RunConfig.from_args(args, ["gold", "pred", "train"]).validate()
    gold = read_corpus(args.gold)
    with open(args.pred, encoding="utf-8") as f:
        pred_gold, predicted = read_predictions(f)
    g = [(r.cls, r.input) for r in corpus_mod.records(gold)]
    p = [(r.cls, r.input) for r in corpus_mod.records(pred_gold)]
    if g != p:
        raise AlignmentError("prediction file does not align with the gold corpus")
    return gold, predicted


def cmd_evaluate(args) -> None:
    gold, predicted = _load_scored(args)
    report = score_predictions(gold, predicted)
    with open(args.report, "w", encoding="utf-8") as f:
        write_report(report, f)
    figure = Path(args.figure) if args.figure else Path(args.report).with_suffix(".png")
    plot_report(report, figure)
    write_report(report, sys.stdout)
    print(f"report -> {args.report}; figure -> {figure}")
    if args.train:
        su = seen_unseen_scores(read_corpus(args.train), gold, predicted)
        for name, part in (("seen", su.seen), ("unseen", su.unseen)):
            acc = "–" if part.accuracy is None else f"{part.accuracy:.3f}"
            print(f"{name}\t{part.n}\t{acc}")
    if args.dump_errors:
        with open(args.dump_errors, "w", encoding="utf-8") as f:
            n = dump_errors(gold, predicted, f)
        print(f"{n} errors -> {args.dump_errors}")


def cmd_oracle(args) -> None:
    RunConfig.from_args(args, ["channel", "test", "pred"]).validate()
    test = read_corpus(args.test)
    channel = _read_channel(args.channel, _bank(args))
    oracle = oracle_accuracy(channel, test, args.hi, args.lo, args.n)
    print(f"oracle\t{oracle:.4f}")
    if args.pred:
        with open(args.pred, encoding="utf-8") as f:
            _, predicted = read_predictions(f)
        decoded = score_predictions(test, predicted).all
        total = decoded.n + decoded.dropped
        acc = decoded.correct / total if total else 0.0
        print(f"decoded\t{acc:.4f}")
        if acc > oracle + 1e-12:
            raise DataError(f"decoded accuracy {acc:.4f} exceeds oracle {oracle:.4f}")


def cmd_overlap(args) -> None:
    RunConfig.from_args(args, ["train", "test"]).validate()
    r = overlap_report(read_corpus(args.train), read_corpus(args.test))
    print(f"seen\t{r.seen_count}\nunseen\t{r.unseen_count}\nseen_fraction\t{r.seen_fraction:.4f}")


def cmd_compare(args) -> None:
    RunConfig.from_args(args, ["a", "b"]).validate()
    with open(args.a, encoding="utf-8") as fa, open(args.b, encoding="utf-8") as fb:
        deltas = compare_runs(read_report(fa), read_report(fb))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            write_comparison(deltas, f)
        figure = Path(args.figure) if args.figure else Path(args.out).with_suffix(".png")
        plot_comparison(deltas, figure, (Path(args.a).stem, Path(args.b).stem))
    write_comparison(deltas, sys.stdout)


# ---------------------------------------------------------------------------
# parser


def _prune_args(p) -> None:
    p.add_argument("--hi", type=float, default=0.98, help="confidence short-circuit")
    p.add_argument("--lo", type=float, default=0.05, help="pruning floor")
    p.add_argument("--n", type=int, default=5, help="entries kept per position")


def _filter_args(p) -> None:
    p.add_argument("--filter", action=argparse.BooleanOptionalAction, default=True,
                   help="constrain digit/currency tokens with the covering grammars")
    p.add_argument("--filters", help="directory written by build-filters")
    p.add_argument("--measures", help="measure lexicon TSV")
    p.add_argument("--currencies", help="currency lexicon TSV")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="textnorm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train-channel", help="estimate the empirical channel")
    p.add_argument("--train", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_channel)

    p = sub.add_parser("train-lm", help="train a Katz back-off n-gram model")
    p.add_argument("--train", required=True)
    p.add_argument("--heldout")
    p.add_argument("--out", required=True)
    p.add_argument("--order", type=int, default=5)
    p.add_argument("--katz-threshold", type=int, default=5)
    p.add_argument("--min-count", type=int, default=2)
    p.add_argument("--vocab-cap", type=int, default=10000)
    p.set_defaults(func=cmd_train_lm)

    p = sub.add_parser("train-neural", help="train the attentional encoder-decoder")
    p.add_argument("--train", required=True)
    p.add_argument("--out", required=True, help="checkpoint directory")
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--width", type=int, default=3)
    p.add_argument("--keep-rate", type=float, default=0.1)
    p.add_argument("--limit", type=int, help="use only the first N examples")
    p.add_argument("--state-dim", type=int, default=64)
    p.add_argument("--attention-dim", type=int, default=64)
    p.add_argument("--target-accuracy", type=float)
    p.set_defaults(func=cmd_train_neural)

    p = sub.add_parser("build-filters", help="compile MONEY and MEASURE covering grammars")
    p.add_argument("--measures")
    p.add_argument("--currencies")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_build_filters)

    p = sub.add_parser("normalize", help="predict spoken forms for a corpus")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=("exp1", "exp2"), default="exp2")
    p.add_argument("--channel")
    p.add_argument("--lm")
    p.add_argument("--lm-weight", type=float, default=1.0)
    p.add_argument("--neural", help="checkpoint directory written by train-neural")
    p.add_argument("--width", type=int, default=3)
    p.add_argument("--beam", type=int, default=8)
    p.add_argument("--max-len", type=int, default=20)
    _prune_args(p)
    _filter_args(p)
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("evaluate", help="per-class accuracy report")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--figure", help="PNG path (default: beside the report)")
    p.add_argument("--train", help="training corpus for the seen/unseen split")
    p.add_argument("--dump-errors", help="write mispredicted tokens to this TSV")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("oracle", help="share of gold outputs surviving channel pruning")
    p.add_argument("--channel", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--pred", help="predictions to check against the oracle bound")
    _prune_args(p)
    _filter_args(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("overlap", help="train/test token overlap")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.set_defaults(func=cmd_overlap)

    p = sub.add_parser("compare", help="per-class accuracy deltas between two reports")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--out")
    p.add_argument("--figure")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        print(f"textnorm: {exc}", file=sys.stderr)
        return 1
    except (DataError, CorpusError, GrammarError, AlignmentError, OSError, ValueError) as exc:
        print(f"textnorm: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
