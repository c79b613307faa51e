"""Per-class accuracy reports, seen/unseen breakdowns and run comparisons."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, TextIO

from .corpus import (CorpusError, SemioticClass, Sentence, TokenRecord, outputs_match,
                     parse_corpus, records)

ABSENT = "<ABSENT>"
ALL = "ALL"
UNDEFINED = "–"
REPORT_HEADER = ("CLASS", "N", "CORRECT", "ACCURACY", "DROPPED")
COMPARE_HEADER = ("CLASS", "N_A", "ACCURACY_A", "N_B", "ACCURACY_B", "DELTA", "CHANGED")

Prediction = tuple[str, ...] | None


@dataclass
class ClassScore:
    n: int = 0
    correct: int = 0
    dropped: int = 0

    @property
    def accuracy(self) -> float | None:
        return self.correct / self.n if self.n else None

    def __add__(self, other: "ClassScore") -> "ClassScore":
        return ClassScore(self.n + other.n, self.correct + other.correct,
                          self.dropped + other.dropped)


@dataclass
class AccuracyReport:
    """Counts per semiotic class. Dropped tokens are excluded from ``n``."""

    classes: dict[SemioticClass, ClassScore] = field(
        default_factory=lambda: {c: ClassScore() for c in SemioticClass})

    @property
    def all(self) -> ClassScore:
        total = ClassScore()
        for score in self.classes.values():
            total = total + score
        return total

    def rows(self) -> list[tuple[str, ClassScore]]:
        return [(ALL, self.all)] + [(c.value, self.classes[c]) for c in SemioticClass]

    def __getitem__(self, key: SemioticClass | str) -> ClassScore:
        if key == ALL:
            return self.all
        return self.classes[SemioticClass.parse(key) if isinstance(key, str) else key]


class AlignmentError(ValueError):
    pass


def _fmt(x: float | None) -> str:
    return UNDEFINED if x is None else f"{x:.3f}"


def score_predictions(gold: Iterable[Sentence] | Iterable[TokenRecord],
                      predicted: Sequence[Prediction]) -> AccuracyReport:
    """Exact-match scoring after ``<self>`` expansion; ``None`` predictions are dropped."""
    gold_records = _flatten(gold)
    if len(gold_records) != len(predicted):
        raise AlignmentError(f"{len(gold_records)} gold tokens but {len(predicted)} predictions")
    report = AccuracyReport()
    for r, p in zip(gold_records, predicted):
        score = report.classes[r.cls]
        if p is None:
            score.dropped += 1
            continue
        score.n += 1
        score.correct += outputs_match(p, r.output, r.input)
    return report


def _flatten(gold) -> list[TokenRecord]:
    out: list[TokenRecord] = []
    for item in gold:
        if isinstance(item, TokenRecord):
            out.append(item)
        else:
            out.extend(item)
    return out


@dataclass(frozen=True)
class SeenUnseen:
    seen: ClassScore
    unseen: ClassScore

    @property
    def seen_accuracy(self) -> float | None:
        return self.seen.accuracy

    @property
    def unseen_accuracy(self) -> float | None:
        return self.unseen.accuracy


def seen_unseen_scores(train: Iterable[Sentence], gold: Iterable[Sentence],
                       predicted: Sequence[Prediction]) -> SeenUnseen:
    vocab = {r.input for r in records(train)}
    gold_records = _flatten(gold)
    if len(gold_records) != len(predicted):
        raise AlignmentError(f"{len(gold_records)} gold tokens but {len(predicted)} predictions")
    seen, unseen = ClassScore(), ClassScore()
    for r, p in zip(gold_records, predicted):
        part = seen if r.input in vocab else unseen
        if p is None:
            part.dropped += 1
        else:
            part.n += 1
            part.correct += outputs_match(p, r.output, r.input)
    return SeenUnseen(seen, unseen)


@dataclass(frozen=True)
class ClassDelta:
    name: str
    a: ClassScore
    b: ClassScore

    @property
    def delta(self) -> float | None:
        if self.a.accuracy is None or self.b.accuracy is None:
            return None
        return self.b.accuracy - self.a.accuracy

    @property
    def changed(self) -> bool:
        return self.delta is not None and abs(self.delta) > 0


def compare_runs(a: AccuracyReport, b: AccuracyReport) -> list[ClassDelta]:
    if set(a.classes) != set(b.classes):
        raise ValueError("reports cover different classes")
    rows_b = dict(b.rows())
    return [ClassDelta(name, score, rows_b[name]) for name, score in a.rows()]


# ---------------------------------------------------------------------------
# serialization


def write_report(report: AccuracyReport, stream: TextIO) -> None:
    stream.write("\t".join(REPORT_HEADER) + "\n")
    for name, s in report.rows():
        stream.write(f"{name}\t{s.n}\t{s.correct}\t{_fmt(s.accuracy)}\t{s.dropped}\n")


def read_report(stream: Iterable[str]) -> AccuracyReport:
    report = AccuracyReport()
    lines = iter(stream)
    header = next(lines, "").rstrip("\n").split("\t")
    if tuple(header) != REPORT_HEADER:
        raise CorpusError("not an accuracy report", 1)
    for lineno, line in enumerate(lines, 2):
        parts = line.rstrip("\n").split("\t")
        if len(parts) != len(REPORT_HEADER):
            raise CorpusError("wrong column count", lineno)
        if parts[0] == ALL:
            continue
        try:
            report.classes[SemioticClass.parse(parts[0])] = ClassScore(
                int(parts[1]), int(parts[2]), int(parts[4]))
        except ValueError as exc:
            raise CorpusError(str(exc), lineno) from None
    return report


def write_comparison(deltas: Sequence[ClassDelta], stream: TextIO) -> None:
    stream.write("\t".join(COMPARE_HEADER) + "\n")
    for d in deltas:
        delta = UNDEFINED if d.delta is None else f"{d.delta:+.3f}"
        stream.write(f"{d.name}\t{d.a.n}\t{_fmt(d.a.accuracy)}\t{d.b.n}\t{_fmt(d.b.accuracy)}"
                     f"\t{delta}\t{'*' if d.changed else ''}\n")


def format_prediction(p: Prediction) -> str:
    return ABSENT if p is None else " ".join(p)


def parse_prediction(field: str) -> Prediction:
    return None if field == ABSENT else tuple(field.split(" "))


def write_predictions(sentences: Iterable[Sentence], predicted: Sequence[Prediction],
                      stream: TextIO) -> None:
    """Corpus format with a fourth PREDICTED column."""
    it = iter(predicted)
    for sentence in sentences:
        for r in sentence:
            stream.write(f"{r.cls.value}\t{r.input}\t{' '.join(r.output)}\t"
                         f"{format_prediction(next(it))}\n")
        stream.write("<eos>\n")


def read_predictions(stream: Iterable[str]) -> tuple[list[Sentence], list[Prediction]]:
    gold_lines: list[str] = []
    predicted: list[Prediction] = []
    for lineno, raw in enumerate(stream, 1):
        line = raw.rstrip("\n")
        if line == "<eos>":
            gold_lines.append(line)
            continue
        parts = line.split("\t")
        if len(parts) != 4 or not parts[3]:
            raise CorpusError("expected 4 tab-separated columns", lineno)
        gold_lines.append("\t".join(parts[:3]))
        predicted.append(parse_prediction(parts[3]))
    return parse_corpus(gold_lines), predicted


def dump_errors(gold: Iterable[Sentence], predicted: Sequence[Prediction],
                stream: TextIO) -> int:
    stream.write("CLASS\tINPUT\tGOLD\tPREDICTED\n")
    n = 0
    for r, p in zip(_flatten(gold), predicted):
        if p is None or not outputs_match(p, r.output, r.input):
            stream.write(f"{r.cls.value}\t{r.input}\t{' '.join(r.output)}\t{format_prediction(p)}\n")
            n += 1
    return n


# ---------------------------------------------------------------------------
# figures


def plot_report(report: AccuracyReport, path, title: str | None = None) -> Path:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = [(name, s) for name, s in report.rows() if s.n]
    fig, ax = plt.subplots(figsize=(7, 0.3 * len(rows) + 1.2))
    names = [name for name, _ in rows][::-1]
    acc = [s.accuracy for _, s in rows][::-1]
    ax.barh(names, acc, color="0.4")
    for y, (a, (_, s)) in enumerate(zip(acc, rows[::-1])):
        ax.text(min(a, 1.0) + 0.01, y, f"{a:.3f} (N={s.n})", va="center", fontsize=7)
    ax.set_xlim(0, 1.25)
    ax.set_xlabel("accuracy")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


def plot_comparison(deltas: Sequence[ClassDelta], path, labels: tuple[str, str] = ("A", "B")) -> Path:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    rows = [d for d in deltas if d.a.n or d.b.n]
    y = np.arange(len(rows))[::-1]
    fig, ax = plt.subplots(figsize=(7, 0.3 * len(rows) + 1.2))
    acc_a = [d.a.accuracy or 0.0 for d in rows]
    acc_b = [d.b.accuracy or 0.0 for d in rows]
    ax.barh(y + 0.2, acc_a, height=0.4, color="0.7", label=labels[0])
    ax.barh(y - 0.2, acc_b, height=0.4, color="0.3", label=labels[1])
    ax.set_yticks(y, [d.name + (" *" if d.changed else "") for d in rows])
    ax.set_xlim(0, 1.05)
    ax.set_xlabel("accuracy")
    ax.legend(loc="lower left", fontsize=7)
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out
