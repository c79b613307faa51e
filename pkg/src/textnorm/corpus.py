"""Written-to-spoken corpus: parsing, splitting, windowing, downsampling.

File format, one token per line::

    CLASS<TAB>INPUT<TAB>OUTPUT

with sentences terminated by a line holding exactly ``<eos>``. OUTPUT words
are separated by single spaces.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence, TextIO

import numpy as np

SELF = "<self>"
SIL = "sil"
EOS_LINE = "<eos>"
NORM_OPEN = "<norm>"
NORM_CLOSE = "</norm>"


class SemioticClass(str, enum.Enum):
    PLAIN = "PLAIN"
    PUNCT = "PUNCT"
    DATE = "DATE"
    TRANS = "TRANS"
    LETTERS = "LETTERS"
    CARDINAL = "CARDINAL"
    VERBATIM = "VERBATIM"
    MEASURE = "MEASURE"
    ORDINAL = "ORDINAL"
    DECIMAL = "DECIMAL"
    ELECTRONIC = "ELECTRONIC"
    DIGIT = "DIGIT"
    MONEY = "MONEY"
    FRACTION = "FRACTION"
    TIME = "TIME"
    ADDRESS = "ADDRESS"

    @classmethod
    def parse(cls, label: str) -> "SemioticClass":
        try:
            return cls(label)
        except ValueError:
            raise ValueError(f"unknown semiotic class {label!r}") from None


class CorpusError(ValueError):
    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}" if lineno is not None else message)


@dataclass(frozen=True)
class TokenRecord:
    cls: SemioticClass
    input: str
    output: tuple[str, ...]

    def __post_init__(self):
        if not self.input:
            raise ValueError("empty input token")
        if not self.output or any(not w for w in self.output):
            raise ValueError("empty output word")
        if len(self.output) > 1 and (SELF in self.output or SIL in self.output):
            raise ValueError(f"{SELF} and {SIL} must be the only output word")

    @property
    def is_trivial(self) -> bool:
        return self.output in ((SELF,), (SIL,))

    def spoken(self) -> tuple[str, ...]:
        """Output words with ``<self>`` replaced by the written token."""
        return expand_self(self.output, self.input)


def expand_self(words: Sequence[str], token: str) -> tuple[str, ...]:
    return tuple(token if w == SELF else w for w in words)


def outputs_match(predicted: Sequence[str], gold: Sequence[str], token: str) -> bool:
    """Exact match after ``<self>`` expansion, compared as space-joined strings
    so a written token with internal spaces matches its own spelling."""
    return " ".join(expand_self(predicted, token)) == " ".join(expand_self(gold, token))


@dataclass(frozen=True)
class Sentence:
    records: tuple[TokenRecord, ...]

    def __post_init__(self):
        if not self.records:
            raise ValueError("empty sentence")

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[TokenRecord]:
        return iter(self.records)

    def __getitem__(self, i: int) -> TokenRecord:
        return self.records[i]


def parse_corpus(stream: Iterable[str]) -> list[Sentence]:
    sentences: list[Sentence] = []
    pending: list[TokenRecord] = []
    for lineno, raw in enumerate(stream, 1):
        line = raw.rstrip("\n").rstrip("\r")
        if line == EOS_LINE:
            if not pending:
                raise CorpusError("empty sentence", lineno)
            sentences.append(Sentence(tuple(pending)))
            pending = []
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise CorpusError(f"expected 3 tab-separated columns, got {len(parts)}", lineno)
        label, token, output = parts
        if not token or not output:
            raise CorpusError("empty field", lineno)
        try:
            record = TokenRecord(SemioticClass.parse(label), token, tuple(output.split(" ")))
        except ValueError as exc:
            raise CorpusError(str(exc), lineno) from None
        pending.append(record)
    if pending:
        raise CorpusError("missing <eos> after final sentence")
    return sentences


def read_corpus(path) -> list[Sentence]:
    with open(path, encoding="utf-8") as f:
        return parse_corpus(f)


def serialize_corpus(sentences: Iterable[Sentence], stream: TextIO) -> None:
    for sentence in sentences:
        for r in sentence:
            stream.write(f"{r.cls.value}\t{r.input}\t{' '.join(r.output)}\n")
        stream.write(EOS_LINE + "\n")


def write_corpus(sentences: Iterable[Sentence], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        serialize_corpus(sentences, f)


def records(sentences: Iterable[Sentence]) -> Iterator[TokenRecord]:
    for s in sentences:
        yield from s


# ---------------------------------------------------------------------------
# splitting


@dataclass(frozen=True)
class SplitSpec:
    train_files: frozenset[int]
    dev_files: frozenset[int]
    test_files: frozenset[int]
    test_token_limit: int | None = None

    @classmethod
    def contiguous(cls, n_files: int, train: float = 0.9, dev: float = 0.05,
                   test_token_limit: int | None = None) -> "SplitSpec":
        n_train = round(n_files * train)
        n_dev = round(n_files * dev)
        return cls(frozenset(range(n_train)), frozenset(range(n_train, n_train + n_dev)),
                   frozenset(range(n_train + n_dev, n_files)), test_token_limit)


@dataclass
class CorpusSplit:
    train: list[Sentence] = field(default_factory=list)
    dev: list[Sentence] = field(default_factory=list)
    test: list[Sentence] = field(default_factory=list)


def split_corpus(files: Sequence[Sequence[Sentence]], spec: SplitSpec) -> CorpusSplit:
    """Assign files to train/dev/test.

    Only the final test file feeds the test corpus when a token limit is
    set: its first ``test_token_limit`` records, extended to the end of the
    sentence the limit falls in.
    """
    sets = (spec.train_files, spec.dev_files, spec.test_files)
    for i, a in enumerate(sets):
        for b in sets[i + 1:]:
            if a & b:
                raise ValueError(f"split sets overlap on files {sorted(a & b)}")
    for idx in spec.train_files | spec.dev_files | spec.test_files:
        if not 0 <= idx < len(files):
            raise ValueError(f"file index {idx} out of range")

    def gather(indices) -> list[Sentence]:
        return [s for i in sorted(indices) for s in files[i]]

    out = CorpusSplit(gather(spec.train_files), gather(spec.dev_files))
    if spec.test_token_limit is None:
        out.test = gather(spec.test_files)
    elif spec.test_files:
        remaining = spec.test_token_limit
        for s in files[max(spec.test_files)]:
            if remaining <= 0:
                break
            out.test.append(s)
            remaining -= len(s)
    return out


# ---------------------------------------------------------------------------
# windowed examples


@dataclass(frozen=True)
class WindowedExample:
    left: tuple[str, ...]
    token: str
    right: tuple[str, ...]
    target: tuple[str, ...]
    cls: SemioticClass | None = None

    @property
    def source(self) -> str:
        return " ".join((*self.left, NORM_OPEN, self.token, NORM_CLOSE, *self.right))

    def source_symbols(self) -> list[str]:
        """Character sequence of the source, with the two tags kept atomic."""
        out: list[str] = []
        for k, word in enumerate((*self.left, NORM_OPEN, self.token, NORM_CLOSE, *self.right)):
            if k:
                out.append(" ")
            if word in (NORM_OPEN, NORM_CLOSE):
                out.append(word)
            else:
                out.extend(word)
        return out

    @property
    def is_trivial(self) -> bool:
        return self.target in ((SELF,), (SIL,))


def extract_windows(sentence: Sentence, width: int = 3) -> list[WindowedExample]:
    if width < 0:
        raise ValueError("width must be non-negative")
    inputs = [r.input for r in sentence]
    out = []
    for i, r in enumerate(sentence):
        left = tuple(inputs[max(0, i - width):i])
        right = tuple(inputs[i + 1:i + 1 + width])
        out.append(WindowedExample(left, r.input, right, r.output, r.cls))
    return out


def downsample_trivial(examples: Sequence[WindowedExample], keep_rate: float = 0.1,
                       seed: int = 0) -> list[WindowedExample]:
    """Keep each ``<self>``/``sil`` example with probability ``keep_rate``.

    The draw for example ``i`` depends only on ``(seed, i)``: Philox is a
    counter-based generator, so the i-th uniform of the stream is fixed.
    """
    if not 0.0 <= keep_rate <= 1.0:
        raise ValueError("keep_rate must be in [0, 1]")
    u = np.random.Generator(np.random.Philox(key=seed)).random(len(examples))
    return [ex for ex, x in zip(examples, u) if not ex.is_trivial or x < keep_rate]


# ---------------------------------------------------------------------------
# overlap


@dataclass(frozen=True)
class OverlapReport:
    seen_count: int
    unseen_count: int

    @property
    def seen_fraction(self) -> float:
        total = self.seen_count + self.unseen_count
        return self.seen_count / total if total else 0.0


def overlap_report(train: Iterable[Sentence], test: Iterable[Sentence]) -> OverlapReport:
    vocab = {r.input for r in records(train)}
    seen = unseen = 0
    for r in records(test):
        if r.input in vocab:
            seen += 1
        else:
            unseen += 1
    return OverlapReport(seen, unseen)
