"""Contextual scorers: an empirical channel, a Katz back-off n-gram LM, and
the source-channel combination of the two."""

from __future__ import annotations

import abc
import math
import unicodedata
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Any, Hashable, Iterable, Sequence, TextIO

from .corpus import SELF, SIL, Sentence, WindowedExample, records

END = "</s>"
BOS = "<s>"
UNK = "<unk>"

NEG_INF = -math.inf


def logsumexp(values: Iterable[float]) -> float:
    vals = [v for v in values if v != NEG_INF]
    if not vals:
        return NEG_INF
    m = max(vals)
    return m + math.log(math.fsum(math.exp(v - m) for v in vals))


class ContextualScorer(abc.ABC):
    """Incremental scorer of output-word sequences for one token in context.

    A scorer hands out opaque per-hypothesis states. ``next_log_probs``
    gives log-probabilities of every possible next word, with :data:`END`
    standing for end-of-sequence.
    """

    @abc.abstractmethod
    def start(self, window: WindowedExample) -> Hashable:
        ...

    @abc.abstractmethod
    def next_log_probs(self, state) -> dict[str, float]:
        ...

    @abc.abstractmethod
    def advance(self, state, word: str):
        ...

    def extend(self, state, word: str) -> tuple[Any, float]:
        return self.advance(state, word), self.next_log_probs(state).get(word, NEG_INF)

    def finish(self, state) -> float:
        return self.next_log_probs(state).get(END, NEG_INF)


# ---------------------------------------------------------------------------
# channel


def _is_punct(token: str) -> bool:
    return len(token) == 1 and unicodedata.category(token)[0] == "P"


@dataclass
class EmpiricalChannel:
    """P(output sequence | written token) from counts, with fallbacks for unseen tokens.

    ``bank`` is anything with a ``verbalizations(token)`` method (a filter
    bank); it covers unseen tokens that contain digits.
    """

    table: dict[str, dict[tuple[str, ...], float]]
    bank: Any = None

    def posteriors(self, token: str) -> list[tuple[tuple[str, ...], float]]:
        dist = self.table.get(token)
        if dist is None:
            dist = self._fallback(token)
        return sorted(dist.items(), key=lambda kv: (-kv[1], kv[0]))

    def _fallback(self, token: str) -> dict[tuple[str, ...], float]:
        if _is_punct(token):
            return {(SIL,): 1.0}
        if any(c.isdigit() for c in token) and self.bank is not None:
            options = self.bank.verbalizations(token)
            if options:
                return {seq: 1.0 / len(options) for seq in options}
        return {(SELF,): 1.0}

    def __contains__(self, token: str) -> bool:
        return token in self.table

    def with_bank(self, bank) -> "EmpiricalChannel":
        return EmpiricalChannel(self.table, bank)

    def write(self, stream: TextIO) -> None:
        for token in sorted(self.table):
            for seq, p in sorted(self.table[token].items()):
                stream.write(f"{token}\t{' '.join(seq)}\t{p!r}\n")

    @classmethod
    def read(cls, stream: Iterable[str], bank=None) -> "EmpiricalChannel":
        table: dict[str, dict[tuple[str, ...], float]] = defaultdict(dict)
        for lineno, line in enumerate(stream, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: expected 'token<TAB>output<TAB>prob'")
            table[parts[0]][tuple(parts[1].split(" "))] = float(parts[2])
        return cls(dict(table), bank)


def train_channel(corpus: Iterable[Sentence], bank=None) -> EmpiricalChannel:
    counts: dict[str, Counter] = defaultdict(Counter)
    for r in records(corpus):
        counts[r.input][r.output] += 1
    if not counts:
        raise ValueError("cannot train a channel on an empty corpus")
    table = {}
    for token, c in counts.items():
        total = sum(c.values())
        table[token] = {seq: n / total for seq, n in c.items()}
    return EmpiricalChannel(table, bank)


def channel_posteriors(channel: EmpiricalChannel, token: str) -> list[tuple[tuple[str, ...], float]]:
    return channel.posteriors(token)


# ---------------------------------------------------------------------------
# n-gram language model


def verbalized_words(sentence: Sentence) -> list[str]:
    """The word stream an LM sees: the token itself for ``<self>``, else the output."""
    out: list[str] = []
    for r in sentence:
        out.extend(r.spoken())
    return out


@dataclass
class NgramModel:
    """Back-off n-gram model stored as explicit log-probabilities and back-off weights.

    ``logprobs`` maps full n-grams (context + word) to natural-log
    probabilities; ``backoffs`` maps contexts to log back-off weights.
    """

    order: int
    logprobs: dict[tuple[str, ...], float]
    backoffs: dict[tuple[str, ...], float] = field(default_factory=dict)
    sentence_boundaries: bool = True

    def __post_init__(self):
        self.vocab = frozenset(g[0] for g in self.logprobs if len(g) == 1)

    def map_word(self, w: str) -> str:
        return w if w in self.vocab else UNK

    def predictable(self) -> list[str]:
        """Every word the model assigns probability to (the sum-to-one support)."""
        return sorted(self.vocab)

    def logprob(self, word: str, context: Sequence[str] = ()) -> float:
        word = self.map_word(word)
        ctx = tuple(c if c == BOS else self.map_word(c) for c in context)
        ctx = ctx[max(0, len(ctx) - (self.order - 1)):] if self.order > 1 else ()
        acc = 0.0
        while True:
            lp = self.logprobs.get(ctx + (word,))
            if lp is not None:
                return acc + lp
            if not ctx:
                return NEG_INF
            acc += self.backoffs.get(ctx, 0.0)
            ctx = ctx[1:]

    def prob(self, word: str, context: Sequence[str] = ()) -> float:
        return math.exp(self.logprob(word, context))

    def sentence_logprob(self, words: Sequence[str]) -> tuple[float, int]:
        """Total log-probability and number of predicted tokens."""
        hist: list[str] = [BOS] if self.sentence_boundaries else []
        total = 0.0
        events = list(words) + ([END] if self.sentence_boundaries else [])
        for w in events:
            total += self.logprob(w, hist)
            hist.append(self.map_word(w))
        return total, len(events)

    def contexts(self) -> list[tuple[str, ...]]:
        return sorted({g[:-1] for g in self.logprobs if len(g) > 1})

    def write(self, stream: TextIO) -> None:
        stream.write(f"# order={self.order}\n")
        stream.write(f"# sentence_boundaries={int(self.sentence_boundaries)}\n")
        keys = sorted(set(self.logprobs) | set(self.backoffs), key=lambda g: (len(g), g))
        for g in keys:
            lp = self.logprobs.get(g, NEG_INF)
            bo = self.backoffs.get(g)
            stream.write(f"{' '.join(g)}\t{lp!r}\t{'' if bo is None else repr(bo)}\n")

    @classmethod
    def read(cls, stream: Iterable[str]) -> "NgramModel":
        order, bounds = None, True
        logprobs: dict[tuple[str, ...], float] = {}
        backoffs: dict[tuple[str, ...], float] = {}
        for lineno, line in enumerate(stream, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("# "):
                key, _, value = line[2:].partition("=")
                if key == "order":
                    order = int(value)
                elif key == "sentence_boundaries":
                    bounds = bool(int(value))
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: expected 'ngram<TAB>logprob<TAB>backoff'")
            g = tuple(parts[0].split(" "))
            lp = float(parts[1])
            if lp != NEG_INF or g != (BOS,):
                logprobs[g] = lp
            if parts[2]:
                backoffs[g] = float(parts[2])
        if order is None:
            raise ValueError("missing '# order=' header")
        return cls(order, logprobs, backoffs, bounds)


def _katz_discounts(count_of_counts: Counter, threshold: int,
                    fallback: float = 0.5) -> dict[int, float]:
    """Discounted count for each r below ``threshold``.

    Good-Turing (Katz form) when the count-of-counts support it, otherwise
    absolute discounting by ``fallback``.
    """
    k = threshold - 1
    if k < 1:
        return {}
    n = count_of_counts
    if all(n.get(r, 0) > 0 for r in range(1, k + 2)):
        common = (k + 1) * n[k + 1] / n[1]
        if common < 1:
            out = {}
            for r in range(1, k + 1):
                r_star = (r + 1) * n[r + 1] / n[r]
                d = (r_star / r - common) / (1 - common)
                if not 0 < d < 1:
                    break
                out[r] = d * r
            else:
                return out
    return {r: r - fallback for r in range(1, k + 1)}


def train_ngram(sentences: Iterable[Sequence[str]], order: int = 5, katz_threshold: int = 5,
                min_count: int = 2, vocab_cap: int = 10_000,
                sentence_boundaries: bool = True) -> NgramModel:
    """Katz back-off model.

    Counts at or above ``katz_threshold`` are trusted; lower counts are
    discounted. Words seen fewer than ``min_count`` times, or beyond the
    ``vocab_cap`` most frequent, become ``<unk>``. With
    ``sentence_boundaries=False`` all sentences form one stream with no
    ``<s>``/``</s>`` events.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    sents = [list(s) for s in sentences]
    freq = Counter(w for s in sents for w in s)
    if not freq:
        raise ValueError("cannot train a language model on empty data")
    ranked = sorted((w for w, c in freq.items() if c >= min_count), key=lambda w: (-freq[w], w))
    vocab = set(ranked[:vocab_cap]) | {UNK}
    if sentence_boundaries:
        vocab.add(END)

    streams = []
    if sentence_boundaries:
        for s in sents:
            streams.append([BOS] + [w if w in vocab else UNK for w in s] + [END])
    else:
        streams.append([w if w in vocab else UNK for s in sents for w in s])

    counts: list[dict[tuple[str, ...], Counter]] = [defaultdict(Counter) for _ in range(order + 1)]
    first = 1 if sentence_boundaries else 0
    for stream in streams:
        for i in range(first, len(stream)):
            for k in range(1, order + 1):
                if i - (k - 1) < 0:
                    break
                counts[k][tuple(stream[i - k + 1:i])][stream[i]] += 1

    logprobs: dict[tuple[str, ...], float] = {}
    backoffs: dict[tuple[str, ...], float] = {}
    support = sorted(vocab)

    def lookup(word: str, ctx: tuple[str, ...]) -> float:
        p = 1.0
        while True:
            lp = logprobs.get(ctx + (word,))
            if lp is not None:
                return p * math.exp(lp)
            if not ctx:
                return 0.0
            p *= math.exp(backoffs.get(ctx, 0.0))
            ctx = ctx[1:]

    for k in range(1, order + 1):
        coc = Counter(r for ctx_counts in counts[k].values() for r in ctx_counts.values())
        disc = _katz_discounts(coc, katz_threshold)
        for ctx, ctx_counts in counts[k].items():
            total = sum(ctx_counts.values())
            p_star = {w: disc.get(r, r) / total for w, r in ctx_counts.items()}
            left = 1.0 - math.fsum(p_star.values())
            if k == 1:
                unseen = [w for w in support if w not in ctx_counts]
                if left > 1e-12 and unseen:
                    for w in unseen:
                        p_star[w] = left / len(unseen)
                else:
                    z = math.fsum(p_star.values())
                    p_star = {w: p / z for w, p in p_star.items()}
                    for w in unseen:
                        p_star[w] = 0.0
                for w, p in p_star.items():
                    logprobs[(w,)] = math.log(p) if p > 0 else NEG_INF
                continue
            lower = ctx[1:]
            if left <= 1e-12:
                # every count trusted: reserve some mass so unseen words stay possible
                p_star = {w: (r - 0.5) / total for w, r in ctx_counts.items()}
                left = 1.0 - math.fsum(p_star.values())
            denom = 1.0 - math.fsum(lookup(w, lower) for w in p_star)
            if denom <= 1e-12:
                z = math.fsum(p_star.values())
                p_star = {w: p / z for w, p in p_star.items()}
                alpha = None
            else:
                alpha = left / denom
            for w, p in p_star.items():
                logprobs[ctx + (w,)] = math.log(p)
            if alpha is not None:
                backoffs[ctx] = math.log(alpha)
    return NgramModel(order, logprobs, backoffs, sentence_boundaries)


def perplexity(model: NgramModel, sentences: Iterable[Sequence[str]]) -> float:
    """exp of the mean negative log-probability per predicted token."""
    total, n = 0.0, 0
    if model.sentence_boundaries:
        for s in sentences:
            lp, k = model.sentence_logprob(s)
            total += lp
            n += k
    else:
        lp, n = model.sentence_logprob([w for s in sentences for w in s])
        total = lp
    if n == 0:
        raise ValueError("no tokens to score")
    return math.exp(-total / n)


# ---------------------------------------------------------------------------
# source-channel scorer


@dataclass(frozen=True)
class _ChannelState:
    candidates: tuple[tuple[tuple[str, ...], float], ...]
    prefix: tuple[str, ...]


class SourceChannelScorer(ContextualScorer):
    """Sequence score ``log P_channel(seq | token) + lm_weight * log P_LM(seq | left context)``.

    The per-word distribution is the normalized mass of channel candidates
    consistent with the prefix, so the product over a sequence telescopes
    to its normalized sequence score.
    """

    def __init__(self, channel: EmpiricalChannel, lm: NgramModel | None, lm_weight: float = 1.0):
        self.channel = channel
        self.lm = lm
        self.lm_weight = lm_weight

    def sequence_score(self, seq: tuple[str, ...], token: str, left: Sequence[str],
                       channel_prob: float) -> float:
        score = math.log(channel_prob) if channel_prob > 0 else NEG_INF
        if self.lm is not None and self.lm_weight:
            hist = list(left)
            lm = 0.0
            for w in seq:
                w = token if w == SELF else w
                lm += self.lm.logprob(w, hist)
                hist.append(w)
            score += self.lm_weight * lm
        return score

    def start(self, window: WindowedExample) -> _ChannelState:
        cands = []
        for seq, p in self.channel.posteriors(window.token):
            cands.append((seq, self.sequence_score(seq, window.token, window.left, p)))
        z = logsumexp(s for _, s in cands)
        if z == NEG_INF:
            cands = [(seq, -math.log(len(cands))) for seq, _ in cands]
        else:
            cands = [(seq, s - z) for seq, s in cands]
        return _ChannelState(tuple(cands), ())

    def next_log_probs(self, state: _ChannelState) -> dict[str, float]:
        n = len(state.prefix)
        groups: dict[str, list[float]] = defaultdict(list)
        for seq, s in state.candidates:
            if seq[:n] == state.prefix:
                groups[seq[n] if len(seq) > n else END].append(s)
        if not groups:
            return {}
        z = logsumexp(s for ss in groups.values() for s in ss)
        return {w: logsumexp(ss) - z for w, ss in groups.items()}

    def advance(self, state: _ChannelState, word: str) -> _ChannelState:
        return _ChannelState(state.candidates, state.prefix + (word,))


def make_source_channel_scorer(channel: EmpiricalChannel, lm: NgramModel | None,
                               lm_weight: float = 1.0) -> SourceChannelScorer:
    return SourceChannelScorer(channel, lm, lm_weight)
