"""Decoding: pruned sausages rescored by an LM, and lattice-constrained beam search."""

from __future__ import annotations

import math
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Iterable, Mapping, Sequence

from .corpus import SELF, Sentence, WindowedExample, extract_windows, outputs_match, records
from .grammars import (
    build_measure_filter,
    build_money_filter,
    build_number_fst,
    load_lexicons,
    new_tables,
)
from .scorers import (
    END,
    NEG_INF,
    ContextualScorer,
    EmpiricalChannel,
    NgramModel,
    SourceChannelScorer,
)
from .wfst import (
    DEFAULT_FINAL_REWARD,
    ZERO,
    Automaton,
    LatticeCursor,
    SymbolTable,
    compose,
    prefix_closure,
    project_output,
    read_text,
    shortest_paths,
    string_acceptor,
    trim,
    write_text,
)

Label = Hashable


def _words(label: Label) -> tuple[str, ...]:
    return (label,) if isinstance(label, str) else tuple(label)


# ---------------------------------------------------------------------------
# sausages


@dataclass
class Sausage:
    """Per-position pruned hypotheses. ``tokens`` give ``<self>`` its spelling."""

    positions: list[list[tuple[Label, float]]]
    tokens: list[str | None]

    def __len__(self) -> int:
        return len(self.positions)

    def support(self, i: int) -> list[Label]:
        return [label for label, _ in self.positions[i]]


def _prune_one(dist: Mapping[Label, float], hi: float, lo: float, n: int
               ) -> list[tuple[Label, float]]:
    items = sorted(dist.items(), key=lambda kv: (-kv[1], kv[0]))
    if not items:
        return []
    if items[0][1] >= hi:
        return [items[0]]
    kept = [kv for kv in items if kv[1] >= lo]
    return (kept or items[:1])[:n]


def prune_positions(raw: Sequence[Mapping[Label, float]], hi: float = 0.98, lo: float = 0.05,
                    n: int = 5, tokens: Sequence[str | None] | None = None) -> Sausage:
    """Confident positions collapse to one entry; the rest lose entries below
    ``lo`` and keep at most ``n``. A position is never left empty."""
    positions = [_prune_one(dist, hi, lo, n) for dist in raw]
    return Sausage(positions, list(tokens) if tokens is not None else [None] * len(positions))


def decode_sausage(sausage: Sausage, lm: NgramModel | None, lm_weight: float = 1.0,
                   beam: int = 8) -> list[Label]:
    """Left-to-right beam search for the best entry per position.

    Score: sum of channel log-probabilities plus ``lm_weight`` times the LM
    log-probability of the expanded word stream.
    """

    def key(h):
        return (-h[0], tuple(w for label in h[1] for w in _words(label)))

    use_lm = lm is not None and lm_weight != 0
    hist0 = ["<s>"] if use_lm and lm.sentence_boundaries else []
    hyps: list[tuple[float, tuple[Label, ...], list[str]]] = [(0.0, (), hist0)]
    for i, entries in enumerate(sausage.positions):
        token = sausage.tokens[i]
        grown = []
        for score, chosen, hist in hyps:
            for label, p in entries:
                s = score + (math.log(p) if p > 0 else NEG_INF)
                h = hist
                if use_lm:
                    h = list(hist)
                    for w in _words(label):
                        w = token if w == SELF and token is not None else w
                        s += lm_weight * lm.logprob(w, h)
                        h.append(w)
                grown.append((s, chosen + (label,), h))
        grown.sort(key=key)
        hyps = grown[:beam]
    if use_lm and lm.sentence_boundaries:
        hyps = [(s + lm_weight * lm.logprob(END, h), c, h) for s, c, h in hyps]
        hyps.sort(key=key)
    return list(hyps[0][1]) if hyps else []


# ---------------------------------------------------------------------------
# filter bank


def _gate(token: str) -> bool:
    return any(c.isdigit() or unicodedata.category(c) == "Sc" for c in token)


class FilterBank:
    """Ordered covering grammars; the first one that composes with a token wins."""

    def __init__(self, filters: Sequence[tuple[str, Automaton]],
                 final_reward: float = DEFAULT_FINAL_REWARD):
        self.filters = list(filters)
        self.final_reward = final_reward
        self._cache: dict[str, tuple[str, Automaton] | None] = {}

    @classmethod
    def default(cls, measure_file=None, currency_file=None, **kwargs) -> "FilterBank":
        measures, currencies = load_lexicons(measure_file, currency_file)
        chars, words = new_tables()
        numbers = build_number_fst(chars=chars, words=words)
        return cls([("MONEY", build_money_filter(numbers, currencies)),
                    ("MEASURE", build_measure_filter(numbers, measures))], **kwargs)

    def save(self, directory) -> None:
        """One text automaton plus input/output symbol files per filter, in bank order."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        (d / "bank.txt").write_text("".join(f"{name}\n" for name, _ in self.filters))
        for name, fst in self.filters:
            with open(d / f"{name}.fst", "w", encoding="utf-8") as f:
                write_text(fst, f)
            with open(d / f"{name}.isyms", "w", encoding="utf-8") as f:
                fst.isyms.write(f)
            with open(d / f"{name}.osyms", "w", encoding="utf-8") as f:
                fst.osyms.write(f)

    @classmethod
    def load(cls, directory, **kwargs) -> "FilterBank":
        d = Path(directory)
        filters = []
        for name in (d / "bank.txt").read_text().split():
            with open(d / f"{name}.isyms", encoding="utf-8") as f:
                isyms = SymbolTable.read(f)
            with open(d / f"{name}.osyms", encoding="utf-8") as f:
                osyms = SymbolTable.read(f)
            with open(d / f"{name}.fst", encoding="utf-8") as f:
                filters.append((name, read_text(f, isyms, osyms)))
        return cls(filters, **kwargs)

    def match(self, token: str) -> tuple[str, Automaton] | None:
        """(filter name, trimmed output acceptor) for the first filter accepting ``token``."""
        if token in self._cache:
            return self._cache[token]
        found = None
        if _gate(token):
            for name, fst in self.filters:
                acceptor = string_acceptor(list(token), fst.isyms, add_symbols=False)
                composed = compose(acceptor, fst)
                if not composed.is_empty():
                    found = (name, trim(project_output(composed)))
                    break
        self._cache[token] = found
        return found

    def full_lattice(self, token: str) -> Automaton | None:
        m = self.match(token)
        return m[1] if m else None

    def build_lattice(self, token: str) -> Automaton | None:
        m = self.match(token)
        return prefix_closure(m[1], self.final_reward) if m else None

    def verbalizations(self, token: str, limit: int = 256) -> list[tuple[str, ...]]:
        lattice = self.full_lattice(token)
        if lattice is None:
            return []
        out: dict[tuple[str, ...], None] = {}
        for p in shortest_paths(lattice, limit):
            out.setdefault(p.olabels)
        return list(out)


def build_token_lattice(bank: FilterBank, token: str) -> Automaton | None:
    return bank.build_lattice(token)


# ---------------------------------------------------------------------------
# constrained decoding


@dataclass(frozen=True)
class DecodeResult:
    words: tuple[str, ...] | None
    score: float
    flagged: bool = False
    constrained: bool = False


@dataclass
class _Hyp:
    words: tuple[str, ...]
    state: object
    logp: float
    cursor: LatticeCursor | None

    @property
    def lattice_cost(self) -> float:
        return self.cursor.path_cost if self.cursor is not None else 0.0


def _top_words(dist: Mapping[str, float], k: int) -> list[tuple[str, float]]:
    items = [(w, lp) for w, lp in dist.items() if w != END and lp != NEG_INF]
    items.sort(key=lambda kv: (-kv[1], kv[0]))
    return items[:k]


def _lattice_floor(lattice: Automaton) -> float | None:
    """Lowest exit weight, or None when arc weights could make scores grow elsewhere."""
    for q in lattice.states():
        if any(arc.weight < 0 for arc in lattice.arcs(q)):
            return None
    return min(min(lattice.finals().values(), default=0.0), 0.0)


def greedy_decode(scorer: ContextualScorer, window: WindowedExample,
                  max_len: int = 20) -> tuple[tuple[str, ...], float] | None:
    state = scorer.start(window)
    words: list[str] = []
    total = 0.0
    for _ in range(max_len + 1):
        dist = scorer.next_log_probs(state)
        best = sorted(((lp, w) for w, lp in dist.items() if lp != NEG_INF),
                      key=lambda t: (-t[0], t[1]))
        if not words:
            best = [t for t in best if t[1] != END]
        if not best:
            return None
        lp, w = best[0]
        total += lp
        if w == END:
            return tuple(words), total
        if len(words) == max_len:
            return None
        words.append(w)
        state = scorer.advance(state, w)
    return None


def constrained_decode(scorer: ContextualScorer, window: WindowedExample,
                       lattice: Automaton | None = None, beam: int = 8,
                       max_len: int = 20) -> DecodeResult:
    """Beam search over the scorer, restricted to a prefix-closed output lattice.

    A hypothesis scores ``scorer log-prob - lattice cost``. Extensions the
    lattice rejects are dropped. Finishing collects the exit weight of the
    lattice state, so reaching an originally final state earns the reward.
    """
    cursor = LatticeCursor.start(lattice) if lattice is not None else None
    floor = 0.0 if lattice is None else _lattice_floor(lattice)
    live = [_Hyp((), scorer.start(window), 0.0, cursor)]
    best: tuple[float, tuple[str, ...]] | None = None

    def better(score: float, words: tuple[str, ...]) -> bool:
        return best is None or (-score, words) < (-best[0], best[1])

    for step in range(max_len + 1):
        candidates: list[_Hyp] = []
        for h in live:
            dist = scorer.next_log_probs(h.state)
            end_lp = dist.get(END, NEG_INF)
            if h.words and end_lp != NEG_INF:
                exit_cost = h.cursor.exit_cost if h.cursor is not None else 0.0
                if exit_cost != ZERO:
                    score = h.logp + end_lp - exit_cost
                    if better(score, h.words):
                        best = (score, h.words)
            if step == max_len:
                continue
            if h.cursor is None:
                options = _top_words(dist, beam)
                for w, lp in options:
                    candidates.append(_Hyp(h.words + (w,), scorer.advance(h.state, w),
                                           h.logp + lp, None))
            else:
                for w in sorted(_next_symbols(h.cursor)):
                    lp = dist.get(w, NEG_INF)
                    if lp == NEG_INF:
                        continue
                    nxt = h.cursor.advance(w)
                    if not nxt.alive:
                        continue
                    candidates.append(_Hyp(h.words + (w,), scorer.advance(h.state, w),
                                           h.logp + lp, nxt))
        candidates.sort(key=lambda h: (-(h.logp - h.lattice_cost), h.words))
        live = candidates[:beam]
        if not live:
            break
        if best is not None and floor is not None:
            optimistic = max(h.logp - h.lattice_cost - floor for h in live)
            if optimistic < best[0]:
                break

    if best is not None:
        return DecodeResult(best[1], best[0], False, lattice is not None)
    fallback = greedy_decode(scorer, window, max_len)
    if fallback is None:
        return DecodeResult(None, NEG_INF, True, lattice is not None)
    return DecodeResult(fallback[0], fallback[1], True, lattice is not None)


def _next_symbols(cursor: LatticeCursor) -> set[str]:
    lat = cursor.lattice
    return {lat.isyms.symbol(label) for q in cursor.costs
            for label in lat.arcs_by_ilabel(q) if label}


# ---------------------------------------------------------------------------
# sentences


@dataclass(frozen=True)
class TokenPrediction:
    output: tuple[str, ...] | None
    flagged: bool = False
    constrained: bool = False


def channel_sausage(channel: EmpiricalChannel, tokens: Sequence[str], hi: float = 0.98,
                    lo: float = 0.05, n: int = 5) -> Sausage:
    raw = [dict(channel.posteriors(t)) for t in tokens]
    return prune_positions(raw, hi, lo, n, tokens)


def normalize_sentence(sentence: Sentence, scorer: ContextualScorer,
                       bank: FilterBank | None = None, mode: str = "exp2", *,
                       width: int = 3, beam: int = 8, max_len: int = 20,
                       prune: tuple[float, float, int] = (0.98, 0.05, 5)
                       ) -> list[TokenPrediction]:
    """Predict an output for every token of ``sentence``.

    ``exp1`` needs a :class:`SourceChannelScorer`: its channel posteriors are
    pruned into a sausage and rescored by its LM over the whole sentence.
    ``exp2`` decodes each token in its window, restricted by the filter
    bank's lattice when one matches.
    """
    if mode == "exp1":
        if not isinstance(scorer, SourceChannelScorer):
            raise TypeError("exp1 decoding needs a source-channel scorer")
        tokens = [r.input for r in sentence]
        sausage = channel_sausage(scorer.channel, tokens, *prune)
        chosen = decode_sausage(sausage, scorer.lm, scorer.lm_weight, beam)
        return [TokenPrediction(_words(c)) for c in chosen]
    if mode != "exp2":
        raise ValueError(f"unknown mode {mode!r}")
    out = []
    for window in extract_windows(sentence, width):
        lattice = bank.build_lattice(window.token) if bank is not None else None
        result = constrained_decode(scorer, window, lattice, beam, max_len)
        out.append(TokenPrediction(result.words, result.flagged, result.constrained))
    return out


def oracle_accuracy(channel: EmpiricalChannel, corpus: Iterable[Sentence], hi: float = 0.98,
                    lo: float = 0.05, n: int = 5) -> float:
    """Share of tokens whose gold output survives pruning of the channel's hypotheses."""
    hit = total = 0
    for r in records(corpus):
        kept = _prune_one(dict(channel.posteriors(r.input)), hi, lo, n)
        total += 1
        hit += any(outputs_match(_words(label), r.output, r.input) for label, _ in kept)
    return hit / total if total else 0.0
