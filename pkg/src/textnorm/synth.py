"""Small synthetic written/spoken corpora for tests, demos and smoke runs."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .corpus import SELF, SIL, SemioticClass, Sentence, TokenRecord
from .grammars import CurrencyEntry, MeasureEntry, load_lexicons

_ONES = ["zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine",
         "ten", "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen",
         "seventeen", "eighteen", "nineteen"]
_TENS = ["", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety"]
_SCALES = [(10**12, "trillion"), (10**9, "billion"), (10**6, "million"), (1000, "thousand")]

PLAIN_WORDS = (
    "the a an of to in and is was for on with as by at from that this it his her their "
    "city river team album song film station church village school company island road "
    "population record season county war game player member family name group year "
    "built released located founded played served born known called opened named held "
    "north south east west new old large small first second former main local national"
).split()
PUNCTUATION = (".", ",", ";", ":", "-")
_PUNCT_WEIGHTS = (0.6, 0.1, 0.1, 0.1, 0.1)


def number_words(n: int) -> list[str]:
    """American English cardinal without "and"."""
    if n < 0:
        return ["minus"] + number_words(-n)
    if n < 20:
        return [_ONES[n]]
    if n < 100:
        return [_TENS[n // 10]] + ([_ONES[n % 10]] if n % 10 else [])
    if n < 1000:
        return [_ONES[n // 100], "hundred"] + (number_words(n % 100) if n % 100 else [])
    for value, name in _SCALES:
        if n >= value:
            rest = number_words(n % value) if n % value else []
            return number_words(n // value) + [name] + rest
    raise AssertionError("unreachable")


def decimal_words(text: str) -> list[str]:
    whole, _, frac = text.partition(".")
    out = number_words(int(whole))
    if frac:
        out += ["point"] + [_ONES[int(d)] for d in frac]
    return out


class SyntheticCorpus:
    """Generator of sentences mixing plain words with number-bearing tokens.

    Measure and currency tokens are drawn from the given lexicons so every
    generated gold verbalization is reachable by the default filters.
    """

    CLASS_WEIGHTS = {
        SemioticClass.PLAIN: 0.62, SemioticClass.CARDINAL: 0.08, SemioticClass.DECIMAL: 0.04,
        SemioticClass.MEASURE: 0.08, SemioticClass.MONEY: 0.08, SemioticClass.LETTERS: 0.05,
        SemioticClass.DIGIT: 0.05,
    }

    def __init__(self, measures: Sequence[MeasureEntry] | None = None,
                 currencies: Sequence[CurrencyEntry] | None = None, seed: int = 0,
                 measure_pool: int = 12, currency_pool: int = 6):
        if measures is None or currencies is None:
            default_m, default_c = load_lexicons()
            measures = default_m if measures is None else measures
            currencies = default_c if currencies is None else currencies
        self.rng = np.random.default_rng(seed)
        self.measures = [m for m in measures if m.abbrev.isascii()][:measure_pool]
        self.currencies = [c for c in currencies if c.position == "prefix"][:currency_pool]
        self.classes = list(self.CLASS_WEIGHTS)
        w = np.array(list(self.CLASS_WEIGHTS.values()))
        self.weights = w / w.sum()

    def _int(self, max_digits: int = 6) -> int:
        digits = int(self.rng.integers(1, max_digits + 1))
        return int(self.rng.integers(0 if digits == 1 else 10 ** (digits - 1), 10 ** digits))

    def _decimal(self) -> str:
        frac = "".join(str(d) for d in self.rng.integers(0, 10, int(self.rng.integers(1, 3))))
        return f"{self._int(3)}.{frac}"

    @staticmethod
    def _form(forms, singular: bool) -> tuple[str, ...]:
        return forms[0] if singular else forms[-1]

    def record(self, cls: SemioticClass) -> TokenRecord:
        rng = self.rng
        if cls is SemioticClass.PLAIN:
            return TokenRecord(cls, str(rng.choice(PLAIN_WORDS)), (SELF,))
        if cls is SemioticClass.CARDINAL:
            n = self._int()
            return TokenRecord(cls, str(n), tuple(number_words(n)))
        if cls is SemioticClass.DECIMAL:
            text = self._decimal()
            return TokenRecord(cls, text, tuple(decimal_words(text)))
        if cls is SemioticClass.DIGIT:
            digits = "".join(str(d) for d in rng.integers(0, 10, int(rng.integers(2, 5))))
            return TokenRecord(cls, digits, tuple(_ONES[int(d)] for d in digits))
        if cls is SemioticClass.LETTERS:
            letters = "".join(chr(ord("A") + int(i)) for i in rng.integers(0, 26, int(rng.integers(2, 5))))
            return TokenRecord(cls, letters, tuple(f"{c.lower()}_letter" for c in letters))
        if cls is SemioticClass.MEASURE:
            entry = self.measures[int(rng.integers(len(self.measures)))]
            if rng.random() < 0.3:
                amount = self._decimal()
                words, singular = decimal_words(amount), False
            else:
                n = self._int(4)
                amount, words, singular = str(n), number_words(n), n == 1
            space = " " if rng.random() < 0.3 else ""
            return TokenRecord(cls, f"{amount}{space}{entry.abbrev}",
                               tuple(words) + self._form(entry.spoken_forms, singular))
        if cls is SemioticClass.MONEY:
            entry = self.currencies[int(rng.integers(len(self.currencies)))]
            n = self._int(5)
            return TokenRecord(cls, f"{entry.symbol}{n}",
                               tuple(number_words(n)) + self._form(entry.spoken_forms, n == 1))
        raise ValueError(f"no generator for {cls.value}")

    def sentence(self, min_len: int = 4, max_len: int = 10) -> Sentence:
        length = int(self.rng.integers(min_len, max_len + 1))
        picks = self.rng.choice(len(self.classes), size=length - 1, p=self.weights)
        recs = [self.record(self.classes[int(k)]) for k in picks]
        mark = str(self.rng.choice(PUNCTUATION, p=_PUNCT_WEIGHTS))
        recs.append(TokenRecord(SemioticClass.PUNCT, mark, (SIL,)))
        return Sentence(tuple(recs))

    def corpus(self, n_tokens: int) -> list[Sentence]:
        """Sentences totalling at least ``n_tokens`` records."""
        out: list[Sentence] = []
        total = 0
        while total < n_tokens:
            s = self.sentence()
            out.append(s)
            total += len(s)
        return out


def synthetic_corpus(n_tokens: int, seed: int = 0, **kwargs) -> list[Sentence]:
    return SyntheticCorpus(seed=seed, **kwargs).corpus(n_tokens)
