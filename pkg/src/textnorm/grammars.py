"""Covering grammars for numbers, measures and money.

The grammars over-generate on purpose: a measure like ``1 g`` gets both
``one gram`` and ``one grams``. They are meant to restrict a contextual
scorer, not to pick the answer on their own.

Input tape: characters of the written token. Output tape: spoken words.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence, TextIO

from .wfst import (
    Automaton,
    SymbolTable,
    compose,
    concat,
    shortest_paths,
    string_acceptor,
    trim,
    union,
)

UNITS = ["zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine"]
TEENS = ["ten", "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen",
         "seventeen", "eighteen", "nineteen"]
TENS = ["", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety"]
SCALES = ["", "thousand", "million", "billion", "trillion"]

DIGITS = "0123456789"
GROUP_SEPARATORS = (",", " ")

NumberGrammar = Automaton


class GrammarError(ValueError):
    pass


@dataclass(frozen=True)
class MeasureEntry:
    abbrev: str
    spoken_forms: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        if not self.abbrev:
            raise GrammarError("empty measure abbreviation")
        if not self.spoken_forms or any(not f for f in self.spoken_forms):
            raise GrammarError(f"{self.abbrev!r}: empty spoken form")


@dataclass(frozen=True)
class CurrencyEntry:
    symbol: str
    position: str
    spoken_forms: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        if not self.symbol:
            raise GrammarError("empty currency symbol")
        if self.position not in ("prefix", "suffix"):
            raise GrammarError(f"{self.symbol!r}: position must be prefix or suffix")
        if not self.spoken_forms or any(not f for f in self.spoken_forms):
            raise GrammarError(f"{self.symbol!r}: empty spoken form")


def new_tables() -> tuple[SymbolTable, SymbolTable]:
    """Fresh (characters, words) symbol tables."""
    return SymbolTable(), SymbolTable()


# ---------------------------------------------------------------------------
# numbers


def _tens_units(a: Automaton, src: int, zero_dst: int | None, dst: int) -> None:
    """Exactly two digits from ``src``; ``00`` goes to ``zero_dst``."""
    after_zero, after_one, after_tens = a.add_state(), a.add_state(), a.add_state()
    a.add_arc(src, "0", 0, 0.0, after_zero)
    a.add_arc(src, "1", 0, 0.0, after_one)
    for t in range(2, 10):
        a.add_arc(src, DIGITS[t], TENS[t], 0.0, after_tens)
    if zero_dst is not None:
        a.add_arc(after_zero, "0", 0, 0.0, zero_dst)
    a.add_arc(after_tens, "0", 0, 0.0, dst)
    for u in range(10):
        a.add_arc(after_one, DIGITS[u], TEENS[u], 0.0, dst)
    for u in range(1, 10):
        a.add_arc(after_zero, DIGITS[u], UNITS[u], 0.0, dst)
        a.add_arc(after_tens, DIGITS[u], UNITS[u], 0.0, dst)


def _hundreds(a: Automaton, src: int, digits: str) -> int:
    """Non-zero hundreds digit followed by the word ``hundred``."""
    mid, out = a.add_state(), a.add_state()
    for h in digits:
        a.add_arc(src, h, UNITS[int(h)], 0.0, mid)
    a.add_arc(mid, 0, "hundred", 0.0, out)
    return out


def _full_group(a: Automaton, src: int, zero_dst: int, dst: int) -> None:
    """Three digits, ``000`` to ``999``."""
    no_hundreds = a.add_state()
    a.add_arc(src, "0", 0, 0.0, no_hundreds)
    _tens_units(a, no_hundreds, zero_dst, dst)
    _tens_units(a, _hundreds(a, src, DIGITS[1:]), dst, dst)


def _lead_group(a: Automaton, src: int, dst: int, lengths: Iterable[int]) -> None:
    """One to three digits with a non-zero first digit."""
    for n in lengths:
        if n == 1:
            for u in range(1, 10):
                a.add_arc(src, DIGITS[u], UNITS[u], 0.0, dst)
        elif n == 2:
            teen, tens = a.add_state(), a.add_state()
            a.add_arc(src, "1", 0, 0.0, teen)
            for u in range(10):
                a.add_arc(teen, DIGITS[u], TEENS[u], 0.0, dst)
            for t in range(2, 10):
                a.add_arc(src, DIGITS[t], TENS[t], 0.0, tens)
            a.add_arc(tens, "0", 0, 0.0, dst)
            for u in range(1, 10):
                a.add_arc(tens, DIGITS[u], UNITS[u], 0.0, dst)
        elif n == 3:
            _tens_units(a, _hundreds(a, src, DIGITS[1:]), dst, dst)


def _add_cardinal(a: Automaton, src: int, dst: int, max_digits: int) -> None:
    """Cardinal number names from ``src`` to ``dst`` inside ``a``."""
    body = a.add_state()
    a.add_arc(src, "-", "minus", 0.0, body)
    a.add_arc(src, 0, 0, 0.0, body)

    # leading zeros are read and dropped; a lone run of zeros says "zero"
    zeros = [body]
    for _ in range(max_digits - 1):
        z = a.add_state()
        a.add_arc(zeros[-1], "0", 0, 0.0, z)
        zeros.append(z)
    lead_hub = a.add_state()
    for z in zeros:
        a.add_arc(z, "0", "zero", 0.0, dst)
        a.add_arc(z, 0, 0, 0.0, lead_hub)

    max_groups = (max_digits - 1) // 3
    # entry[k]: optional separator, then k three-digit groups, then dst
    entry = [dst]
    for k in range(1, max_groups + 1):
        e, g = a.add_state(), a.add_state()
        a.add_arc(e, 0, 0, 0.0, g)
        for sep in GROUP_SEPARATORS:
            a.add_arc(e, sep, 0, 0.0, g)
        scale_index = k - 1
        if scale_index:
            scaled = a.add_state()
            a.add_arc(scaled, 0, SCALES[scale_index], 0.0, entry[k - 1])
            _full_group(a, g, entry[k - 1], scaled)
        else:
            _full_group(a, g, entry[0], entry[0])
        entry.append(e)

    for k in range(max_groups + 1):
        lead_max = min(3, max_digits - 3 * k)
        lead_end = a.add_state()
        if k:
            a.add_arc(lead_end, 0, SCALES[k], 0.0, entry[k])
        else:
            a.add_arc(lead_end, 0, 0, 0.0, dst)
        _lead_group(a, lead_hub, lead_end, range(1, lead_max + 1))


def build_cardinal_fst(max_digits: int = 12, chars: SymbolTable | None = None,
                       words: SymbolTable | None = None) -> NumberGrammar:
    """Digit strings to American English number names (no "and").

    Accepts an optional leading ``-`` (read ``minus``), leading zeros, and
    a comma or space between three-digit groups.
    """
    if not 1 <= max_digits <= 15:
        raise GrammarError("max_digits must be between 1 and 15")
    if chars is None:
        chars, words = new_tables()
    a = Automaton(chars, words if words is not None else SymbolTable())
    s, f = a.add_state(), a.add_state()
    a.set_start(s)
    a.set_final(f)
    _add_cardinal(a, s, f, max_digits)
    return trim(a)


def build_decimal_fst(cardinal: NumberGrammar, max_fraction_digits: int = 8) -> NumberGrammar:
    """``<integer>.<digits>``: the integer via ``cardinal``, the rest digit by digit."""
    frac = Automaton(cardinal.isyms, cardinal.osyms)
    s, q = frac.add_state(), frac.add_state()
    frac.set_start(s)
    frac.add_arc(s, ".", "point", 0.0, q)
    for _ in range(max_fraction_digits):
        r = frac.add_state()
        for d in range(10):
            frac.add_arc(q, DIGITS[d], UNITS[d], 0.0, r)
        frac.set_final(r)
        q = r
    return concat(cardinal, frac)


def build_number_fst(max_digits: int = 12, chars: SymbolTable | None = None,
                     words: SymbolTable | None = None) -> NumberGrammar:
    """Cardinals and decimals together."""
    cardinal = build_cardinal_fst(max_digits, chars, words)
    return union(cardinal, build_decimal_fst(cardinal))


def verbalize(grammar: Automaton, token: str, n: int = 64) -> list[tuple[str, ...]]:
    """Distinct output strings ``grammar`` assigns to ``token``, cheapest first."""
    acceptor = string_acceptor(list(token), grammar.isyms, add_symbols=False)
    seen: dict[tuple[str, ...], None] = {}
    for p in shortest_paths(compose(acceptor, grammar), n):
        seen.setdefault(p.olabels)
    return list(seen)


# ---------------------------------------------------------------------------
# measure and money filters


def _optional_space(chars: SymbolTable, words: SymbolTable) -> Automaton:
    a = Automaton(chars, words)
    s, f = a.add_state(), a.add_state()
    a.set_start(s)
    a.set_final(s)
    a.set_final(f)
    a.add_arc(s, " ", 0, 0.0, f)
    return a


def _phrase_map(chars: SymbolTable, words: SymbolTable,
                pairs: Iterable[tuple[str, tuple[str, ...]]]) -> Automaton:
    """Union of ``written -> spoken`` pairs, reading the written side as characters."""
    a = Automaton(chars, words)
    s, f = a.add_state(), a.add_state()
    a.set_start(s)
    a.set_final(f)
    for written, spoken in pairs:
        a.add_path(s, f, list(written), list(spoken))
    return a


def _check_measures(lexicon: Sequence[MeasureEntry]) -> list[MeasureEntry]:
    if not lexicon:
        raise GrammarError("measure lexicon is empty")
    seen: dict[str, MeasureEntry] = {}
    for e in lexicon:
        prev = seen.get(e.abbrev)
        if prev is not None and set(prev.spoken_forms) != set(e.spoken_forms):
            raise GrammarError(f"conflicting entries for measure {e.abbrev!r}")
        seen[e.abbrev] = e
    return list(seen.values())


def _check_currencies(lexicon: Sequence[CurrencyEntry]) -> list[CurrencyEntry]:
    if not lexicon:
        raise GrammarError("currency lexicon is empty")
    seen: dict[tuple[str, str], CurrencyEntry] = {}
    for e in lexicon:
        key = (e.symbol, e.position)
        prev = seen.get(key)
        if prev is not None and set(prev.spoken_forms) != set(e.spoken_forms):
            raise GrammarError(f"conflicting entries for currency {e.symbol!r}")
        seen[key] = e
    return list(seen.values())


def build_measure_filter(numbers: NumberGrammar, lexicon: Sequence[MeasureEntry]) -> Automaton:
    """``NUMBER[ ]ABBREV`` to every number reading times every spoken unit form."""
    entries = _check_measures(lexicon)
    units = _phrase_map(numbers.isyms, numbers.osyms,
                        ((e.abbrev, form) for e in entries for form in e.spoken_forms))
    return trim(concat(concat(numbers, _optional_space(numbers.isyms, numbers.osyms)), units))


def build_reorder_fst(lexicon: Sequence[CurrencyEntry], chars: SymbolTable) -> Automaton:
    """Move prefix currency symbols after the amount: ``£5`` to ``5£``.

    A single space after the symbol moves with it (``Rs. 149`` to
    ``149 Rs.``). Anything else passes through unchanged. Output and input
    always hold the same characters.
    """
    amount_chars = DIGITS + ",. -"
    sigma = set(amount_chars)
    for e in lexicon:
        sigma.update(e.symbol)
    a = Automaton(chars, chars)
    s = a.add_state()
    a.set_start(s)

    ident = a.add_state()
    a.set_final(ident)
    for c in sorted(sigma):
        a.add_arc(s, c, c, 0.0, ident)
        a.add_arc(ident, c, c, 0.0, ident)

    for e in lexicon:
        if e.position != "prefix":
            continue
        read = a.add_state()
        a.add_path(s, read, list(e.symbol), [])
        for moved in (e.symbol, " " + e.symbol):
            body = a.add_state()
            if moved.startswith(" "):
                spaced = a.add_state()
                a.add_arc(read, " ", 0, 0.0, spaced)
                first_src = spaced
            else:
                first_src = read
            for c in DIGITS + "-":
                a.add_arc(first_src, c, c, 0.0, body)
            for c in amount_chars:
                a.add_arc(body, c, c, 0.0, body)
            end = a.add_state()
            a.set_final(end)
            a.add_path(body, end, [], list(moved))
    return a


def build_money_filter(numbers: NumberGrammar, lexicon: Sequence[CurrencyEntry]) -> Automaton:
    """Reorder prefix currencies, then read ``<number>[ ]<currency>``."""
    entries = _check_currencies(lexicon)
    chars, words = numbers.isyms, numbers.osyms
    symbols = _phrase_map(chars, words, ((e.symbol, form) for e in entries
                                         for form in e.spoken_forms))
    verbalizer = trim(concat(concat(numbers, _optional_space(chars, words)), symbols))
    return compose(build_reorder_fst(entries, chars), verbalizer)


# ---------------------------------------------------------------------------
# lexicons


def _split_forms(field: str) -> tuple[tuple[str, ...], ...]:
    return tuple(tuple(f.split()) for f in field.split("|"))


def parse_measure_lexicon(stream: Iterable[str]) -> list[MeasureEntry]:
    out = []
    for lineno, line in enumerate(stream, 1):
        line = line.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise GrammarError(f"line {lineno}: expected 'abbrev<TAB>form1|form2'")
        try:
            out.append(MeasureEntry(parts[0], _split_forms(parts[1])))
        except GrammarError as exc:
            raise GrammarError(f"line {lineno}: {exc}") from None
    return out


def parse_currency_lexicon(stream: Iterable[str]) -> list[CurrencyEntry]:
    out = []
    for lineno, line in enumerate(stream, 1):
        line = line.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3 or not all(parts):
            raise GrammarError(f"line {lineno}: expected 'symbol<TAB>prefix|suffix<TAB>forms'")
        try:
            out.append(CurrencyEntry(parts[0], parts[1], _split_forms(parts[2])))
        except GrammarError as exc:
            raise GrammarError(f"line {lineno}: {exc}") from None
    return out


def write_measure_lexicon(entries: Iterable[MeasureEntry], stream: TextIO) -> None:
    for e in entries:
        stream.write(f"{e.abbrev}\t{'|'.join(' '.join(f) for f in e.spoken_forms)}\n")


def write_currency_lexicon(entries: Iterable[CurrencyEntry], stream: TextIO) -> None:
    for e in entries:
        forms = "|".join(" ".join(f) for f in e.spoken_forms)
        stream.write(f"{e.symbol}\t{e.position}\t{forms}\n")


def load_lexicons(measure_file=None, currency_file=None
                  ) -> tuple[list[MeasureEntry], list[CurrencyEntry]]:
    """Read lexicon TSVs; ``None`` means the lexicons shipped with the package."""
    data = resources.files("textnorm") / "data"
    m_path = Path(measure_file) if measure_file is not None else data / "measures.tsv"
    c_path = Path(currency_file) if currency_file is not None else data / "currencies.tsv"
    with m_path.open(encoding="utf-8") as f:
        measures = parse_measure_lexicon(f)
    with c_path.open(encoding="utf-8") as f:
        currencies = parse_currency_lexicon(f)
    return measures, currencies
