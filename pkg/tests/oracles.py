"""Reference implementations used only by tests.

These are written independently of the package code they check: number
names are spelled by chunking into three-digit groups, and automata are
checked by brute-force path enumeration instead of composition.
"""

from __future__ import annotations

import itertools
from collections import defaultdict

import numpy as np

from textnorm.wfst import Automaton, SymbolTable

SMALL = ("zero one two three four five six seven eight nine ten eleven twelve thirteen "
         "fourteen fifteen sixteen seventeen eighteen nineteen").split()
DECADES = "_ _ twenty thirty forty fifty sixty seventy eighty ninety".split()
GROUP_NAMES = ["", "thousand", "million", "billion", "trillion"]


def spell_below_thousand(n: int) -> list[str]:
    words = []
    hundreds, rest = divmod(n, 100)
    if hundreds:
        words += [SMALL[hundreds], "hundred"]
    if rest >= 20:
        words.append(DECADES[rest // 10])
        if rest % 10:
            words.append(SMALL[rest % 10])
    elif rest:
        words.append(SMALL[rest])
    return words


def spell_cardinal(n: int) -> str:
    if n == 0:
        return "zero"
    if n < 0:
        return "minus " + spell_cardinal(-n)
    groups = []
    while n:
        n, g = divmod(n, 1000)
        groups.append(g)
    words = []
    for i in reversed(range(len(groups))):
        if groups[i]:
            words += spell_below_thousand(groups[i])
            if GROUP_NAMES[i]:
                words.append(GROUP_NAMES[i])
    return " ".join(words)


def spell_decimal(text: str) -> str:
    whole, frac = text.split(".")
    return spell_cardinal(int(whole)) + " point " + " ".join(SMALL[int(d)] for d in frac)


# ---------------------------------------------------------------------------
# automata


def all_paths(a: Automaton, partial: bool = False):
    """Yield (ilabels, olabels, arc_cost, end_state) for every path from the start.

    Only complete accepting paths unless ``partial``; the automaton must be acyclic.
    """
    if a.start is None:
        return
    stack = [(a.start, (), (), 0.0)]
    while stack:
        q, il, ol, cost = stack.pop()
        if partial or a.is_final(q):
            yield il, ol, cost, q
        for arc in a.arcs(q):
            stack.append((arc.next,
                          il + ((a.isyms.symbol(arc.ilabel),) if arc.ilabel else ()),
                          ol + ((a.osyms.symbol(arc.olabel),) if arc.olabel else ()),
                          cost + arc.weight))


def relation(a: Automaton) -> dict[tuple[tuple[str, ...], tuple[str, ...]], float]:
    """Minimum cost of every (input, output) pair, exit weight included."""
    best: dict = {}
    for il, ol, cost, q in all_paths(a):
        c = cost + a.final(q)
        if c < best.get((il, ol), float("inf")):
            best[(il, ol)] = c
    return best


def composed_relation(a: Automaton, b: Automaton) -> dict:
    """Relational join of two path relations on the middle tape."""
    by_middle = defaultdict(list)
    for (y, z), c in relation(b).items():
        by_middle[y].append((z, c))
    best: dict = {}
    for (x, y), c1 in relation(a).items():
        for z, c2 in by_middle.get(y, ()):
            c = c1 + c2
            if c < best.get((x, z), float("inf")):
                best[(x, z)] = c
    return best


def output_language(a: Automaton) -> dict[tuple[str, ...], float]:
    best: dict = {}
    for (_, z), c in relation(a).items():
        if c < best.get(z, float("inf")):
            best[z] = c
    return best


def prefix_closed_language(a: Automaton, reward: float) -> dict[tuple[str, ...], float]:
    """Cost of every string after prefix closure, from partial paths of the original."""
    best: dict = {}
    for _, ol, cost, q in all_paths(a, partial=True):
        c = cost + (reward if a.is_final(q) else 0.0)
        if c < best.get(ol, float("inf")):
            best[ol] = c
    return best


def random_automaton(rng: np.random.Generator, syms: SymbolTable, alphabet=("a", "b", "c"),
                     max_states: int = 5, max_arcs: int = 8, acceptor: bool = False,
                     eps_rate: float = 0.2, weights=(0, 5)) -> Automaton:
    """Acyclic automaton with integer weights: arcs only go to higher-numbered states."""
    a = Automaton(syms, syms)
    n = int(rng.integers(1, max_states + 1))
    for _ in range(n):
        a.add_state()
    a.set_start(0)

    def label():
        return "<eps>" if rng.random() < eps_rate else alphabet[int(rng.integers(len(alphabet)))]

    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if pairs:
        for _ in range(int(rng.integers(0, max_arcs + 1))):
            i, j = pairs[int(rng.integers(len(pairs)))]
            il = label()
            ol = il if acceptor else label()
            a.add_arc(i, il, ol, float(rng.integers(weights[0], weights[1] + 1)), j)
    for q in range(n):
        if rng.random() < 0.4 or q == n - 1:
            a.set_final(q, float(rng.integers(weights[0], weights[1] + 1)))
    return a


def strings_upto(alphabet, max_len: int):
    for k in range(max_len + 1):
        yield from itertools.product(alphabet, repeat=k)
