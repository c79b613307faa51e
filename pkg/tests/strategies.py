"""Hypothesis strategies for small acyclic automata."""

from __future__ import annotations

from hypothesis import strategies as st

from textnorm.wfst import Automaton, SymbolTable

LABELS = ("<eps>", "a", "b", "c")


def shared_table() -> SymbolTable:
    t = SymbolTable()
    for s in LABELS[1:]:
        t.add(s)
    return t


@st.composite
def automata(draw, syms: SymbolTable | None = None, max_states: int = 5, max_arcs: int = 8,
             acceptor: bool = False, labels=LABELS, min_weight: int = 0, max_weight: int = 5):
    """Acyclic by construction: every arc goes to a higher-numbered state."""
    syms = syms if syms is not None else shared_table()
    n = draw(st.integers(1, max_states))
    a = Automaton(syms, syms)
    for _ in range(n):
        a.add_state()
    a.set_start(0)
    weight = st.integers(min_weight, max_weight).map(float)
    if n > 1:
        arc = st.tuples(st.integers(0, n - 2), st.integers(1, n - 1),
                        st.sampled_from(labels), st.sampled_from(labels), weight)
        for i, j, il, ol, w in draw(st.lists(arc, max_size=max_arcs)):
            lo, hi = min(i, j), max(i, j)
            if lo == hi:
                continue
            a.add_arc(lo, il, il if acceptor else ol, w, hi)
    finals = draw(st.lists(st.tuples(st.integers(0, n - 1), weight), min_size=1, max_size=n))
    for q, w in finals:
        a.set_final(q, w)
    return a
