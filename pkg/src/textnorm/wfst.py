"""Weighted finite-state automata over the tropical semiring.

Only what the normalizer needs is here: construction helpers, rational
operations (union, concatenation), trimming, composition, output
projection, prefix closure, n-best paths and incremental next-label
queries against a prefix-closed lattice.

Weights are plain floats: ``min`` is semiring plus, ``+`` is semiring
times, ``inf`` is the zero element and ``0.0`` the one element.
"""

from __future__ import annotations

import heapq
import itertools
import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence, TextIO

EPSILON = "<eps>"
UNKNOWN = "<unk>"

ZERO = math.inf
ONE = 0.0

DEFAULT_FINAL_REWARD = -1000.0


def plus(a: float, b: float) -> float:
    return a if a <= b else b


def times(a: float, b: float) -> float:
    if a == ZERO or b == ZERO:
        return ZERO
    return a + b


class WfstError(ValueError):
    pass


class SymbolTable:
    """Dense string <-> id mapping. Id 0 is epsilon, id 1 is ``<unk>``."""

    def __init__(self, symbols: Iterable[str] = ()):
        self._symbols: list[str] = [EPSILON, UNKNOWN]
        self._ids: dict[str, int] = {EPSILON: 0, UNKNOWN: 1}
        for s in symbols:
            self.add(s)

    def add(self, symbol: str) -> int:
        i = self._ids.get(symbol)
        if i is None:
            i = len(self._symbols)
            self._symbols.append(symbol)
            self._ids[symbol] = i
        return i

    def find(self, symbol: str) -> int | None:
        return self._ids.get(symbol)

    def lookup(self, symbol: str) -> int:
        """Id of ``symbol``, or the ``<unk>`` id when absent."""
        return self._ids.get(symbol, 1)

    def symbol(self, i: int) -> str:
        return self._symbols[i]

    def __len__(self) -> int:
        return len(self._symbols)

    def __iter__(self) -> Iterator[str]:
        return iter(self._symbols)

    def __contains__(self, symbol: object) -> bool:
        return symbol in self._ids

    def compatible(self, other: "SymbolTable") -> bool:
        """True when one table is a prefix of the other (shared ids agree)."""
        if self is other:
            return True
        n = min(len(self), len(other))
        return self._symbols[:n] == other._symbols[:n]

    def copy(self) -> "SymbolTable":
        return SymbolTable(self._symbols[2:])

    def write(self, stream: TextIO) -> None:
        for i, s in enumerate(self._symbols):
            stream.write(f"{s}\t{i}\n")

    @classmethod
    def read(cls, stream: TextIO) -> "SymbolTable":
        table = cls()
        for lineno, line in enumerate(stream, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise WfstError(f"line {lineno}: expected 'symbol<TAB>id'")
            sym, idx = parts[0], int(parts[1])
            if table.add(sym) != idx:
                raise WfstError(f"line {lineno}: ids must be dense and ordered")
        return table


@dataclass(frozen=True)
class Arc:
    ilabel: int
    olabel: int
    weight: float
    next: int


@dataclass(frozen=True)
class Path:
    ilabels: tuple[str, ...]
    olabels: tuple[str, ...]
    cost: float


class Automaton:
    """A mutable-during-construction weighted transducer.

    Treat instances as immutable once handed to an operation; every
    operation returns a fresh automaton.
    """

    def __init__(self, isyms: SymbolTable | None = None, osyms: SymbolTable | None = None):
        self.isyms = isyms if isyms is not None else SymbolTable()
        self.osyms = osyms if osyms is not None else self.isyms
        self.start: int | None = None
        self._arcs: list[list[Arc]] = []
        self._final: dict[int, float] = {}
        self._by_ilabel: list[dict[int, list[Arc]]] | None = None

    # construction

    def add_state(self) -> int:
        self._arcs.append([])
        self._by_ilabel = None
        return len(self._arcs) - 1

    def set_start(self, state: int) -> None:
        self._check_state(state)
        self.start = state

    def set_final(self, state: int, weight: float = ONE) -> None:
        self._check_state(state)
        if weight == ZERO:
            self._final.pop(state, None)
        else:
            self._final[state] = float(weight)

    def add_arc(self, src: int, ilabel: int | str, olabel: int | str,
                weight: float, dst: int) -> None:
        self._check_state(src)
        self._check_state(dst)
        if isinstance(ilabel, str):
            ilabel = self.isyms.add(ilabel)
        if isinstance(olabel, str):
            olabel = self.osyms.add(olabel)
        self._arcs[src].append(Arc(ilabel, olabel, float(weight), dst))
        self._by_ilabel = None

    def add_path(self, src: int, dst: int, ins: Sequence[str], outs: Sequence[str],
                 weight: float = ONE) -> None:
        """Chain of arcs from ``src`` to ``dst`` reading ``ins`` and writing ``outs``.

        The shorter side is padded with epsilons at the end. The weight
        sits on the first arc.
        """
        n = max(len(ins), len(outs))
        if n == 0:
            self.add_arc(src, 0, 0, weight, dst)
            return
        cur = src
        for k in range(n):
            nxt = dst if k == n - 1 else self.add_state()
            i = ins[k] if k < len(ins) else 0
            o = outs[k] if k < len(outs) else 0
            self.add_arc(cur, i, o, weight if k == 0 else ONE, nxt)
            cur = nxt

    def _check_state(self, state: int) -> None:
        if not 0 <= state < len(self._arcs):
            raise WfstError(f"no such state: {state}")

    # inspection

    @property
    def num_states(self) -> int:
        return len(self._arcs)

    @property
    def num_arcs(self) -> int:
        return sum(len(a) for a in self._arcs)

    def states(self) -> range:
        return range(len(self._arcs))

    def arcs(self, state: int) -> list[Arc]:
        return self._arcs[state]

    def final(self, state: int) -> float:
        return self._final.get(state, ZERO)

    def is_final(self, state: int) -> bool:
        return state in self._final

    def finals(self) -> dict[int, float]:
        return dict(self._final)

    def is_acceptor(self) -> bool:
        return all(arc.ilabel == arc.olabel for arcs in self._arcs for arc in arcs)

    def is_empty(self) -> bool:
        return self.start is None or not self._final

    def arcs_by_ilabel(self, state: int) -> dict[int, list[Arc]]:
        if self._by_ilabel is None:
            index = []
            for arcs in self._arcs:
                d: dict[int, list[Arc]] = {}
                for arc in arcs:
                    d.setdefault(arc.ilabel, []).append(arc)
                index.append(d)
            self._by_ilabel = index
        return self._by_ilabel[state]

    def is_acyclic(self) -> bool:
        color = [0] * self.num_states
        for root in self.states():
            if color[root]:
                continue
            stack = [(root, iter(self._arcs[root]))]
            color[root] = 1
            while stack:
                q, it = stack[-1]
                arc = next(it, None)
                if arc is None:
                    color[q] = 2
                    stack.pop()
                elif color[arc.next] == 1:
                    return False
                elif color[arc.next] == 0:
                    color[arc.next] = 1
                    stack.append((arc.next, iter(self._arcs[arc.next])))
        return True

    def copy(self) -> "Automaton":
        out = Automaton(self.isyms, self.osyms)
        out._arcs = [list(a) for a in self._arcs]
        out._final = dict(self._final)
        out.start = self.start
        return out

    def __repr__(self) -> str:
        return f"Automaton(states={self.num_states}, arcs={self.num_arcs}, start={self.start})"


# ---------------------------------------------------------------------------
# construction helpers


def string_acceptor(symbols: Sequence[str], syms: SymbolTable | None = None,
                    add_symbols: bool = True) -> Automaton:
    """Linear acceptor of one string.

    With ``add_symbols=False`` unknown symbols map to ``<unk>`` instead of
    growing the table, so the acceptor composes with nothing that lacks them.
    """
    a = Automaton(syms if syms is not None else SymbolTable())
    q = a.add_state()
    a.set_start(q)
    for s in symbols:
        r = a.add_state()
        label = a.isyms.add(s) if add_symbols else a.isyms.lookup(s)
        a.add_arc(q, label, label, ONE, r)
        q = r
    a.set_final(q)
    return a


def string_transducer(ins: Sequence[str], outs: Sequence[str],
                      isyms: SymbolTable | None = None,
                      osyms: SymbolTable | None = None, weight: float = ONE) -> Automaton:
    a = Automaton(isyms if isyms is not None else SymbolTable(),
                  osyms if osyms is not None else SymbolTable())
    s, f = a.add_state(), a.add_state()
    a.set_start(s)
    a.set_final(f)
    a.add_path(s, f, ins, outs, weight)
    return a


def _merged_tables(a: SymbolTable, b: SymbolTable) -> tuple[SymbolTable, list[int] | None]:
    """Table covering both, plus an id remap for ``b`` (None if identity)."""
    if a.compatible(b):
        return (a if len(a) >= len(b) else b), None
    merged = a.copy()
    remap = [merged.add(s) for s in b]
    return merged, remap


def _copy_into(dst: Automaton, src: Automaton, imap: list[int] | None,
               omap: list[int] | None) -> int:
    """Append ``src``'s states to ``dst``; returns the state offset."""
    offset = dst.num_states
    for _ in src.states():
        dst.add_state()
    for q in src.states():
        for arc in src.arcs(q):
            il = imap[arc.ilabel] if imap else arc.ilabel
            ol = omap[arc.olabel] if omap else arc.olabel
            dst.add_arc(q + offset, il, ol, arc.weight, arc.next + offset)
    return offset


def union(a: Automaton, b: Automaton) -> Automaton:
    isyms, imap = _merged_tables(a.isyms, b.isyms)
    osyms, omap = (isyms, imap) if a.osyms is a.isyms and b.osyms is b.isyms \
        else _merged_tables(a.osyms, b.osyms)
    out = Automaton(isyms, osyms)
    s = out.add_state()
    out.set_start(s)
    for part, im, om in ((a, None, None), (b, imap, omap)):
        if part.start is None:
            continue
        off = _copy_into(out, part, im, om)
        out.add_arc(s, 0, 0, ONE, part.start + off)
        for q, w in part.finals().items():
            out.set_final(q + off, w)
    return out


def concat(a: Automaton, b: Automaton) -> Automaton:
    isyms, imap = _merged_tables(a.isyms, b.isyms)
    osyms, omap = (isyms, imap) if a.osyms is a.isyms and b.osyms is b.isyms \
        else _merged_tables(a.osyms, b.osyms)
    out = Automaton(isyms, osyms)
    if a.start is None or b.start is None:
        return out
    _copy_into(out, a, None, None)
    off = _copy_into(out, b, imap, omap)
    out.set_start(a.start)
    for q, w in a.finals().items():
        out.add_arc(q, 0, 0, w, b.start + off)
    for q, w in b.finals().items():
        out.set_final(q + off, w)
    return out


def optional(a: Automaton) -> Automaton:
    """``a`` or the empty string (at cost one)."""
    eps = Automaton(a.isyms, a.osyms)
    q = eps.add_state()
    eps.set_start(q)
    eps.set_final(q)
    return union(a, eps)


def trim(a: Automaton) -> Automaton:
    """Keep only states that are both accessible and coaccessible."""
    out = Automaton(a.isyms, a.osyms)
    if a.start is None:
        return out
    accessible = {a.start}
    queue = deque([a.start])
    reverse: list[list[int]] = [[] for _ in a.states()]
    while queue:
        q = queue.popleft()
        for arc in a.arcs(q):
            reverse[arc.next].append(q)
            if arc.next not in accessible:
                accessible.add(arc.next)
                queue.append(arc.next)
    coaccessible = {q for q in a.finals() if q in accessible}
    queue = deque(coaccessible)
    while queue:
        q = queue.popleft()
        for p in reverse[q]:
            if p not in coaccessible:
                coaccessible.add(p)
                queue.append(p)
    if a.start not in coaccessible:
        return out
    # renumber in BFS order from the start so the start becomes state 0
    order = {a.start: 0}
    queue = deque([a.start])
    while queue:
        q = queue.popleft()
        for arc in a.arcs(q):
            if arc.next in coaccessible and arc.next not in order:
                order[arc.next] = len(order)
                queue.append(arc.next)
    for _ in order:
        out.add_state()
    out.set_start(0)
    for q, i in order.items():
        for arc in a.arcs(q):
            if arc.next in order:
                out.add_arc(i, arc.ilabel, arc.olabel, arc.weight, order[arc.next])
        if a.is_final(q):
            out.set_final(i, a.final(q))
    return out


# ---------------------------------------------------------------------------
# core algebra


def compose(a: Automaton, b: Automaton) -> Automaton:
    """Tropical composition of ``a`` then ``b``, trimmed.

    Epsilons are matched with the usual three-state filter: after ``a``
    moves alone on an epsilon output, ``b`` may not move alone before the
    next real match, and vice versa, so each alignment is built once.
    """
    if not a.osyms.compatible(b.isyms):
        raise WfstError("compose: output symbols of the first automaton do not "
                        "match input symbols of the second")
    out = Automaton(a.isyms, b.osyms)
    if a.start is None or b.start is None:
        return out
    ids: dict[tuple[int, int, int], int] = {}
    queue: deque[tuple[int, int, int]] = deque()

    def state(q1: int, q2: int, f: int) -> int:
        key = (q1, q2, f)
        s = ids.get(key)
        if s is None:
            s = out.add_state()
            ids[key] = s
            queue.append(key)
        return s

    out.set_start(state(a.start, b.start, 0))
    while queue:
        q1, q2, f = key = queue.popleft()
        src = ids[key]
        fw = times(a.final(q1), b.final(q2))
        if fw != ZERO:
            out.set_final(src, fw)
        b_arcs = b.arcs_by_ilabel(q2)
        b_eps = b_arcs.get(0, ())
        for arc1 in a.arcs(q1):
            if arc1.olabel == 0:
                if f != 2:
                    out.add_arc(src, arc1.ilabel, 0, arc1.weight, state(arc1.next, q2, 1))
                if f == 0:
                    for arc2 in b_eps:
                        out.add_arc(src, arc1.ilabel, arc2.olabel,
                                    times(arc1.weight, arc2.weight),
                                    state(arc1.next, arc2.next, 0))
            else:
                for arc2 in b_arcs.get(arc1.olabel, ()):
                    out.add_arc(src, arc1.ilabel, arc2.olabel,
                                times(arc1.weight, arc2.weight),
                                state(arc1.next, arc2.next, 0))
        if f != 1:
            for arc2 in b_eps:
                out.add_arc(src, 0, arc2.olabel, arc2.weight, state(q1, arc2.next, 2))
    return trim(out)


def project_output(a: Automaton) -> Automaton:
    out = Automaton(a.osyms, a.osyms)
    for _ in a.states():
        out.add_state()
    for q in a.states():
        for arc in a.arcs(q):
            out.add_arc(q, arc.olabel, arc.olabel, arc.weight, arc.next)
    for q, w in a.finals().items():
        out.set_final(q, w)
    out.start = a.start
    return out


def prefix_closure(a: Automaton, final_reward: float = DEFAULT_FINAL_REWARD) -> Automaton:
    """Make every state final: free exit where there was none, ``final_reward`` elsewhere.

    ``a`` must be trimmed, otherwise dead states would start accepting
    strings that lead nowhere.
    """
    out = a.copy()
    out._final = {q: (final_reward if a.is_final(q) else ONE) for q in a.states()}
    return out


def _distance_to_exit(a: Automaton) -> list[float]:
    """Shortest cost from each state to acceptance (Bellman-Ford on the reverse)."""
    dist = [a.final(q) for q in a.states()]
    reverse: list[list[tuple[int, float]]] = [[] for _ in a.states()]
    for q in a.states():
        for arc in a.arcs(q):
            reverse[arc.next].append((q, arc.weight))
    queue = deque(q for q in a.states() if dist[q] != ZERO)
    queued = set(queue)
    relaxations = 0
    limit = max(1, a.num_states) * max(1, a.num_arcs + a.num_states) + 10
    while queue:
        r = queue.popleft()
        queued.discard(r)
        for p, w in reverse[r]:
            d = times(w, dist[r])
            if d < dist[p]:
                dist[p] = d
                relaxations += 1
                if relaxations > limit:
                    raise WfstError("negative-cost cycle")
                if p not in queued:
                    queued.add(p)
                    queue.append(p)
    return dist


def shortest_paths(a: Automaton, n: int) -> list[Path]:
    """The ``n`` cheapest accepting paths, cost ascending, ties by output then input labels."""
    if n <= 0 or a.start is None:
        return []
    h = _distance_to_exit(a)
    if h[a.start] == ZERO:
        return []
    tie = itertools.count()
    # (estimate, tiebreak, cost so far, state, ilabels, olabels, finished)
    heap = [(h[a.start], next(tie), ONE, a.start, (), (), False)]
    done: list[tuple[float, tuple[str, ...], tuple[str, ...]]] = []
    pops = 0
    while heap:
        est = heap[0][0]
        if len(done) >= n and est > done[n - 1][0] + 1e-9:
            break
        est, _, g, q, il, ol, finished = heapq.heappop(heap)
        pops += 1
        if pops > 2_000_000:
            raise WfstError("shortest_paths: search did not terminate")
        if finished:
            done.append((g, ol, il))
            done.sort(key=lambda t: t[0])
            continue
        if a.is_final(q):
            c = times(g, a.final(q))
            heapq.heappush(heap, (c, next(tie), c, q, il, ol, True))
        for arc in a.arcs(q):
            if h[arc.next] == ZERO:
                continue
            g2 = times(g, arc.weight)
            il2 = il + (a.isyms.symbol(arc.ilabel),) if arc.ilabel else il
            ol2 = ol + (a.osyms.symbol(arc.olabel),) if arc.olabel else ol
            heapq.heappush(heap, (times(g2, h[arc.next]), next(tie), g2, arc.next,
                                  il2, ol2, False))
    done.sort(key=lambda t: (t[0], t[1], t[2]))
    return [Path(il, ol, c) for c, ol, il in done[:n]]


def enumerate_paths(a: Automaton, max_len: int) -> list[Path]:
    """Every accepting path using at most ``max_len`` arcs. Exponential; test oracle only."""
    out: list[Path] = []
    if a.start is None:
        return out

    def walk(q: int, depth: int, cost: float, il: tuple, ol: tuple) -> None:
        if a.is_final(q):
            out.append(Path(il, ol, times(cost, a.final(q))))
        if depth == max_len:
            return
        for arc in a.arcs(q):
            walk(arc.next, depth + 1, times(cost, arc.weight),
                 il + (a.isyms.symbol(arc.ilabel),) if arc.ilabel else il,
                 ol + (a.osyms.symbol(arc.olabel),) if arc.olabel else ol)

    walk(a.start, 0, ONE, (), ())
    return out


def accepted_strings(a: Automaton, max_len: int = 64) -> dict[tuple[str, ...], float]:
    """Output strings of an acyclic automaton with their minimum cost."""
    best: dict[tuple[str, ...], float] = {}
    for p in enumerate_paths(a, max_len):
        best[p.olabels] = plus(best.get(p.olabels, ZERO), p.cost)
    return best


# ---------------------------------------------------------------------------
# incremental queries against an output lattice


class LatticeCursor:
    """The set of lattice states reachable by a label prefix, with best costs.

    Costs exclude exit weights; ``exit_cost`` adds them. Cursors are cheap
    values: ``advance`` returns a new cursor.
    """

    __slots__ = ("lattice", "costs")

    def __init__(self, lattice: Automaton, costs: dict[int, float]):
        self.lattice = lattice
        self.costs = costs

    @classmethod
    def start(cls, lattice: Automaton) -> "LatticeCursor":
        if lattice.start is None:
            return cls(lattice, {})
        return cls(lattice, _epsilon_closure(lattice, {lattice.start: ONE}))

    @property
    def alive(self) -> bool:
        return bool(self.costs)

    @property
    def path_cost(self) -> float:
        return min(self.costs.values(), default=ZERO)

    @property
    def exit_cost(self) -> float:
        lat = self.lattice
        return min((times(c, lat.final(q)) for q, c in self.costs.items()), default=ZERO)

    def advance(self, symbol: str | int) -> "LatticeCursor":
        lat = self.lattice
        label = symbol if isinstance(symbol, int) else lat.isyms.find(symbol)
        nxt: dict[int, float] = {}
        if label:
            for q, c in self.costs.items():
                for arc in lat.arcs_by_ilabel(q).get(label, ()):
                    d = times(c, arc.weight)
                    if d < nxt.get(arc.next, ZERO):
                        nxt[arc.next] = d
        return LatticeCursor(lat, _epsilon_closure(lat, nxt) if nxt else {})

    def next_costs(self) -> dict[str, float]:
        """Exit cost of ``prefix + s`` for every symbol ``s`` with a finite one."""
        lat = self.lattice
        labels = {label for q in self.costs for label in lat.arcs_by_ilabel(q) if label}
        out = {}
        for label in labels:
            c = self.advance(label).exit_cost
            if c != ZERO:
                out[lat.isyms.symbol(label)] = c
        return out


def _epsilon_closure(a: Automaton, costs: dict[int, float]) -> dict[int, float]:
    out = dict(costs)
    queue = deque(out)
    while queue:
        q = queue.popleft()
        for arc in a.arcs_by_ilabel(q).get(0, ()):
            d = times(out[q], arc.weight)
            if d < out.get(arc.next, ZERO):
                out[arc.next] = d
                queue.append(arc.next)
    return out


@dataclass
class NextLabelCosts:
    costs: dict[str, float]
    exit_cost: float

    def __getitem__(self, symbol: str) -> float:
        return self.costs.get(symbol, ZERO)

    def finite(self) -> dict[str, float]:
        return dict(self.costs)


def next_label_costs(lattice: Automaton, prefix: Sequence[str]) -> NextLabelCosts:
    """Costs of every one-label extension of ``prefix`` in a prefix-closed acceptor."""
    cursor = LatticeCursor.start(lattice)
    for s in prefix:
        cursor = cursor.advance(s)
        if not cursor.alive:
            break
    if not cursor.alive or cursor.exit_cost == ZERO:
        raise WfstError(f"prefix not accepted by lattice: {' '.join(prefix)!r}")
    return NextLabelCosts(cursor.next_costs(), cursor.exit_cost)


# ---------------------------------------------------------------------------
# text serialization


def _fmt(w: float) -> str:
    if w == ZERO:
        return "Infinity"
    return repr(float(w))


def write_text(a: Automaton, stream: TextIO) -> None:
    """``src dst ilabel olabel weight`` arc lines and ``state weight`` final lines.

    States are renumbered so the start is listed first as state 0. A start
    state with no arcs and no exit accepts nothing and is written as nothing.
    """
    if a.start is None or not (a.arcs(a.start) or a.is_final(a.start)):
        return
    order = [a.start] + [q for q in a.states() if q != a.start]
    index = {q: i for i, q in enumerate(order)}
    for q in order:
        for arc in a.arcs(q):
            stream.write(f"{index[q]}\t{index[arc.next]}\t{a.isyms.symbol(arc.ilabel)}\t"
                         f"{a.osyms.symbol(arc.olabel)}\t{_fmt(arc.weight)}\n")
        if a.is_final(q):
            stream.write(f"{index[q]}\t{_fmt(a.final(q))}\n")


def read_text(stream: TextIO, isyms: SymbolTable | None = None,
              osyms: SymbolTable | None = None) -> Automaton:
    a = Automaton(isyms if isyms is not None else SymbolTable(), osyms)

    def ensure(q: int) -> None:
        while a.num_states <= q:
            a.add_state()

    for lineno, line in enumerate(stream, 1):
        line = line.rstrip("\n")
        if not line:
            continue
        parts = line.split("\t")
        try:
            if len(parts) == 5:
                src, dst = int(parts[0]), int(parts[1])
                ensure(max(src, dst))
                if a.start is None:
                    a.set_start(src)
                a.add_arc(src, parts[2], parts[3], float(parts[4]), dst)
            elif len(parts) in (1, 2):
                q = int(parts[0])
                ensure(q)
                if a.start is None:
                    a.set_start(q)
                a.set_final(q, float(parts[1]) if len(parts) == 2 else ONE)
            else:
                raise ValueError("wrong column count")
        except ValueError as exc:
            raise WfstError(f"line {lineno}: {exc}") from None
    return a
