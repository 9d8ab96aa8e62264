"""Countable Markov chains: effective chains, finite chains, and the recast chain.

States of an :class:`EffectiveChain` are opaque hashable values; this module
never looks inside them.  Finite chains are indexed ``0..n-1`` and carry
optional labels so that materialized chains can be related back to model
configurations.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Hashable, Iterable, Sequence

import networkx as nx

from .errors import DomainError, InputError, InvariantViolation
from .numeric import solve_linear

State = Hashable
Row = list[tuple[State, Fraction]]


def check_row(row: Sequence[tuple[State, Fraction]], where: object = None) -> None:
    """Raise unless ``row`` is a finite distribution with positive entries."""
    total = Fraction(0)
    for _, p in row:
        if p <= 0:
            raise InvariantViolation(f"non-positive probability {p} in row of {where!r}")
        total += p
    if total != 1:
        raise InvariantViolation(f"row of {where!r} sums to {total}, not 1")


class EffectiveChain:
    """A Markov chain given by a computable successor function.

    ``successors(s)`` must be pure and return the finite support of ``p(s)``
    as ``(state, probability)`` pairs with distinct states.
    """

    def __init__(self, successors: Callable[[State], Row], states: Iterable[State] | None = None,
                 name: str = "chain"):
        self._successors = successors
        self.states_hint = states
        self.name = name

    def successors(self, s: State) -> Row:
        return self._successors(s)

    def __repr__(self):
        return f"EffectiveChain({self.name})"


@dataclass(frozen=True)
class ProbInterval:
    low: Fraction
    up: Fraction

    def __post_init__(self):
        if not (0 <= self.low <= self.up <= 1):
            raise InvariantViolation(f"malformed interval [{self.low}, {self.up}]")

    @property
    def width(self) -> Fraction:
        return self.up - self.low

    def __contains__(self, x) -> bool:
        return self.low <= x <= self.up


class FiniteChain:
    """Finite chain over ``0..n-1`` stored as sparse rows of exact rationals."""

    def __init__(self, rows: Sequence[dict[int, Fraction]], labels: Sequence[State] | None = None):
        self.rows = [dict(r) for r in rows]
        self.n = len(self.rows)
        self.labels = list(labels) if labels is not None else list(range(self.n))
        if len(self.labels) != self.n:
            raise InputError("label count does not match state count")
        self._index = {lab: i for i, lab in enumerate(self.labels)}
        for i, r in enumerate(self.rows):
            for j in r:
                if not 0 <= j < self.n:
                    raise InputError(f"row {i} points to missing state {j}")
            check_row(list(r.items()), where=self.labels[i])

    def index(self, label: State) -> int:
        return self._index[label]

    def successors(self, i: int) -> Row:
        return list(self.rows[i].items())

    def as_effective(self) -> EffectiveChain:
        return EffectiveChain(self.successors, states=range(self.n), name="finite")

    def is_absorbing(self, i: int) -> bool:
        return self.rows[i] == {i: Fraction(1)}

    def graph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(range(self.n))
        for i, r in enumerate(self.rows):
            g.add_edges_from((i, j) for j in r)
        return g

    def reachable_from(self, sources: Iterable[int]) -> set[int]:
        seen = set(sources)
        queue = deque(seen)
        while queue:
            i = queue.popleft()
            for j in self.rows[i]:
                if j not in seen:
                    seen.add(j)
                    queue.append(j)
        return seen

    def can_reach(self, targets: Iterable[int]) -> set[int]:
        """Pre*(targets): every state with a path into ``targets``."""
        preds: dict[int, list[int]] = {}
        for i, r in enumerate(self.rows):
            for j in r:
                preds.setdefault(j, []).append(i)
        seen = set(targets)
        queue = deque(seen)
        while queue:
            j = queue.popleft()
            for i in preds.get(j, ()):
                if i not in seen:
                    seen.add(i)
                    queue.append(i)
        return seen

    # edge list ------------------------------------------------------------

    def to_edge_list(self) -> str:
        lines = [f"# states {self.n}"]
        for i, r in enumerate(self.rows):
            for j in sorted(r):
                p = r[j]
                lines.append(f"{i} {j} {p.numerator}/{p.denominator}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edge_list(cls, text: str) -> "FiniteChain":
        rows: dict[int, dict[int, Fraction]] = {}
        declared = 0
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 2 and parts[0] == "states":
                    declared = int(parts[1])
                continue
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise InputError(f"line {lineno}: expected 'src dst num/den'")
            try:
                src, dst, p = int(parts[0]), int(parts[1]), Fraction(parts[2])
            except (ValueError, ZeroDivisionError):
                raise InputError(f"line {lineno}: cannot parse {line!r}") from None
            row = rows.setdefault(src, {})
            row[dst] = row.get(dst, Fraction(0)) + p
        n = max([declared] + [s + 1 for s in rows] + [d + 1 for r in rows.values() for d in r])
        return cls([rows.get(i, {i: Fraction(1)}) for i in range(n)])


def materialize(chain: EffectiveChain, s0: State, budget: int,
                stop: Callable[[State], bool] | None = None) -> tuple[FiniteChain, bool]:
    """Breadth-first materialization of the part of ``chain`` reachable from ``s0``.

    States for which ``stop`` holds are not expanded and become absorbing, as
    do states discovered once ``budget`` states have been expanded.  Returns
    the finite chain (state 0 is ``s0``; labels are the original states) and
    whether exploration closed without hitting the budget.
    """
    if budget < 1:
        raise InputError("budget must be at least 1")
    index = {s0: 0}
    labels = [s0]
    rows: list[dict[int, Fraction] | None] = [None]
    queue = deque([s0])
    expanded = 0
    closed = True
    while queue:
        s = queue.popleft()
        i = index[s]
        if stop is not None and stop(s):
            rows[i] = {i: Fraction(1)}
            continue
        if expanded >= budget:
            closed = False
            rows[i] = {i: Fraction(1)}
            continue
        expanded += 1
        row: dict[int, Fraction] = {}
        for t, p in chain.successors(s):
            if t not in index:
                index[t] = len(labels)
                labels.append(t)
                rows.append(None)
                queue.append(t)
            j = index[t]
            row[j] = row.get(j, Fraction(0)) + p
        rows[i] = row
    return FiniteChain(rows, labels), closed


def solve_reach_exact(fc: FiniteChain, s0: int, A: Iterable[int]) -> Fraction:
    """Exact Pr(F A) from ``s0`` by solving x = P x over the states that can reach A."""
    A = set(A)
    if s0 in A:
        return Fraction(1)
    live = fc.can_reach(A) & fc.reachable_from([s0])
    if s0 not in live:
        return Fraction(0)
    unknown = sorted(live - A)
    col = {s: k for k, s in enumerate(unknown)}
    rows, rhs = [], []
    for s in unknown:
        row = {col[s]: Fraction(1)}
        b = Fraction(0)
        for t, p in fc.rows[s].items():
            if t in A:
                b += p
            elif t in col:
                row[col[t]] = row.get(col[t], Fraction(0)) - p
                if not row[col[t]]:
                    del row[col[t]]
        rows.append(row)
        rhs.append(b)
    x = solve_linear(rows, rhs, len(unknown))
    return x[col[s0]]


def strongly_connected(fc: FiniteChain) -> list[tuple[frozenset[int], bool]]:
    """All SCCs with a flag telling whether each one is bottom."""
    g = fc.graph()
    cond = nx.condensation(g)
    result = []
    for node in cond.nodes:
        members = frozenset(cond.nodes[node]["members"])
        result.append((members, cond.out_degree(node) == 0))
    result.sort(key=lambda item: min(item[0]))
    return result


def bsccs(fc: FiniteChain) -> list[frozenset[int]]:
    """Bottom strongly connected components, ordered by smallest member."""
    return [c for c, bottom in strongly_connected(fc) if bottom]


def is_recurrent(fc: FiniteChain, start: int = 0) -> bool:
    """Finite chains: every state reachable from ``start`` is recurrent.

    True iff the reachable part is a single closed communicating class.
    """
    reach = fc.reachable_from([start])
    return all(start in fc.reachable_from([s]) for s in reach)


# recast chain ------------------------------------------------------------

class _Bottom:
    """The fresh state that absorbs entries into A or into states unable to reach A."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "s_bot"

    def __reduce__(self):
        return (_Bottom, ())


BOTTOM = _Bottom()


class RecastChain(EffectiveChain):
    """The chain M_{s0,A}, built lazily.

    Successors of a state that lie in A or cannot reach A are folded into
    :data:`BOTTOM`, which returns to ``s0`` with probability 1.
    """

    def __init__(self, chain: EffectiveChain, s0: State, A, pre_star):
        self.base = chain
        self.s0 = s0
        self.A = A
        self.pre_star = pre_star
        self._dead_cache: dict[State, bool] = {}
        super().__init__(self._successors_impl, name=f"recast({chain.name})")

    def _absorbed(self, s: State) -> bool:
        if s in self.A:
            return True
        if s not in self._dead_cache:
            self._dead_cache[s] = not self.pre_star.reachable(s)
        return self._dead_cache[s]

    def _successors_impl(self, s: State) -> Row:
        if s is BOTTOM:
            return [(self.s0, Fraction(1))]
        row: Row = []
        to_bottom = Fraction(0)
        for t, p in self.base.successors(s):
            if self._absorbed(t):
                to_bottom += p
            else:
                row.append((t, p))
        if to_bottom:
            row.append((BOTTOM, to_bottom))
        return row

    def materialize(self, budget: int) -> tuple[FiniteChain, bool]:
        """Explore from ``s0`` (state 0 of the result) up to ``budget`` expansions."""
        return materialize(self, self.s0, budget)


def recast_chain(chain: EffectiveChain, s0: State, A, pre_star) -> RecastChain:
    """Build M_{s0,A}; ``pre_star.reachable(s)`` must decide whether A is reachable from s."""
    if s0 in A or not pre_star.reachable(s0):
        raise DomainError("s0 ∈ A ∪ ¬Pre*(A)")
    return RecastChain(chain, s0, A, pre_star)


def invariant_distribution(matrix: Sequence[Sequence[Fraction]]) -> list[Fraction]:
    """Exact pi with pi M = pi and sum(pi) = 1 for an irreducible stochastic matrix.

    Solves the transposed balance equations with the last one replaced by
    the normalization constraint.
    """
    n = len(matrix)
    if any(len(r) != n for r in matrix):
        raise InputError("matrix is not square")
    for i, r in enumerate(matrix):
        if sum(r) != 1 or any(x < 0 for x in r):
            raise InputError(f"row {i} is not a distribution")
    rows = []
    for j in range(n - 1):
        row = {}
        for i in range(n):
            v = Fraction(matrix[i][j]) - (1 if i == j else 0)
            if v:
                row[i] = v
        rows.append(row)
    rows.append({i: Fraction(1) for i in range(n)})
    rhs = [Fraction(0)] * (n - 1) + [Fraction(1)]
    return solve_linear(rows, rhs, n)
