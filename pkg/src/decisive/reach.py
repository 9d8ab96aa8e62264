"""Reachability oracles answering "can A be reached from s?".

Every oracle is sound.  Only the bounded oracle may answer ``UNKNOWN``; the
others are exact on the model and target shapes they accept.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Hashable

from .chain import EffectiveChain
from .errors import BudgetExhausted, DomainError, InputError
from .model import (Configuration, CounterMachine, TargetSet, UpwardTarget, ZeroTarget,
                    is_safe_one_counter, semantics)

DEFAULT_BUDGET = 100_000


class Answer(Enum):
    REACHABLE = "reachable"
    UNREACHABLE = "unreachable"
    UNKNOWN = "unknown"


class ReachOracle:
    """Base class: subclasses implement :meth:`_decide`; answers are cached."""

    name = "oracle"

    def __init__(self):
        self._cache: dict[Hashable, Answer] = {}

    def query(self, s) -> Answer:
        if s not in self._cache:
            self._cache[s] = self._decide(s)
        return self._cache[s]

    def reachable(self, s) -> bool:
        answer = self.query(s)
        if answer is Answer.UNKNOWN:
            raise BudgetExhausted(f"{self.name} oracle could not decide reachability from {s}")
        return answer is Answer.REACHABLE

    def _decide(self, s) -> Answer:
        raise NotImplementedError


# r_q table -------------------------------------------------------------------

@dataclass(frozen=True)
class RqTable:
    """Per-state threshold: Q x {0} is reachable from (q, k) iff k <= r[q].

    ``math.inf`` stands for an unbounded threshold.  ``layers`` holds the
    sizes of the backward breadth-first layers, kept as a witness.
    """

    r: dict[str, float]
    layers: tuple[int, ...]

    def __getitem__(self, q: str):
        return self.r[q]

    def all_finite(self) -> bool:
        return all(v != math.inf for v in self.r.values())

    def all_infinite(self) -> bool:
        return all(v == math.inf for v in self.r.values())

    def as_text(self) -> dict[str, str]:
        return {q: ("inf" if v == math.inf else str(v)) for q, v in self.r.items()}


def compute_rq(c: CounterMachine) -> RqTable:
    """Thresholds r_q from shortest-distance layers to Q x {0}.

    Layer n holds configurations at distance exactly n; since every move
    changes the counter by at most one, layer n only contains values <= n.
    Layers are computed up to (2|Q|-1)|Q|.  For each q, if the largest k with
    (q, k) in some layer sits in a layer below |Q| then r_q is that k, else
    some negative circuit is reachable from q and r_q is infinite.
    """
    if not is_safe_one_counter(c):
        raise DomainError("r_q tables are defined for safe one-counter machines only")
    size = len(c.states)
    horizon = (2 * size - 1) * size
    into: dict[str, list[tuple[str, int]]] = {q: [] for q in c.states}
    for t in c.delta1:
        into[t.target].append((t.source, t.post[0] - 1))
    layer = {(q, 0) for q in c.states}
    seen = set(layer)
    best: dict[str, tuple[int, int]] = {q: (0, 0) for q in c.states}
    sizes = [len(layer)]
    for n in range(1, horizon + 1):
        nxt = set()
        for q2, k2 in layer:
            for q, delta in into[q2]:
                k = k2 - delta
                if k >= 1 and (q, k) not in seen:
                    nxt.add((q, k))
        if not nxt:
            break
        seen |= nxt
        for q, k in nxt:
            if k > best[q][0]:
                best[q] = (k, n)
        sizes.append(len(nxt))
        layer = nxt
    r = {q: (k if n_q < size else math.inf) for q, (k, n_q) in best.items()}
    return RqTable(r, tuple(sizes))


class OneCounterOracle(ReachOracle):
    name = "r_q"

    def __init__(self, c: CounterMachine):
        super().__init__()
        self.table = compute_rq(c)

    def _decide(self, s: Configuration) -> Answer:
        return Answer.REACHABLE if s.marking[0] <= self.table[s.state] else Answer.UNREACHABLE


def one_counter_oracle(c: CounterMachine, A: TargetSet | None = None) -> OneCounterOracle:
    if A is not None and not isinstance(A, ZeroTarget):
        raise InputError("the r_q oracle only answers queries for the target Q x {0}")
    return OneCounterOracle(c)


# coverability ------------------------------------------------------------------

def _leq(a, b) -> bool:
    return all(x <= y for x, y in zip(a, b))


class CoverabilityOracle(ReachOracle):
    """Backward coverability: minimal basis of Pre*(upward closure of the target).

    The minimal predecessor of ``up(b)`` through a transition with ``pre`` and
    ``post`` is ``pre + max(b - post, 0)``.  The fixpoint terminates because
    N^d is well-quasi-ordered; the basis is pruned to minimal elements after
    every round, so it stays an antichain.
    """

    name = "coverability"

    def __init__(self, net: CounterMachine, A: UpwardTarget):
        super().__init__()
        if net.delta0:
            raise DomainError("coverability needs a machine without zero tests")
        self.net = net
        self.rounds = 0
        basis = {(b.state, b.marking) for b in A.basis}
        frontier = set(basis)
        while frontier:
            self.rounds += 1
            found = set()
            for q2, b in frontier:
                for t in net.delta1:
                    if t.target != q2:
                        continue
                    m = tuple(p + max(x - o, 0) for x, p, o in zip(b, t.pre, t.post))
                    cand = (t.source, m)
                    if not any(q == cand[0] and _leq(old, m) for q, old in basis | found):
                        found.add(cand)
            found = {f for f in found
                     if not any(g != f and g[0] == f[0] and _leq(g[1], f[1]) for g in found)}
            basis = {b for b in basis
                     if not any(f[0] == b[0] and _leq(f[1], b[1]) for f in found)} | found
            frontier = found
        self.basis = sorted(basis)

    def _decide(self, s: Configuration) -> Answer:
        hit = any(q == s.state and _leq(b, s.marking) for q, b in self.basis)
        return Answer.REACHABLE if hit else Answer.UNREACHABLE


def coverability_oracle(net: CounterMachine, A: UpwardTarget) -> CoverabilityOracle:
    if not isinstance(A, UpwardTarget):
        raise InputError("coverability needs an upward-closed target")
    return CoverabilityOracle(net, A)


# bounded exploration ---------------------------------------------------------------

class BoundedOracle(ReachOracle):
    """Forward breadth-first search limited to ``budget`` expanded states."""

    name = "bounded"

    def __init__(self, chain: EffectiveChain, A, budget: int = DEFAULT_BUDGET):
        super().__init__()
        if budget < 1:
            raise InputError("budget must be at least 1")
        self.chain = chain
        self.A = A
        self.budget = budget
        self.last_cost = 0

    def _decide(self, s) -> Answer:
        seen = {s}
        queue = deque([s])
        cost = 0
        while queue:
            if cost >= self.budget:
                self.last_cost = cost
                return Answer.UNKNOWN
            u = queue.popleft()
            cost += 1
            if u in self.A or self._cache.get(u) is Answer.REACHABLE:
                self.last_cost = cost
                return Answer.REACHABLE
            for v, _ in self.chain.successors(u):
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        self.last_cost = cost
        return Answer.UNREACHABLE


def bounded_oracle(chain: EffectiveChain, A, budget: int = DEFAULT_BUDGET) -> BoundedOracle:
    return BoundedOracle(chain, A, budget)


def auto_oracle(c: CounterMachine, A: TargetSet, chain: EffectiveChain | None = None,
                budget: int = DEFAULT_BUDGET) -> ReachOracle:
    """Pick the exact oracle the target shape allows, else a bounded search."""
    if isinstance(A, ZeroTarget) and is_safe_one_counter(c):
        return OneCounterOracle(c)
    if isinstance(A, UpwardTarget) and not c.delta0:
        return CoverabilityOracle(c, A)
    return BoundedOracle(chain if chain is not None else semantics(c), A, budget)
