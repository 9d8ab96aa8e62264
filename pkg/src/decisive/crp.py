"""Interval framing of reachability probabilities in decisive chains.

The engine explores the execution tree breadth-first, accumulating mass that
reaches A into ``pmin`` and removing mass that can no longer reach A from
``pmax``.  It stops once the interval is at most ``theta`` wide and ``pmin``
is positive.  Termination is only guaranteed for decisive chains, hence
``step_cap``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from gmpy2 import mpq

from .chain import EffectiveChain, ProbInterval
from .deciders import regular_ppn_decide
from .errors import InputError
from .model import Configuration, CounterMachine, FiniteTarget, TargetSet, ZeroTarget, classify, semantics
from .reach import DEFAULT_BUDGET, Answer, BoundedOracle, OneCounterOracle, ReachOracle


@dataclass(frozen=True)
class TraceRow:
    step: int
    pmin: Fraction
    pmax: Fraction
    frontier_size: int
    depth: int


@dataclass(frozen=True)
class Incomplete:
    """Run stopped early; ``interval`` is still a sound enclosure."""

    interval: ProbInterval
    reason: str
    steps: int

    @property
    def low(self):
        return self.interval.low

    @property
    def up(self):
        return self.interval.up


def _fraction(x) -> Fraction:
    return Fraction(int(x.numerator), int(x.denominator))


def _interval(pmin, pmax) -> ProbInterval:
    return ProbInterval(_fraction(pmin), _fraction(pmax))


class _Frontier:
    """FIFO of (state, mass, depth).  With ``merge`` on, entries for the same
    state at the same depth are summed; the per-level totals, and therefore
    ``pmin``/``pmax`` at level boundaries, match the unmerged tree exactly.
    """

    def __init__(self, merge: bool):
        self.merge = merge
        self.entries: deque = deque()
        self.current: dict = {}
        self.following: dict = {}
        self.depth = 0

    def push(self, s, q: Fraction, depth: int) -> None:
        if not self.merge:
            self.entries.append((s, q, depth))
            return
        level = self.current if depth == self.depth else self.following
        level[s] = level.get(s, mpq(0)) + q

    def pop(self):
        if not self.merge:
            return self.entries.popleft()
        if not self.current:
            self.current, self.following = self.following, {}
            self.depth += 1
        s = next(iter(self.current))
        return s, self.current.pop(s), self.depth

    def __len__(self):
        if not self.merge:
            return len(self.entries)
        return len(self.current) + len(self.following)

    def mass(self) -> Fraction:
        if not self.merge:
            return _fraction(sum((q for _, q, _ in self.entries), mpq(0)))
        return _fraction(sum(self.current.values(), mpq(0)) + sum(self.following.values(), mpq(0)))


def comp_prob(chain: EffectiveChain, s0, A, theta: Fraction, oracle: ReachOracle,
              step_cap: int | None = None, merge: bool = True,
              trace: Callable[[TraceRow], None] | None = None) -> ProbInterval | Incomplete:
    """Frame Pr(F A) from ``s0`` within ``theta``.

    Returns a :class:`ProbInterval` of width at most ``theta`` with a positive
    lower bound when A is reachable, ``[0, 0]`` when it is not, or an
    :class:`Incomplete` when ``step_cap`` runs out or the oracle answers
    ``UNKNOWN``.  Masses are kept as GMP rationals internally; every
    returned bound is an exact :class:`~fractions.Fraction`.
    """
    theta = Fraction(theta)
    if theta <= 0:
        raise InputError("theta must be positive")
    first = oracle.query(s0)
    if first is Answer.UNKNOWN:
        return Incomplete(ProbInterval(Fraction(0), Fraction(1)), "oracle undecided at s0", 0)
    if first is Answer.UNREACHABLE and s0 not in A:
        return ProbInterval(Fraction(0), Fraction(0))
    width = mpq(theta.numerator, theta.denominator)
    pmin, pmax = mpq(0), mpq(1)
    front = _Frontier(merge)
    front.push(s0, mpq(1), 0)
    steps = 0
    while pmax - pmin > width or pmin == 0:
        if not len(front):
            break
        if step_cap is not None and steps >= step_cap:
            return Incomplete(_interval(pmin, pmax), "step cap reached", steps)
        s, q, depth = front.pop()
        steps += 1
        if s in A:
            pmin += q
        else:
            answer = oracle.query(s)
            if answer is Answer.UNKNOWN:
                return Incomplete(_interval(pmin, pmax), f"oracle undecided at {s}", steps)
            if answer is Answer.UNREACHABLE:
                pmax -= q
            else:
                for s2, p in chain.successors(s):
                    front.push(s2, q * mpq(p.numerator, p.denominator), depth + 1)
        if trace is not None:
            trace(TraceRow(steps, _fraction(pmin), _fraction(pmax), len(front), depth))
    return _interval(pmin, pmax)


def comp_prob_exact_regular(net: CounterMachine, m0: Configuration, m1: Configuration, B: int):
    """Exact probability for a regular marked net; see :func:`regular_ppn_decide`."""
    return regular_ppn_decide(net, m0, m1, B)


def frame_reachability(c: CounterMachine, s0: Configuration, A: TargetSet, theta: Fraction,
                       bound: int | None = None, budget: int = DEFAULT_BUDGET,
                       step_cap: int | None = None, counter_cap: int | None = None):
    """Pick a route from the model shape and return ``(route, result)``.

    Routes: ``"regular"`` (net with a single target marking and a known bound;
    result is an exact point interval), ``"r_q"`` (safe one-counter machine,
    target Q x {0}) and ``"bounded"`` (anything else, through a bounded
    search oracle).
    """
    cls = classify(c)
    if cls.is_pPN and isinstance(A, FiniteTarget) and len(A.configs) == 1 and bound is not None:
        res = regular_ppn_decide(c, s0, next(iter(A.configs)), bound)
        if res.probability is not None:
            return "regular", ProbInterval(res.probability, res.probability)
    chain = semantics(c, counter_cap)
    if isinstance(A, ZeroTarget) and cls.is_safe_one_counter:
        return "r_q", comp_prob(chain, s0, A, theta, OneCounterOracle(c), step_cap)
    return "bounded", comp_prob(chain, s0, A, theta, BoundedOracle(chain, A, budget), step_cap)
