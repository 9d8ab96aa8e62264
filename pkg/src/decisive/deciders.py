"""Decisiveness procedures for the decidable subclasses, plus birth-death closed forms.

Verdicts carry a case label and the exact quantities that triggered it, so a
reader can re-derive the answer by hand.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Sequence, Union

import networkx as nx

from .chain import FiniteChain, invariant_distribution, solve_reach_exact, strongly_connected
from .errors import DomainError, InputError, InvariantViolation
from .model import (Classification, Configuration, CounterMachine, FiniteTarget, PolyWeight,
                    TargetSet, UpwardTarget, ZeroTarget, classify, enabled, fire,
                    one_counter_weights)
from .numeric import Polynomial, poly_compare_leading
from .reach import compute_rq

PHM_EXPLORATION_CAP = 1_000_000


class Answer(Enum):
    DECISIVE = "Decisive"
    NOT_DECISIVE = "NotDecisive"
    UNSUPPORTED = "Unsupported"


@dataclass(frozen=True)
class Verdict:
    answer: Answer
    case: str
    witness: dict = field(default_factory=dict)

    @property
    def decisive(self) -> bool:
        return self.answer is Answer.DECISIVE

    def to_dict(self) -> dict:
        return {"answer": self.answer.value, "case": self.case,
                "witness": {k: _exact_text(v) for k, v in self.witness.items()}}

    def __str__(self):
        return f"{self.answer.value} (case: {self.case})"


def _exact_text(v):
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, float) and v == math.inf:
        return "inf"
    if isinstance(v, dict):
        return {str(k): _exact_text(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_exact_text(x) for x in v]
    if isinstance(v, (int, str, bool)) or v is None:
        return v
    return str(v)


def unsupported(reason: str, **witness) -> Verdict:
    return Verdict(Answer.UNSUPPORTED, reason, dict(witness))


# birth-death closed forms -----------------------------------------------------

def _prefix_products(rho: Sequence[Fraction]) -> list[Fraction]:
    out = [Fraction(1)]
    for r in rho:
        out.append(out[-1] * r)
    return out


def gambler_exact(rho: Sequence[Fraction], m: int) -> Fraction:
    """Absorption probability at 0 from ``m`` in the finite birth-death chain on 0..n.

    ``rho`` lists rho_1..rho_{n-1}, the down/up odds at the interior states;
    the endpoints 0 and n are absorbing.
    """
    n = len(rho) + 1
    if not 0 <= m <= n:
        raise InputError(f"start {m} outside 0..{n}")
    rho = [Fraction(r) for r in rho]
    if any(r <= 0 for r in rho):
        raise InputError("odds ratios must be positive")
    prods = _prefix_products(rho)
    return sum(prods[m:n], Fraction(0)) / sum(prods[:n], Fraction(0))


def gambler_chain(rho: Sequence[Fraction]) -> FiniteChain:
    """The explicit chain on 0..n with p_k = 1 / (1 + rho_k) upward at interior states."""
    n = len(rho) + 1
    rows: list[dict[int, Fraction]] = [{0: Fraction(1)}]
    for k, r in enumerate(rho, start=1):
        up = 1 / (1 + Fraction(r))
        rows.append({k + 1: up, k - 1: 1 - up})
    rows.append({n: Fraction(1)})
    return FiniteChain(rows)


@dataclass(frozen=True)
class WalkResult:
    kind: str  # "one" | "value" | "inconclusive"
    lower: Fraction
    upper: Fraction
    note: str = ""


RhoSpec = Union[Fraction, int, tuple, Callable[[int], Fraction]]


def _at(p: Polynomial, k: int) -> int:
    return sum(a * k ** i for i, a in enumerate(p.coefficients()))


def _cauchy_threshold(r: Polynomial) -> int:
    """An N past which ``r`` (positive leading coefficient) is positive."""
    coeffs = r.coefficients()
    lead = coeffs[-1]
    return 1 + math.ceil(max((Fraction(abs(c), lead) for c in coeffs[:-1]), default=Fraction(0)))


def walk_reach_prob(rho: RhoSpec, m: int, tail_bound: int = 1000) -> WalkResult:
    """Probability of visiting 0 from ``m`` in the infinite birth-death walk M_1.

    ``rho`` is a constant, a ``(dec, inc)`` pair of univariate polynomials
    (rho_k = dec(k) / inc(k)), or an arbitrary callable.  For polynomial odds
    the case analysis of :func:`one_counter_case` certifies divergence of the
    partial sums (probability one).  Odds eventually below some c < 1 give a
    geometric tail and a rigorous enclosure from ``tail_bound`` terms.
    Anything else is inconclusive.
    """
    if m < 0:
        raise InputError("start must be non-negative")
    if m == 0:
        return WalkResult("one", Fraction(1), Fraction(1), "start is 0")
    if isinstance(rho, (int, Fraction)):
        r = Fraction(rho)
        if r <= 0:
            raise InputError("odds ratio must be positive")
        rho = (Polynomial.constant(r.numerator, ("X",)), Polynomial.constant(r.denominator, ("X",)))
    if not isinstance(rho, tuple):
        prods = _prefix_products([Fraction(rho(k)) for k in range(1, tail_bound + 1)])
        total, head = sum(prods, Fraction(0)), sum(prods[:m], Fraction(0))
        return WalkResult("inconclusive", Fraction(0), Fraction(1),
                          f"no symbolic certificate; partial ratio {float(1 - head / total):.6f}")
    dec, inc = rho
    case = one_counter_case(dec, inc)
    if case <= 5:
        return WalkResult("one", Fraction(1), Fraction(1), f"divergent partial sums ({CASES[case]})")
    if case == 6:
        return WalkResult("inconclusive", Fraction(0), Fraction(1),
                          "odds tend to 1 from below; no geometric tail")
    a, b = dec.coefficients(), inc.coefficients()
    limit = Fraction(a[-1], b[-1]) if len(a) == len(b) else Fraction(0)
    c = (limit + 1) / 2
    var = inc.univariate_variable() or dec.univariate_variable() or "X"
    gap = (inc * c.numerator - dec * c.denominator).with_variables((var,))
    start = max(_cauchy_threshold(gap), 1)
    N = max(tail_bound, start + 1, m + 1)
    ratios = [Fraction(_at(dec, k), _at(inc, k)) for k in range(1, N)]
    prods = _prefix_products(ratios)
    partial, head = sum(prods, Fraction(0)), sum(prods[:m], Fraction(0))
    tail = prods[-1] * c / (1 - c)
    return WalkResult("value", 1 - head / partial, 1 - head / (partial + tail),
                      f"geometric tail with ratio {c} from k={start}")


# single-state one-counter ---------------------------------------------------------

CASES = {
    1: "d' < d",
    2: "a_i0 > a'_i0",
    3: "W(dec)=W(inc)",
    4: "a'_i0 > a_i0, i0 <= d-2",
    5: "0 < alpha <= 1",
    6: "alpha > 1",
    7: "d < d' or a'_d > a_d",
}


def one_counter_case(dec: Polynomial, inc: Polynomial) -> int:
    """Which of the seven cases applies to the nonzero weights (dec, inc)."""
    cmp = poly_compare_leading(dec, inc)
    d, d2 = cmp.d, cmp.d_prime
    if d2 < d:
        return 1
    if d < d2:
        return 7
    if cmp.equal:
        return 3
    if cmp.larger == "dec":
        return 2
    if cmp.i0 == d:
        return 7
    if cmp.i0 <= d - 2:
        return 4
    return 5 if cmp.alpha <= 1 else 6


def decide_one_counter(dec: Polynomial, inc: Polynomial) -> Verdict:
    """Decisiveness of the single-state walk with polynomial dec/inc weights."""
    try:
        cmp = poly_compare_leading(dec, inc)
    except InputError as exc:
        return unsupported(f"multivariate weights: {exc}")
    if dec.is_zero() or inc.is_zero():
        return unsupported("weights must be nonzero polynomials")
    if not (dec.has_nonnegative_coefficients() and inc.has_nonnegative_coefficients()):
        return unsupported("weights must have non-negative coefficients")
    case = one_counter_case(dec, inc)
    witness = {"case_number": case, "d": cmp.d, "d_prime": cmp.d_prime, "i0": cmp.i0}
    if cmp.alpha is not None:
        witness["alpha"] = cmp.alpha
    answer = Answer.NOT_DECISIVE if case in (6, 7) else Answer.DECISIVE
    return Verdict(answer, CASES[case], witness)


def decide_single_state(c: CounterMachine, s0: Configuration, A: TargetSet) -> Verdict:
    """Single-state polynomial safe one-counter machine, target Q x {0} or one value.

    Counter moves are +-1, so below the target only finitely many
    configurations are reachable and the chain is decisive there.  From above,
    shifting the counter by the target value leaves the asymptotics of the
    weights unchanged, and the dec/inc verdict applies.
    """
    if isinstance(A, ZeroTarget):
        target = 0
    elif isinstance(A, FiniteTarget) and len(A.configs) == 1:
        target = next(iter(A.configs)).marking[0]
    else:
        return unsupported("target must be Q x {0} or a single configuration")
    k = s0.marking[0]
    if k == target:
        return Verdict(Answer.DECISIVE, "s0 in A")
    if k < target:
        return Verdict(Answer.DECISIVE, "finite region below target", {"target": target})
    try:
        dec, inc = one_counter_weights(c)
    except DomainError:
        dec = inc = None
        opaque = True
    else:
        opaque = any(w is not None and not isinstance(w, PolyWeight) for w in (dec, inc))
    if opaque:
        return unsupported("decisiveness is undecidable for single-state safe one-counter "
                           "machines with non-polynomial weights")
    if dec is None:
        return Verdict(Answer.DECISIVE, "A unreachable: no decrement")
    if inc is None:
        return Verdict(Answer.DECISIVE, "no increment")
    return decide_one_counter(dec.poly, inc.poly)


# homogeneous machines -----------------------------------------------------------

def _matrix_rows(states, matrix) -> list[list[Fraction]]:
    return [[matrix[q][q2] for q2 in states] for q in states]


def is_irreducible(states, matrix) -> bool:
    g = nx.DiGraph()
    g.add_nodes_from(states)
    g.add_edges_from((q, q2) for q in states for q2 in states if matrix[q][q2])
    return nx.is_strongly_connected(g)


def phm_polynomials(c: CounterMachine, pi: dict[str, Fraction]) -> dict[int, Polynomial]:
    """P_v for v in {-1, 0, 1}, scaled by a common denominator of pi.

    P_v = sum_q pi(q) * prod_{q' != q} S_{q'} * sum of weights of transitions
    out of q that move the counter by v.  Scaling both sides by the same
    positive constant leaves the odds P_{-1}/P_1 unchanged.
    """
    scale = math.lcm(*(p.denominator for p in pi.values()))
    var = c.counters[0]
    zero = Polynomial.constant(0, (var,))
    S = {q: sum((t.weight.poly for t in c.delta1 if t.source == q), zero) for q in c.states}
    out = {}
    for v in (-1, 0, 1):
        total = zero
        for q in c.states:
            moves = sum((t.weight.poly for t in c.delta1
                         if t.source == q and t.post[0] == v + 1), zero)
            if moves.is_zero():
                continue
            term = moves * int(pi[q] * scale)
            for q2 in c.states:
                if q2 != q:
                    term = term * S[q2]
            total = total + term
        out[v] = total
    return out


def phm_decide(c: CounterMachine, s0: Configuration,
               cap: int = PHM_EXPLORATION_CAP) -> Verdict:
    """Decisiveness of a homogeneous machine toward Q x {0} from ``s0``."""
    cls = classify(c)
    if not cls.is_pHM:
        return unsupported("not a homogeneous one-counter machine")
    matrix = cls.phm_matrix
    if not is_irreducible(c.states, matrix):
        return unsupported("M_C is reducible")
    if s0.marking[0] == 0:
        return Verdict(Answer.DECISIVE, "s0 in A")
    table = compute_rq(c)
    if not (table.all_finite() or table.all_infinite()):
        raise InvariantViolation(f"mixed finite/infinite r_q under irreducible M_C: {table.r}")
    if table.all_finite():
        return Verdict(Answer.DECISIVE, "all r_q finite", {"r_q": table.r})
    pi_list = invariant_distribution(_matrix_rows(c.states, matrix))
    pi = dict(zip(c.states, pi_list))
    P = phm_polynomials(c, pi)
    witness = {"pi": pi, "P_-1": str(P[-1]), "P_0": str(P[0]), "P_1": str(P[1])}
    if P[1].is_zero():
        return Verdict(Answer.DECISIVE, "P_1 = 0", witness)
    inner = decide_one_counter(P[-1], P[1])
    witness.update({f"walk_{k}": v for k, v in inner.witness.items()})
    witness["walk_case"] = inner.case
    if inner.answer is Answer.DECISIVE:
        return Verdict(Answer.DECISIVE, f"averaged walk decisive ({inner.case})", witness)
    size = len(c.states)
    if s0.marking[0] >= size:
        return Verdict(Answer.NOT_DECISIVE, f"averaged walk not decisive ({inner.case}), k >= |Q|",
                       witness)
    seen = {s0}
    queue = deque([s0])
    while queue:
        s = queue.popleft()
        if s.marking[0] == 0:
            continue
        for t in enabled(c, s):
            s2 = fire(c, s, t)
            if s2.marking[0] >= size:
                witness["escape"] = str(s2)
                return Verdict(Answer.NOT_DECISIVE,
                               f"averaged walk not decisive ({inner.case}), counter reaches |Q|",
                               witness)
            if s2 not in seen:
                if len(seen) >= cap:
                    return unsupported("exploration cap exceeded", cap=cap)
                seen.add(s2)
                queue.append(s2)
    witness["reachable"] = len(seen)
    return Verdict(Answer.DECISIVE, "finite reachable set below |Q|", witness)


# regular Petri nets ------------------------------------------------------------------

@dataclass(frozen=True)
class RegularResult:
    verdict: Verdict
    probability: Fraction | None
    graph: FiniteChain | None = None
    bscc_kinds: tuple = ()


def regular_graph(c: CounterMachine, m0: Configuration, m1: Configuration,
                  B: int) -> tuple[FiniteChain, dict[Configuration, str]]:
    """Finite graph explored from ``m0``: successors are added as vertices, but
    only expanded when new, different from ``m1``, and within ``m1 + B``.
    Unexpanded vertices are absorbing.
    """
    index = {m0: 0}
    labels = [m0]
    status: dict[Configuration, str] = {}
    rows: dict[int, dict[int, Fraction]] = {}
    stack = [m0]
    if m0 == m1:
        status[m0] = "target"
        stack = []
    while stack:
        m = stack.pop()
        i = index[m]
        weights: dict[int, int] = {}
        for t in enabled(c, m):
            m2 = fire(c, m, t)
            if m2 not in index:
                index[m2] = len(labels)
                labels.append(m2)
                if m2 == m1:
                    status[m2] = "target"
                elif any(x > y + B for x, y in zip(m2.marking, m1.marking)):
                    status[m2] = "bound-exceeded"
                else:
                    stack.append(m2)
            j = index[m2]
            weights[j] = weights.get(j, 0) + c.weight(t, m.marking)
        status.setdefault(m, "expanded")
        total = sum(weights.values())
        rows[i] = {j: Fraction(w, total) for j, w in weights.items()} if weights else {i: Fraction(1)}
    fc = FiniteChain([rows.get(i, {i: Fraction(1)}) for i in range(len(labels))], labels)
    return fc, status


def regular_ppn_decide(c: CounterMachine, m0: Configuration, m1: Configuration,
                       B: int) -> RegularResult:
    """Decisive verdict and exact Pr(F {m1}) for a regular marked net with bound ``B``."""
    if not classify(c).is_pPN:
        return RegularResult(unsupported("not a probabilistic Petri net"), None)
    if B < 0:
        raise InputError("the bound B must be non-negative")
    fc, status = regular_graph(c, m0, m1, B)
    if m1 not in status:
        return RegularResult(Verdict(Answer.DECISIVE, "m1 unreachable", {"explored": fc.n}),
                             Fraction(0), fc)
    kinds = []
    for comp, bottom in strongly_connected(fc):
        if not bottom:
            continue
        labs = [fc.labels[i] for i in comp]
        if labs == [m1]:
            kinds.append("target")
        elif len(labs) == 1 and status.get(labs[0]) == "bound-exceeded":
            kinds.append("bound-exceeded")
        else:
            kinds.append("closed")
    p = solve_reach_exact(fc, 0, [fc.index(m1)])
    witness = {"explored": fc.n, "bsccs": sorted(set(kinds)), "probability": p}
    return RegularResult(Verdict(Answer.DECISIVE, "regular net: finite graph", witness), p, fc,
                         tuple(kinds))


def bound_helper_bounded_net(c: CounterMachine, m0: Configuration) -> int:
    """Largest coordinate over the reachability set of a bounded net.

    Breadth-first search over markings with a parent-path check: a marking
    strictly dominating one of its ancestors witnesses unboundedness.
    """
    if c.delta0:
        raise DomainError("bound helper needs a net without zero tests")
    parent: dict[Configuration, Configuration | None] = {m0: None}
    queue = deque([m0])
    best = max(m0.marking, default=0)
    while queue:
        m = queue.popleft()
        for t in enabled(c, m):
            m2 = fire(c, m, t)
            if m2 in parent:
                continue
            a = m
            while a is not None:
                if a.state == m2.state and a.marking != m2.marking and \
                        all(x <= y for x, y in zip(a.marking, m2.marking)):
                    raise DomainError("net is unbounded from m0: supply B explicitly")
                a = parent[a]
            parent[m2] = m
            best = max(best, max(m2.marking, default=0))
            queue.append(m2)
    return best


# dispatch -----------------------------------------------------------------------------

def decide(c: CounterMachine, s0: Configuration, A: TargetSet,
           bound: int | None = None) -> tuple[Verdict, Fraction | None]:
    """Route to the applicable procedure; returns the verdict and, for regular
    nets, the exact probability."""
    cls: Classification = classify(c)
    if cls.is_single_state and cls.is_safe_one_counter and (
            isinstance(A, ZeroTarget) or (isinstance(A, FiniteTarget) and len(A.configs) == 1)):
        return decide_single_state(c, s0, A), None
    if cls.is_pHM and isinstance(A, ZeroTarget):
        return phm_decide(c, s0), None
    if cls.is_pPN and isinstance(A, FiniteTarget) and len(A.configs) == 1:
        m1 = next(iter(A.configs))
        if bound is None:
            try:
                bound = bound_helper_bounded_net(c, s0)
            except DomainError:
                return unsupported("net is unbounded and no regularity bound B was given; decisiveness "
                                   "is undecidable for polynomial pPNs in general"), None
        result = regular_ppn_decide(c, s0, m1, bound)
        return result.verdict, result.probability
    if cls.is_pPN and isinstance(A, UpwardTarget) and cls.is_static:
        return Verdict(Answer.DECISIVE, "static pPN, upward-closed target"), None
    if cls.is_pPN:
        return unsupported("decisiveness undecidable for polynomial pPNs "
                           "w.r.t. finite or upward-closed sets"), None
    if cls.is_safe_one_counter and cls.is_single_state:
        return unsupported("decisiveness undecidable for single-state safe one-counter "
                           "machines with computable weights"), None
    if cls.is_safe_one_counter and cls.is_pHM is False:
        return unsupported("one-counter machine is not homogeneous (M_C varies with the counter)"), None
    return unsupported("decisiveness undecidable for (static) pCM w.r.t. finite sets"), None
