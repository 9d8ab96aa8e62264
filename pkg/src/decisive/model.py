"""Probabilistic counter machines and their Markov-chain semantics.

One class, :class:`CounterMachine`, covers the whole family: Petri nets are
single-state machines without zero tests, safe one-counter machines move their
only counter by at most one, and homogeneous machines additionally have a
counter-independent state-to-state matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Sequence, Union

from .chain import EffectiveChain
from .errors import DomainError, InputError, ModelError
from .numeric import Polynomial, parse_polynomial, positivity_check

Vector = tuple[int, ...]


# weights -----------------------------------------------------------------

@dataclass(frozen=True)
class PolyWeight:
    poly: Polynomial

    def __call__(self, marking: Vector) -> int:
        return self.poly.evaluate(marking)

    def __str__(self):
        return str(self.poly)


@dataclass(frozen=True)
class OpaqueWeight:
    """A computable weight that is not a polynomial, resolved from the function table.

    ``label`` is how the DSL refers to it; ``factory`` and ``args`` record how
    it was instantiated so that models stay serializable.
    """

    label: str
    factory: str
    args: str
    fn: Callable[[Vector], int] = field(compare=False, hash=False, repr=False)

    def __call__(self, marking: Vector) -> int:
        return self.fn(marking)

    def __str__(self):
        return f"@{self.label}"


WeightFn = Union[PolyWeight, OpaqueWeight]

OPAQUE_FACTORIES: dict[str, Callable[[str], Callable[[Vector], int]]] = {}


def register_opaque(name: str):
    """Decorator adding a weight factory ``factory(args_text) -> fn(marking)``."""
    def deco(factory):
        OPAQUE_FACTORIES[name] = factory
        return factory
    return deco


def make_opaque(label: str, factory: str, args: str = "") -> OpaqueWeight:
    if factory not in OPAQUE_FACTORIES:
        raise InputError(f"unknown weight function {factory!r}")
    return OpaqueWeight(label, factory, args, OPAQUE_FACTORIES[factory](args))


HILBERT_MAX_N = 30


@register_opaque("hilbert")
def _hilbert_factory(args: str) -> Callable[[Vector], int]:
    poly = parse_polynomial(args)
    g = hilbert_minimum(poly)
    return lambda marking: g(marking[0])


def hilbert_minimum(P: Polynomial) -> Callable[[int], int]:
    """n -> min(P(x)^2 + 1 | x in N^k, sum(x) <= n), memoized and capped at n <= 30."""
    k = max(len(P.variables), 1)
    P = P if P.variables else P.with_variables(("x1",))
    cache: list[int] = []

    def compositions(total: int, parts: int):
        if parts == 1:
            yield (total,)
            return
        for first in range(total + 1):
            for rest in compositions(total - first, parts - 1):
                yield (first,) + rest

    def g(n: int) -> int:
        if n < 0:
            raise InputError("hilbert weight evaluated at a negative counter")
        if n > HILBERT_MAX_N:
            raise InputError(f"hilbert weight is enumerated only up to n = {HILBERT_MAX_N}")
        while len(cache) <= n:
            m = len(cache)
            best = min(P.evaluate(x) ** 2 + 1 for x in compositions(m, k))
            cache.append(best if not cache else min(best, cache[-1]))
        return cache[n]

    return g


# transitions and configurations ------------------------------------------

@dataclass(frozen=True)
class ZeroTransition:
    """Zero-test transition: enabled when ``counter`` is 0; adds ``post``."""

    name: str
    source: str
    counter: str
    post: Vector
    target: str
    weight: WeightFn


@dataclass(frozen=True)
class Transition:
    """Guarded update: enabled when the marking dominates ``pre``."""

    name: str
    source: str
    pre: Vector
    post: Vector
    target: str
    weight: WeightFn


AnyTransition = Union[ZeroTransition, Transition]


@dataclass(frozen=True, order=True)
class Configuration:
    state: str
    marking: Vector

    def __str__(self):
        return f"{self.state}({','.join(map(str, self.marking))})"


# target sets ---------------------------------------------------------------

class TargetSet:
    kind = "abstract"

    def __contains__(self, s: Configuration) -> bool:
        raise NotImplementedError


@dataclass(frozen=True)
class FiniteTarget(TargetSet):
    configs: frozenset
    kind = "finite"

    def __init__(self, configs: Iterable[Configuration]):
        object.__setattr__(self, "configs", frozenset(configs))

    def __contains__(self, s):
        return s in self.configs


def _dominates(m: Vector, b: Vector) -> bool:
    return all(x >= y for x, y in zip(m, b))


@dataclass(frozen=True)
class UpwardTarget(TargetSet):
    """Upward closure of a finite basis; the basis is reduced to its minimal elements."""

    basis: tuple
    kind = "upward"

    def __init__(self, basis: Iterable[Configuration]):
        items = sorted(set(basis))
        minimal = [b for b in items
                   if not any(o != b and o.state == b.state and _dominates(b.marking, o.marking)
                              for o in items)]
        object.__setattr__(self, "basis", tuple(minimal))

    def __contains__(self, s):
        return any(s.state == b.state and _dominates(s.marking, b.marking) for b in self.basis)


@dataclass(frozen=True)
class ZeroTarget(TargetSet):
    """Q x {0}: every configuration whose counters are all zero."""

    kind = "zero"

    def __contains__(self, s):
        return not any(s.marking)


def membership(A: TargetSet, s: Configuration) -> bool:
    return s in A


# the machine ---------------------------------------------------------------

class CounterMachine:
    """A pCM ``(Q, P, Delta0 + Delta1, W)``; immutable once validated."""

    def __init__(self, states: Sequence[str], counters: Sequence[str],
                 transitions: Sequence[AnyTransition], name: str = "pcm"):
        self.states: tuple[str, ...] = tuple(states)
        self.counters: tuple[str, ...] = tuple(counters)
        self.name = name
        self.transitions: tuple[AnyTransition, ...] = tuple(
            self._aligned_weight(t) for t in transitions)
        self.warnings: list[str] = []
        self._validate()
        self._by_source: dict[str, list[AnyTransition]] = {q: [] for q in self.states}
        for t in self.transitions:
            self._by_source[t.source].append(t)

    @property
    def d(self) -> int:
        return len(self.counters)

    @property
    def delta0(self) -> list[ZeroTransition]:
        return [t for t in self.transitions if isinstance(t, ZeroTransition)]

    @property
    def delta1(self) -> list[Transition]:
        return [t for t in self.transitions if isinstance(t, Transition)]

    def transition(self, name: str) -> AnyTransition:
        for t in self.transitions:
            if t.name == name:
                return t
        raise KeyError(name)

    def counter_index(self, name: str) -> int:
        return self.counters.index(name)

    def _aligned_weight(self, t: AnyTransition) -> AnyTransition:
        if isinstance(t.weight, PolyWeight) and t.weight.poly.variables != self.counters:
            unknown = t.weight.poly.used_variables() - set(self.counters)
            if unknown:
                raise ModelError(
                    f"transition {t.name}: weight uses unknown counter {sorted(unknown)[0]!r}")
            return replace(t, weight=PolyWeight(t.weight.poly.with_variables(self.counters)))
        return t

    def _validate(self) -> None:
        if not self.states:
            raise ModelError("a machine needs at least one control state")
        if len(set(self.states)) != len(self.states):
            raise ModelError("duplicate control state")
        if len(set(self.counters)) != len(self.counters):
            raise ModelError("duplicate counter")
        names = [t.name for t in self.transitions]
        dup = {n for n in names if names.count(n) > 1}
        if dup:
            raise ModelError(f"duplicate transition name {sorted(dup)[0]!r}")
        for t in self.transitions:
            for q in (t.source, t.target):
                if q not in self.states:
                    raise ModelError(f"transition {t.name}: unknown state {q!r}")
            vectors = [t.post] if isinstance(t, ZeroTransition) else [t.pre, t.post]
            for v in vectors:
                if len(v) != self.d or any((not isinstance(x, int)) or x < 0 for x in v):
                    raise ModelError(f"transition {t.name}: vector {v} is not in N^{self.d}")
            if isinstance(t, ZeroTransition) and t.counter not in self.counters:
                raise ModelError(f"transition {t.name}: unknown counter {t.counter!r}")
            if isinstance(t.weight, PolyWeight):
                self._validate_poly_weight(t)

    def _validate_poly_weight(self, t: AnyTransition) -> None:
        p = t.weight.poly
        if not p.has_nonnegative_coefficients():
            raise ModelError(f"transition {t.name}: weight {p} has a negative coefficient")
        corner = t.pre if isinstance(t, Transition) else (0,) * self.d
        if not positivity_check(p, corner):
            raise ModelError(f"transition {t.name}: weight {p} is 0 where the transition is enabled")
        if p.constant_term() == 0:
            self.warnings.append(
                f"transition {t.name}: weight {p} has no positive constant term "
                "(accepted: positive wherever enabled)")

    def __eq__(self, other):
        if not isinstance(other, CounterMachine):
            return NotImplemented
        return (self.states, self.counters, self.transitions) == \
            (other.states, other.counters, other.transitions)

    def __repr__(self):
        return f"CounterMachine({self.name!r}, |Q|={len(self.states)}, d={self.d}, |T|={len(self.transitions)})"

    # semantics ------------------------------------------------------------

    def check_config(self, s: Configuration) -> None:
        if s.state not in self.states:
            raise InputError(f"unknown state {s.state!r}")
        if len(s.marking) != self.d or any(x < 0 for x in s.marking):
            raise InputError(f"marking {s.marking} is not in N^{self.d}")

    def is_enabled(self, s: Configuration, t: AnyTransition) -> bool:
        if t.source != s.state:
            return False
        if isinstance(t, ZeroTransition):
            return s.marking[self.counter_index(t.counter)] == 0
        return _dominates(s.marking, t.pre)

    def weight(self, t: AnyTransition, marking: Vector) -> int:
        w = t.weight(tuple(marking))
        if w < 1:
            raise ModelError(f"weight of {t.name} is {w} at marking {marking}; weights must be positive")
        return w


def enabled(c: CounterMachine, s: Configuration) -> list[AnyTransition]:
    """Transitions enabled in ``s``, in declaration order."""
    return [t for t in c._by_source.get(s.state, ()) if c.is_enabled(s, t)]


def fire(c: CounterMachine, s: Configuration, t: AnyTransition) -> Configuration:
    if not c.is_enabled(s, t):
        raise DomainError(f"transition {t.name} is not enabled in {s}")
    if isinstance(t, ZeroTransition):
        m = tuple(x + y for x, y in zip(s.marking, t.post))
    else:
        m = tuple(x - y + z for x, y, z in zip(s.marking, t.pre, t.post))
    return Configuration(t.target, m)


def semantics(c: CounterMachine, counter_cap: int | None = None) -> EffectiveChain:
    """The Markov chain of ``c`` over configurations.

    Weights of transitions leading to the same configuration are added before
    normalizing; deadlocks get a probability-1 self-loop.  With ``counter_cap``
    set, firings that would push a counter above the cap are dropped, which
    gives a finite truncation usable for qualitative reachability only.
    """

    @lru_cache(maxsize=1 << 16)
    def successors(s: Configuration):
        weights: dict[Configuration, int] = {}
        for t in enabled(c, s):
            s2 = fire(c, s, t)
            if counter_cap is not None and max(s2.marking, default=0) > counter_cap:
                continue
            weights[s2] = weights.get(s2, 0) + c.weight(t, s.marking)
        if not weights:
            return [(s, Fraction(1))]
        total = sum(weights.values())
        return [(s2, Fraction(w, total)) for s2, w in weights.items()]

    name = c.name if counter_cap is None else f"{c.name}[cap={counter_cap}]"
    return EffectiveChain(lambda s: list(successors(s)), name=name)


# classification --------------------------------------------------------------

@dataclass(frozen=True)
class Classification:
    is_pPN: bool
    is_safe_one_counter: bool
    is_single_state: bool
    is_polynomial: bool
    is_static: bool | None
    is_pHM: bool | None
    phm_matrix: dict | None = None

    def summary(self) -> str:
        def yn(v):
            return "unknown" if v is None else ("yes" if v else "no")
        return (f"pPN: {yn(self.is_pPN)}; safe-1-counter: {yn(self.is_safe_one_counter)}; "
                f"pHM: {yn(self.is_pHM)}")


def is_safe_one_counter(c: CounterMachine) -> bool:
    return c.d == 1 and all(t.pre == (1,) and t.post in ((0,), (1,), (2,)) for t in c.delta1)


def homogeneous_matrix(c: CounterMachine) -> dict[str, dict[str, Fraction]] | None:
    """The constant matrix M_C of a safe one-counter machine, or None if some entry varies.

    Each entry sum_{t: q->q'} W(t) must be a rational multiple of S_{q,1},
    checked by exact polynomial cross-multiplication.  A state without
    Delta1 transitions deadlocks at every positive counter value; its row is
    the identity row, matching the self-loop of the semantics.
    Raises :class:`InputError` if a Delta1 weight is opaque.
    """
    if not is_safe_one_counter(c):
        return None
    matrix: dict[str, dict[str, Fraction]] = {}
    for q in c.states:
        out = [t for t in c.delta1 if t.source == q]
        if any(not isinstance(t.weight, PolyWeight) for t in out):
            raise InputError("opaque weights cannot be inspected symbolically")
        row = {q2: Fraction(0) for q2 in c.states}
        if not out:
            row[q] = Fraction(1)
            matrix[q] = row
            continue
        total = sum((t.weight.poly for t in out), Polynomial.constant(0))
        exps, s_coef = next(iter(total.terms.items()))
        for q2 in c.states:
            num = sum((t.weight.poly for t in out if t.target == q2), Polynomial.constant(0))
            if num.is_zero():
                continue
            ratio = Fraction(num.with_variables(total.variables).terms.get(exps, 0), s_coef)
            if num * ratio.denominator != total * ratio.numerator:
                return None
            row[q2] = ratio
        matrix[q] = row
    return matrix


def classify(c: CounterMachine) -> Classification:
    single = len(c.states) == 1
    polynomial = all(isinstance(t.weight, PolyWeight) for t in c.transitions)
    static = all(t.weight.poly.is_constant() for t in c.transitions) if polynomial else None
    safe = is_safe_one_counter(c)
    matrix = None
    if not safe:
        phm: bool | None = False
    elif not polynomial:
        phm = None
    else:
        matrix = homogeneous_matrix(c)
        phm = matrix is not None
    return Classification(
        is_pPN=single and not c.delta0,
        is_safe_one_counter=safe,
        is_single_state=single,
        is_polynomial=polynomial,
        is_static=static,
        is_pHM=phm,
        phm_matrix=matrix,
    )


# rewritings ------------------------------------------------------------------

def _merge_weights(ts: list[Transition]) -> WeightFn:
    if len(ts) == 1:
        return ts[0].weight
    if any(not isinstance(t.weight, PolyWeight) for t in ts):
        raise DomainError("cannot merge parallel transitions with opaque weights")
    return PolyWeight(sum((t.weight.poly for t in ts), Polynomial.constant(0)))


def normalize_one_counter(c: CounterMachine) -> CounterMachine:
    """Rewrite a single-state safe one-counter machine to its dec/inc normal form.

    Self-loops (1,1) and zero tests are dropped and parallel transitions are
    merged by adding weights.  A lone transition keeps its name and weight,
    so the rewriting is idempotent.
    """
    if len(c.states) != 1 or not is_safe_one_counter(c):
        raise DomainError("normal form needs a single-state safe one-counter machine")
    q = c.states[0]
    out = []
    for post, default in (((0,), "dec"), ((2,), "inc")):
        group = [t for t in c.delta1 if t.post == post]
        if group:
            name = group[0].name if len(group) == 1 else default
            out.append(Transition(name, q, (1,), post, q, _merge_weights(group)))
    return CounterMachine(c.states, c.counters, out, name=c.name)


def one_counter_weights(c: CounterMachine) -> tuple[WeightFn | None, WeightFn | None]:
    """(dec, inc) weights of the normal form; None where the move is absent."""
    n = normalize_one_counter(c)
    dec = next((t.weight for t in n.delta1 if t.post == (0,)), None)
    inc = next((t.weight for t in n.delta1 if t.post == (2,)), None)
    return dec, inc


def with_homogeneous_zero_level(c: CounterMachine) -> CounterMachine:
    """Replace Delta0 by transitions q -> q' at counter 0 weighted by M_C[q, q'].

    Outgoing moves of Q x {0} do not affect decisiveness toward Q x {0}; with
    this choice the control state keeps the invariant distribution of M_C.
    Weights are scaled to integers by a common denominator.
    """
    matrix = homogeneous_matrix(c)
    if matrix is None:
        raise DomainError("machine is not homogeneous")
    scale = math.lcm(*(p.denominator for row in matrix.values() for p in row.values()))
    new = list(c.delta1)
    for q, row in matrix.items():
        for q2, p in row.items():
            if p:
                new.append(ZeroTransition(f"zero_{q}_{q2}", q, c.counters[0], (0,), q2,
                                          PolyWeight(Polynomial.constant(int(p * scale)))))
    return CounterMachine(c.states, c.counters, new, name=c.name)


def poly_weight(text: str, counters: Sequence[str]) -> PolyWeight:
    """Convenience: parse a polynomial weight over the given counters."""
    return PolyWeight(parse_polynomial(text, counters))
