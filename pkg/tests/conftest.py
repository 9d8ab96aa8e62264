from __future__ import annotations

import math
import random
import sys
from fractions import Fraction

import pytest

from decisive.chain import FiniteChain
from decisive.model import Configuration, CounterMachine, Transition, poly_weight


def walk(dec: str | None, inc: str | None, extra=()) -> CounterMachine:
    """Single-state one-counter walk with the given dec / inc weights."""
    ts = []
    if dec is not None:
        ts.append(Transition("dec", "q", (1,), (0,), "q", poly_weight(dec, ["c"])))
    if inc is not None:
        ts.append(Transition("inc", "q", (1,), (2,), "q", poly_weight(inc, ["c"])))
    ts.extend(extra)
    return CounterMachine(["q"], ["c"], ts, name="walk")


def q(k: int, state: str = "q") -> Configuration:
    return Configuration(state, (k,))


def phm_example(extended: bool = False) -> CounterMachine:
    """Three states; q splits evenly between q1 and q2 at every counter value."""
    def t(name, src, post, dst, w):
        return Transition(name, src, (1,), (post,), dst, poly_weight(w, ["c"]))

    ts = [t("a", "q", 2, "q1", "c"), t("b", "q", 0, "q1", "c^2+1"),
          t("e", "q", 0, "q2", "c+1"), t("f", "q", 1, "q2", "c^2")]
    if extended:
        ts += [t("g", "q1", 0, "q", "c^3"), t("h", "q2", 1, "q", "1")]
    return CounterMachine(["q", "q1", "q2"], ["c"], ts, name="phm")


def random_chain(rng: random.Random, n: int, absorbing: int = 2) -> FiniteChain:
    """Random finite chain whose first ``absorbing`` states are absorbing."""
    rows = []
    for i in range(n):
        if i < absorbing:
            rows.append({i: Fraction(1)})
            continue
        support = rng.sample(range(n), rng.randint(1, min(4, n)))
        weights = [rng.randint(1, 9) for _ in support]
        total = sum(weights)
        row: dict[int, Fraction] = {}
        for j, w in zip(support, weights):
            row[j] = row.get(j, Fraction(0)) + Fraction(w, total)
        rows.append(row)
    return FiniteChain(rows)


def gambler_rows(up: Fraction, n: int) -> FiniteChain:
    rows = [{0: Fraction(1)}]
    rows += [{k + 1: up, k - 1: 1 - up} for k in range(1, n)]
    rows.append({n: Fraction(1)})
    return FiniteChain(rows)


@pytest.fixture
def rng() -> random.Random:
    return random.Random(12345)


def random_safe_machine(rng: random.Random, max_states: int = 4) -> CounterMachine:
    """Random safe one-counter machine; weights are constant 1."""
    states = [f"s{i}" for i in range(rng.randint(1, max_states))]
    ts = []
    for i in range(rng.randint(1, 2 * len(states) + 1)):
        src, dst = rng.choice(states), rng.choice(states)
        ts.append(Transition(f"t{i}", src, (1,), (rng.choice((0, 1, 2)),), dst, poly_weight("1", ["c"])))
    return CounterMachine(states, ["c"], ts, name="random")


def zero_reachable_bfs(c: CounterMachine, start: Configuration, cap: int) -> bool:
    """Forward search for Q x {0}, never exceeding counter value ``cap``."""
    seen = {start}
    stack = [start]
    while stack:
        s = stack.pop()
        if s.marking[0] == 0:
            return True
        for t in c.delta1:
            if t.source == s.state:
                k = s.marking[0] - 1 + t.post[0]
                nxt = Configuration(t.target, (k,))
                if k <= cap and nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
    return False


def random_stochastic(rng: random.Random, n: int) -> list[list[Fraction]]:
    """Random irreducible stochastic matrix: a cycle plus random extra edges."""
    rows = []
    for i in range(n):
        w = [rng.randint(0, 4) if rng.random() < 0.5 else 0 for _ in range(n)]
        w[(i + 1) % n] += rng.randint(1, 4)
        total = sum(w)
        rows.append([Fraction(x, total) for x in w])
    return rows


def random_phm(rng: random.Random, max_states: int = 4) -> CounterMachine:
    """Random homogeneous safe one-counter machine with an irreducible M_C.

    Every transition out of q carries some of the monomials of a*P_q, so the
    weights toward each q' add up to a fixed multiple of P_q.
    """
    n = rng.randint(1, max_states)
    states = [f"s{i}" for i in range(n)]
    matrix = random_stochastic(rng, n)
    ts = []
    for i, src in enumerate(states):
        base = [rng.randint(0, 3) for _ in range(rng.randint(1, 3))]
        base[0] = max(base[0], 1)
        scale = math.lcm(*(p.denominator for p in matrix[i]))
        for j, dst in enumerate(states):
            a = int(matrix[i][j] * scale)
            if not a:
                continue
            groups: dict[int, list[str]] = {}
            for e, coef in enumerate(base):
                if coef:
                    groups.setdefault(rng.choice((0, 1, 2)), []).append(f"{a * coef}*c^{e}")
            for post, terms in groups.items():
                ts.append(Transition(f"t{len(ts)}", src, (1,), (post,), dst,
                                     poly_weight(" + ".join(terms), ["c"])))
    return CounterMachine(states, ["c"], ts, name="random-phm")


def cases_by_definition(dec, inc):
    """Independent reading of the seven cases from raw coefficient lists."""
    a, b = dec.coefficients(), inc.coefficients()
    d, d2 = len(a) - 1, len(b) - 1
    diff = [i for i in range(max(d, d2) + 1)
            if (a[i] if i <= d else 0) != (b[i] if i <= d2 else 0)]
    i0 = max(diff) if diff else None
    alpha = None if i0 is None or d2 != d or i0 != d - 1 else Fraction(b[i0] - a[i0], a[d])
    hold = {
        1: d2 < d,
        2: d2 == d and i0 is not None and a[i0] > b[i0],
        3: i0 is None,
        4: d2 == d and i0 is not None and i0 <= d - 2 and b[i0] > a[i0],
        5: alpha is not None and 0 < alpha <= 1,
        6: alpha is not None and alpha > 1,
        7: d < d2 or (d == d2 and i0 == d and b[d] > a[d]),
    }
    return [k for k, v in hold.items() if v]


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
