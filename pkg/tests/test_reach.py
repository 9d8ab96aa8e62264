import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from conftest import q, random_safe_machine, walk, zero_reachable_bfs
from decisive.chain import FiniteChain
from decisive.errors import BudgetExhausted, DomainError, InputError
from decisive.model import (Configuration, CounterMachine, FiniteTarget, Transition, UpwardTarget,
                            ZeroTarget, poly_weight, semantics)
from decisive.reach import (Answer, auto_oracle, bounded_oracle, compute_rq, coverability_oracle,
                            one_counter_oracle)


def net(*ts, d=2):
    names = [f"p{i}" for i in range(d)]
    return CounterMachine(["net"], names,
                          [Transition(n, "net", pre, post, "net", poly_weight("1", names))
                           for n, pre, post in ts])


def m(*xs):
    return Configuration("net", tuple(xs))


class TestRq:
    def test_inc_only(self):
        assert compute_rq(walk(None, "1")).r == {"q": 0}

    def test_dec_present(self):
        assert compute_rq(walk("1", None)).r == {"q": math.inf}

    def test_chain_of_states(self):
        # s0 -dec-> s1 -dec-> s2, s2 -inc-> s2: r = 2, 1, 0
        one = poly_weight("1", ["c"])
        c = CounterMachine(["s0", "s1", "s2"], ["c"], [
            Transition("a", "s0", (1,), (0,), "s1", one),
            Transition("b", "s1", (1,), (0,), "s2", one),
            Transition("u", "s2", (1,), (2,), "s2", one)])
        assert compute_rq(c).r == {"s0": 2, "s1": 1, "s2": 0}

    def test_range(self, rng):
        for _ in range(40):
            c = random_safe_machine(rng)
            for v in compute_rq(c).r.values():
                assert v == math.inf or 0 <= v < len(c.states)

    def test_unsafe_rejected(self):
        c = CounterMachine(["q"], ["c"], [Transition("t", "q", (2,), (0,), "q", poly_weight("1", ["c"]))])
        with pytest.raises(DomainError):
            compute_rq(c)

    @settings(max_examples=40, deadline=None)
    @given(st.randoms(use_true_random=False))
    def test_against_forward_search(self, rnd):
        c = random_safe_machine(rnd)
        n = len(c.states)
        table = compute_rq(c)
        for s in c.states:
            for k in range(n * n + 1):
                assert (k <= table[s]) == zero_reachable_bfs(c, Configuration(s, (k,)), 2 * n * n)


class TestOneCounterOracle:
    def test_infinite(self):
        o = one_counter_oracle(walk("1", None), ZeroTarget())
        assert all(o.query(q(k)) is Answer.REACHABLE for k in range(0, 50, 7))

    def test_just_above_threshold(self):
        c = walk(None, "1")
        o = one_counter_oracle(c)
        assert o.query(q(0)) is Answer.REACHABLE
        assert o.query(q(1)) is Answer.UNREACHABLE

    def test_rejects_other_targets(self):
        with pytest.raises(InputError):
            one_counter_oracle(walk("1", "1"), FiniteTarget([q(0)]))

    def test_agrees_with_bounded_search(self):
        rnd = random.Random(7)
        for _ in range(30):
            c = random_safe_machine(rnd)
            exact = one_counter_oracle(c)
            chain = semantics(c, counter_cap=40)
            bounded = bounded_oracle(chain, ZeroTarget(), budget=5000)
            for s in c.states:
                for k in range(13):
                    b = bounded.query(Configuration(s, (k,)))
                    if b is not Answer.UNKNOWN:
                        assert b is exact.query(Configuration(s, (k,)))


class TestCoverability:
    def test_one_step(self):
        o = coverability_oracle(net(("t", (1, 0), (0, 1))), UpwardTarget([m(0, 1)]))
        assert o.query(m(1, 0)) is Answer.REACHABLE
        assert o.query(m(0, 0)) is Answer.UNREACHABLE

    def test_zero_basis(self):
        o = coverability_oracle(net(("t", (1, 0), (0, 1))), UpwardTarget([m(0, 0)]))
        assert all(o.query(m(a, b)) is Answer.REACHABLE for a in range(3) for b in range(3))

    def test_no_transitions(self):
        o = coverability_oracle(net(), UpwardTarget([m(1, 0)]))
        assert o.query(m(0, 5)) is Answer.UNREACHABLE

    def test_needs_pumping(self):
        # p0 doubles into p1, which must reach 4 tokens
        o = coverability_oracle(net(("t", (1, 0), (0, 2))), UpwardTarget([m(0, 4)]))
        assert o.query(m(2, 0)) is Answer.REACHABLE
        assert o.query(m(1, 1)) is Answer.UNREACHABLE

    def test_target_shape(self):
        with pytest.raises(InputError):
            coverability_oracle(net(), ZeroTarget())


def line_chain(n):
    rows = [{i + 1: Fraction(1)} for i in range(n - 1)] + [{n - 1: Fraction(1)}]
    return FiniteChain(rows).as_effective()


class TestBounded:
    def test_fully_explored(self):
        o = bounded_oracle(line_chain(4), {99})
        assert o.query(0) is Answer.UNREACHABLE

    def test_budget_too_small(self):
        o = bounded_oracle(line_chain(5), {3}, budget=2)
        assert o.query(0) is Answer.UNKNOWN
        with pytest.raises(BudgetExhausted):
            o.reachable(0)

    def test_start_in_target(self):
        o = bounded_oracle(line_chain(5), {0}, budget=1)
        assert o.query(0) is Answer.REACHABLE and o.last_cost == 1


def test_auto_oracle_picks_exact_routes():
    assert auto_oracle(walk("1", "1"), ZeroTarget()).name == "r_q"
    assert auto_oracle(net(), UpwardTarget([m(1, 0)])).name == "coverability"
    assert auto_oracle(net(), FiniteTarget([m(1, 0)])).name == "bounded"
