from fractions import Fraction

import pytest

from conftest import phm_example, q, walk
from decisive.errors import DomainError, InputError, ModelError
from decisive.model import (Configuration, CounterMachine, FiniteTarget, Transition, UpwardTarget,
                            ZeroTarget, ZeroTransition, classify, enabled, fire, hilbert_minimum,
                            membership, normalize_one_counter, poly_weight, semantics,
                            with_homogeneous_zero_level)
from decisive.numeric import parse_polynomial

ONE = poly_weight("1", ["c"])


def two_counter(*ts, states=("q", "r")):
    return CounterMachine(list(states), ["c1", "c2"], list(ts))


class TestValidation:
    def test_unknown_state(self):
        with pytest.raises(ModelError, match="unknown state"):
            CounterMachine(["q"], ["c"], [Transition("t", "q", (1,), (0,), "r", ONE)])

    def test_vector_dimension(self):
        with pytest.raises(ModelError):
            CounterMachine(["q"], ["c"], [Transition("t", "q", (1, 0), (0,), "q", ONE)])

    def test_weight_zero_where_enabled(self):
        with pytest.raises(ModelError, match="is 0 where"):
            CounterMachine(["q"], ["c"], [Transition("t", "q", (0,), (0,), "q", poly_weight("c", ["c"]))])

    def test_weight_positive_by_guard_warns(self):
        m = walk("c", "1")
        assert m.warnings and "no positive constant term" in m.warnings[0]

    def test_duplicate_names(self):
        with pytest.raises(ModelError, match="duplicate"):
            walk("1", "1", extra=[Transition("dec", "q", (1,), (1,), "q", ONE)])


class TestFiring:
    def test_no_tokens(self):
        net = CounterMachine(["q"], ["p"], [Transition("t", "q", (1,), (0,), "q", poly_weight("1", ["p"]))])
        assert enabled(net, Configuration("q", (0,))) == []

    def test_phm_example_all_enabled(self):
        assert [t.name for t in enabled(phm_example(), q(3))] == ["a", "b", "e", "f"]

    def test_zero_test_enabled_at_zero(self):
        z = ZeroTransition("z", "q", "c", (1,), "q", ONE)
        m = CounterMachine(["q"], ["c"], [z])
        assert enabled(m, q(0)) == [z] and enabled(m, q(1)) == []

    def test_update(self):
        t = Transition("t", "q", (1, 0), (0, 1), "r", poly_weight("1", ["c1", "c2"]))
        m = two_counter(t)
        assert fire(m, Configuration("q", (2, 0)), t) == Configuration("r", (1, 1))

    def test_zero_test_post(self):
        z = ZeroTransition("z", "q", "c1", (1, 0), "r", poly_weight("1", ["c1", "c2"]))
        m = two_counter(z)
        assert fire(m, Configuration("q", (0, 5)), z) == Configuration("r", (1, 5))

    def test_disabled(self):
        m = walk("1", None)
        with pytest.raises(DomainError):
            fire(m, q(0), m.transition("dec"))


class TestSemantics:
    def test_walk_probabilities(self):
        # inc weight f = c^2, dec weight g = 1
        chain = semantics(walk("1", "c^2"))
        for i in range(1, 8):
            row = dict(chain.successors(q(i)))
            assert row[q(i + 1)] == Fraction(i * i, i * i + 1)
            assert row[q(i - 1)] == Fraction(1, i * i + 1)

    def test_deadlock_self_loop(self):
        assert semantics(walk("1", "1")).successors(q(0)) == [(q(0), Fraction(1))]

    def test_parallel_transitions_merge(self):
        w2, w3 = poly_weight("2", ["c"]), poly_weight("3", ["c"])
        m = CounterMachine(["q", "r"], ["c"], [Transition("x", "q", (1,), (0,), "r", w2),
                                               Transition("y", "q", (1,), (0,), "r", w3)])
        assert semantics(m).successors(q(1)) == [(q(0, "r"), Fraction(1))]

    def test_counter_cap_drops_moves(self):
        chain = semantics(walk("1", "1"), counter_cap=2)
        assert chain.successors(q(2)) == [(q(1), Fraction(1))]


class TestClassify:
    def test_phm_example(self):
        cls = classify(phm_example())
        assert cls.is_pHM and cls.is_safe_one_counter and not cls.is_pPN
        assert cls.phm_matrix["q"] == {"q": 0, "q1": Fraction(1, 2), "q2": Fraction(1, 2)}

    def test_pre_two_is_not_safe(self):
        m = CounterMachine(["q"], ["c"], [Transition("t", "q", (2,), (0,), "q", ONE)])
        assert not classify(m).is_safe_one_counter

    def test_zero_tests_exclude_pPN(self):
        m = CounterMachine(["q", "r"], ["c"], [ZeroTransition("z", "q", "c", (0,), "r", ONE)])
        assert not classify(m).is_pPN

    def test_single_state_net(self):
        assert classify(walk("1", "1")).summary() == "pPN: yes; safe-1-counter: yes; pHM: yes"

    def test_non_homogeneous(self):
        m = CounterMachine(["q", "r"], ["c"], [
            Transition("a", "q", (1,), (0,), "q", poly_weight("c", ["c"])),
            Transition("b", "q", (1,), (2,), "r", ONE)])
        assert classify(m).is_pHM is False


class TestNormalForm:
    def test_rewriting(self):
        m = CounterMachine(["q"], ["c"], [
            Transition("stay", "q", (1,), (1,), "q", poly_weight("5", ["c"])),
            Transition("down", "q", (1,), (0,), "q", poly_weight("c", ["c"])),
            Transition("up", "q", (1,), (2,), "q", poly_weight("2", ["c"]))])
        n = normalize_one_counter(m)
        assert [(t.name, t.post, str(t.weight)) for t in n.delta1] == [("down", (0,), "c"), ("up", (2,), "2")]
        # the self-loop only delays; step-to-step jump odds must agree
        a, b = semantics(m), semantics(n)
        for k in range(1, 11):
            ra = {s: p for s, p in a.successors(q(k)) if s != q(k)}
            rb = dict(b.successors(q(k)))
            total = sum(ra.values())
            assert {s: p / total for s, p in ra.items()} == rb

    def test_idempotent(self):
        m = walk("c", "2")
        assert normalize_one_counter(m) == m

    def test_parallel_incs_add(self):
        m = walk(None, "c", extra=[Transition("inc2", "q", (1,), (2,), "q", ONE)])
        (t,) = normalize_one_counter(m).delta1
        assert str(t.weight) == "c + 1"

    def test_requires_single_state(self):
        with pytest.raises(DomainError):
            normalize_one_counter(phm_example())


class TestTargets:
    def test_upward(self):
        A = UpwardTarget([Configuration("net", (0, 0, 1))])
        assert membership(A, Configuration("net", (7, 0, 1)))
        assert not membership(A, Configuration("net", (7, 0, 0)))

    def test_upward_basis_is_minimal(self):
        A = UpwardTarget([Configuration("q", (1, 1)), Configuration("q", (1, 0))])
        assert A.basis == (Configuration("q", (1, 0)),)

    def test_finite(self):
        assert not membership(FiniteTarget([Configuration("q", (0, 0))]), Configuration("q", (0, 1)))

    def test_zero(self):
        assert membership(ZeroTarget(), q(0)) and not membership(ZeroTarget(), q(1))


class TestHomogeneousZeroLevel:
    def test_zero_level_follows_matrix(self):
        m = with_homogeneous_zero_level(phm_example(extended=True))
        row = dict(semantics(m).successors(q(0)))
        assert row == {q(0, "q1"): Fraction(1, 2), q(0, "q2"): Fraction(1, 2)}


class TestHilbert:
    def test_root_at_zero(self):
        g = hilbert_minimum(parse_polynomial("x1"))
        assert [g(n) for n in range(6)] == [1] * 6

    def test_no_root(self):
        g = hilbert_minimum(parse_polynomial("x1^2+1"))
        assert all(g(n) >= 2 for n in range(10))

    def test_nonincreasing(self):
        g = hilbert_minimum(parse_polynomial("x1*x2 - 6", ["x1", "x2"]))
        values = [g(n) for n in range(8)]
        assert values == sorted(values, reverse=True)
        assert values[0] == 37 and values[5] == 1

    def test_cap(self):
        with pytest.raises(InputError):
            hilbert_minimum(parse_polynomial("x1"))(31)
