from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings, strategies as st

from conftest import gambler_rows, random_chain
from decisive.chain import (BOTTOM, FiniteChain, ProbInterval, bsccs, invariant_distribution,
                            is_recurrent, materialize, recast_chain, solve_reach_exact)
from decisive.errors import DomainError, InputError, InvariantViolation
from decisive.reach import bounded_oracle

H = Fraction(1, 2)


def split_chain():
    # 0 -> 1 (target) or 2 (dead), both absorbing
    return FiniteChain([{1: H, 2: H}, {1: Fraction(1)}, {2: Fraction(1)}])


class TestRows:
    def test_rows_must_sum_to_one(self):
        with pytest.raises(InvariantViolation):
            FiniteChain([{0: H}])

    def test_positive_entries(self):
        with pytest.raises(InvariantViolation):
            FiniteChain([{0: Fraction(1), 1: Fraction(0)}, {1: Fraction(1)}])

    def test_dangling_successor(self):
        with pytest.raises(InputError):
            FiniteChain([{3: Fraction(1)}])

    def test_absorbing(self):
        fc = split_chain()
        assert fc.is_absorbing(1) and not fc.is_absorbing(0)

    def test_interval_is_ordered(self):
        with pytest.raises(InvariantViolation):
            ProbInterval(Fraction(2, 3), H)
        assert H in ProbInterval(Fraction(0), Fraction(1))


class TestSolve:
    def test_certain(self):
        fc = FiniteChain([{1: Fraction(1)}, {1: Fraction(1)}])
        assert solve_reach_exact(fc, 0, {1}) == 1

    def test_split(self):
        assert solve_reach_exact(split_chain(), 0, {1}) == H

    def test_gambler_three_sevenths(self):
        assert solve_reach_exact(gambler_rows(Fraction(2, 3), 3), 1, {0}) == Fraction(3, 7)

    def test_unreachable(self):
        assert solve_reach_exact(split_chain(), 2, {1}) == 0

    @settings(max_examples=30, deadline=None)
    @given(st.randoms(use_true_random=False), st.integers(3, 12))
    def test_solution_is_harmonic(self, rnd, n):
        # x(s) = sum_t p(s,t) x(t) off A, checked directly on every state
        fc = random_chain(rnd, n)
        xs = [solve_reach_exact(fc, s, {0}) for s in range(n)]
        for s in range(1, n):
            assert xs[s] == sum(p * xs[t] for t, p in fc.rows[s].items())
        assert all(0 <= x <= 1 for x in xs)


class TestComponents:
    def test_single_absorbing(self):
        assert bsccs(FiniteChain([{0: Fraction(1)}])) == [frozenset({0})]

    def test_three_cycle(self):
        fc = FiniteChain([{1: Fraction(1)}, {2: Fraction(1)}, {0: Fraction(1)}])
        assert bsccs(fc) == [frozenset({0, 1, 2})]

    def test_tail_into_cycle(self):
        rows = [{1: Fraction(1)}, {2: Fraction(1)}, {3: Fraction(1)}, {4: Fraction(1)}, {3: Fraction(1)}]
        assert bsccs(FiniteChain(rows)) == [frozenset({3, 4})]

    @settings(max_examples=30, deadline=None)
    @given(st.randoms(use_true_random=False), st.integers(2, 10))
    def test_against_transitive_closure(self, rnd, n):
        fc = random_chain(rnd, n, absorbing=0 if n > 3 else 1)
        reach = [[False] * n for _ in range(n)]
        for i, r in enumerate(fc.rows):
            reach[i][i] = True
            for j in r:
                reach[i][j] = True
        for k, i, j in product(range(n), repeat=3):
            reach[i][j] = reach[i][j] or (reach[i][k] and reach[k][j])
        expected = set()
        for i in range(n):
            cls = frozenset(j for j in range(n) if reach[i][j] and reach[j][i])
            if all(not reach[i][j] or j in cls for j in range(n)):
                expected.add(cls)
        assert set(bsccs(fc)) == expected


class TestEdgeList:
    def test_round_trip(self, rng):
        fc = random_chain(rng, 8)
        again = FiniteChain.from_edge_list(fc.to_edge_list())
        assert again.rows == fc.rows

    def test_bad_line(self):
        with pytest.raises(InputError):
            FiniteChain.from_edge_list("0 1\n")


class TestMaterialize:
    def test_gambler_closes(self):
        fc = gambler_rows(H, 4)
        sub, closed = materialize(fc.as_effective(), 2, budget=100)
        assert closed and sub.n == 5 and sub.labels[0] == 2

    def test_budget(self):
        fc = gambler_rows(H, 10)
        _, closed = materialize(fc.as_effective(), 5, budget=3)
        assert not closed


class TestRecast:
    def test_split_goes_to_bottom(self):
        fc = split_chain()
        oracle = bounded_oracle(fc.as_effective(), {1})
        r = recast_chain(fc.as_effective(), 0, {1}, oracle)
        assert r.successors(0) == [(BOTTOM, Fraction(1))]
        assert r.successors(BOTTOM) == [(0, Fraction(1))]

    def test_start_in_target(self):
        fc = split_chain()
        with pytest.raises(DomainError):
            recast_chain(fc.as_effective(), 1, {1}, bounded_oracle(fc.as_effective(), {1}))

    @settings(max_examples=25, deadline=None)
    @given(st.randoms(use_true_random=False), st.integers(3, 12))
    def test_reachable_part_is_irreducible(self, rnd, n):
        fc = random_chain(rnd, n)
        eff = fc.as_effective()
        oracle = bounded_oracle(eff, {0})
        starts = [s for s in range(1, n) if oracle.reachable(s)]
        for s0 in starts:
            sub, closed = recast_chain(eff, s0, {0}, oracle).materialize(1000)
            assert closed and is_recurrent(sub)


class TestInvariant:
    def test_two_state(self):
        m = [[Fraction(0), Fraction(1)], [H, H]]
        assert invariant_distribution(m) == [Fraction(1, 3), Fraction(2, 3)]

    def test_not_square(self):
        with pytest.raises(InputError):
            invariant_distribution([[Fraction(1)], [Fraction(1)]])
