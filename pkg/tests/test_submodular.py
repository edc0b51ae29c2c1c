"""Oracle, residual-polytope and clinch-amount primitives."""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polyclinch import (
    DomainError,
    PreconditionError,
    SizeError,
    SubmodularOracle,
    clinch_amounts,
    evaluate,
    greedy_vertex,
    membership,
    min_constrained,
    multi_unit_oracle,
    residual,
    single_keyword_oracle,
    verify_submodular,
)

from corpus import random_demands, random_feasible_point, random_oracle

F = Fraction


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------

def test_evaluate_single_keyword_top_two():
    oracle = single_keyword_oracle([3, 2, 1])
    assert evaluate(oracle, {0, 1}) == 5


def test_evaluate_empty_set_is_zero():
    for oracle in (single_keyword_oracle([3, 2]), multi_unit_oracle(7, 3)):
        assert evaluate(oracle, set()) == 0


def test_evaluate_rejects_out_of_range_index():
    oracle = multi_unit_oracle(1, 2)
    with pytest.raises(DomainError):
        evaluate(oracle, {5})


def test_evaluate_is_deterministic_across_calls():
    oracle = single_keyword_oracle([3, 2, 1])
    assert evaluate(oracle, {1, 2}) == evaluate(oracle, {2, 1})


# ---------------------------------------------------------------------------
# verify_submodular
# ---------------------------------------------------------------------------

def test_multi_unit_oracle_verifies():
    assert verify_submodular(multi_unit_oracle(5, 4)).ok


def test_cardinality_squared_rejected_with_witness():
    bad = SubmodularOracle.from_set_function(3, lambda s: len(s) ** 2, name="square")
    check = verify_submodular(bad)
    assert not check.ok
    assert check.violation == "submodularity"
    s, t = check.witness
    assert (sorted(s), sorted(t)) == ([0], [1])
    # replaying the witness reproduces the violation
    assert bad.value(s | t) + bad.value(s & t) > bad.value(s) + bad.value(t)


def test_nonincreasing_ctrs_always_verify():
    for ctrs in ([3, 2, 1], [5, 5, 0], [1, 0, 0, 0]):
        assert verify_submodular(single_keyword_oracle(ctrs)).ok


def test_false_monotone_claim_caught():
    dipping = SubmodularOracle.from_set_function(
        2, lambda s: [0, 2, 2, 1][sum(1 << i for i in s)], monotone=True, name="dip")
    check = verify_submodular(dipping)
    assert not check.ok


def test_verify_respects_brute_force_cap(monkeypatch):
    monkeypatch.setenv("CLINCH_BRUTE_FORCE_CAP", "3")
    with pytest.raises(SizeError):
        verify_submodular(multi_unit_oracle(1, 4))


# ---------------------------------------------------------------------------
# residual oracle
# ---------------------------------------------------------------------------

def test_residual_example_alpha_32():
    oracle = single_keyword_oracle([3, 2])
    res = residual(oracle, [1, 0], [5, 1])
    # minimizing T = {0}: f({0}) - rho({0}) + d({1}) = 3 - 1 + 1
    assert res.value([0, 1]) == 3
    assert res.value([0]) == 2
    assert res.value([1]) == 1


def test_residual_zero_demand_vanishes():
    oracle = single_keyword_oracle([3, 2, 1])
    res = residual(oracle, [1, 1, 0], [0, 0, 0])
    for mask_set in ([], [0], [1, 2], [0, 1, 2]):
        assert res.value(mask_set) == 0


def test_residual_recovers_base_at_origin():
    oracle = single_keyword_oracle([4, 2, 1])
    demands = [oracle.singleton(i) for i in range(3)]
    res = residual(oracle, [0, 0, 0], demands)
    for subset in ([0], [1], [0, 2], [0, 1, 2]):
        assert res.value(subset) == oracle.value(subset)


def test_residual_rejects_infeasible_promises():
    oracle = single_keyword_oracle([3, 2])
    with pytest.raises(PreconditionError) as err:
        residual(oracle, [4, 0], [1, 1])
    assert err.value.witness == frozenset({0})


def test_residual_brute_force_matches_definition():
    rng = random.Random(7)
    for _ in range(50):
        n = rng.randint(2, 5)
        oracle = random_oracle(rng, "adwords" if n <= 4 else "single-keyword", n)
        rho = random_feasible_point(rng, oracle)
        d = random_demands(rng, n)
        res = residual(oracle, rho, d)
        mask = rng.randrange(1 << n)
        subset = [i for i in range(n) if mask >> i & 1]
        # direct enumeration of min over T <= S of f(T) - rho(T) + d(S \ T)
        best = None
        for t_mask in range(1 << n):
            if t_mask & ~mask:
                continue
            value = (oracle.value_mask(t_mask)
                     - sum(rho[i] for i in range(n) if t_mask >> i & 1)
                     + sum(d[i] for i in range(n) if (mask & ~t_mask) >> i & 1))
            best = value if best is None else min(best, value)
        assert res.value(subset) == best


def test_residual_stays_submodular_200_random_triples():
    rng = random.Random(20260808)
    for _ in range(200):
        n = rng.randint(2, 6)
        kind = rng.choice(("multi-unit", "single-keyword", "graphic", "vod-cut", "adwords"))
        oracle = random_oracle(rng, kind, n)
        res = residual(oracle, random_feasible_point(rng, oracle), random_demands(rng, n))
        assert verify_submodular(res).ok
        mono = res.monotonized_oracle()
        assert verify_submodular(mono).ok


def test_monotonization_defines_same_polytope_values():
    oracle = single_keyword_oracle([3, 2])
    res = residual(oracle, [1, 0], [5, 0])
    # fhat({0}) = 2 but fhat({0,1}) = 2 as well; fbar({1}) folds the full set in
    assert res.monotonized([1]) == min(res.value([1]), res.value([0, 1]))


# ---------------------------------------------------------------------------
# min_constrained
# ---------------------------------------------------------------------------

def test_min_constrained_modular():
    weights = [-1, 2]
    fn = lambda s: sum(weights[i] for i in s)  # noqa: E731
    assert min_constrained(fn, 2) == (frozenset({0}), -1)
    assert min_constrained(fn, 2, include={1}) == (frozenset({0, 1}), 1)


def test_min_constrained_tight_set_search():
    oracle = single_keyword_oracle([3, 2])
    x = (F(3), F(1))
    fn = lambda s: oracle.value(s) - sum(x[i] for i in s)  # noqa: E731
    assert min_constrained(fn, 2, include={0}, exclude={1}) == (frozenset({0}), 0)


def test_min_constrained_tie_break_smallest_then_lexicographic():
    fn = lambda s: 0  # noqa: E731  everything ties
    assert min_constrained(fn, 3) == (frozenset(), 0)
    assert min_constrained(fn, 3, include={2}) == (frozenset({2}), 0)
    pair_fn = lambda s: 0 if len(s) == 2 else 1  # noqa: E731
    assert min_constrained(pair_fn, 3) == (frozenset({0, 1}), 0)


def test_min_constrained_rejects_overlap():
    with pytest.raises(DomainError):
        min_constrained(lambda s: 0, 2, include={0}, exclude={0})


# ---------------------------------------------------------------------------
# membership and greedy vertices
# ---------------------------------------------------------------------------

def test_membership_origin_and_greedy_vertex():
    oracle = single_keyword_oracle([3, 2, 1])
    assert membership(oracle, [0, 0, 0]).ok
    assert membership(oracle, [3, 2, 1]).ok


def test_membership_violation_witness():
    oracle = single_keyword_oracle([3, 2, 1])
    result = membership(oracle, [4, 0, 0])
    assert not result.ok
    assert result.violating == frozenset({0})


def test_membership_rejects_negative():
    with pytest.raises(DomainError):
        membership(multi_unit_oracle(1, 2), [-1, 0])


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_greedy_vertex_membership_and_prefix_tightness(data):
    n = data.draw(st.integers(2, 5))
    ctrs = sorted(data.draw(st.lists(st.integers(0, 6), min_size=n, max_size=n)),
                  reverse=True)
    oracle = single_keyword_oracle(ctrs)
    order = data.draw(st.permutations(range(n)))
    vertex = greedy_vertex(oracle, order)
    assert membership(oracle, vertex).ok
    identity = greedy_vertex(oracle)
    for prefix_len in range(1, n + 1):
        prefix = set(range(prefix_len))
        assert sum(identity[i] for i in prefix) == oracle.value(prefix)


# ---------------------------------------------------------------------------
# clinch_amounts
# ---------------------------------------------------------------------------

def test_clinch_amounts_example():
    oracle = single_keyword_oracle([3, 2])
    assert clinch_amounts(oracle, [1, 0], [5, 1]) == (2, 1)


def test_clinch_amounts_zero_demand():
    oracle = single_keyword_oracle([3, 2])
    assert clinch_amounts(oracle, [1, 0], [0, 0]) == (0, 0)


def test_clinch_amounts_sole_demander_takes_remaining_supply():
    rng = random.Random(3)
    for _ in range(25):
        n = rng.randint(2, 5)
        total = F(rng.randint(1, 8))
        oracle = multi_unit_oracle(total, n)
        rho = random_feasible_point(rng, oracle)
        q = F(rng.randint(0, 10), 2)
        d = (q,) + (F(0),) * (n - 1)
        delta = clinch_amounts(oracle, rho, d)
        assert delta[0] == min(q, total - sum(rho))
        assert delta[1:] == (F(0),) * (n - 1)


def test_clinch_keeps_promises_feasible_and_is_idempotent():
    rng = random.Random(11)
    for _ in range(60):
        n = rng.randint(2, 5)
        kind = rng.choice(("multi-unit", "single-keyword", "graphic"))
        oracle = random_oracle(rng, kind, n)
        rho = random_feasible_point(rng, oracle)
        d = random_demands(rng, n)
        delta = clinch_amounts(oracle, rho, d)
        assert all(0 <= delta[i] <= d[i] for i in range(n))
        new_rho = tuple(rho[i] + delta[i] for i in range(n))
        assert membership(oracle, new_rho).ok
        new_d = tuple(d[i] - delta[i] for i in range(n))
        assert clinch_amounts(oracle, new_rho, new_d) == (F(0),) * n
