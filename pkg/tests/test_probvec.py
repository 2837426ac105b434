import json
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tomoprob import DomainError
from tomoprob.probvec import (
    StochasticMap,
    apply_map,
    check_entropy_chain,
    coarsening_chain,
    embedding_inequality,
    enumerate_permutations,
    enumerate_portraits,
    is_semigroup_closed,
    make_portrait,
    mutual_information,
    permutation_entropies,
    portrait_entropies,
    qubit_qutrit_embedding,
    set_partitions,
    shannon_entropy,
    subadditivity_check,
)

# reference values from 40-digit mpmath evaluations
H_1234 = 1.279854225833667467182185762149429928131
H_73 = 0.6108643020548934630256709631973806854609
I_UNIFORM = 0.2157615543388356955794142544953705736276


def simplex(n, min_size=None):
    """Hypothesis strategy for probability vectors of length ``n``, zeros allowed."""
    return st.lists(
        st.one_of(st.just(0.0), st.floats(1e-9, 1.0)), min_size=n, max_size=n
    ).filter(lambda v: sum(v) > 0).map(lambda v: np.array(v) / sum(v))


class TestEntropy:
    def test_vertex_has_zero_entropy(self):
        assert shannon_entropy([1, 0, 0, 0]) == 0.0

    def test_uniform_is_log_n(self):
        assert shannon_entropy([0.25] * 4) == pytest.approx(np.log(4), abs=1e-15)

    def test_against_high_precision(self):
        assert shannon_entropy([0.1, 0.2, 0.3, 0.4]) == pytest.approx(H_1234, rel=1e-14)
        assert shannon_entropy([0.7, 0.3]) == pytest.approx(H_73, rel=1e-14)

    @pytest.mark.parametrize(
        "bad, msg",
        [([0.5, 0.7, -0.2], "component 2 is negative"), ([0.5, 0.6], "sum to"), ([[0.5, 0.5]], "1-D"), ([], "1-D")],
    )
    def test_rejects_non_probability(self, bad, msg):
        with pytest.raises(DomainError, match=msg):
            shannon_entropy(bad)

    def test_tiny_negative_is_clamped(self):
        assert shannon_entropy([1.0, -1e-14]) == 0.0


class TestMaps:
    def test_pairwise_coarsening(self):
        m = make_portrait(4, [[0, 1], [2, 3]])
        np.testing.assert_allclose(apply_map(m, [0.1, 0.2, 0.3, 0.4]), [0.3, 0.7, 0, 0], atol=1e-15)

    def test_center_map(self):
        np.testing.assert_allclose(apply_map(StochasticMap.center(4), [0.1, 0.2, 0.3, 0.4]), [0.25] * 4)

    def test_purifier(self):
        m = StochasticMap.purifier(4)
        np.testing.assert_array_equal(apply_map(m, [0.1, 0.2, 0.3, 0.4]), [1, 0, 0, 0])
        np.testing.assert_array_equal((m @ m).entries, m.entries)

    def test_portrait_examples(self):
        p = np.array([0.1, 0.2, 0.3, 0.4])
        np.testing.assert_allclose(apply_map(make_portrait(4, [[0, 1], [2], [3]]), p), [0.3, 0.3, 0.4, 0])
        np.testing.assert_allclose(apply_map(make_portrait(4, [[0, 1, 2], [3]]), p), [0.6, 0.4, 0, 0])
        np.testing.assert_array_equal(make_portrait(2, [[0], [1]]).entries, np.eye(2))

    def test_portrait_rejects_non_partition(self):
        with pytest.raises(DomainError):
            make_portrait(3, [[0, 1], [1, 2]])
        with pytest.raises(DomainError):
            make_portrait(3, [[0], []])

    def test_kind_inference(self):
        assert StochasticMap.center(3).kind == "center"
        assert StochasticMap.permutation([1, 0, 2]).kind == "permutation"
        assert StochasticMap(np.array([[0.5, 0.2], [0.5, 0.8]])).kind == "general"
        with pytest.raises(DomainError):
            StochasticMap(np.array([[0.5, 0.2], [0.6, 0.8]]))

    def test_json_round_trip(self):
        m = make_portrait(4, [[0, 3], [1], [2]])
        back = StochasticMap.from_dict(json.loads(json.dumps(m.to_dict())))
        np.testing.assert_allclose(back.entries, m.entries, rtol=1e-15)
        assert back.kind == "portrait"

    def test_square_of_last_coarsening_is_purifier(self):
        m4 = make_portrait(4, [[0, 1, 2], [3]])
        np.testing.assert_array_equal((m4 @ m4).entries, StochasticMap.purifier(4).entries)

    def test_permutation_enumeration(self):
        assert len(enumerate_permutations(4)) == 24
        assert len(enumerate_permutations(1)) == 1
        three = enumerate_permutations(3)
        assert len(three) == 6 and all(m.is_bistochastic for m in three)
        with pytest.raises(DomainError):
            enumerate_permutations(9)

    def test_partition_counts_are_bell_numbers(self):
        assert [sum(1 for _ in set_partitions(n)) for n in range(1, 7)] == [1, 2, 5, 15, 52, 203]

    def test_semigroup_closure(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            a, b = rng.random((2, 5, 5))
            a /= a.sum(axis=0)
            b /= b.sum(axis=0)
            assert is_semigroup_closed(a, b)
            np.testing.assert_allclose((a @ b).sum(axis=0), 1, atol=1e-12)
        p1, p2 = StochasticMap.permutation([2, 0, 1]), StochasticMap.permutation([1, 0, 2])
        assert (p1 @ p2).kind == "permutation"


class TestBatchEntropies:
    def test_portrait_table_matches_map_products(self):
        rng = np.random.default_rng(11)
        P = rng.dirichlet(np.ones(5), size=4)
        parts, table = portrait_entropies(P)
        for i, p in enumerate(P):
            direct = [shannon_entropy(apply_map(make_portrait(5, q), p)) for q in parts]
            np.testing.assert_allclose(table[i], direct, atol=1e-15)

    def test_permutation_entropies_match_maps(self):
        p = np.array([0.1, 0.2, 0.3, 0.4])
        direct = [shannon_entropy(apply_map(m, p)) for m in enumerate_permutations(4)]
        np.testing.assert_allclose(permutation_entropies(p), direct, atol=1e-15)


class TestChains:
    def test_three_component_instance(self):
        p = [0.2, 0.5, 0.3]
        assert shannon_entropy(p) >= shannon_entropy([0.7, 0.3])

    def test_vertex_chain_is_flat(self):
        rep = check_entropy_chain([1, 0, 0, 0, 0, 0], coarsening_chain(6))
        assert rep.entropies == [0.0] * 6
        assert rep.monotone

    def test_chain_shape(self):
        chain = coarsening_chain(6)
        assert [m.zero_rows for m in chain] == [1, 2, 3, 4, 5]

    def test_chain_rejects_non_portrait(self):
        with pytest.raises(DomainError):
            check_entropy_chain([0.5, 0.5], [StochasticMap.center(2)])

    @settings(max_examples=200, deadline=None)
    @given(simplex(6), st.permutations(range(6)))
    def test_nested_chain_is_monotone(self, p, order):
        assert check_entropy_chain(p, coarsening_chain(6, order)).monotone

    @settings(max_examples=100, deadline=None)
    @given(simplex(5))
    def test_every_portrait_lowers_entropy(self, p):
        h = shannon_entropy(p)
        assert all(shannon_entropy(apply_map(m, p)) <= h + 1e-12 for m in enumerate_portraits(5))


class TestJointInequalities:
    def test_product_vector_saturates(self):
        a, b = np.array([0.3, 0.7]), np.array([0.6, 0.4])
        rep = subadditivity_check(np.outer(a, b).ravel())
        assert rep.gap == pytest.approx(0, abs=1e-12)

    def test_correlated_pair(self):
        rep = subadditivity_check([0.5, 0, 0, 0.5])
        assert rep.lhs == pytest.approx(2 * np.log(2), abs=1e-15)
        assert rep.rhs == pytest.approx(np.log(2), abs=1e-15)
        assert rep.holds

    def test_mutual_information_values(self):
        assert mutual_information([0, 0, 0, 1]) == 0.0
        assert mutual_information([0.25] * 4) == pytest.approx(I_UNIFORM, rel=1e-14)

    def test_embedding_layout(self):
        np.testing.assert_array_equal(qubit_qutrit_embedding([1, 0, 0, 0]), [0, 0, 1, 0, 0, 0])
        q = qubit_qutrit_embedding([0.1, 0.2, 0.3, 0.4]).reshape(2, 3)
        np.testing.assert_allclose(q.sum(axis=1), [0.1, 0.9])

    def test_all_orderings_of_one_vector(self):
        p = np.array([0.05, 0.15, 0.3, 0.5])
        for perm in permutations(range(4)):
            assert mutual_information(p[list(perm)]) >= -1e-12

    @settings(max_examples=300, deadline=None)
    @given(simplex(4))
    def test_embedding_gap_is_subadditivity_gap_of_embedding(self, p):
        emb = embedding_inequality(p)
        sub = subadditivity_check(qubit_qutrit_embedding(p), shape=(2, 3))
        assert emb.gap == pytest.approx(sub.gap, abs=1e-12)
        assert emb.gap == pytest.approx(mutual_information(p), abs=1e-12)
        assert sub.holds and emb.holds
