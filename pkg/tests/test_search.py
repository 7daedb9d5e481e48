"""Motif search: matrix assembly, group attribution, oracle and solver."""

import math
import random

import numpy as np
import pytest

from motif_attrib import (
    Explanation,
    InputError,
    InteractionMatrix,
    NodeSubset,
    branch_and_bound_search,
    build_graph,
    build_matrix,
    complete_graph,
    default_budget,
    exhaustive_search,
    group_attr,
    make_planted_motif_game,
    make_random_game,
    myerson_exact,
    myerson_taylor_exact,
    path_graph,
)
from oracle_helpers import random_er_graph_edges, search_reference

ATOL = 1e-9


def random_matrix(n, rng, density=0.7):
    b = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            if rng.random() < density:
                b[i, j] = b[j, i] = rng.uniform(-1.0, 1.0)
    return InteractionMatrix(b)


def check_feasible(g, exp, m, big_m):
    from motif_attrib import is_connected

    assert len(exp.motifs) <= m
    assert sum(len(s) for s in exp.motifs) <= big_m
    used = NodeSubset(g.n, 0)
    for s in exp.motifs:
        assert s, "empty motif in explanation"
        assert is_connected(g, s)
        assert used.isdisjoint(s)
        used = used | s
    assert math.isclose(
        exp.objective, sum(abs(x) for x in exp.scores), abs_tol=1e-12
    )


class TestMatrixAssembly:
    def test_placement(self):
        g = path_graph(3)
        idx = myerson_taylor_exact(g, make_random_game(3, seed=1), k=2)
        mat = build_matrix(idx)
        for i in range(3):
            assert mat.b[i, i] == idx.value([i])
            for j in range(i + 1, 3):
                assert mat.b[i, j] == idx.value([i, j])
                assert mat.b[j, i] == idx.value([i, j])

    def test_requires_second_order(self):
        v = make_random_game(3, seed=2)
        with pytest.raises(InputError):
            build_matrix(myerson_exact(path_graph(3), v))
        with pytest.raises(InputError):
            build_matrix(myerson_taylor_exact(path_graph(3), v, k=3))

    def test_sign_split(self):
        mat = InteractionMatrix(np.array([[1.0, -2.0], [-2.0, 0.5]]))
        assert np.array_equal(mat.b_plus, np.array([[1.0, 0.0], [0.0, 0.5]]))
        assert np.array_equal(mat.b_minus, np.array([[0.0, -2.0], [-2.0, 0.0]]))
        assert np.array_equal(mat.b_plus + mat.b_minus, mat.b)

    def test_matrix_validation(self):
        with pytest.raises(InputError):
            InteractionMatrix(np.zeros((2, 3)))
        with pytest.raises(InputError):
            InteractionMatrix(np.array([[0.0, 1.0], [2.0, 0.0]]))
        with pytest.raises(InputError):
            InteractionMatrix(np.array([[float("nan")]]))


class TestGroupAttribution:
    def test_hand_example(self):
        mat = InteractionMatrix(np.array([[1.0, 2.0], [2.0, 3.0]]))
        both = NodeSubset.from_nodes(2, [0, 1])
        # pairs within {0,1}: (0,0)=1, (1,1)=3, (0,1)=2
        assert group_attr(mat, both, tau=1.0) == 6.0
        assert group_attr(mat, NodeSubset.from_nodes(2, [1]), tau=1.0) == 3.0
        assert group_attr(mat, NodeSubset(2, 0), tau=1.0) == 0.0

    def test_tau_weighting(self):
        mat = InteractionMatrix(np.array([[2.0, -4.0], [-4.0, 1.0]]))
        both = NodeSubset.from_nodes(2, [0, 1])
        # positive part contributes 3, negative part -4
        assert math.isclose(group_attr(mat, both, tau=1.0), 3.0, abs_tol=ATOL)
        assert math.isclose(group_attr(mat, both, tau=0.0), -4.0, abs_tol=ATOL)
        assert math.isclose(group_attr(mat, both, tau=0.5), -0.5, abs_tol=ATOL)

    def test_tau_validation(self):
        mat = InteractionMatrix(np.zeros((2, 2)))
        s = NodeSubset.from_nodes(2, [0])
        for bad in (-0.1, 1.5, "x"):
            with pytest.raises(InputError):
                group_attr(mat, s, tau=bad)


class TestExhaustiveSearch:
    def test_matches_assignment_enumeration(self):
        rng = random.Random(201)
        for trial in range(25):
            n = rng.randint(3, 6)
            edges = random_er_graph_edges(n, rng.choice([0.3, 0.6, 1.0]), rng)
            g = build_graph(n, edges)
            mat = random_matrix(n, rng)
            m = rng.randint(1, 3)
            big_m = rng.randint(1, n)
            tau = rng.choice([0.0, 0.3, 0.5, 1.0])
            exp = exhaustive_search(g, mat, m, big_m, tau)
            want = search_reference(
                n, edges, mat.weighted(tau).tolist(), m, big_m
            )
            assert math.isclose(exp.objective, want, abs_tol=ATOL), (trial, n)
            check_feasible(g, exp, m, big_m)
            assert exp.optimal

    def test_prefers_fewer_nodes_on_ties(self):
        g = build_graph(3, [(0, 1)])  # node 2 isolated
        b = np.zeros((3, 3))
        b[0, 0] = b[1, 1] = 0.5
        b[2, 2] = 1.0
        # {0,1} and {2} both score 1.0; the smaller motif wins
        exp = exhaustive_search(g, InteractionMatrix(b), m=1, M=2, tau=1.0)
        assert [list(s) for s in exp.motifs] == [[2]]

    def test_prefers_lexicographically_smallest_on_full_ties(self):
        g = build_graph(4, [])
        b = np.zeros((4, 4))
        b[1, 1] = b[3, 3] = 2.0
        exp = exhaustive_search(g, InteractionMatrix(b), m=1, M=1, tau=1.0)
        assert [list(s) for s in exp.motifs] == [[1]]

    def test_empty_budgets_yield_empty_explanation(self):
        g = path_graph(3)
        mat = random_matrix(3, random.Random(0))
        for m, big_m in ((0, 3), (2, 0)):
            exp = exhaustive_search(g, mat, m, big_m, tau=1.0)
            assert exp.motifs == [] and exp.objective == 0.0 and exp.optimal

    def test_node_cap(self):
        g = path_graph(15)
        mat = InteractionMatrix(np.zeros((15, 15)))
        with pytest.raises(InputError):
            exhaustive_search(g, mat, 1, 2)

    def test_argument_validation(self):
        g = path_graph(3)
        mat = random_matrix(3, random.Random(1))
        with pytest.raises(InputError):
            exhaustive_search(g, mat, -1, 2)
        with pytest.raises(InputError):
            exhaustive_search(g, mat, 1, -2)
        with pytest.raises(InputError):
            exhaustive_search(g, random_matrix(4, random.Random(2)), 1, 2)


class TestBranchAndBound:
    def test_matches_oracle(self):
        rng = random.Random(202)
        for trial in range(30):
            n = rng.randint(4, 9)
            edges = random_er_graph_edges(n, rng.choice([0.25, 0.5, 0.8]), rng)
            g = build_graph(n, edges)
            mat = random_matrix(n, rng, density=rng.choice([0.4, 0.9]))
            m = rng.randint(1, 3)
            big_m = rng.randint(2, n)
            tau = rng.choice([0.0, 0.5, 1.0])
            got = branch_and_bound_search(g, mat, m, big_m, tau)
            want = exhaustive_search(g, mat, m, big_m, tau)
            assert math.isclose(got.objective, want.objective, abs_tol=ATOL), trial
            assert got.optimal
            check_feasible(g, got, m, big_m)

    def test_zero_node_budget_returns_greedy_start(self):
        g = path_graph(5)
        motifs = [NodeSubset.from_nodes(5, [0, 1]), NodeSubset.from_nodes(5, [3, 4])]
        v = make_planted_motif_game(g, motifs, [2.0, -2.0])
        mat = build_matrix(myerson_taylor_exact(g, v, k=2))
        exp = branch_and_bound_search(g, mat, 2, 4, tau=0.5, node_budget=0)
        assert not exp.optimal
        check_feasible(g, exp, 2, 4)
        best = exhaustive_search(g, mat, 2, 4, tau=0.5)
        assert exp.objective <= best.objective + ATOL

    def test_time_budget_zero_still_returns_feasible(self):
        rng = random.Random(203)
        g = build_graph(6, random_er_graph_edges(6, 0.5, rng))
        mat = random_matrix(6, rng)
        exp = branch_and_bound_search(g, mat, 2, 4, tau=1.0, time_budget_s=0.0)
        assert not exp.optimal
        check_feasible(g, exp, 2, 4)

    def test_trivial_budgets(self):
        g = path_graph(4)
        mat = random_matrix(4, random.Random(3))
        for m, big_m in ((0, 4), (2, 0)):
            exp = branch_and_bound_search(g, mat, m, big_m, tau=1.0)
            assert exp.motifs == [] and exp.optimal
        zero = branch_and_bound_search(
            g, InteractionMatrix(np.zeros((4, 4))), 2, 4, tau=1.0
        )
        assert zero.motifs == [] and zero.optimal

    def test_objective_monotone_in_node_budget(self):
        rng = random.Random(204)
        g = build_graph(7, random_er_graph_edges(7, 0.5, rng))
        mat = random_matrix(7, rng)
        prev = -1.0
        for big_m in range(0, 8):
            exp = branch_and_bound_search(g, mat, 2, big_m, tau=1.0)
            assert exp.objective >= prev - ATOL
            prev = exp.objective

    def test_positive_only_focus_picks_positive_motif(self):
        g = path_graph(5)
        motifs = [NodeSubset.from_nodes(5, [0, 1]), NodeSubset.from_nodes(5, [3, 4])]
        v = make_planted_motif_game(g, motifs, [2.0, -2.0])
        mat = build_matrix(myerson_taylor_exact(g, v, k=2))
        pos = branch_and_bound_search(g, mat, 1, 2, tau=1.0)
        assert [list(s) for s in pos.motifs] == [[0, 1]]
        neg = branch_and_bound_search(g, mat, 1, 2, tau=0.0)
        assert [list(s) for s in neg.motifs] == [[3, 4]]

    def test_planted_pair_recovered(self):
        g = path_graph(5)
        motifs = [NodeSubset.from_nodes(5, [0, 1]), NodeSubset.from_nodes(5, [3, 4])]
        v = make_planted_motif_game(g, motifs, [2.0, -2.0])
        mat = build_matrix(myerson_taylor_exact(g, v, k=2))
        exp = branch_and_bound_search(g, mat, 2, 4, tau=0.5)
        assert [list(s) for s in exp.motifs] == [[0, 1], [3, 4]]
        assert exp.optimal
        assert math.isclose(exp.objective, 2.0, abs_tol=ATOL)

    def test_determinism(self):
        rng = random.Random(205)
        g = build_graph(7, random_er_graph_edges(7, 0.4, rng))
        mat = random_matrix(7, rng)
        a = branch_and_bound_search(g, mat, 2, 5, tau=0.5)
        b = branch_and_bound_search(g, mat, 2, 5, tau=0.5)
        assert a.to_dict() == b.to_dict()


class TestBudgetsAndSerialization:
    def test_default_budget(self):
        assert default_budget(path_graph(10)) == (2, 3)
        assert default_budget(complete_graph(4)) == (2, 2)
        motifs = [NodeSubset.from_nodes(6, [0, 1, 2]), NodeSubset.from_nodes(6, [4])]
        assert default_budget(path_graph(6), motifs) == (2, 4)

    def test_explanation_round_trip(self):
        g = path_graph(5)
        mat = random_matrix(5, random.Random(6))
        exp = exhaustive_search(g, mat, 2, 3, tau=0.5)
        back = Explanation.from_dict(exp.to_dict())
        assert back.to_dict() == exp.to_dict()

    def test_bad_document(self):
        with pytest.raises(InputError):
            Explanation.from_dict({"motifs": [[0]]})
