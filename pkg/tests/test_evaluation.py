"""Overlap metrics, retrieval precision, and the linear probe."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semgraph.assignment import SelectedNode
from semgraph.core import DataError
from semgraph.evaluation import (
    linear_probe_accuracy,
    precision_at_k,
    rouge1_node_overlap,
    task_overlap_matrix,
)
from semgraph.graphs import build_undirected_graph

from oracles import loop_rouge1_f1

words = st.lists(st.sampled_from("abcdef"), max_size=12)


class TestRouge1:
    def test_complete_overlap_is_one(self):
        assert rouge1_node_overlap(["a", "b"], ["a", "b"]) == 1.0

    def test_disjoint_sets_are_zero(self):
        assert rouge1_node_overlap(["a", "b"], ["c", "d"]) == 0.0

    def test_hand_counted_half(self):
        score = rouge1_node_overlap(["a", "b", "c", "d"], ["c", "d", "e", "f"])
        assert score == pytest.approx(0.5)

    def test_empty_conventions(self):
        assert rouge1_node_overlap([], []) == 1.0
        assert rouge1_node_overlap([], ["a"]) == 0.0
        assert rouge1_node_overlap(["a"], []) == 0.0

    def test_multiset_counting(self):
        # one shared "a" even though it repeats on one side
        assert rouge1_node_overlap(["a", "a"], ["a", "b"]) == pytest.approx(0.5)

    def test_recall_mode_uses_reference(self):
        assert rouge1_node_overlap(["a"], ["a", "b"], mode="recall") == pytest.approx(0.5)
        assert rouge1_node_overlap(["a", "b"], ["a"], mode="recall") == pytest.approx(1.0)

    @settings(max_examples=100, deadline=None)
    @given(words, words)
    def test_symmetric_bounded_matches_oracle(self, a, b):
        score = rouge1_node_overlap(a, b)
        assert 0.0 <= score <= 1.0
        assert score == pytest.approx(rouge1_node_overlap(b, a))
        assert score == pytest.approx(loop_rouge1_f1(a, b))

    @settings(max_examples=60, deadline=None)
    @given(words)
    def test_equals_one_iff_equal_multisets(self, a):
        assert rouge1_node_overlap(a, list(reversed(a))) == pytest.approx(1.0)
        if a:
            assert rouge1_node_overlap(a, a + ["zz"]) < 1.0


def word_graph(word_list):
    nodes = [
        SelectedNode(w, None, np.ones(2), 1.0) for w in sorted(set(word_list))
    ]
    return build_undirected_graph(nodes, tau=2.0)


class TestTaskOverlapMatrix:
    def test_identical_same_task_graphs_score_one(self):
        graphs = [("t0", word_graph(["a", "b"])), ("t0", word_graph(["a", "b"])),
                  ("t1", word_graph(["c"]))]
        report = task_overlap_matrix(graphs)
        assert report.same_task_mean == pytest.approx(1.0)

    def test_disjoint_tasks_zero_off_diagonal(self):
        graphs = [("t0", word_graph(["a", "b"])), ("t0", word_graph(["a", "b"])),
                  ("t1", word_graph(["c", "d"])), ("t1", word_graph(["c", "d"]))]
        report = task_overlap_matrix(graphs)
        i0 = report.task_labels.index("t0")
        i1 = report.task_labels.index("t1")
        assert report.matrix[i0, i1] == 0.0
        assert report.diff_task_mean == 0.0

    def test_matrix_is_symmetric_and_bounded(self):
        rng = np.random.default_rng(0)
        vocab = list("abcdefgh")
        graphs = []
        for i in range(6):
            sample = rng.choice(vocab, size=4, replace=False).tolist()
            graphs.append((f"t{i % 3}", word_graph(sample)))
        report = task_overlap_matrix(graphs)
        np.testing.assert_allclose(report.matrix, report.matrix.T)
        assert np.all(report.matrix >= 0.0) and np.all(report.matrix <= 1.0)

    def test_too_few_graphs_rejected(self):
        with pytest.raises(DataError):
            task_overlap_matrix([("t0", word_graph(["a"]))])

    def test_single_task_rejected_for_diff_mean(self):
        graphs = [("t0", word_graph(["a"])), ("t0", word_graph(["b"]))]
        with pytest.raises(DataError, match="2 tasks"):
            task_overlap_matrix(graphs)


class TestPrecisionAtK:
    def test_single_label_scores_one(self):
        rng = np.random.default_rng(1)
        embeds = rng.standard_normal((6, 4))
        assert precision_at_k(embeds, ["x"] * 6, k=3) == 1.0

    def test_two_orthogonal_clusters(self):
        e = np.eye(4)
        embeds = np.vstack([e[0], e[0] * 2, e[0] * 3, e[1], e[1] * 2, e[1] * 3])
        labels = ["a", "a", "a", "b", "b", "b"]
        assert precision_at_k(embeds, labels, k=2) == 1.0

    def test_k_at_corpus_size_rejected(self):
        embeds = np.eye(3)
        with pytest.raises(DataError):
            precision_at_k(embeds, ["a", "b", "c"], k=3)

    def test_invariant_under_rotation(self):
        rng = np.random.default_rng(2)
        embeds = rng.standard_normal((8, 5))
        labels = ["a", "b"] * 4
        q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
        base = precision_at_k(embeds, labels, k=3)
        rotated = precision_at_k(embeds @ q, labels, k=3)
        assert rotated == pytest.approx(base)


class TestLinearProbe:
    def test_separable_clusters_score_one(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((10, 4)) * 0.1 + np.array([5.0, 0, 0, 0])
        b = rng.standard_normal((10, 4)) * 0.1 + np.array([-5.0, 0, 0, 0])
        embeds = np.vstack([a, b])
        labels = ["a"] * 10 + ["b"] * 10
        assert linear_probe_accuracy(embeds, labels, seed=0) == 1.0

    def test_shuffled_labels_score_near_chance(self):
        rng = np.random.default_rng(4)
        embeds = rng.standard_normal((500, 6))
        labels = ["a", "b"] * 250
        acc = linear_probe_accuracy(embeds, labels, seed=1)
        assert abs(acc - 0.5) < 0.15

    def test_same_seed_same_accuracy(self):
        rng = np.random.default_rng(5)
        embeds = rng.standard_normal((40, 4))
        labels = ["a", "b", "c", "d"] * 10
        assert linear_probe_accuracy(embeds, labels, seed=2) == linear_probe_accuracy(
            embeds, labels, seed=2
        )

    def test_small_class_rejected(self):
        embeds = np.eye(3)
        with pytest.raises(DataError, match="fewer than 2"):
            linear_probe_accuracy(embeds, ["a", "a", "b"], seed=0)

    def test_single_class_rejected(self):
        with pytest.raises(DataError, match="2 classes"):
            linear_probe_accuracy(np.eye(4), ["a"] * 4, seed=0)
