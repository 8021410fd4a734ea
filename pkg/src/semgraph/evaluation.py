"""Graph overlap metrics, retrieval precision, and the linear probe."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .core import PAD_WORD, DataError, SemanticGraph, as_vector


def rouge1_node_overlap(nodes_a, nodes_b, mode: str = "f1") -> float:
    """Unigram overlap between two word multisets.

    F1 form: 2|A n B| / (|A| + |B|) with multiset intersection by minimum
    counts; 1 for equal multisets, 0 for disjoint ones. Recall mode scores
    |A n B| / |B| with the second argument as the reference. Two empty
    multisets score 1, one empty against a non-empty scores 0.
    """
    if mode not in ("f1", "recall"):
        raise DataError(f"unknown rouge mode {mode!r}")
    count_a, count_b = Counter(nodes_a), Counter(nodes_b)
    total_a, total_b = sum(count_a.values()), sum(count_b.values())
    if total_a == 0 and total_b == 0:
        return 1.0
    if total_a == 0 or total_b == 0:
        return 0.0
    shared = sum((count_a & count_b).values())
    if mode == "recall":
        return shared / total_b
    return 2.0 * shared / (total_a + total_b)


def graph_node_words(graph: SemanticGraph) -> list[str]:
    """Node word multiset for overlap metrics; (word, t) collapses to word."""
    return sorted(n.word for n in graph.nodes if n.word != PAD_WORD)


@dataclass
class OverlapReport:
    task_labels: list[str]
    matrix: np.ndarray
    same_task_mean: float
    diff_task_mean: float

    def to_payload(self) -> dict:
        return {
            "task_labels": self.task_labels,
            "matrix": [[float(x) for x in row] for row in self.matrix],
            "same_task_mean": self.same_task_mean,
            "diff_task_mean": self.diff_task_mean,
        }


def task_overlap_matrix(
    graphs: list[tuple[str, SemanticGraph]], mode: str = "f1"
) -> OverlapReport:
    """Pairwise rouge-1 node overlap averaged within task-pair cells.

    Diagonal cells average within-task pairs (self pairs excluded); the
    reported means pool all same-task and all cross-task pairs.
    """
    if len(graphs) < 2:
        raise DataError("need at least 2 graphs for an overlap matrix")
    labels = sorted({label for label, _ in graphs})
    words = [(label, graph_node_words(g)) for label, g in graphs]
    cells: dict[tuple[str, str], list[float]] = {}
    same_vals, diff_vals = [], []
    for i in range(len(words)):
        for j in range(i + 1, len(words)):
            la, wa = words[i]
            lb, wb = words[j]
            score = rouge1_node_overlap(wa, wb, mode=mode)
            cells.setdefault((la, lb), []).append(score)
            cells.setdefault((lb, la), []).append(score) if la != lb else None
            (same_vals if la == lb else diff_vals).append(score)
    if not diff_vals:
        raise DataError("need graphs from at least 2 tasks for a cross-task mean")
    matrix = np.zeros((len(labels), len(labels)))
    for a, la in enumerate(labels):
        for b, lb in enumerate(labels):
            vals = cells.get((la, lb), [])
            matrix[a, b] = float(np.mean(vals)) if vals else 0.0
    return OverlapReport(
        task_labels=labels,
        matrix=matrix,
        same_task_mean=float(np.mean(same_vals)) if same_vals else 0.0,
        diff_task_mean=float(np.mean(diff_vals)),
    )


def precision_at_k(embeddings, labels, k: int) -> float:
    """Mean fraction of an item's k cosine-nearest neighbors sharing its label."""
    vectors = np.stack([as_vector(e) for e in embeddings])
    labels = list(labels)
    n = vectors.shape[0]
    if len(labels) != n:
        raise DataError("embeddings and labels must align")
    if not 1 <= k < n:
        raise DataError(f"k must satisfy 1 <= k < corpus size, got k={k}, n={n}")
    norms = np.linalg.norm(vectors, axis=1)
    safe = np.where(norms == 0, 1.0, norms)
    unit = vectors / safe[:, None]
    sims = unit @ unit.T
    hits = []
    for i in range(n):
        order = sorted((j for j in range(n) if j != i), key=lambda j: (-sims[i, j], j))
        top = order[:k]
        hits.append(np.mean([labels[j] == labels[i] for j in top]))
    return float(np.mean(hits))


def linear_probe_accuracy(embeddings, labels, seed: int) -> float:
    """Accuracy of a linear classifier on a seeded, per-class 80/20 split."""
    from sklearn.linear_model import LogisticRegression

    vectors = np.stack([as_vector(e) for e in embeddings])
    labels = np.asarray(list(labels))
    if len(labels) != vectors.shape[0]:
        raise DataError("embeddings and labels must align")
    classes = sorted(set(labels.tolist()))
    if len(classes) < 2:
        raise DataError("probe needs at least 2 classes")
    rng = np.random.default_rng(np.random.SeedSequence((seed, 909)))
    train_idx, test_idx = [], []
    for cls in classes:
        members = np.flatnonzero(labels == cls)
        if members.size < 2:
            raise DataError(f"class {cls!r} has fewer than 2 examples")
        members = members[rng.permutation(members.size)]
        n_test = max(1, int(round(0.2 * members.size)))
        test_idx.extend(members[:n_test].tolist())
        train_idx.extend(members[n_test:].tolist())
    train_idx, test_idx = sorted(train_idx), sorted(test_idx)
    clf = LogisticRegression(max_iter=2000, C=10.0, random_state=0)
    clf.fit(vectors[train_idx], labels[train_idx])
    return float(np.mean(clf.predict(vectors[test_idx]) == labels[test_idx]))
