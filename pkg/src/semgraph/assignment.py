"""Reverse mapping of pool indices to words, plus node aggregation.

The pool trace is walked backwards from the final grid to the original
(T, N) grid, yielding the cells whose words survived every pooling stage.
Selected words become nodes either per time segment (directed use: one
node per (word, t), features and activations summed over occurrences in
that segment) or time-averaged (undirected use: one node per word, the
arithmetic mean feature over all occurrences).

A node's scalar importance is the L2 norm of its feature vector by
default; a mean-of-entries alternative is available.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PAD_WORD, DataError, NodeTensor, PoolTrace, TokenTimeline

IMPORTANCE_MODES = ("l2", "mean")


@dataclass
class SelectedNode:
    word: str
    time_segment: int | None
    feature: np.ndarray
    activation: float

    def __post_init__(self):
        if self.word == PAD_WORD:
            raise DataError("pad slots cannot become selected nodes")
        self.feature = np.asarray(self.feature, dtype=np.float64)
        if not np.all(np.isfinite(self.feature)):
            raise DataError(f"node {self.word!r} has a non-finite feature")
        if self.activation < 0:
            raise DataError(f"node {self.word!r} has a negative activation")


def importance_scalar(feature: np.ndarray, mode: str = "l2") -> float:
    """Collapse a feature vector into a non-negative importance scalar."""
    if mode == "l2":
        return float(np.linalg.norm(feature))
    if mode == "mean":
        return float(np.mean(np.abs(feature)))
    raise DataError(f"unknown importance mode {mode!r}")


def reverse_map(trace: PoolTrace) -> set[tuple[int, int]]:
    """Original-grid cells that survive every pooling stage."""
    trace.validate()
    t_final, n_final = trace.final_shape
    cells = {(t, n) for t in range(t_final) for n in range(n_final)}
    for layer in reversed(trace.layers):
        cells = {layer.unflatten(layer.argmax[t, n]) for (t, n) in cells}
    return cells


def provenance(trace: PoolTrace) -> dict[tuple[int, int], tuple[int, int]]:
    """Map each surviving original cell to its final-grid position.

    Pool windows are disjoint, so distinct final cells trace back to
    distinct original cells and the mapping is a bijection onto the set
    returned by :func:`reverse_map`.
    """
    trace.validate()
    t_final, n_final = trace.final_shape
    mapping: dict[tuple[int, int], tuple[int, int]] = {}
    for t in range(t_final):
        for n in range(n_final):
            cell = (t, n)
            for layer in reversed(trace.layers):
                cell = layer.unflatten(layer.argmax[cell])
            mapping[cell] = (t, n)
    return mapping


def select_words(
    timeline: TokenTimeline,
    cells: set[tuple[int, int]],
    features: dict[tuple[int, int], np.ndarray] | None = None,
) -> list[SelectedNode]:
    """Turn surviving cells into word records, dropping pad slots.

    `features` maps original cells to their pulled-through feature vectors;
    without it nodes carry a zero scalar feature (word-only queries).
    """
    nodes = []
    for t, n in sorted(cells):
        if t >= timeline.num_segments or n >= timeline.max_nodes:
            raise DataError(f"cell {(t, n)} is outside the timeline grid")
        word = timeline.word_at(t, n)
        if word == PAD_WORD:
            continue
        feat = features.get((t, n)) if features is not None else None
        if feat is None:
            feat = np.zeros(1)
        nodes.append(
            SelectedNode(
                word=word,
                time_segment=t,
                feature=feat,
                activation=importance_scalar(feat),
            )
        )
    return nodes


def assign_semantics(
    timeline: TokenTimeline, ne_hat: NodeTensor, trace: PoolTrace
) -> list[SelectedNode]:
    """Full reverse mapping: selected words with their final-layer features."""
    if trace.original_shape != (timeline.num_segments, timeline.max_nodes):
        raise DataError("trace grid does not match the timeline grid")
    mapping = provenance(trace)
    features = {cell: ne_hat.data[final] for cell, final in mapping.items()}
    return select_words(timeline, set(mapping), features)


def aggregate_directed(selected: list[SelectedNode]) -> list[SelectedNode]:
    """One node per (word, t); features and activations sum within a segment."""
    groups: dict[tuple[str, int], list[SelectedNode]] = {}
    for node in selected:
        if node.time_segment is None:
            raise DataError(f"record for {node.word!r} is missing time_segment")
        groups.setdefault((node.word, node.time_segment), []).append(node)
    out = []
    for (word, t) in sorted(groups, key=lambda key: (key[1], key[0])):
        members = groups[(word, t)]
        feature = np.sum([m.feature for m in members], axis=0)
        activation = float(sum(m.activation for m in members))
        out.append(SelectedNode(word=word, time_segment=t, feature=feature, activation=activation))
    return out


def aggregate_undirected(
    selected: list[SelectedNode], importance_mode: str = "l2"
) -> list[SelectedNode]:
    """One node per word; feature is the mean over all occurrences."""
    groups: dict[str, list[SelectedNode]] = {}
    for node in selected:
        groups.setdefault(node.word, []).append(node)
    out = []
    for word in sorted(groups):
        members = groups[word]
        feature = np.sum([m.feature for m in members], axis=0) / len(members)
        out.append(
            SelectedNode(
                word=word,
                time_segment=None,
                feature=feature,
                activation=importance_scalar(feature, importance_mode),
            )
        )
    return out
