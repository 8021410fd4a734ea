"""Fusion-variant comparison harness.

Runs the joint-embedding variants (element-wise baselines, one-branch
attention, and two-branch cross-modal attention with each aggregation)
over a corpus, reduces each video's fused features to a single vector by
averaging over time, and scores task separability with the linear probe.
"""

from __future__ import annotations

import numpy as np

from .core import Corpus, DataError
from .evaluation import linear_probe_accuracy
from .fusion import baseline_fusion, branch_forward, cross_modal_forward, init_attention_params

FUSION_VARIANTS = (
    "sum",
    "multiply",
    "concat",
    "one_branch",
    "xattn_sum",
    "xattn_multiply",
    "xattn_concat",
)


def fusion_variant_embeddings(
    corpus: Corpus, variant: str, seed: int, train_epochs: int = 0
) -> tuple[np.ndarray, list[str]]:
    """Per-video time-averaged fused features for one variant.

    With ``train_epochs > 0`` the two-branch attention variants are refined
    by the self-supervised loop before probing; the attention-free baselines
    and the one-branch variant always probe their seeded initialization
    (they have no fusion parameters in their training configuration).
    """
    if variant not in FUSION_VARIANTS:
        raise DataError(f"unknown fusion variant {variant!r}")
    params = init_attention_params(corpus.channels, corpus.channels, seed)
    attention = None
    if variant.startswith("xattn_"):
        mode = variant.split("_", 1)[1]
        attention = init_attention_params(corpus.channels, corpus.channels, seed, mode)
        if train_epochs > 0:
            from .training import TrainConfig, train_loop

            cfg = TrainConfig(
                epochs=train_epochs,
                seed=seed,
                fusion_mode=mode,
                word_dim=corpus.channels,
                batch_size=min(8, len(corpus.videos)),
            )
            attention = train_loop(corpus, cfg).params.attention
    rows, labels = [], []
    for rec in corpus.videos:
        m_v = np.asarray(rec.video.data, dtype=np.float64)
        m_a = np.asarray(rec.audio.data, dtype=np.float64)
        if variant in ("sum", "multiply"):
            fused = baseline_fusion(m_v, m_a, variant).data
        elif variant == "concat":
            fused = baseline_fusion(m_v, m_a, "concat", projection=params.w_fuse).data
        elif variant == "one_branch":
            fused, _, _ = branch_forward(
                m_v, m_a, params.w_q1, params.w_k1, params.w_v1, params.w_out1
            )
        else:
            fused, _ = cross_modal_forward(m_v, m_a, attention)
        rows.append(fused.mean(axis=0))
        labels.append(rec.task_label)
    return np.stack(rows), labels


def run_fusion_ablation(corpus: Corpus, seeds: list[int], train_epochs: int = 0) -> dict:
    """Probe accuracy per variant per seed, plus per-variant means."""
    if not seeds:
        raise DataError("need at least one seed")
    results: dict[str, dict] = {}
    for variant in FUSION_VARIANTS:
        per_seed = {}
        for seed in seeds:
            embeddings, labels = fusion_variant_embeddings(corpus, variant, seed, train_epochs)
            per_seed[str(seed)] = linear_probe_accuracy(embeddings, labels, seed)
        results[variant] = {
            "per_seed": per_seed,
            "mean": float(np.mean(list(per_seed.values()))),
        }
    return results


def format_ablation_table(results: dict) -> str:
    lines = [f"{'variant':<16} {'mean':>7}  per-seed"]
    for variant in FUSION_VARIANTS:
        entry = results[variant]
        per_seed = " ".join(f"{v:.3f}" for v in entry["per_seed"].values())
        lines.append(f"{variant:<16} {entry['mean']:>7.3f}  {per_seed}")
    return "\n".join(lines)
