"""Attention-based fusion of modality streams and semantic node attention.

A fusion branch attends one modality with the other:

    alpha = relu((Mq @ Wq) @ (Mkv @ Wk)^T)          (T x T)
    Z     = relu((alpha @ (Mkv @ Wv)) @ Wout)       (T x C)

Two branches run with swapped query/key-value roles and their outputs are
combined by element-wise sum, element-wise product, or channel
concatenation followed by a linear projection back to C. Semantic node
attention reuses the single-branch idea per time segment, scoring each
word node against the fused features and scaling its projected embedding
by the (non-negative) score.

Attention scores stay un-normalized by default; an optional row-sum
normalization is available for numerical headroom at larger widths.

Every forward has a matching closed-form backward so the whole pipeline
can be trained and checked against finite differences without an autodiff
framework. All math runs in float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DataError, Modality, ModalityFeatures, NodeTensor

FUSION_MODES = ("sum", "multiply", "concat")

_EPS = 1e-12


@dataclass
class AttentionParams:
    """Projection matrices for both fusion branches plus semantic attention.

    All matrices use the (input_dim, output_dim) layout and apply as
    ``x @ W``. ``w_fuse`` projects the concatenated branch outputs back to
    C; ``word_projection`` maps word embeddings (width C_w) to C and
    ``w_z`` projects the fused features before the semantic dot product.
    """

    w_q1: np.ndarray
    w_k1: np.ndarray
    w_v1: np.ndarray
    w_out1: np.ndarray
    w_q2: np.ndarray
    w_k2: np.ndarray
    w_v2: np.ndarray
    w_out2: np.ndarray
    w_fuse: np.ndarray
    word_projection: np.ndarray
    w_z: np.ndarray
    fusion_mode: str = "concat"
    normalize_alpha: bool = False

    def __post_init__(self):
        if self.fusion_mode not in FUSION_MODES:
            raise DataError(f"unknown fusion_mode {self.fusion_mode!r}")
        for name, mat in self.matrices().items():
            if not np.all(np.isfinite(mat)):
                raise DataError(f"attention matrix {name} contains non-finite entries")

    def matrices(self) -> dict[str, np.ndarray]:
        return {
            "w_q1": self.w_q1,
            "w_k1": self.w_k1,
            "w_v1": self.w_v1,
            "w_out1": self.w_out1,
            "w_q2": self.w_q2,
            "w_k2": self.w_k2,
            "w_v2": self.w_v2,
            "w_out2": self.w_out2,
            "w_fuse": self.w_fuse,
            "word_projection": self.word_projection,
            "w_z": self.w_z,
        }


def _fan_in_uniform(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(rows)
    return rng.uniform(-bound, bound, size=(rows, cols))


def init_attention_params(
    channels: int,
    word_dim: int,
    seed: int,
    fusion_mode: str = "concat",
    normalize_alpha: bool = False,
) -> AttentionParams:
    """Seeded fan-in uniform initialization of every projection matrix."""
    rng = np.random.default_rng(np.random.SeedSequence((seed, 101)))
    c = channels
    return AttentionParams(
        w_q1=_fan_in_uniform(rng, c, c),
        w_k1=_fan_in_uniform(rng, c, c),
        w_v1=_fan_in_uniform(rng, c, c),
        w_out1=_fan_in_uniform(rng, c, c),
        w_q2=_fan_in_uniform(rng, c, c),
        w_k2=_fan_in_uniform(rng, c, c),
        w_v2=_fan_in_uniform(rng, c, c),
        w_out2=_fan_in_uniform(rng, c, c),
        w_fuse=_fan_in_uniform(rng, 2 * c, c),
        word_projection=_fan_in_uniform(rng, word_dim, c),
        w_z=_fan_in_uniform(rng, c, c),
        fusion_mode=fusion_mode,
        normalize_alpha=normalize_alpha,
    )


def _as_matrix(m) -> np.ndarray:
    if isinstance(m, ModalityFeatures):
        return np.asarray(m.data, dtype=np.float64)
    return np.asarray(m, dtype=np.float64)


def _check_shared_t(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[0] != b.shape[0]:
        raise DataError(f"inputs disagree on T: {a.shape[0]} != {b.shape[0]}")


def _normalize_rows(alpha: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    sums = alpha.sum(axis=1, keepdims=True)
    return alpha / (sums + _EPS), sums


# ---------------------------------------------------------------------------
# single branch
# ---------------------------------------------------------------------------


def branch_forward(
    mq: np.ndarray,
    mkv: np.ndarray,
    wq: np.ndarray,
    wk: np.ndarray,
    wv: np.ndarray,
    wout: np.ndarray,
    normalize_alpha: bool = False,
):
    """One attention branch. Returns (z, alpha, cache)."""
    _check_shared_t(mq, mkv)
    q = mq @ wq
    k = mkv @ wk
    v = mkv @ wv
    scores = q @ k.T
    alpha_raw = np.maximum(scores, 0.0)
    if normalize_alpha:
        alpha, row_sums = _normalize_rows(alpha_raw)
    else:
        alpha, row_sums = alpha_raw, None
    attended = alpha @ v
    z_pre = attended @ wout
    z = np.maximum(z_pre, 0.0)
    cache = {
        "mq": mq, "mkv": mkv, "wq": wq, "wk": wk, "wv": wv, "wout": wout,
        "q": q, "k": k, "v": v, "scores": scores, "alpha_raw": alpha_raw,
        "alpha": alpha, "row_sums": row_sums, "attended": attended, "z_pre": z_pre,
        "normalize_alpha": normalize_alpha,
    }
    return z, alpha, cache


def branch_backward(d_z: np.ndarray, cache: dict):
    """Backward pass of one branch. Returns (d_mq, d_mkv, grads)."""
    d_zpre = d_z * (cache["z_pre"] > 0)
    d_attended = d_zpre @ cache["wout"].T
    d_wout = cache["attended"].T @ d_zpre
    d_alpha = d_attended @ cache["v"].T
    d_v = cache["alpha"].T @ d_attended
    if cache["normalize_alpha"]:
        sums = cache["row_sums"]
        denom = sums + _EPS
        # alpha = alpha_raw / denom with denom the row sum of alpha_raw
        d_alpha_raw = d_alpha / denom - (
            (d_alpha * cache["alpha_raw"]).sum(axis=1, keepdims=True) / denom**2
        )
    else:
        d_alpha_raw = d_alpha
    d_scores = d_alpha_raw * (cache["scores"] > 0)
    d_q = d_scores @ cache["k"]
    d_k = d_scores.T @ cache["q"]
    d_mq = d_q @ cache["wq"].T
    d_wq = cache["mq"].T @ d_q
    d_mkv = d_k @ cache["wk"].T + d_v @ cache["wv"].T
    d_wk = cache["mkv"].T @ d_k
    d_wv = cache["mkv"].T @ d_v
    return d_mq, d_mkv, {"wq": d_wq, "wk": d_wk, "wv": d_wv, "wout": d_wout}


def one_branch_attention(
    m_query, m_key_value, params: AttentionParams, branch: int = 1
) -> tuple[ModalityFeatures, np.ndarray]:
    """Attend `m_query` with `m_key_value` using one branch's matrices."""
    mq, mkv = _as_matrix(m_query), _as_matrix(m_key_value)
    if branch == 1:
        mats = (params.w_q1, params.w_k1, params.w_v1, params.w_out1)
    elif branch == 2:
        mats = (params.w_q2, params.w_k2, params.w_v2, params.w_out2)
    else:
        raise DataError(f"branch must be 1 or 2, got {branch}")
    z, alpha, _ = branch_forward(mq, mkv, *mats, normalize_alpha=params.normalize_alpha)
    duration = m_query.segment_duration_s if isinstance(m_query, ModalityFeatures) else 1.0
    return ModalityFeatures(Modality.FUSED, z, duration), alpha


# ---------------------------------------------------------------------------
# two-branch cross-modal fusion
# ---------------------------------------------------------------------------


def cross_modal_forward(m1: np.ndarray, m2: np.ndarray, params: AttentionParams):
    """Both branches plus aggregation. Returns (z, cache)."""
    _check_shared_t(m1, m2)
    z1, _, c1 = branch_forward(
        m1, m2, params.w_q1, params.w_k1, params.w_v1, params.w_out1,
        normalize_alpha=params.normalize_alpha,
    )
    z2, _, c2 = branch_forward(
        m2, m1, params.w_q2, params.w_k2, params.w_v2, params.w_out2,
        normalize_alpha=params.normalize_alpha,
    )
    mode = params.fusion_mode
    if mode == "sum":
        z = z1 + z2
    elif mode == "multiply":
        z = z1 * z2
    else:
        z = np.concatenate([z1, z2], axis=1) @ params.w_fuse
    cache = {"c1": c1, "c2": c2, "z1": z1, "z2": z2, "mode": mode, "w_fuse": params.w_fuse}
    return z, cache


def cross_modal_backward(d_z: np.ndarray, cache: dict):
    """Returns (d_m1, d_m2, grads) with branch-qualified gradient names."""
    z1, z2, mode = cache["z1"], cache["z2"], cache["mode"]
    d_wfuse = np.zeros_like(cache["w_fuse"])
    if mode == "sum":
        d_z1, d_z2 = d_z, d_z
    elif mode == "multiply":
        d_z1, d_z2 = d_z * z2, d_z * z1
    else:
        stacked = np.concatenate([z1, z2], axis=1)
        d_wfuse = stacked.T @ d_z
        d_stacked = d_z @ cache["w_fuse"].T
        c = z1.shape[1]
        d_z1, d_z2 = d_stacked[:, :c], d_stacked[:, c:]
    d_m1a, d_m2a, g1 = branch_backward(d_z1, cache["c1"])
    d_m2b, d_m1b, g2 = branch_backward(d_z2, cache["c2"])
    grads = {
        "w_q1": g1["wq"], "w_k1": g1["wk"], "w_v1": g1["wv"], "w_out1": g1["wout"],
        "w_q2": g2["wq"], "w_k2": g2["wk"], "w_v2": g2["wv"], "w_out2": g2["wout"],
        "w_fuse": d_wfuse,
    }
    return d_m1a + d_m1b, d_m2a + d_m2b, grads


def cross_modal_attention(m1, m2, params: AttentionParams) -> ModalityFeatures:
    """Fuse two modality streams into a joint (T, C) embedding."""
    z, _ = cross_modal_forward(_as_matrix(m1), _as_matrix(m2), params)
    duration = m1.segment_duration_s if isinstance(m1, ModalityFeatures) else 1.0
    return ModalityFeatures(Modality.FUSED, z, duration)


def baseline_fusion(m1, m2, mode: str, projection: np.ndarray | None = None) -> ModalityFeatures:
    """Attention-free fusion: element-wise sum/product or concat + projection.

    For ``concat``, pass a (2C, C) projection to map back to C; with
    ``projection=None`` the raw (T, 2C) concatenation is returned.
    """
    a, b = _as_matrix(m1), _as_matrix(m2)
    if a.shape != b.shape:
        raise DataError(f"baseline fusion needs equal shapes, got {a.shape} and {b.shape}")
    if mode == "sum":
        fused = a + b
    elif mode == "multiply":
        fused = a * b
    elif mode == "concat":
        fused = np.concatenate([a, b], axis=1)
        if projection is not None:
            if projection.shape[0] != fused.shape[1]:
                raise DataError("concat projection has wrong input width")
            fused = fused @ projection
    else:
        raise DataError(f"unknown fusion mode {mode!r}")
    duration = m1.segment_duration_s if isinstance(m1, ModalityFeatures) else 1.0
    return ModalityFeatures(Modality.FUSED, fused, duration)


# ---------------------------------------------------------------------------
# semantic node attention
# ---------------------------------------------------------------------------


def semantic_forward(nodes: np.ndarray, z: np.ndarray, params: AttentionParams):
    """Score word nodes against fused features. Returns (ne, alpha, cache).

    nodes: (T, N, C_w) word embeddings; z: (T, C) fused features.
    ne[t, n] = alpha[t, n] * (nodes[t, n] @ word_projection) with
    alpha[t, n] = relu(<nodes[t, n] @ word_projection, z[t] @ w_z>),
    optionally row-normalized over the node axis.
    """
    if nodes.shape[0] != z.shape[0]:
        raise DataError(f"nodes and z disagree on T: {nodes.shape[0]} != {z.shape[0]}")
    projected = nodes @ params.word_projection          # (T, N, C)
    z_proj = z @ params.w_z                             # (T, C)
    scores = np.einsum("tnc,tc->tn", projected, z_proj)
    alpha_raw = np.maximum(scores, 0.0)
    if params.normalize_alpha:
        alpha, row_sums = _normalize_rows(alpha_raw)
    else:
        alpha, row_sums = alpha_raw, None
    ne = alpha[..., None] * projected
    cache = {
        "nodes": nodes, "z": z, "projected": projected, "z_proj": z_proj,
        "scores": scores, "alpha_raw": alpha_raw, "alpha": alpha,
        "row_sums": row_sums, "normalize_alpha": params.normalize_alpha,
        "word_projection": params.word_projection, "w_z": params.w_z,
    }
    return ne, alpha, cache


def semantic_backward(d_ne: np.ndarray, cache: dict):
    """Returns (d_nodes, d_z, grads)."""
    projected, z_proj = cache["projected"], cache["z_proj"]
    alpha, scores = cache["alpha"], cache["scores"]
    d_alpha = np.einsum("tnc,tnc->tn", d_ne, projected)
    d_projected = alpha[..., None] * d_ne
    if cache["normalize_alpha"]:
        denom = cache["row_sums"] + _EPS
        d_alpha = d_alpha / denom - (
            (d_alpha * cache["alpha_raw"]).sum(axis=1, keepdims=True) / denom**2
        )
    d_scores = d_alpha * (scores > 0)
    d_projected += d_scores[..., None] * z_proj[:, None, :]
    d_zproj = np.einsum("tn,tnc->tc", d_scores, projected)
    d_nodes = d_projected @ cache["word_projection"].T
    d_wword = np.einsum("tnw,tnc->wc", cache["nodes"], d_projected)
    d_z = d_zproj @ cache["w_z"].T
    d_wz = cache["z"].T @ d_zproj
    return d_nodes, d_z, {"word_projection": d_wword, "w_z": d_wz}


def semantic_attention(nodes: NodeTensor, z, params: AttentionParams) -> NodeTensor:
    """Reweight word nodes by their agreement with the fused features.

    Word provenance passes through unchanged; pad cells stay all-zero
    because their embeddings are zero.
    """
    ne, _, _ = semantic_forward(
        np.asarray(nodes.data, dtype=np.float64), _as_matrix(z), params
    )
    return NodeTensor(data=ne, word_index=dict(nodes.word_index) if nodes.word_index else None)
