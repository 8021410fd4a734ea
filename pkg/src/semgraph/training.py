"""Self-supervised training: readout, augmentation, objectives, SGD loop.

The readout reduces a refined node tensor to a fixed-width embedding with
one pointwise convolution (ReLU) and a global max over the remaining grid.
Positives come from feature-space augmentation of the video stream,
negatives from other items in the batch. The margin triplet objective is

    loss = -log( e^{s+} / (e^{s+} + e^{s-}) )
    s+   = <f, f+> - margin          s- = <f, f->

optimized with SGD (momentum, weight decay) under a triangular cyclical
learning rate. Every gradient is computed in closed form; finite
differences of :func:`batch_loss` provide an independent check.

All randomness (shuffling, augmentation, negative picks) derives from the
config seed through fixed integer tuples, so a run is reproducible to the
byte.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .assignment import aggregate_directed, aggregate_undirected, assign_semantics
from .core import (
    Corpus,
    DataError,
    EmbeddingTable,
    GraphEmbedding,
    ModalityFeatures,
    NodeTensor,
    NumericError,
    Role,
    SemanticGraph,
    VideoRecord,
    as_vector,
    atomic_write_bytes,
    atomic_write_text,
    dump_json,
    embed_tokens,
)
from .fusion import (
    AttentionParams,
    cross_modal_backward,
    cross_modal_forward,
    init_attention_params,
    semantic_backward,
    semantic_forward,
)
from .graphs import build_directed_graph, build_undirected_graph
from .message_passing import (
    MessagePassingParams,
    MPLayerParams,
    init_message_passing,
    mp_core_backward,
    mp_core_forward,
    mp_forward,
)

LOSS_KINDS = ("triplet_cosine", "triplet_angular", "nce", "cross_modal_nce")


@dataclass(frozen=True)
class AugmentConfig:
    scale_jitter: float = 0.1       # per-channel factor in [1 - a, 1 + a]
    noise_sigma: float = 0.05
    channel_drop_rate: float = 0.1
    temporal_jitter: int = 1        # circular shift within +/- this many segments

    def validate(self) -> None:
        if not 0.0 <= self.scale_jitter < 1.0:
            raise DataError("scale_jitter must lie in [0, 1)")
        if self.noise_sigma < 0:
            raise DataError("noise_sigma must be non-negative")
        if not 0.0 <= self.channel_drop_rate <= 1.0:
            raise DataError("channel_drop_rate must lie in [0, 1]")
        if self.temporal_jitter < 0:
            raise DataError("temporal_jitter must be non-negative")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 8
    momentum: float = 0.9
    weight_decay: float = 1e-7
    base_lr: float = 0.01
    max_lr: float = 0.1
    cycle_length: int = 8           # triangular period, in optimizer steps
    margin: float = 0.2
    loss_kind: str = "triplet_angular"
    seed: int = 7
    embed_dim: int = 32
    word_dim: int = 32
    fusion_mode: str = "concat"
    normalize_alpha: bool = False
    mp_layers: int = 3
    time_kernel: int = 3
    node_kernel: int = 3
    pool_window: tuple[int, int] = (2, 2)
    augment: AugmentConfig = field(default_factory=AugmentConfig)

    def validate(self) -> None:
        if self.epochs < 1:
            raise DataError("epochs must be >= 1")
        if self.batch_size < 2:
            raise DataError("batch_size must be >= 2 (negatives come from the batch)")
        if not 0.0 <= self.momentum < 1.0:
            raise DataError("momentum must lie in [0, 1)")
        if self.weight_decay < 0:
            raise DataError("weight_decay must be non-negative")
        if not 0.0 < self.base_lr <= self.max_lr:
            raise DataError("need 0 < base_lr <= max_lr")
        if self.cycle_length < 2:
            raise DataError("cycle_length must be >= 2 steps")
        if self.margin < 0:
            raise DataError("margin must be non-negative")
        if self.loss_kind not in LOSS_KINDS:
            raise DataError(f"unknown loss_kind {self.loss_kind!r}")
        if self.seed < 0:
            raise DataError("seed must be non-negative")
        if self.embed_dim < 1 or self.word_dim < 1:
            raise DataError("embed_dim and word_dim must be >= 1")
        self.augment.validate()


def _rng(*entropy: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy))


# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------


@dataclass
class PipelineParams:
    attention: AttentionParams
    message_passing: MessagePassingParams
    readout_weights: np.ndarray     # (C, D)

    def matrices(self) -> dict[str, np.ndarray]:
        out = {f"attention.{k}": v for k, v in self.attention.matrices().items()}
        out.update({f"mp.{k}": v for k, v in self.message_passing.matrices().items()})
        out["readout.weights"] = self.readout_weights
        return out


def init_pipeline_params(channels: int, config: TrainConfig) -> PipelineParams:
    config.validate()
    attention = init_attention_params(
        channels,
        config.word_dim,
        config.seed,
        fusion_mode=config.fusion_mode,
        normalize_alpha=config.normalize_alpha,
    )
    mp = init_message_passing(
        channels,
        num_layers=config.mp_layers,
        time_kernel=config.time_kernel,
        node_kernel=config.node_kernel,
        pool_window=tuple(config.pool_window),
        seed=config.seed,
    )
    rng = _rng(config.seed, 303)
    bound = np.sqrt(6.0 / channels)  # He-style, matches the conv stack
    readout = rng.uniform(-bound, bound, size=(channels, config.embed_dim))
    return PipelineParams(attention=attention, message_passing=mp, readout_weights=readout)


# ---------------------------------------------------------------------------
# readout
# ---------------------------------------------------------------------------


def _readout_forward(x: np.ndarray, w: np.ndarray):
    pre = x @ w
    y = np.maximum(pre, 0.0)
    flat = y.reshape(-1, y.shape[-1])
    arg = flat.argmax(axis=0)           # first occurrence wins ties
    g = flat[arg, np.arange(flat.shape[1])]
    return g, {"x": x, "pre": pre, "arg": arg, "w": w}


def _readout_backward(d_g: np.ndarray, cache: dict):
    pre, arg, w, x = cache["pre"], cache["arg"], cache["w"], cache["x"]
    d_flat = np.zeros((pre.shape[0] * pre.shape[1], pre.shape[2]))
    d_flat[arg, np.arange(arg.size)] = d_g
    d_pre = d_flat.reshape(pre.shape) * (pre > 0)
    d_w = np.einsum("tnc,tnd->cd", x, d_pre)
    d_x = d_pre @ w.T
    return d_x, d_w


def readout(ne_hat: NodeTensor, weights: np.ndarray) -> GraphEmbedding:
    """Pointwise conv + ReLU, then a global max over the (T, N) grid."""
    g, _ = _readout_forward(np.asarray(ne_hat.data, dtype=np.float64), weights)
    return GraphEmbedding(vector=g)


# ---------------------------------------------------------------------------
# augmentation
# ---------------------------------------------------------------------------


def _augment_array(data: np.ndarray, cfg: AugmentConfig, seed: int) -> np.ndarray:
    rng = _rng(seed, 77)
    channels = data.shape[1]
    out = data.copy()
    scale = rng.uniform(1.0 - cfg.scale_jitter, 1.0 + cfg.scale_jitter, size=channels)
    out = out * scale
    out = out + cfg.noise_sigma * rng.standard_normal(out.shape)
    drop = rng.random(channels) < cfg.channel_drop_rate
    out[:, drop] = 0.0
    shift = int(rng.integers(-cfg.temporal_jitter, cfg.temporal_jitter + 1))
    return np.roll(out, shift, axis=0)


def augment_features(video: ModalityFeatures, cfg: AugmentConfig, seed: int) -> ModalityFeatures:
    """Feature-space positive-sample augmentation, deterministic in `seed`.

    Applied in order: per-channel scale jitter, additive Gaussian noise,
    random channel dropout, circular temporal jitter. With all magnitudes
    zero this is the identity.
    """
    cfg.validate()
    out = _augment_array(np.asarray(video.data, dtype=np.float64), cfg, seed)
    return ModalityFeatures(video.modality, out, video.segment_duration_s)


# ---------------------------------------------------------------------------
# objectives
# ---------------------------------------------------------------------------


def _sigmoid(u: float) -> float:
    return 0.5 * (1.0 + np.tanh(0.5 * u))


def _triplet_components(f_i, f_pos, f_neg, margin: float):
    s_plus = float(f_i @ f_pos) - margin
    s_minus = float(f_i @ f_neg)
    u = s_minus - s_plus
    loss = float(np.logaddexp(0.0, u))
    w = _sigmoid(u)
    return loss, w * (f_neg - f_pos), -w * f_i, w * f_i


def triplet_loss(f_i, f_pos, f_neg, margin: float = 0.0) -> float:
    """Margin softmax triplet objective over raw (un-normalized) embeddings."""
    a, p, n = as_vector(f_i), as_vector(f_pos), as_vector(f_neg)
    if not (a.shape == p.shape == n.shape):
        raise DataError("triplet embeddings must share dimensions")
    loss, _, _, _ = _triplet_components(a, p, n, margin)
    return loss


def _nce_components(anchors: np.ndarray, positives: np.ndarray):
    b = anchors.shape[0]
    scores = anchors @ positives.T
    peak = scores.max(axis=1, keepdims=True)
    lse = peak[:, 0] + np.log(np.exp(scores - peak).sum(axis=1))
    loss = float(np.mean(lse - np.diag(scores)))
    softmax = np.exp(scores - lse[:, None])
    d_scores = (softmax - np.eye(b)) / b
    return loss, d_scores @ positives, d_scores.T @ anchors


def nce_loss(anchors, positives) -> float:
    """Batch InfoNCE with dot-product similarity and in-batch negatives."""
    a = np.stack([as_vector(x) for x in anchors])
    p = np.stack([as_vector(x) for x in positives])
    if a.shape != p.shape:
        raise DataError("anchor and positive batches must align")
    if a.shape[0] < 2:
        raise DataError("nce needs a batch of at least 2")
    loss, _, _ = _nce_components(a, p)
    return loss


def cross_modal_nce(video_embeds, audio_embeds) -> float:
    """Symmetrized NCE between video+text and audio+text embeddings."""
    v = np.stack([as_vector(x) for x in video_embeds])
    a = np.stack([as_vector(x) for x in audio_embeds])
    if v.shape != a.shape:
        raise DataError("paired embedding lists must align")
    if v.shape[0] < 2:
        raise DataError("nce needs a batch of at least 2")
    loss_va, _, _ = _nce_components(v, a)
    loss_av, _, _ = _nce_components(a, v)
    return 0.5 * (loss_va + loss_av)


def _normalize_with_grad(g: np.ndarray):
    norm = max(float(np.linalg.norm(g)), 1e-12)
    g_hat = g / norm

    def backward(d_hat: np.ndarray) -> np.ndarray:
        return (d_hat - g_hat * float(g_hat @ d_hat)) / norm

    return g_hat, backward


# ---------------------------------------------------------------------------
# full pipeline forward / backward
# ---------------------------------------------------------------------------


def _forward_full(params: PipelineParams, m_v, m_a, nodes):
    z, f_cache = cross_modal_forward(m_v, m_a, params.attention)
    ne, _, s_cache = semantic_forward(nodes, z, params.attention)
    out, _, mp_caches, _ = mp_core_forward(ne, params.message_passing)
    g, r_cache = _readout_forward(out, params.readout_weights)
    return g, {"fusion": f_cache, "semantic": s_cache, "mp": mp_caches, "readout": r_cache}


def _forward_semantic_only(params: PipelineParams, z, nodes):
    """Restricted pipeline for the cross-modal objective: z is a raw modality."""
    ne, _, s_cache = semantic_forward(nodes, z, params.attention)
    out, _, mp_caches, _ = mp_core_forward(ne, params.message_passing)
    g, r_cache = _readout_forward(out, params.readout_weights)
    return g, {"fusion": None, "semantic": s_cache, "mp": mp_caches, "readout": r_cache}


def _zero_grads(params: PipelineParams) -> dict[str, np.ndarray]:
    return {name: np.zeros_like(mat) for name, mat in params.matrices().items()}


def _accumulate_backward(d_g: np.ndarray, cache: dict, params: PipelineParams, grads: dict):
    d_out, d_readout = _readout_backward(d_g, cache["readout"])
    grads["readout.weights"] += d_readout
    d_ne, mp_grads = mp_core_backward(d_out, cache["mp"])
    for name, g in mp_grads.items():
        grads[f"mp.{name}"] += g
    _, d_z, sem_grads = semantic_backward(d_ne, cache["semantic"])
    for name, g in sem_grads.items():
        grads[f"attention.{name}"] += g
    if cache["fusion"] is not None:
        _, _, fus_grads = cross_modal_backward(d_z, cache["fusion"])
        for name, g in fus_grads.items():
            grads[f"attention.{name}"] += g


def forward_video(params: PipelineParams, m_v, m_a, nodes) -> GraphEmbedding:
    """Embedding of one video through the full fused pipeline."""
    g, _ = _forward_full(
        params,
        np.asarray(m_v, dtype=np.float64),
        np.asarray(m_a, dtype=np.float64),
        np.asarray(nodes, dtype=np.float64),
    )
    return GraphEmbedding(vector=g)


# ---------------------------------------------------------------------------
# batch objective
# ---------------------------------------------------------------------------


def _negative_indices(batch_size: int, rng: np.random.Generator) -> list[int]:
    picks = []
    for i in range(batch_size):
        j = int(rng.integers(0, batch_size - 1))
        picks.append(j if j < i else j + 1)
    return picks


def batch_loss_and_grads(
    params: PipelineParams,
    batch_inputs: list[tuple[np.ndarray, np.ndarray, np.ndarray]],
    config: TrainConfig,
    epoch: int = 0,
    step: int = 0,
    want_grads: bool = True,
):
    """Mean batch loss and parameter gradients for the configured objective.

    `batch_inputs` holds (video, audio, node_embeddings) float64 triples.
    Augmentation and negative picks are seeded from (config.seed, epoch,
    step), so repeated calls with equal arguments agree exactly.
    """
    b = len(batch_inputs)
    if b < 2:
        raise DataError("a batch needs at least 2 items")
    kind = config.loss_kind
    grads = _zero_grads(params) if want_grads else None

    if kind in ("triplet_cosine", "triplet_angular"):
        anchors, a_caches, positives, p_caches = [], [], [], []
        for i, (m_v, m_a, nodes) in enumerate(batch_inputs):
            g, cache = _forward_full(params, m_v, m_a, nodes)
            anchors.append(g)
            a_caches.append(cache)
            aug_seed = int(_rng(config.seed, 3, epoch, step, i).integers(0, 2**63 - 1))
            m_v_aug = _augment_array(m_v, config.augment, aug_seed)
            g_pos, cache_pos = _forward_full(params, m_v_aug, m_a, nodes)
            positives.append(g_pos)
            p_caches.append(cache_pos)
        neg_rng = _rng(config.seed, 4, epoch, step)
        neg_idx = _negative_indices(b, neg_rng)

        if kind == "triplet_angular":
            anchor_vecs, anchor_backs = zip(*[_normalize_with_grad(g) for g in anchors])
            pos_vecs, pos_backs = zip(*[_normalize_with_grad(g) for g in positives])
        else:
            anchor_vecs, pos_vecs = anchors, positives
            anchor_backs = pos_backs = None

        d_anchor = [np.zeros_like(g) for g in anchors]
        d_pos = [np.zeros_like(g) for g in positives]
        total = 0.0
        for i in range(b):
            loss_i, d_a, d_p, d_n = _triplet_components(
                anchor_vecs[i], pos_vecs[i], anchor_vecs[neg_idx[i]], config.margin
            )
            total += loss_i / b
            d_anchor[i] += d_a / b
            d_pos[i] += d_p / b
            d_anchor[neg_idx[i]] += d_n / b
        loss = total
        if want_grads:
            for i in range(b):
                d_a = anchor_backs[i](d_anchor[i]) if anchor_backs else d_anchor[i]
                d_p = pos_backs[i](d_pos[i]) if pos_backs else d_pos[i]
                _accumulate_backward(d_a, a_caches[i], params, grads)
                _accumulate_backward(d_p, p_caches[i], params, grads)

    elif kind == "nce":
        anchors, a_caches, positives, p_caches = [], [], [], []
        for i, (m_v, m_a, nodes) in enumerate(batch_inputs):
            g, cache = _forward_full(params, m_v, m_a, nodes)
            anchors.append(g)
            a_caches.append(cache)
            aug_seed = int(_rng(config.seed, 3, epoch, step, i).integers(0, 2**63 - 1))
            g_pos, cache_pos = _forward_full(
                params, _augment_array(m_v, config.augment, aug_seed), m_a, nodes
            )
            positives.append(g_pos)
            p_caches.append(cache_pos)
        loss, d_a_mat, d_p_mat = _nce_components(np.stack(anchors), np.stack(positives))
        if want_grads:
            for i in range(b):
                _accumulate_backward(d_a_mat[i], a_caches[i], params, grads)
                _accumulate_backward(d_p_mat[i], p_caches[i], params, grads)

    elif kind == "cross_modal_nce":
        v_embeds, v_caches, a_embeds, a_caches = [], [], [], []
        for m_v, m_a, nodes in batch_inputs:
            g_v, c_v = _forward_semantic_only(params, m_v, nodes)
            g_a, c_a = _forward_semantic_only(params, m_a, nodes)
            v_embeds.append(g_v)
            v_caches.append(c_v)
            a_embeds.append(g_a)
            a_caches.append(c_a)
        v_mat, a_mat = np.stack(v_embeds), np.stack(a_embeds)
        loss_va, d_v1, d_a1 = _nce_components(v_mat, a_mat)
        loss_av, d_a2, d_v2 = _nce_components(a_mat, v_mat)
        loss = 0.5 * (loss_va + loss_av)
        if want_grads:
            for i in range(b):
                _accumulate_backward(0.5 * (d_v1[i] + d_v2[i]), v_caches[i], params, grads)
                _accumulate_backward(0.5 * (d_a1[i] + d_a2[i]), a_caches[i], params, grads)

    else:
        raise DataError(f"unknown loss_kind {kind!r}")

    if not np.isfinite(loss):
        raise NumericError(f"non-finite loss {loss!r} (epoch {epoch}, step {step})")
    return loss, grads


def batch_loss(params, batch_inputs, config, epoch: int = 0, step: int = 0) -> float:
    return batch_loss_and_grads(params, batch_inputs, config, epoch, step, want_grads=False)[0]


# ---------------------------------------------------------------------------
# schedule and loop
# ---------------------------------------------------------------------------


def cyclical_lr(step: int, base_lr: float, max_lr: float, cycle_length: int) -> float:
    """Triangular wave: base at step 0, peak at half a cycle, period `cycle_length`."""
    half = cycle_length / 2.0
    pos = step % cycle_length
    frac = pos / half if pos <= half else (cycle_length - pos) / half
    return base_lr + (max_lr - base_lr) * frac


@dataclass
class TrainResult:
    params: PipelineParams
    velocity: dict[str, np.ndarray]
    metrics: list[dict]
    config: TrainConfig
    state: dict


def prepare_inputs(corpus: Corpus, table: EmbeddingTable) -> list[tuple]:
    """Per-video float64 (video, audio, node_embedding) triples."""
    out = []
    for rec in corpus.videos:
        out.append(
            (
                np.asarray(rec.video.data, dtype=np.float64),
                np.asarray(rec.audio.data, dtype=np.float64),
                embed_tokens(rec.timeline, table).data,
            )
        )
    return out


def train_loop(
    corpus: Corpus, config: TrainConfig, table: EmbeddingTable | None = None
) -> TrainResult:
    """Optimize all pipeline parameters on the corpus; fully seed-deterministic."""
    config.validate()
    if config.batch_size > len(corpus.videos):
        raise DataError(
            f"batch_size {config.batch_size} exceeds corpus size {len(corpus.videos)}"
        )
    table = table or EmbeddingTable.empty(config.word_dim)
    if table.dim != config.word_dim:
        raise DataError(
            f"embedding table width {table.dim} != configured word_dim {config.word_dim}"
        )
    inputs = prepare_inputs(corpus, table)
    params = init_pipeline_params(corpus.channels, config)
    matrices = params.matrices()
    velocity = {name: np.zeros_like(mat) for name, mat in matrices.items()}

    metrics: list[dict] = []
    global_step = 0
    for epoch in range(config.epochs):
        order = _rng(config.seed, 5, epoch).permutation(len(inputs))
        step_losses: list[float] = []
        first_lr: float | None = None
        for step_in_epoch, start in enumerate(range(0, len(order), config.batch_size)):
            batch_ids = order[start : start + config.batch_size]
            if len(batch_ids) < 2:
                continue  # a trailing singleton has no in-batch negative
            lr = cyclical_lr(global_step, config.base_lr, config.max_lr, config.cycle_length)
            if first_lr is None:
                first_lr = lr
            batch = [inputs[i] for i in batch_ids]
            loss, grads = batch_loss_and_grads(params, batch, config, epoch, step_in_epoch)
            for name, mat in matrices.items():
                g = grads[name] + config.weight_decay * mat
                velocity[name] = config.momentum * velocity[name] + g
                mat -= lr * velocity[name]
            step_losses.append(loss)
            global_step += 1
        metrics.append(
            {
                "epoch": epoch,
                "loss": float(np.mean(step_losses)) if step_losses else float("nan"),
                "lr": first_lr if first_lr is not None else config.base_lr,
            }
        )
    return TrainResult(
        params=params,
        velocity=velocity,
        metrics=metrics,
        config=config,
        state={"epochs_done": config.epochs, "global_step": global_step, "seed": config.seed},
    )


def embed_corpus(
    corpus: Corpus, params: PipelineParams, table: EmbeddingTable
) -> list[GraphEmbedding]:
    """Plain (un-augmented) embeddings of every corpus video."""
    return [
        GraphEmbedding(vector=_forward_full(params, *triple)[0])
        for triple in prepare_inputs(corpus, table)
    ]


def build_video_graph(
    record: VideoRecord,
    params: PipelineParams,
    table: EmbeddingTable,
    directed: bool = False,
    tau: float = 0.5,
    time_window: int = 2,
    lexicon: dict[str, Role] | None = None,
) -> SemanticGraph:
    """Forward one video and interpret the surviving nodes as a graph."""
    from .fusion import cross_modal_attention, semantic_attention

    nodes = embed_tokens(record.timeline, table)
    z = cross_modal_attention(record.video, record.audio, params.attention)
    ne = semantic_attention(nodes, z, params.attention)
    ne_hat, trace = mp_forward(ne, params.message_passing)
    selected = assign_semantics(record.timeline, ne_hat, trace)
    if directed:
        return build_directed_graph(
            aggregate_directed(selected), lexicon, tau=tau, time_window=time_window
        )
    return build_undirected_graph(aggregate_undirected(selected), tau=tau)


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------


def _blob_name(key: str) -> str:
    return key.replace(".", "__") + ".f32"


def save_checkpoint(result: TrainResult, directory: str | Path) -> None:
    """Write parameter and momentum blobs plus manifest and config snapshot."""
    directory = Path(directory)
    (directory / "params").mkdir(parents=True, exist_ok=True)
    (directory / "velocity").mkdir(parents=True, exist_ok=True)
    manifest = {"format": "semgraph-checkpoint-v1", "matrices": {}, "velocity": {},
                "state": result.state}
    for name, mat in result.params.matrices().items():
        fname = _blob_name(name)
        atomic_write_bytes(directory / "params" / fname, mat.astype("<f4").tobytes())
        manifest["matrices"][name] = {"file": f"params/{fname}", "shape": list(mat.shape)}
    for name, mat in result.velocity.items():
        fname = _blob_name(name)
        atomic_write_bytes(directory / "velocity" / fname, mat.astype("<f4").tobytes())
        manifest["velocity"][name] = {"file": f"velocity/{fname}", "shape": list(mat.shape)}
    atomic_write_text(directory / "manifest.json", dump_json(manifest))
    cfg = asdict(result.config)
    cfg["pool_window"] = list(result.config.pool_window)
    atomic_write_text(directory / "config.json", dump_json(cfg))


def _load_blob(directory: Path, entry: dict) -> np.ndarray:
    path = directory / entry["file"]
    if not path.exists():
        raise DataError(f"missing checkpoint blob {path}")
    blob = np.frombuffer(path.read_bytes(), dtype="<f4")
    expected = int(np.prod(entry["shape"]))
    if blob.size != expected:
        raise DataError(f"checkpoint blob {path} holds {blob.size} values, expected {expected}")
    return blob.reshape(entry["shape"]).astype(np.float64)


def load_checkpoint(directory: str | Path) -> TrainResult:
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    config_path = directory / "config.json"
    if not manifest_path.exists() or not config_path.exists():
        raise DataError(f"{directory} is not a checkpoint directory")
    manifest = json.loads(manifest_path.read_text())
    raw_cfg = json.loads(config_path.read_text())
    raw_cfg["pool_window"] = tuple(raw_cfg["pool_window"])
    raw_cfg["augment"] = AugmentConfig(**raw_cfg["augment"])
    config = TrainConfig(**raw_cfg)

    mats = {name: _load_blob(directory, entry) for name, entry in manifest["matrices"].items()}
    attn_keys = [k.split(".", 1)[1] for k in mats if k.startswith("attention.")]
    attention = AttentionParams(
        **{k: mats[f"attention.{k}"] for k in attn_keys},
        fusion_mode=config.fusion_mode,
        normalize_alpha=config.normalize_alpha,
    )
    layers = []
    for i in range(config.mp_layers):
        layers.append(
            MPLayerParams(
                pointwise=mats[f"mp.layer{i}.pointwise"],
                time_kernels=mats[f"mp.layer{i}.time_kernels"],
                node_kernels=mats[f"mp.layer{i}.node_kernels"],
            )
        )
    params = PipelineParams(
        attention=attention,
        message_passing=MessagePassingParams(
            layers=layers, pool_window=tuple(config.pool_window)
        ),
        readout_weights=mats["readout.weights"],
    )
    velocity = {
        name: _load_blob(directory, entry) for name, entry in manifest["velocity"].items()
    }
    return TrainResult(
        params=params,
        velocity=velocity,
        metrics=[],
        config=config,
        state=manifest.get("state", {}),
    )
