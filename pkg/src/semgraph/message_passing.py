"""Iterative neighborhood message passing over the (T, N) node grid.

Each layer applies, in order: a pointwise channel-mixing convolution with
ReLU, a per-channel depthwise convolution along time, a per-channel
depthwise convolution along the node axis, and a joint 2-D max pool over
(T, N) windows. Pooling selects one winning cell per window, the cell
holding the window's largest channel activation, and copies all C channel
values from that cell; ties break toward the lowest flat index t * N + n.
The flat index of every winner is recorded in a :class:`PoolTrace` so the
surviving cells can later be mapped back to their originating words.

Ragged window tails are padded with -inf sentinels, which can never win
against finite values, so every cell of the grid stays reachable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DataError, NodeTensor, PoolLayer, PoolTrace


@dataclass
class MPLayerParams:
    pointwise: np.ndarray      # (C, C), applied as x @ pointwise
    time_kernels: np.ndarray   # (C, t_k), one kernel per channel
    node_kernels: np.ndarray   # (C, n_k)

    def __post_init__(self):
        for name in ("time_kernels", "node_kernels"):
            width = getattr(self, name).shape[1]
            if width % 2 == 0:
                raise DataError(f"{name} width must be odd, got {width}")


@dataclass
class MessagePassingParams:
    layers: list[MPLayerParams]
    pool_window: tuple[int, int] = (2, 2)

    def __post_init__(self):
        if len(self.layers) < 1:
            raise DataError("message passing needs at least one layer")
        if self.pool_window[0] < 1 or self.pool_window[1] < 1:
            raise DataError("pool windows must be >= 1")

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    def matrices(self) -> dict[str, np.ndarray]:
        out = {}
        for i, layer in enumerate(self.layers):
            out[f"layer{i}.pointwise"] = layer.pointwise
            out[f"layer{i}.time_kernels"] = layer.time_kernels
            out[f"layer{i}.node_kernels"] = layer.node_kernels
        return out


def init_message_passing(
    channels: int,
    num_layers: int = 3,
    time_kernel: int = 3,
    node_kernel: int = 3,
    pool_window: tuple[int, int] = (2, 2),
    seed: int = 0,
) -> MessagePassingParams:
    rng = np.random.default_rng(np.random.SeedSequence((seed, 202)))
    layers = []
    # Near-identity start: identity pointwise and delta kernels plus small noise.
    # Message passing then begins as a gentle perturbation of each node's own
    # attended activation, which keeps the pooling argmax word-driven, and the
    # mixing is learned rather than imposed by random kernels.
    noise = 0.3
    for _ in range(num_layers):
        pointwise = np.eye(channels) + rng.uniform(
            -noise, noise, size=(channels, channels)
        ) / np.sqrt(channels)
        time_kernels = rng.uniform(-noise, noise, size=(channels, time_kernel)) / np.sqrt(
            time_kernel
        )
        time_kernels[:, time_kernel // 2] += 1.0
        node_kernels = rng.uniform(-noise, noise, size=(channels, node_kernel)) / np.sqrt(
            node_kernel
        )
        node_kernels[:, node_kernel // 2] += 1.0
        layers.append(
            MPLayerParams(
                pointwise=pointwise, time_kernels=time_kernels, node_kernels=node_kernels
            )
        )
    return MessagePassingParams(layers=layers, pool_window=tuple(pool_window))


# ---------------------------------------------------------------------------
# depthwise convolutions
# ---------------------------------------------------------------------------


def _shift(x: np.ndarray, offset: int, axis: int) -> np.ndarray:
    """Zero-filled shift: out[i] = x[i + offset] along `axis`."""
    if offset == 0:
        return x
    out = np.zeros_like(x)
    length = x.shape[axis]
    if abs(offset) >= length:
        return out
    src = [slice(None)] * x.ndim
    dst = [slice(None)] * x.ndim
    if offset > 0:
        dst[axis] = slice(0, length - offset)
        src[axis] = slice(offset, length)
    else:
        dst[axis] = slice(-offset, length)
        src[axis] = slice(0, length + offset)
    out[tuple(dst)] = x[tuple(src)]
    return out


def _depthwise_conv(x: np.ndarray, kernels: np.ndarray, axis: int) -> np.ndarray:
    width = kernels.shape[1]
    if width % 2 == 0:
        raise DataError(f"depthwise kernel width must be odd, got {width}")
    if width > x.shape[axis]:
        raise DataError(
            f"kernel width {width} exceeds axis length {x.shape[axis]} (dimension underflow)"
        )
    radius = (width - 1) // 2
    out = np.zeros_like(x)
    for j in range(width):
        out += kernels[:, j] * _shift(x, j - radius, axis)
    return out


def _depthwise_conv_backward(d_out: np.ndarray, x: np.ndarray, kernels: np.ndarray, axis: int):
    width = kernels.shape[1]
    radius = (width - 1) // 2
    d_x = np.zeros_like(x)
    d_k = np.zeros_like(kernels)
    sum_axes = (0, 1)
    for j in range(width):
        d_x += kernels[:, j] * _shift(d_out, radius - j, axis)
        d_k[:, j] = (d_out * _shift(x, j - radius, axis)).sum(axis=sum_axes)
    return d_x, d_k


def depthwise_time_conv(x, kernels: np.ndarray):
    """Per-channel 1-D convolution along T with zero (same) padding."""
    data = x.data if isinstance(x, NodeTensor) else np.asarray(x, dtype=np.float64)
    out = _depthwise_conv(data, kernels, axis=0)
    if isinstance(x, NodeTensor):
        return NodeTensor(out, dict(x.word_index) if x.word_index else None)
    return out


def depthwise_node_conv(x, kernels: np.ndarray):
    """Per-channel 1-D convolution along N with zero (same) padding."""
    data = x.data if isinstance(x, NodeTensor) else np.asarray(x, dtype=np.float64)
    out = _depthwise_conv(data, kernels, axis=1)
    if isinstance(x, NodeTensor):
        return NodeTensor(out, dict(x.word_index) if x.word_index else None)
    return out


# ---------------------------------------------------------------------------
# pooling with argmax provenance
# ---------------------------------------------------------------------------


def _pool_forward(x: np.ndarray, window: tuple[int, int]):
    """Joint 2-D max pool selecting one winner cell per window.

    Returns (pooled, winners_t, winners_n, flat_argmax).
    """
    t_len, n_len, _ = x.shape
    w_t, w_n = window
    t_out = -(-t_len // w_t)  # ceil division
    n_out = -(-n_len // w_n)
    scores = x.max(axis=2)
    padded = np.full((t_out * w_t, n_out * w_n), -np.inf)
    padded[:t_len, :n_len] = scores
    # (t_out, n_out, w_t * w_n): within-window order is row-major over (dt, dn),
    # which equals ascending flat index order, so argmax ties break low.
    windows = padded.reshape(t_out, w_t, n_out, w_n).transpose(0, 2, 1, 3)
    local = windows.reshape(t_out, n_out, w_t * w_n).argmax(axis=2)
    d_t, d_n = np.divmod(local, w_n)
    winners_t = np.arange(t_out)[:, None] * w_t + d_t
    winners_n = np.arange(n_out)[None, :] * w_n + d_n
    pooled = x[winners_t, winners_n, :]
    flat = winners_t * n_len + winners_n
    return pooled, winners_t, winners_n, flat.astype(np.int64)


def _pool_backward(d_pooled: np.ndarray, winners_t, winners_n, input_shape):
    d_x = np.zeros(input_shape)
    np.add.at(d_x, (winners_t.ravel(), winners_n.ravel()), d_pooled.reshape(-1, input_shape[2]))
    return d_x


# ---------------------------------------------------------------------------
# full stack
# ---------------------------------------------------------------------------


def mp_core_forward(x: np.ndarray, params: MessagePassingParams):
    """Array-level forward. Returns (out, trace_layers, caches, winner_chain)."""
    trace_layers: list[PoolLayer] = []
    caches = []
    winner_chain = []
    for layer_id, layer in enumerate(params.layers):
        t_len, n_len, _ = x.shape
        if layer.time_kernels.shape[1] > t_len or layer.node_kernels.shape[1] > n_len:
            raise DataError(
                f"dimension underflow at layer {layer_id}: grid {(t_len, n_len)} is "
                f"smaller than the kernel widths"
            )
        pre = x @ layer.pointwise
        h1 = np.maximum(pre, 0.0)
        h2 = _depthwise_conv(h1, layer.time_kernels, axis=0)
        h3 = _depthwise_conv(h2, layer.node_kernels, axis=1)
        pooled, win_t, win_n, flat = _pool_forward(h3, params.pool_window)
        trace_layers.append(
            PoolLayer(
                input_shape=(t_len, n_len),
                pooled_shape=pooled.shape[:2],
                argmax=flat,
            )
        )
        caches.append(
            {"x": x, "pre": pre, "h1": h1, "h2": h2, "h3": h3,
             "win_t": win_t, "win_n": win_n, "layer": layer}
        )
        winner_chain.append((win_t, win_n))
        x = pooled
    return x, trace_layers, caches, winner_chain


def mp_core_backward(d_out: np.ndarray, caches: list[dict]):
    """Backward through every layer. Returns (d_input, grads dict)."""
    grads: dict[str, np.ndarray] = {}
    d_x = d_out
    for layer_id in reversed(range(len(caches))):
        cache = caches[layer_id]
        layer = cache["layer"]
        d_h3 = _pool_backward(d_x, cache["win_t"], cache["win_n"], cache["h3"].shape)
        d_h2, d_kn = _depthwise_conv_backward(d_h3, cache["h2"], layer.node_kernels, axis=1)
        d_h1, d_kt = _depthwise_conv_backward(d_h2, cache["h1"], layer.time_kernels, axis=0)
        d_pre = d_h1 * (cache["pre"] > 0)
        grads[f"layer{layer_id}.pointwise"] = np.einsum("tnc,tnd->cd", cache["x"], d_pre)
        grads[f"layer{layer_id}.time_kernels"] = d_kt
        grads[f"layer{layer_id}.node_kernels"] = d_kn
        d_x = d_pre @ layer.pointwise.T
    return d_x, grads


def _propagate_word_index(
    word_index: dict[tuple[int, int], str] | None, winner_chain
) -> dict[tuple[int, int], str] | None:
    """Pull each pooled cell's word through the chain of winning cells."""
    if word_index is None:
        return None
    t0 = max(t for t, _ in word_index) + 1
    n0 = max(n for _, n in word_index) + 1
    coords = np.empty((t0, n0, 2), dtype=np.int64)
    coords[..., 0] = np.arange(t0)[:, None]
    coords[..., 1] = np.arange(n0)[None, :]
    for win_t, win_n in winner_chain:
        coords = coords[win_t, win_n]
    out: dict[tuple[int, int], str] = {}
    t_len, n_len = coords.shape[:2]
    for t in range(t_len):
        for n in range(n_len):
            orig = (int(coords[t, n, 0]), int(coords[t, n, 1]))
            out[(t, n)] = word_index[orig]
    return out


def mp_forward(ne: NodeTensor, params: MessagePassingParams) -> tuple[NodeTensor, PoolTrace]:
    """Run all layers, recording every pool argmax into the returned trace."""
    out, trace_layers, _, winner_chain = mp_core_forward(
        np.asarray(ne.data, dtype=np.float64), params
    )
    trace = PoolTrace(layers=trace_layers)
    trace.validate()
    word_index = _propagate_word_index(ne.word_index, winner_chain)
    return NodeTensor(data=out, word_index=word_index), trace
