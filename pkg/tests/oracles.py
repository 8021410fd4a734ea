"""Independent brute-force oracles: explicit loops, no shared code paths."""

import numpy as np


def relu(x):
    return np.maximum(x, 0.0)


def loop_branch_attention(mq, mkv, wq, wk, wv, wout):
    """Single attention branch with explicit summation loops."""
    t_len, c_in = mq.shape
    c_proj = wq.shape[1]
    q = np.zeros((t_len, c_proj))
    k = np.zeros((t_len, c_proj))
    v = np.zeros((t_len, c_proj))
    for t in range(t_len):
        for j in range(c_proj):
            q[t, j] = sum(mq[t, i] * wq[i, j] for i in range(c_in))
            k[t, j] = sum(mkv[t, i] * wk[i, j] for i in range(c_in))
            v[t, j] = sum(mkv[t, i] * wv[i, j] for i in range(c_in))
    alpha = np.zeros((t_len, t_len))
    for a in range(t_len):
        for b in range(t_len):
            alpha[a, b] = max(0.0, sum(q[a, j] * k[b, j] for j in range(c_proj)))
    attended = np.zeros((t_len, c_proj))
    for t in range(t_len):
        for j in range(c_proj):
            attended[t, j] = sum(alpha[t, b] * v[b, j] for b in range(t_len))
    c_out = wout.shape[1]
    z = np.zeros((t_len, c_out))
    for t in range(t_len):
        for j in range(c_out):
            z[t, j] = max(0.0, sum(attended[t, i] * wout[i, j] for i in range(c_proj)))
    return z, alpha


def loop_semantic_attention(nodes, z, w_word, w_z):
    """Per-node semantic attention with explicit loops."""
    t_len, n_len, c_w = nodes.shape
    c = w_word.shape[1]
    ne = np.zeros((t_len, n_len, c))
    alpha = np.zeros((t_len, n_len))
    for t in range(t_len):
        z_proj = [sum(z[t, i] * w_z[i, j] for i in range(z.shape[1])) for j in range(c)]
        for n in range(n_len):
            proj = [sum(nodes[t, n, i] * w_word[i, j] for i in range(c_w)) for j in range(c)]
            score = sum(proj[j] * z_proj[j] for j in range(c))
            alpha[t, n] = max(0.0, score)
            for j in range(c):
                ne[t, n, j] = alpha[t, n] * proj[j]
    return ne, alpha


def loop_depthwise(x, kernels, axis):
    """Per-channel same-padded 1-D convolution by explicit summation."""
    t_len, n_len, c_len = x.shape
    width = kernels.shape[1]
    radius = (width - 1) // 2
    out = np.zeros_like(x)
    for t in range(t_len):
        for n in range(n_len):
            for c in range(c_len):
                acc = 0.0
                for j in range(width):
                    if axis == 0:
                        src = t + j - radius
                        val = x[src, n, c] if 0 <= src < t_len else 0.0
                    else:
                        src = n + j - radius
                        val = x[t, src, c] if 0 <= src < n_len else 0.0
                    acc += kernels[c, j] * val
                out[t, n, c] = acc
    return out


def loop_pool(x, window):
    """Single-winner 2-D max pool: winner holds the window's largest channel
    value; ties break toward the lowest flat index t * N + n."""
    t_len, n_len, _ = x.shape
    w_t, w_n = window
    t_out = -(-t_len // w_t)
    n_out = -(-n_len // w_n)
    pooled = np.zeros((t_out, n_out, x.shape[2]))
    winners = {}
    for ti in range(t_out):
        for ni in range(n_out):
            best_cell, best_score = None, -np.inf
            for t in range(ti * w_t, min((ti + 1) * w_t, t_len)):
                for n in range(ni * w_n, min((ni + 1) * w_n, n_len)):
                    score = max(x[t, n, c] for c in range(x.shape[2]))
                    if score > best_score:
                        best_score, best_cell = score, (t, n)
            pooled[ti, ni, :] = x[best_cell[0], best_cell[1], :]
            winners[(ti, ni)] = best_cell
    return pooled, winners


def loop_mp_forward(x, layers, window):
    """Explicit replay of the full message-passing stack.

    Returns (final tensor, per-layer winner dicts, surviving original cells).
    """
    winner_maps = []
    for layer in layers:
        t_len, n_len, c_len = x.shape
        h1 = np.zeros_like(x)
        for t in range(t_len):
            for n in range(n_len):
                for j in range(c_len):
                    h1[t, n, j] = max(
                        0.0, sum(x[t, n, i] * layer.pointwise[i, j] for i in range(c_len))
                    )
        h2 = loop_depthwise(h1, layer.time_kernels, axis=0)
        h3 = loop_depthwise(h2, layer.node_kernels, axis=1)
        x, winners = loop_pool(h3, window)
        winner_maps.append(winners)
    surviving = {(t, n) for t in range(x.shape[0]) for n in range(x.shape[1])}
    for winners in reversed(winner_maps):
        surviving = {winners[cell] for cell in surviving}
    return x, winner_maps, surviving


def fd_gradient(loss_fn, mat, h=1e-5):
    """Central finite differences of a scalar function w.r.t. one matrix,
    perturbing entries in place."""
    grad = np.zeros_like(mat)
    it = np.nditer(mat, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = mat[idx]
        mat[idx] = orig + h
        plus = loss_fn()
        mat[idx] = orig - h
        minus = loss_fn()
        mat[idx] = orig
        grad[idx] = (plus - minus) / (2.0 * h)
    return grad


def max_rel_err(analytic, numeric, floor=1e-6):
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float((np.abs(analytic - numeric) / denom).max())


def loop_rouge1_f1(words_a, words_b):
    """Multiset unigram F1 by explicit counting."""
    if not words_a and not words_b:
        return 1.0
    if not words_a or not words_b:
        return 0.0
    shared = 0
    remaining = list(words_b)
    for w in words_a:
        if w in remaining:
            remaining.remove(w)
            shared += 1
    return 2.0 * shared / (len(words_a) + len(words_b))
