"""Core domain types and bit-exact file I/O.

Holds the data model shared by every stage of the pipeline: modality
feature streams, narration token timelines, node tensors with word
provenance, max-pool traces, semantic graphs, graph embeddings, and the
corpus container. File formats are deliberately language neutral: a JSON
manifest next to a raw little-endian float blob for features, JSON lines
for timelines, and the common whitespace-separated text format for word
embedding tables. All writes are atomic (write temp file, then rename).
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

PAD_WORD = "<pad>"

_DTYPE_CODES = {"float32": "<f4", "float64": "<f8"}


class DataError(ValueError):
    """Malformed input data, inconsistent shapes, or a broken invariant."""


class NumericError(ArithmeticError):
    """Non-finite values where finite ones are required (e.g. diverged loss)."""


class Modality(str, Enum):
    VIDEO = "video"
    AUDIO = "audio"
    FUSED = "fused"


class Role(str, Enum):
    OBJECT = "object"
    ACTION_STATE = "action_state"
    OTHER = "other"


def stable_hash64(text: str) -> int:
    """Stable 64-bit hash of a string, identical across processes and runs."""
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def atomic_write_bytes(path: str | Path, payload: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str | Path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def dump_json(obj) -> str:
    """Canonical JSON serialization: sorted keys, fixed separators, newline."""
    return json.dumps(obj, sort_keys=True, separators=(",", ": "), indent=1) + "\n"


# ---------------------------------------------------------------------------
# feature streams
# ---------------------------------------------------------------------------


@dataclass
class ModalityFeatures:
    """Time-major feature stream for one modality, shape (T, C)."""

    modality: Modality
    data: np.ndarray
    segment_duration_s: float = 1.0

    def __post_init__(self):
        self.modality = Modality(self.modality)
        self.data = np.asarray(self.data)
        if self.data.ndim != 2 or self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise DataError(f"feature matrix must be (T>=1, C>=1), got {self.data.shape}")
        if self.data.dtype.name not in _DTYPE_CODES:
            raise DataError(f"feature dtype must be float32/float64, got {self.data.dtype}")
        if not np.all(np.isfinite(self.data)):
            raise DataError("feature matrix contains non-finite entries")
        if not self.segment_duration_s > 0:
            raise DataError("segment_duration_s must be positive")

    @property
    def num_segments(self) -> int:
        return self.data.shape[0]

    @property
    def channels(self) -> int:
        return self.data.shape[1]


def _feature_paths(path: str | Path) -> tuple[Path, Path]:
    base = Path(path)
    return base.with_name(base.name + ".manifest.json"), base.with_name(base.name + ".f32")


def save_features(features: ModalityFeatures, path: str | Path) -> None:
    """Write `<path>.manifest.json` plus `<path>.f32` (raw little-endian blob)."""
    manifest_path, blob_path = _feature_paths(path)
    t, c = features.data.shape
    dtype_name = features.data.dtype.name
    manifest = {
        "modality": features.modality.value,
        "T": t,
        "C": c,
        "dtype": dtype_name,
        "layout": "row-major",
        "segment_duration_s": features.segment_duration_s,
    }
    blob = np.ascontiguousarray(features.data).astype(_DTYPE_CODES[dtype_name]).tobytes()
    atomic_write_text(manifest_path, dump_json(manifest))
    atomic_write_bytes(blob_path, blob)


def load_features(path: str | Path) -> ModalityFeatures:
    """Load a manifest+blob pair written by :func:`save_features`."""
    manifest_path, blob_path = _feature_paths(path)
    if not manifest_path.exists():
        raise DataError(f"missing feature manifest: {manifest_path}")
    if not blob_path.exists():
        raise DataError(f"missing feature blob: {blob_path}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"unreadable manifest {manifest_path}: {exc}") from exc
    for key in ("modality", "T", "C", "dtype", "layout"):
        if key not in manifest:
            raise DataError(f"manifest {manifest_path} missing key {key!r}")
    if manifest["layout"] != "row-major":
        raise DataError(f"unsupported layout {manifest['layout']!r}")
    dtype_name = manifest["dtype"]
    if dtype_name not in _DTYPE_CODES:
        raise DataError(f"unsupported dtype {dtype_name!r}")
    t, c = int(manifest["T"]), int(manifest["C"])
    blob = blob_path.read_bytes()
    itemsize = np.dtype(_DTYPE_CODES[dtype_name]).itemsize
    if len(blob) != t * c * itemsize:
        raise DataError(
            f"blob size mismatch for {blob_path}: manifest says {t}x{c} "
            f"({t * c * itemsize} bytes), blob holds {len(blob)} bytes"
        )
    data = np.frombuffer(blob, dtype=_DTYPE_CODES[dtype_name]).reshape(t, c).copy()
    if not np.all(np.isfinite(data)):
        raise DataError(f"feature blob {blob_path} contains non-finite entries")
    return ModalityFeatures(
        modality=Modality(manifest["modality"]),
        data=data.astype(dtype_name),
        segment_duration_s=float(manifest.get("segment_duration_s", 1.0)),
    )


# ---------------------------------------------------------------------------
# token timelines
# ---------------------------------------------------------------------------


@dataclass
class TokenTimeline:
    """Per-segment word lists, each padded/truncated to exactly `max_nodes` entries.

    Padding slots carry the reserved word ``"<pad>"``; their embeddings are
    all-zero by contract wherever embeddings are materialized.
    """

    segments: list[list[str]]
    max_nodes: int

    def __post_init__(self):
        if self.max_nodes < 1:
            raise DataError("max_nodes must be >= 1")
        if len(self.segments) < 1:
            raise DataError("timeline needs at least one segment")
        for t, words in enumerate(self.segments):
            if len(words) != self.max_nodes:
                raise DataError(
                    f"segment {t} holds {len(words)} words, expected {self.max_nodes}"
                )

    @classmethod
    def from_words(cls, raw_segments: list[list[str]], max_nodes: int) -> "TokenTimeline":
        """Build a timeline, truncating long segments and padding short ones."""
        segments = []
        for words in raw_segments:
            kept = [str(w) for w in words[:max_nodes]]
            kept.extend([PAD_WORD] * (max_nodes - len(kept)))
            segments.append(kept)
        return cls(segments=segments, max_nodes=max_nodes)

    @property
    def num_segments(self) -> int:
        return len(self.segments)

    def word_at(self, t: int, n: int) -> str:
        return self.segments[t][n]

    def content_words(self) -> list[str]:
        return [w for seg in self.segments for w in seg if w != PAD_WORD]


def save_token_timeline(timeline: TokenTimeline, path: str | Path) -> None:
    """Write one JSON record per segment: ``{"t": <int>, "words": [...]}``.

    Trailing pad slots are stripped; they are reintroduced on load.
    """
    lines = []
    for t, words in enumerate(timeline.segments):
        real = [w for w in words if w != PAD_WORD]
        lines.append(json.dumps({"t": t, "words": real}, sort_keys=True))
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_token_timeline(
    path: str | Path, max_nodes: int = 15, expected_segments: int | None = None
) -> TokenTimeline:
    path = Path(path)
    if not path.exists():
        raise DataError(f"missing timeline file: {path}")
    records: dict[int, list[str]] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            t = int(rec["t"])
            words = [str(w) for w in rec["words"]]
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed timeline record at {path}:{lineno}: {exc}") from exc
        if t in records:
            raise DataError(f"duplicate segment index {t} in {path}")
        records[t] = words
    if not records:
        raise DataError(f"timeline file {path} holds no records")
    num_segments = max(records) + 1
    if set(records) != set(range(num_segments)):
        raise DataError(f"timeline {path} has gaps in segment indices")
    if expected_segments is not None and num_segments != expected_segments:
        raise DataError(
            f"timeline {path} has {num_segments} segments, expected {expected_segments}"
        )
    return TokenTimeline.from_words([records[t] for t in range(num_segments)], max_nodes)


# ---------------------------------------------------------------------------
# word embeddings
# ---------------------------------------------------------------------------


@dataclass
class EmbeddingTable:
    """Word to vector lookup with a fixed dimension."""

    vectors: dict[str, np.ndarray]
    dim: int

    @classmethod
    def empty(cls, dim: int) -> "EmbeddingTable":
        return cls(vectors={}, dim=dim)

    def lookup(self, word: str) -> np.ndarray | None:
        return self.vectors.get(word)


def load_embedding_table(path: str | Path) -> EmbeddingTable:
    """Parse the standard text format: one ``word v1 v2 ... vD`` line per word."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"missing embedding table: {path}")
    vectors: dict[str, np.ndarray] = {}
    dim: int | None = None
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) < 2:
            raise DataError(f"embedding line {path}:{lineno} has no values")
        word = parts[0]
        try:
            vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
        except ValueError as exc:
            raise DataError(f"bad embedding value at {path}:{lineno}: {exc}") from exc
        if dim is None:
            dim = vec.size
        elif vec.size != dim:
            raise DataError(
                f"inconsistent embedding width at {path}:{lineno}: {vec.size} != {dim}"
            )
        vectors[word] = vec
    if dim is None:
        raise DataError(f"embedding table {path} is empty")
    return EmbeddingTable(vectors=vectors, dim=dim)


def save_embedding_table(table: EmbeddingTable, path: str | Path) -> None:
    lines = []
    for word in sorted(table.vectors):
        values = " ".join(repr(float(x)) for x in table.vectors[word])
        lines.append(f"{word} {values}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def oov_vector(word: str, dim: int) -> np.ndarray:
    """Deterministic unit vector for an out-of-vocabulary word.

    Seeded from a stable hash of the word string, so the same word maps to
    the same vector in every call and every process run.
    """
    rng = np.random.default_rng(np.random.SeedSequence(stable_hash64(word)))
    vec = rng.standard_normal(dim)
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:  # astronomically unlikely; keep the contract total
        vec = np.zeros(dim)
        vec[0] = 1.0
        return vec
    return vec / norm


# ---------------------------------------------------------------------------
# node tensors
# ---------------------------------------------------------------------------


@dataclass
class NodeTensor:
    """A (T, N, C) tensor of per-word node features with word provenance.

    ``word_index`` maps every (t, n) cell of this tensor's own grid to the
    word the cell represents. Tensors produced after pooling keep provenance
    by pulling the winning cell's word through the pool trace.
    """

    data: np.ndarray
    word_index: dict[tuple[int, int], str] | None = None

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 3:
            raise DataError(f"node tensor must be (T, N, C), got shape {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise DataError("node tensor contains non-finite entries")
        if self.word_index is not None:
            t, n, _ = self.data.shape
            expected = {(i, j) for i in range(t) for j in range(n)}
            if set(self.word_index) != expected:
                raise DataError("word_index does not cover exactly the (T, N) grid")

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape


def embed_tokens(timeline: TokenTimeline, table: EmbeddingTable) -> NodeTensor:
    """Embed every timeline word into a (T, N, C_w) node tensor.

    Pad slots embed to zero. Words missing from the table fall back to the
    deterministic hash-seeded unit vector from :func:`oov_vector`.
    """
    t_count, n_count = timeline.num_segments, timeline.max_nodes
    data = np.zeros((t_count, n_count, table.dim), dtype=np.float64)
    word_index: dict[tuple[int, int], str] = {}
    for t in range(t_count):
        for n in range(n_count):
            word = timeline.segments[t][n]
            word_index[(t, n)] = word
            if word == PAD_WORD:
                continue
            vec = table.lookup(word)
            if vec is None:
                vec = oov_vector(word, table.dim)
            elif vec.size != table.dim:
                raise DataError(f"table vector for {word!r} has wrong width")
            data[t, n, :] = vec
    return NodeTensor(data=data, word_index=word_index)


# ---------------------------------------------------------------------------
# pool traces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PoolLayer:
    """One max-pool stage: grid shapes plus the flat argmax per pooled cell."""

    input_shape: tuple[int, int]
    pooled_shape: tuple[int, int]
    argmax: np.ndarray  # int array of shape pooled_shape, flat indices into input grid

    def unflatten(self, flat: int) -> tuple[int, int]:
        return int(flat) // self.input_shape[1], int(flat) % self.input_shape[1]


@dataclass
class PoolTrace:
    layers: list[PoolLayer]

    def validate(self) -> None:
        prev_pooled: tuple[int, int] | None = None
        for i, layer in enumerate(self.layers):
            ti, ni = layer.input_shape
            tp, np_ = layer.pooled_shape
            if tp > ti or np_ > ni:
                raise DataError(f"pool layer {i} grows the grid: {layer.input_shape} -> "
                                f"{layer.pooled_shape}")
            if layer.argmax.shape != (tp, np_):
                raise DataError(f"pool layer {i} argmax shape mismatch")
            if layer.argmax.size and (layer.argmax.min() < 0 or layer.argmax.max() >= ti * ni):
                raise DataError(f"pool layer {i} argmax index out of range")
            if prev_pooled is not None and layer.input_shape != prev_pooled:
                raise DataError(f"pool layer {i} input grid does not chain from layer {i - 1}")
            prev_pooled = layer.pooled_shape

    @property
    def original_shape(self) -> tuple[int, int]:
        return self.layers[0].input_shape

    @property
    def final_shape(self) -> tuple[int, int]:
        return self.layers[-1].pooled_shape


# ---------------------------------------------------------------------------
# semantic graphs
# ---------------------------------------------------------------------------


@dataclass
class GraphNode:
    id: int
    word: str
    time_segment: int | None
    importance: float
    role: Role
    feature: np.ndarray

    def __post_init__(self):
        self.role = Role(self.role)
        self.feature = np.asarray(self.feature, dtype=np.float64)
        if self.importance < 0:
            raise DataError(f"node importance must be non-negative, got {self.importance}")


@dataclass
class GraphEdge:
    src_id: int
    dst_id: int
    weight: float
    relation_word: str | None = None

    def __post_init__(self):
        if not -1.0 <= self.weight <= 1.0:
            raise DataError(f"edge weight outside [-1, 1]: {self.weight}")


@dataclass
class SemanticGraph:
    """Interpreted graph output: word nodes with importance plus weighted edges.

    ``tau`` and ``time_window`` record the thresholds the graph was built
    with, so that aggregation can recompute edges consistently.
    """

    directed: bool
    nodes: list[GraphNode]
    edges: list[GraphEdge]
    tau: float = 0.5
    time_window: int = 2

    def validate(self) -> None:
        ids = [n.id for n in self.nodes]
        if len(ids) != len(set(ids)):
            raise DataError("node ids are not unique")
        id_set = set(ids)
        for e in self.edges:
            if e.src_id not in id_set or e.dst_id not in id_set:
                raise DataError(f"edge ({e.src_id}, {e.dst_id}) references a missing node")
        for n in self.nodes:
            if self.directed and n.time_segment is None:
                raise DataError(f"directed graph node {n.word!r} is missing time_segment")
            if not self.directed and n.time_segment is not None:
                raise DataError(f"undirected graph node {n.word!r} carries time_segment")

    def node_by_id(self, node_id: int) -> GraphNode:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def has_edge(self, u: int, v: int) -> bool:
        for e in self.edges:
            if (e.src_id, e.dst_id) == (u, v):
                return True
            if not self.directed and (e.src_id, e.dst_id) == (v, u):
                return True
        return False


@dataclass
class GraphEmbedding:
    """Fixed-width vector summarizing one video's graph."""

    vector: np.ndarray

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=np.float64)
        if self.vector.ndim != 1:
            raise DataError("graph embedding must be a 1-D vector")
        if not np.all(np.isfinite(self.vector)):
            raise DataError("graph embedding contains non-finite entries")

    @property
    def dim(self) -> int:
        return self.vector.size


def as_vector(embedding) -> np.ndarray:
    """Accept a GraphEmbedding or a plain array and return a float64 vector."""
    if isinstance(embedding, GraphEmbedding):
        return embedding.vector
    return np.asarray(embedding, dtype=np.float64)


# ---------------------------------------------------------------------------
# corpus
# ---------------------------------------------------------------------------


@dataclass
class VideoRecord:
    video_id: str
    task_label: str
    video: ModalityFeatures
    audio: ModalityFeatures
    timeline: TokenTimeline

    def __post_init__(self):
        if not self.task_label:
            raise DataError("task_label must be non-empty")


@dataclass
class Corpus:
    videos: list[VideoRecord]

    def __post_init__(self):
        if not self.videos:
            raise DataError("corpus holds no videos")
        t, c = self.videos[0].video.data.shape
        n = self.videos[0].timeline.max_nodes
        for rec in self.videos:
            if rec.video.data.shape != (t, c) or rec.audio.data.shape != (t, c):
                raise DataError(f"video {rec.video_id} breaks the shared (T, C) configuration")
            if rec.timeline.max_nodes != n or rec.timeline.num_segments != t:
                raise DataError(f"video {rec.video_id} breaks the shared timeline configuration")

    @property
    def num_segments(self) -> int:
        return self.videos[0].video.data.shape[0]

    @property
    def channels(self) -> int:
        return self.videos[0].video.data.shape[1]

    @property
    def max_nodes(self) -> int:
        return self.videos[0].timeline.max_nodes

    def task_labels(self) -> list[str]:
        return [rec.task_label for rec in self.videos]

    def by_id(self, video_id: str) -> VideoRecord:
        for rec in self.videos:
            if rec.video_id == video_id:
                return rec
        raise DataError(f"no video {video_id!r} in corpus")


def save_corpus(corpus: Corpus, directory: str | Path) -> None:
    """Write per-video feature/timeline files plus a ``corpus.json`` index."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    index = []
    for rec in corpus.videos:
        save_features(rec.video, directory / f"{rec.video_id}.video")
        save_features(rec.audio, directory / f"{rec.video_id}.audio")
        save_token_timeline(rec.timeline, directory / f"{rec.video_id}.timeline.jsonl")
        index.append(
            {
                "video_id": rec.video_id,
                "task_label": rec.task_label,
                "video": f"{rec.video_id}.video",
                "audio": f"{rec.video_id}.audio",
                "timeline": f"{rec.video_id}.timeline.jsonl",
            }
        )
    payload = {
        "videos": index,
        "num_segments": corpus.num_segments,
        "channels": corpus.channels,
        "max_nodes": corpus.max_nodes,
    }
    atomic_write_text(directory / "corpus.json", dump_json(payload))


def load_corpus(directory: str | Path) -> Corpus:
    directory = Path(directory)
    index_path = directory / "corpus.json"
    if not index_path.exists():
        raise DataError(f"missing corpus index: {index_path}")
    try:
        payload = json.loads(index_path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"unreadable corpus index: {exc}") from exc
    videos = []
    max_nodes = int(payload.get("max_nodes", 15))
    expected_t = payload.get("num_segments")
    for entry in payload.get("videos", []):
        videos.append(
            VideoRecord(
                video_id=entry["video_id"],
                task_label=entry["task_label"],
                video=load_features(directory / entry["video"]),
                audio=load_features(directory / entry["audio"]),
                timeline=load_token_timeline(
                    directory / entry["timeline"],
                    max_nodes=max_nodes,
                    expected_segments=expected_t,
                ),
            )
        )
    return Corpus(videos=videos)
