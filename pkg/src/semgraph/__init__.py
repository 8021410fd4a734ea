"""Semantic graph learning from synthetic multimodal instructional streams."""

from .assignment import (
    SelectedNode,
    aggregate_directed,
    aggregate_undirected,
    assign_semantics,
    reverse_map,
    select_words,
)
from .core import (
    PAD_WORD,
    Corpus,
    DataError,
    EmbeddingTable,
    GraphEdge,
    GraphEmbedding,
    GraphNode,
    Modality,
    ModalityFeatures,
    NodeTensor,
    NumericError,
    PoolLayer,
    PoolTrace,
    Role,
    SemanticGraph,
    TokenTimeline,
    VideoRecord,
    embed_tokens,
    load_corpus,
    load_embedding_table,
    load_features,
    load_token_timeline,
    save_corpus,
    save_features,
    save_token_timeline,
)
from .evaluation import (
    linear_probe_accuracy,
    precision_at_k,
    rouge1_node_overlap,
    task_overlap_matrix,
)
from .fusion import (
    AttentionParams,
    baseline_fusion,
    cross_modal_attention,
    init_attention_params,
    one_branch_attention,
    semantic_attention,
)
from .graphs import (
    aggregate_graphs,
    build_directed_graph,
    build_undirected_graph,
    classify_word_role,
    export_graph,
    import_graph,
)
from .message_passing import (
    MessagePassingParams,
    depthwise_node_conv,
    depthwise_time_conv,
    init_message_passing,
    mp_forward,
)
from .synth import GeneratorConfig, TaskScript, generate_corpus, render_video
from .training import (
    AugmentConfig,
    PipelineParams,
    TrainConfig,
    TrainResult,
    augment_features,
    cross_modal_nce,
    nce_loss,
    readout,
    train_loop,
    triplet_loss,
)

__version__ = "0.1.0"
