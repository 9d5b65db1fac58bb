"""Structure-aware context compression over coordinate-indexed discourse units.

The pipeline: segment a document into addressable units, build a
span-anchored structure tree over them, score the tree's nodes against a
query, select a sub-tree under a token budget (or top-k), and linearize
the selection in source order. Evaluation covers tree edit distance,
exact backbone accuracy, compression, and dollar cost.
"""

__version__ = "0.1.0"

from .errors import (
    BackendError,
    DecompositionError,
    EducompressError,
    ProtocolError,
    SpanRangeError,
    StageError,
    TransportError,
    UsageError,
)
from .segmenter import (
    EDU,
    EDUSequence,
    SegmentationRules,
    SourceDocument,
    dump_edus,
    render_indexed,
    retrieve,
    segment,
)
from .tree import (
    Diagnostic,
    SpanRef,
    StructureNode,
    StructureTree,
    backbone,
    coverage,
    parse_augmented_markdown,
    realize_tree,
    serialize,
    tree_from_dict,
    tree_from_json,
    tree_to_dict,
    tree_to_json,
    validate,
)
from .rank_select import (
    AnswerRecord,
    CompressionResult,
    PipelineConfig,
    Query,
    ScoredNode,
    SelectionBudget,
    TRepPolicy,
    answer_pipeline,
    bm25_score,
    bm25_scorer,
    build_candidate_text,
    compress,
    linearize,
    merge_spans,
    random_select,
    score_nodes,
    select_budget,
    select_topk,
    whitespace_token_count,
)
from .metrics import (
    BinStat,
    CostModel,
    EditCosts,
    EvalRecord,
    EvalReport,
    LabeledOrderedTree,
    TitleNormalization,
    bin_by_length,
    compression_stats,
    cost_estimate,
    dla,
    normalize_title,
    ted,
    to_labeled_tree,
)
from .backends import (
    InferenceEndpointConfig,
    PromptTemplate,
    TokenUsage,
    layout_extract,
    solver_critic_refine,
)
from .config import RunConfig, build_pipeline, load_config
from .corpus import CorpusRecord, read_corpus, resolve_gold, write_corpus
