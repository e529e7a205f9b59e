"""Python surface of the chronicler engine.

The heavy lifting lives in the compiled extension ``chronicler._core``:
tokenization and ROUGE metrics, era-name calendar conversion, linear-time
regex extraction, and knowledge-graph retrieval.
"""

from chronicler._core import (  # noqa: F401
    ChroniclerError,
    Chunk,
    EntityNode,
    EraTable,
    KnowledgeGraph,
    RetrievalResult,
    RougeScore,
    Triple,
    apply_regex,
    avg_atomic_fact_error,
    build_index,
    chunk_fallback,
    hallucination_rate,
    jaccard,
    normalize_name,
    retrieval_metrics,
    rouge_l,
    rouge_n,
    split_sentences,
    tokenize,
)

__all__ = [
    "ChroniclerError",
    "Chunk",
    "EntityNode",
    "EraTable",
    "KnowledgeGraph",
    "RetrievalResult",
    "RougeScore",
    "Triple",
    "apply_regex",
    "avg_atomic_fact_error",
    "build_index",
    "chunk_fallback",
    "hallucination_rate",
    "jaccard",
    "normalize_name",
    "retrieval_metrics",
    "rouge_l",
    "rouge_n",
    "split_sentences",
    "tokenize",
]
