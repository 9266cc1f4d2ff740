"""Structured thyroid-surgery operation records from free-text narratives.

Pipeline: transcript -> entity tagging (rule / remote / LLM backends) ->
regex post-processing into a 22-class record -> validation, evaluation,
layered anatomy rendering, and an HTTP service with human review.
"""

from .model import (
    NOT_MENTIONED,
    EntitySpan,
    GoldDocument,
    LabelSequence,
    LanguageMode,
    Note,
    OperationRecord,
    Transcript,
    record_from_json,
    record_to_json,
    validate_record,
)
from .bio import decode_spans, encode_labels, repair_labels, tokenize
from .structurer import LanguagePack, MappingTable, Structurer, structure
from .backends import (
    Backend,
    LlmConfig,
    TaggerConfig,
    llm_structure,
    normalize_language,
    remote_tag,
    rule_tag,
)
from .evaluator import (
    EvalReport,
    ReportFormat,
    emit_report,
    macro_average,
    mean_class_accuracy,
    record_accuracy,
    span_metrics,
)
from .renderer import AnatomyScene, build_scene, render_record, render_svg
from .corpus import GeneratorProfile, NoiseProfile, generate, load_corpus, save_corpus, split

__version__ = "0.1.0"

__all__ = [
    "NOT_MENTIONED",
    "AnatomyScene",
    "Backend",
    "EntitySpan",
    "EvalReport",
    "GeneratorProfile",
    "GoldDocument",
    "LabelSequence",
    "LanguageMode",
    "LanguagePack",
    "LlmConfig",
    "MappingTable",
    "NoiseProfile",
    "Note",
    "OperationRecord",
    "ReportFormat",
    "Structurer",
    "TaggerConfig",
    "Transcript",
    "build_scene",
    "decode_spans",
    "emit_report",
    "encode_labels",
    "generate",
    "llm_structure",
    "load_corpus",
    "macro_average",
    "mean_class_accuracy",
    "normalize_language",
    "record_accuracy",
    "record_from_json",
    "record_to_json",
    "remote_tag",
    "render_record",
    "render_svg",
    "repair_labels",
    "rule_tag",
    "save_corpus",
    "span_metrics",
    "split",
    "structure",
    "tokenize",
    "validate_record",
]
