from .caption_metrics import (
    bleu4,
    caption_metrics,
    cider_d,
    normalize_text,
    rouge_l,
)
from .io import read_preds_tsv, read_scores_tsv, write_preds_tsv, write_scores_tsv
from .judge import (
    JUDGE_PROMPT_VERSION,
    JUDGE_SYSTEM_PROMPT,
    JUDGE_TEMPERATURE,
    MAX_PAIRS_PER_BATCH,
    HttpJudgeClient,
    JudgeBatch,
    JudgeClient,
    JudgeResult,
    MockJudgeClient,
    build_judge_batches,
    parse_judge_scores,
    run_judge,
)
from .report import ReportBundle, emit_report, report_rows
from .retrieval_metrics import (
    RetrievalMetrics,
    ScoreMatrix,
    rank_of_gold,
    retrieval_metrics,
)

__all__ = [
    "normalize_text",
    "bleu4",
    "rouge_l",
    "cider_d",
    "caption_metrics",
    "ScoreMatrix",
    "RetrievalMetrics",
    "rank_of_gold",
    "retrieval_metrics",
    "JudgeBatch",
    "JudgeClient",
    "JudgeResult",
    "MockJudgeClient",
    "HttpJudgeClient",
    "build_judge_batches",
    "parse_judge_scores",
    "run_judge",
    "JUDGE_PROMPT_VERSION",
    "JUDGE_SYSTEM_PROMPT",
    "JUDGE_TEMPERATURE",
    "MAX_PAIRS_PER_BATCH",
    "ReportBundle",
    "emit_report",
    "report_rows",
    "write_scores_tsv",
    "read_scores_tsv",
    "write_preds_tsv",
    "read_preds_tsv",
]
