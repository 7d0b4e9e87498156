"""Test corpora, metrics and warning reports."""
from .evaluate import CandidateMismatchError, evaluate, evaluate_records, generate_random_bugs, random_bug_graphs
from .metrics import (
    KIND_ROWS,
    Counts,
    EvalRecord,
    MetricReport,
    kind_row,
    make_record,
    pr_auc,
    pr_curve,
    rates,
    report,
)
from .scan import Skipped, Warning, repair_diff, scan_files, write_warnings
from .synthetic import idiom_corpus, idiom_unit, random_function, random_function_source

__all__ = [
    "CandidateMismatchError", "Counts", "EvalRecord", "KIND_ROWS", "MetricReport", "Skipped", "Warning",
    "evaluate", "evaluate_records", "generate_random_bugs", "idiom_corpus", "idiom_unit", "kind_row",
    "make_record", "pr_auc", "pr_curve", "random_bug_graphs", "random_function", "random_function_source",
    "rates", "repair_diff", "report", "scan_files", "write_warnings",
]
