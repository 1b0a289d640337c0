"""Experiment execution and reporting."""

from .experiment import Cell, ExperimentResult, ExperimentRunner, predictor_accuracy_table, run_cell
from .report import Report, build_report, load_traces, report_from_dir

__all__ = [
    "Cell",
    "ExperimentResult",
    "ExperimentRunner",
    "Report",
    "build_report",
    "load_traces",
    "predictor_accuracy_table",
    "report_from_dir",
    "run_cell",
]
