"""Data ingestion, generators, experiment runners and the command line."""

from .data import gen_blobs, gen_planted, gen_two_circles, load_grouped_csv, write_family_csv
from .experiments import (
    ExperimentConfig,
    approximation_error,
    run_experiment,
    run_experiment_i,
    run_experiment_ii,
)
from .report import ReportRow, emit_report, read_report, summarize
