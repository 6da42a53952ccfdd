"""Random-matrix lab for the smallest singular value under two finite moments."""

from .bounds import BoundConstants, epsilon_for_eta, lemma36_threshold, theorem42_certificate
from .distributions import (
    DistributionSpec,
    analytic_moments,
    apply_centered_truncation,
    choose_truncation_level,
    parse_spec,
    sample_entries,
    truncation_report,
)
from .harness import ExperimentConfig, TrialRecord, emit_records, run_experiment, summarize
from .matrix import MatrixSample, load_matrix, sample_matrix, save_matrix, trimmed_norm
from .spectral import esd, ks_distance, mp_cdf, singular_values
from .trimmed_sup import brute_force_sup_trimmed, estimate_sup_trimmed, submatrix_ssv_min

__version__ = "0.1.0"
