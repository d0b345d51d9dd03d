"""Finite-length spatially-coupled LDPC code design toolkit.

Construction of circulant-based SC codes, enumeration of cycle candidates
and their survival conditions, an annealed Gibbs optimizer for the
partitioning and lifting stages, a statistical estimator of attainable
counts, a BEC peeling harness, and brute-force oracles that certify the
fast paths.
"""

from .params import SCCodeParams, code_length, design_rate
from .construct import (ABSENT, SCProtograph, TannerGraph, all_one_base,
                        build_sc_protograph, check_lifting, check_partitioning,
                        circulant, lift_to_tanner, random_lifting,
                        random_partitioning)
from .cycles import (CandidateList, CompiledCounts, CycleCandidate, EntryIndex,
                     EntrySpace, ObjectiveSpec, build_entry_index,
                     canonical_nodes, count_active, enumerate_candidates,
                     is_active_lift, is_active_partition, is_uts_active,
                     lift_multiplicity, sc_candidate_lists, write_candidates_csv)
from .optimizer import (AnnealSchedule, Chain, ChainState, OptProblem, PIDConfig,
                        PIDState, RunResult, build_tuple_list, cycle4_free_lifting,
                        gibbs_sample, grid_search_hyperparams, lifting_problem,
                        matrix_to_x, optimize_lift, optimize_partition,
                        overrelax_sample, partitioning_problem, run, update_beta,
                        validate_budget, x_to_matrix)
from .estimator import (DecayFit, EstimationResult, SampleSeries,
                        cardinality_general, cardinality_log_z, collect_samples,
                        estimate_pipeline, fit_acceptance_poly, fit_decay,
                        fit_gaussian, fit_report, iter_order, min_estimate,
                        mu_model, prob_within, q_approx, sample_series,
                        series_histogram, sigma_model)
from .bec import (DecodeResult, ErasurePattern, FERPoint, StoppingSetReport,
                  extract_stopping_set, peel, residual_size_histogram, run_fer)
from .fileio import export_alist, import_alist, read_grid, write_grid
from . import oracle

__version__ = "0.1.0"
