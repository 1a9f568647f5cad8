"""fdbench: feature-distance evaluation for generative models.

Computes Fréchet distance, kernel MMD variants (KID/CMMD style), and
mixture-likelihood divergences over precomputed feature matrices, plus
feature diagnostics and Kendall-tau alignment/consistency analyses, with
a synthetic testbench that checks every metric against an independent
oracle.
"""

from .alignment import (AlignmentResult, ConsistencyMatrix, LadderEntry,
                        MetricAlignment, alignment_report,
                        consistency_matrix, kendall_tau_b, read_ladder_csv,
                        significance_band, tau_p_value, write_ladder_csv)
from .diagnostics import (DiagnosticsReport, diagnostics_report,
                          entropy_nats, sparsity_l0)
from .errors import (CorruptionError, DimensionMismatchError, FdbenchError,
                     FormatError, IncompleteLadderError,
                     IndefiniteCovarianceError, InsufficientSamplesError,
                     ParseError, ProtocolError, UndefinedCorrelationError,
                     ValidationError)
from .kernels import (BlockStats, KernelSpec, MmdEstimate, cmmd_score,
                      gram_matrix, kernel_eval, kid_score, median_heuristic,
                      mmd2, resolve_preset)
from .mixtures import (EmTrace, GaussianMixture, fit_gmm_em, fld_score,
                       gmm_log_density, kld_mog_mc, sample_mixture)
from .moments import (GaussianSummary, fit_gaussian_summary,
                      frechet_distance, trace_cross_sqrt)
from .store import (FeatureSet, import_csv, read_feature_set,
                    write_feature_set)
from .testbench import (EllipticalSpec, LadderSpec, discrete_w2_exact,
                        make_quality_ladder, sample_elliptical)

__version__ = "0.1.0"
