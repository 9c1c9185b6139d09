"""Exact computation of the variance of weighted sequences in arithmetic
progressions, with the decompositions, condition constants and main-term
predictions that go with it."""
from .sieves import (FactorTable, ResourceLimitError, build_factor_table, euler_phi, mobius,
                     smooth_part, tau, tau3)
from .sequences import (WeightedSequence, average_gcd_class, count_progression, from_weights,
                        generate, multiple_sum_table, read_weight_file)
from .variance import (InvariantViolation, VarianceReport, autocorrelation, variance_direct,
                       variance_expanded, variance_report, variance_switched)
from .decomposition import (KeyDecomposition, PhiRecipInterval, c_coefficient, key_decomposition,
                            lemma1_ratio, lemma2_ratio, phi_recip_sum)
from .baseline import (BaselineReport, baseline_report, bernoulli_sum, dilate_identity_check,
                       fractional_integral, integers_variance, integral_asymptotic,
                       unit_integral)
from .smooth import (SmoothContext, ht_estimate, psi, psi_coprime, psi_progression, saddle_point,
                     smooth_context, smooth_variance, zeta_partial)
from .conditions import (ConditionProfile, measure_k_conc, measure_k_hered, measure_k_int,
                         measure_k_prog, measure_profile)
from .predictor import (Prediction, compare, corollary_prediction, theorem1_prediction,
                        theorem2_prediction)

__version__ = "0.1.0"
