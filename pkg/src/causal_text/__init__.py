"""Causal effect estimation when the treatment is missing or text-proxied.

Estimates the average effect of a binary treatment on a binary outcome under
a binary confounder, in three data regimes: fully observed (backdoor
adjustment), treatment missing at random (multiple imputation with a text
classifier), and treatment observed only through a noisy classifier proxy
(misclassification matrix adjustment).  Includes the synthetic generators,
review-corpus ingestion, an exact enumeration oracle, and the Monte-Carlo
evaluation harness behind the ``causal-text`` command.
"""

from .data import DataRow, Dataset, dump_rows, load_rows
from .errors import (DegenerateLabelsError, EmptyDatasetError, EmptyStratumError,
                     EstimationError, MissingFieldError, PositivityError,
                     SingularAdjustmentError, UnestimableCellError,
                     UnidentifiedJointError)
from .tabular import (EffectEstimate, StratumTable, conditional_prob,
                      stratum_counts, tau_from_joint, tau_simple)
from .synthgen import (SynthParams, TextCoefficients, generate_md_dataset,
                       generate_me_datasets, sample_coefficients)
from .textclf import (ClassifierModel, ErrorRates, FeatureSet, OptimizerConfig,
                      error_rates, fit, impute_proxy, impute_proxies,
                      load_model, predict_proba, sample_label, save_model)
from .missing import (tau_md_baseline_naive, tau_md_baseline_no_text,
                      tau_md_baseline_no_y, tau_md_mi, tau_md_plugin_exact)
from .measure import (AdjustedJoint, forward_flip, matrix_adjust, tau_me_adjusted,
                      tau_me_naive, tau_me_unadjusted)
from .oracle import (JointTable, MeasurementJointSpec, MissingJointSpec,
                     enumerate_joint, exact_tau, naive_diff)
from .rng import derive_stream

__version__ = "0.1.0"
