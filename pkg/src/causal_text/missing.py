"""Effect estimation under MAR-missing treatments.

The identification argument: when the missingness indicator is independent
of the true treatment given (T, C, Y), the conditional p(A | T, C, Y) among
observed rows equals the same conditional in the full data, so completing
the masked rows from a model of that conditional and applying the backdoor
functional recovers the effect.  The workhorse estimator is multiple
imputation: fit the classifier on the observed rows, draw m completions of
the masked treatments, compute the simple estimator on each completed
dataset, and average.

Baselines deliberately misspecify that conditional: ``naive`` drops masked
rows outright, ``no_text`` imputes from (C, Y) only, ``no_y`` from (T, C)
only.  ``tau_md_plugin_exact`` evaluates the identification functional
symbolically on a tiny enumerated joint; it is the oracle the sampling
estimators are checked against.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .data import Dataset
from .errors import PositivityError, UnidentifiedJointError
from .oracle import JointTable
from .tabular import EffectEstimate, tau_from_joint, tau_simple
from . import textclf
from .textclf import ClassifierModel, FeatureSet, OptimizerConfig


def _mean_estimate(estimates: list[EffectEstimate], estimator_id: str,
                   n_used: int, dropped: int) -> EffectEstimate:
    k = len(estimates)
    mean_y1 = math.fsum(e.mean_y1 for e in estimates) / k
    mean_y0 = math.fsum(e.mean_y0 for e in estimates) / k
    flags = (f"dropped_imputations:{dropped}",) if dropped else ()
    return EffectEstimate.from_arm_means(mean_y1, mean_y0, estimator_id, n_used,
                                         flags=flags)


def tau_md_mi(data: Dataset, feature_set: FeatureSet = FeatureSet.FULL,
              m: int = 20, l2_lambda: float = 1e-4,
              config: OptimizerConfig = None,
              rng: np.random.Generator = None,
              model: Optional[ClassifierModel] = None) -> EffectEstimate:
    """Multiple-imputation estimate of the effect under MAR missingness.

    Fits the classifier on the r_a=1 rows (unless a prefit ``model`` is
    supplied, e.g. an oracle posterior in tests), draws ``m`` completions of
    the masked rows, and averages the per-completion simple estimates.
    Completions that hit a positivity violation are dropped and counted in
    the result's flags; if all m drop, the estimation fails.

    Replicates combine by plain averaging of the point estimates (per-arm
    means averaged likewise); no between-imputation variance pooling.
    """
    if rng is None:
        raise ValueError("tau_md_mi needs an rng for the imputation draws")
    if m < 1:
        raise ValueError("m must be >= 1")
    masked = np.flatnonzero(data.r_a == 0)
    if len(masked) == 0:
        # nothing to impute: every completion equals the simple estimate
        est = tau_simple(data)
        return EffectEstimate.from_arm_means(
            est.mean_y1, est.mean_y0, _estimator_id(feature_set), len(data))
    if model is None:
        model = textclf.fit(data, feature_set=feature_set, l2_lambda=l2_lambda,
                            config=config)
    probs = model.predict_proba_batch(data, masked)
    c = data.c.astype(np.int64)
    y = data.y.astype(np.int64)
    a_base = data.a.astype(np.int64)
    estimates: list[EffectEstimate] = []
    dropped = 0
    for _ in range(m):
        a_fill = (rng.random(len(masked)) < probs).astype(np.int64)
        a = a_base.copy()
        a[masked] = a_fill
        counts = np.bincount((a * 2 + c) * 2 + y, minlength=8).reshape(2, 2, 2)
        try:
            estimates.append(tau_from_joint(counts / len(data), "imputation",
                                            len(data)))
        except PositivityError:
            dropped += 1
    if not estimates:
        raise PositivityError(f"all {m} imputation completions failed")
    return _mean_estimate(estimates, _estimator_id(feature_set), len(data), dropped)


def _estimator_id(feature_set: FeatureSet) -> str:
    return f"md.mi.{feature_set.value}"


def tau_md_baseline_naive(data: Dataset) -> EffectEstimate:
    """Complete-case analysis: the simple estimator on the r_a=1 rows only."""
    observed = data.r_a == 1
    sub = data.take(observed)
    est = tau_simple(sub)
    return EffectEstimate.from_arm_means(est.mean_y1, est.mean_y0, "md.naive",
                                         len(sub))


def tau_md_baseline_no_text(data: Dataset, m: int = 20, l2_lambda: float = 1e-4,
                            config: OptimizerConfig = None,
                            rng: np.random.Generator = None) -> EffectEstimate:
    """MI with the imputation model conditioning on (C, Y) only."""
    return tau_md_mi(data, FeatureSet.NO_TEXT, m=m, l2_lambda=l2_lambda,
                     config=config, rng=rng)


def tau_md_baseline_no_y(data: Dataset, m: int = 20, l2_lambda: float = 1e-4,
                         config: OptimizerConfig = None,
                         rng: np.random.Generator = None) -> EffectEstimate:
    """MI with the imputation model conditioning on (T, C) only."""
    return tau_md_mi(data, FeatureSet.NO_Y, m=m, l2_lambda=l2_lambda,
                     config=config, rng=rng)


def tau_md_plugin_exact(joint: JointTable) -> EffectEstimate:
    """The identification functional evaluated exactly on an enumerated joint.

    Expects axes (A, C, Y, T_0.., R_A).  Identifies the full-data joint by
    replacing p(A | T, C, Y) with its observed-rows counterpart and
    marginalizing the text:

        p(A=a, C, Y) = sum_T p(A=a | T, C, Y, R_A=1) p(T, C, Y)
        p(Y=1 | A=a, C) = p(a, C, 1) / sum_y p(a, C, y)
        E[Y(a)] = sum_C p(Y=1 | A=a, C) p(C)

    Conditioning on a zero-mass (T, C, Y, R_A=1) event raises
    ``UnidentifiedJointError``.
    """
    text_names = tuple(n for n in joint.names if n.startswith("T"))
    for required in ("A", "C", "Y", "R_A"):
        if required not in joint.names:
            raise ValueError(f"joint must include variable {required!r}")
    # reorder to (A, C, Y, T..., R_A)
    m = joint.marginal(("A", "C", "Y") + text_names + ("R_A",))
    p = m.p
    t_axes = tuple(range(3, 3 + len(text_names)))
    # p(T, C, Y) regardless of missingness, and the observed-slice masses
    p_tcy = p.sum(axis=(0, p.ndim - 1))                      # (c, y, t...)
    p_atcy_obs = np.take(p, 1, axis=p.ndim - 1)              # (a, c, y, t...)
    p_tcy_obs = p_atcy_obs.sum(axis=0)                       # (c, y, t...)
    if (p_tcy_obs <= 0).any():
        raise UnidentifiedJointError("some (T, C, Y, R_A=1) event has zero mass")
    p_a_given = p_atcy_obs / p_tcy_obs                       # p(A=a | t, c, y, R=1)
    # sum over text patterns: p(A=a, C, Y) = sum_T p(A=a | ...) p(T, C, Y)
    p_acy = (p_a_given * p_tcy).sum(axis=t_axes) if t_axes else p_a_given * p_tcy
    return tau_from_joint(p_acy, estimator_id="md.plugin_exact", n_used=0)
