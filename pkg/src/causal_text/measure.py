"""Effect estimation from misclassified (proxied) treatments.

The observed joint q over (A*, C, Y) relates to the target joint over
(A, C, Y) through the stratum-wise error rates; inverting that relation cell
by cell ("matrix adjustment") gives

    p(A=1, c, y) = (-delta q_cy(0) + (1 - delta) q_cy(1)) / (1 - eps - delta)
    p(A=0, c, y) = ((1 - eps) q_cy(0) - eps q_cy(1)) / (1 - eps - delta)

after which the backdoor functional applies as if A had been observed.  The
inversion divides by (1 - eps - delta): when that denominator is near zero
the adjustment is singular, and noisy rate estimates can push adjusted cells
outside [0, 1].  Such over-corrections are flagged, not clipped -- the raw
values flow into the estimate so that the adjustment's instability is
reproduced rather than hidden.  ``AdjustedJoint.clipped()`` provides a
nonnegative renormalized copy for reporting only.

``forward_flip`` applies the error process in the opposite direction (truth
to proxy, rates conditioned on the truth); composed with ``matrix_adjust``
it is the identity, which is the correctness property the oracle tests pin
down.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .data import Dataset
from .errors import (EmptyDatasetError, SingularAdjustmentError,
                     UnestimableCellError)
from .tabular import EffectEstimate, StratumTable, tau_from_joint, tau_simple
from . import textclf
from .textclf import ClassifierModel, ErrorRates, FeatureSet, OptimizerConfig

INFEASIBLE_FLAG = "infeasible adjustment"
DEFAULT_SINGULAR_TOL = 1e-3
DEFAULT_FEASIBILITY_SLACK = 1e-9


@dataclass(frozen=True)
class AdjustedJoint:
    """Matrix-adjusted joint over (A, C, Y), possibly infeasible.

    ``p[a, c, y]`` may hold values outside [0, 1] when the adjustment
    over-corrects; ``feasible`` records that, and ``denominators`` keeps the
    per-cell 1 - eps - delta for diagnostics.
    """

    p: np.ndarray
    denominators: np.ndarray
    feasible: bool

    def __post_init__(self):
        self.p.flags.writeable = False
        self.denominators.flags.writeable = False

    @property
    def flags(self) -> tuple[str, ...]:
        return () if self.feasible else (INFEASIBLE_FLAG,)

    def clipped(self) -> np.ndarray:
        """Nonnegative, renormalized copy -- for reporting, never estimation."""
        q = np.clip(self.p, 0.0, None)
        total = q.sum()
        if total <= 0:
            raise SingularAdjustmentError("adjusted joint has no positive mass")
        return q / total


def _q_probs(q: Union[StratumTable, np.ndarray]) -> np.ndarray:
    """The observed (A*, C, Y) joint as probabilities q[a*, c, y].

    Arrays pass through unrenormalized (they must already sum to ~1): the
    identity-adjustment bitwise invariant needs the exact same values the
    unadjusted path consumes.
    """
    if isinstance(q, StratumTable):
        m = q.marginal(("A*", "C", "Y")) if q.names != ("A*", "C", "Y") else q
        return m.probs()
    arr = np.asarray(q, dtype=np.float64)
    if arr.shape != (2, 2, 2):
        raise ValueError("q must be a StratumTable or a (2, 2, 2) array over (A*, C, Y)")
    if (arr < 0).any() or abs(float(arr.sum()) - 1.0) > 1e-9:
        raise ValueError("q entries must be nonnegative and sum to 1")
    return arr


def matrix_adjust(q: Union[StratumTable, np.ndarray], err: ErrorRates,
                  singular_tol: float = DEFAULT_SINGULAR_TOL,
                  feasibility_slack: float = DEFAULT_FEASIBILITY_SLACK) -> AdjustedJoint:
    """Invert the misclassification relation cell by cell.

    Raises ``UnestimableCellError`` if any (c, y) error-rate cell is NaN and
    ``SingularAdjustmentError`` when |1 - eps - delta| < singular_tol
    somewhere.  Adjusted probabilities outside [-slack, 1 + slack] mark the
    result infeasible (but it is still returned).
    """
    qp = _q_probs(q)
    if not err.estimable.all():
        bad = [(c, y) for c in (0, 1) for y in (0, 1) if not err.estimable[c, y]]
        raise UnestimableCellError(f"error rates unestimable in cells {bad}")
    denom = 1.0 - err.eps - err.delta  # [c, y]
    if (np.abs(denom) < singular_tol).any():
        raise SingularAdjustmentError(f"min |1-eps-delta| = {np.abs(denom).min():.3g}")
    q0, q1 = qp[0], qp[1]  # [c, y]
    p1 = (-err.delta * q0 + (1.0 - err.delta) * q1) / denom
    p0 = ((1.0 - err.eps) * q0 - err.eps * q1) / denom
    p = np.stack([p0, p1])
    feasible = bool((p >= -feasibility_slack).all()
                    and (p <= 1.0 + feasibility_slack).all())
    return AdjustedJoint(p=p, denominators=denom, feasible=feasible)


def forward_flip(p_acy: np.ndarray, err: ErrorRates) -> np.ndarray:
    """Apply the error process truth-to-proxy: q[a*, c, y] from p[a, c, y].

    Here eps[c, y] = p(A*=0 | A=1, c, y) and delta[c, y] = p(A*=1 | A=0, c, y)
    are flip rates conditioned on the truth; ``matrix_adjust`` undoes exactly
    this map.
    """
    p = np.asarray(p_acy, dtype=np.float64)
    q1 = (1.0 - err.eps) * p[1] + err.delta * p[0]
    q0 = err.eps * p[1] + (1.0 - err.delta) * p[0]
    return np.stack([q0, q1])


def tau_me_from_proxy_joint(q: Union[StratumTable, np.ndarray], err: ErrorRates,
                            n_used: int,
                            singular_tol: float = DEFAULT_SINGULAR_TOL) -> EffectEstimate:
    """Adjusted effect from an observed proxy joint and error rates."""
    adj = matrix_adjust(q, err, singular_tol=singular_tol)
    return tau_from_joint(adj.p, estimator_id="me.adjusted", n_used=n_used,
                          flags=adj.flags)


def _proxy_counts(test: Dataset, proxies: np.ndarray) -> np.ndarray:
    flat = ((proxies.astype(np.int64) * 2 + test.c.astype(np.int64)) * 2
            + test.y.astype(np.int64))
    return np.bincount(flat, minlength=8).reshape(2, 2, 2).astype(np.float64)


def tau_me_adjusted(train: Dataset, test: Dataset, l2_lambda: float = 1e-4,
                    config: OptimizerConfig = None,
                    singular_tol: float = DEFAULT_SINGULAR_TOL,
                    model: Optional[ClassifierModel] = None,
                    proxies: Optional[np.ndarray] = None,
                    err: Optional[ErrorRates] = None) -> EffectEstimate:
    """Matrix-adjusted effect: classifier proxies on test, error rates from train.

    The classifier uses the full feature set including Y -- valid here because
    the proxy is a measurement of A, not a forecast.  ``model``, ``proxies``
    and ``err`` may be supplied precomputed (the harness shares one fit with
    the unadjusted estimator; tests inject known flips).
    """
    if len(test) == 0:
        raise EmptyDatasetError("test set is empty")
    if model is None and (proxies is None or err is None):
        model = textclf.fit(train, feature_set=FeatureSet.FULL,
                            l2_lambda=l2_lambda, config=config)
    if proxies is None:
        proxies = textclf.impute_proxies(model, test)
    if err is None:
        err = textclf.error_rates(model, train)
    q = _proxy_counts(test, proxies) / len(test)
    est = tau_me_from_proxy_joint(q, err, n_used=len(test), singular_tol=singular_tol)
    return est


def tau_me_unadjusted(test: Dataset, proxies: Optional[np.ndarray] = None) -> EffectEstimate:
    """The simple estimator treating the proxy as the true treatment."""
    if proxies is None:
        if test.proxy is None:
            raise ValueError("test set has no proxies; pass them explicitly")
        proxies = test.proxy
    q = _proxy_counts(test, np.asarray(proxies)) / len(test)
    return tau_from_joint(q, estimator_id="me.unadjusted", n_used=len(test))


def tau_me_naive(train: Dataset) -> EffectEstimate:
    """The simple estimator on the labeled training rows only."""
    sub = train.take(train.r_a == 1)
    est = tau_simple(sub)
    return EffectEstimate.from_arm_means(est.mean_y1, est.mean_y0, "me.naive",
                                         len(sub))
