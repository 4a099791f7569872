"""Regularized logistic regression over bag-of-words plus structured features.

Predicts the treatment A from the text T and the structured C, Y columns.
One weight vector of length V + 3 covers every variant: text block, C, Y,
bias, with the blocks excluded by the chosen :class:`FeatureSet` pinned at
exactly zero.  Used two ways downstream: sampling imputations of a missing
treatment, and generating deterministic proxies whose error rates feed the
measurement-error matrix adjustment.

The objective is mean negative log-likelihood plus ``l2_lambda * ||w||^2 / 2``
with the bias unpenalized; the optimizer is deterministic full-batch gradient
descent with a backtracking (Armijo) step size, so identical inputs give
identical weights.  Internally the feature columns are mean-centered -- an
exact reparameterization that only shifts the bias but removes the huge
curvature along the all-ones direction of dense binary features.  Training
consumes only rows with an observed treatment (r_a = 1): those are the only
rows carrying a label.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .data import DataRow, Dataset, packed_column_sums, packed_matvec, packed_rmatvec
from .errors import DegenerateLabelsError, MissingFieldError

_GROW = 2.0  # step growth after an accepted iteration
_ARMIJO = 1e-4


class FeatureSet(enum.Enum):
    FULL = "full"        # text, C, Y
    NO_Y = "no_y"        # text, C
    NO_TEXT = "no_text"  # C, Y

    @property
    def uses_text(self) -> bool:
        return self is not FeatureSet.NO_TEXT

    @property
    def uses_y(self) -> bool:
        return self is not FeatureSet.NO_Y


@dataclass(frozen=True)
class OptimizerConfig:
    max_iter: int = 100
    tol: float = 1e-5          # stop when max|gradient| falls below this
    init_step: float = 1.0
    backtrack: float = 0.5
    max_backtracks: int = 60
    init_scale: float = 0.0    # > 0 draws the starting point from the rng

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack must lie in (0, 1)")


@dataclass(frozen=True)
class ClassifierModel:
    """Fitted weights plus training metadata; immutable and thread-safe.

    ``weights`` is [w_text (V), w_c, w_y, bias]; blocks outside the feature
    set are exactly zero.
    """

    weights: np.ndarray
    feature_set: FeatureSet
    l2_lambda: float
    vocab_size: int
    n_iter: int
    final_objective: float
    converged: bool
    grad_norm: float
    objective_trace: tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.weights) != self.vocab_size + 3:
            raise ValueError("weights must have length vocab_size + 3")
        if not np.isfinite(self.weights).all():
            raise ValueError("weights must be finite")
        self.weights.flags.writeable = False

    @property
    def w_text(self) -> np.ndarray:
        return self.weights[: self.vocab_size]

    @property
    def w_c(self) -> float:
        return float(self.weights[self.vocab_size])

    @property
    def w_y(self) -> float:
        return float(self.weights[self.vocab_size + 1])

    @property
    def bias(self) -> float:
        return float(self.weights[self.vocab_size + 2])

    def decision_values(self, data: Dataset, idx: Optional[np.ndarray] = None) -> np.ndarray:
        """w . x for the selected rows (all rows when idx is None)."""
        if data.vocab_size != self.vocab_size:
            raise MissingFieldError(
                f"dataset vocab {data.vocab_size} != model vocab {self.vocab_size}")
        bits = data.text if idx is None else data.text[idx]
        c = data.c if idx is None else data.c[idx]
        y = data.y if idx is None else data.y[idx]
        z = np.full(len(c), self.bias, dtype=np.float64)
        if self.feature_set.uses_text:
            z += packed_matvec(bits, self.vocab_size, self.w_text)
        z += self.w_c * c
        if self.feature_set.uses_y:
            z += self.w_y * y
        return z

    def predict_proba_batch(self, data: Dataset, idx: Optional[np.ndarray] = None) -> np.ndarray:
        return _sigmoid(self.decision_values(data, idx))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class _Design:
    """Training design: packed text block plus dense structured columns."""

    def __init__(self, data: Dataset, idx: np.ndarray, feature_set: FeatureSet):
        self.feature_set = feature_set
        self.vocab_size = data.vocab_size
        self.bits = data.text[idx] if feature_set.uses_text else None
        cols = [data.c[idx].astype(np.float64)]
        if feature_set.uses_y:
            cols.append(data.y[idx].astype(np.float64))
        self.extra = np.column_stack(cols)
        self.n = len(idx)
        self.n_text = self.vocab_size if feature_set.uses_text else 0
        self.mu = np.empty(self.n_text + self.extra.shape[1])
        if feature_set.uses_text:
            self.mu[: self.n_text] = packed_column_sums(self.bits, self.vocab_size) / self.n
        self.mu[self.n_text:] = self.extra.mean(axis=0)

    @property
    def dim(self) -> int:
        return self.n_text + self.extra.shape[1]

    def all_columns_constant(self) -> bool:
        if self.feature_set.uses_text:
            sums = self.mu[: self.n_text] * self.n
            if ((sums > 0) & (sums < self.n)).any():
                return False
        return bool((self.extra == self.extra[0]).all())

    def matvec(self, w: np.ndarray) -> np.ndarray:
        z = self.extra @ w[self.n_text:]
        if self.feature_set.uses_text:
            z += packed_matvec(self.bits, self.vocab_size, w[: self.n_text])
        return z

    def rmatvec(self, r: np.ndarray) -> np.ndarray:
        out = np.empty(self.dim)
        if self.feature_set.uses_text:
            out[: self.n_text] = packed_rmatvec(self.bits, self.vocab_size, r)
        out[self.n_text:] = r @ self.extra
        return out

    def embed(self, w: np.ndarray, bias: float) -> np.ndarray:
        """Full (V + 3)-vector from active weights and the uncentered bias."""
        full = np.zeros(self.vocab_size + 3)
        if self.feature_set.uses_text:
            full[: self.vocab_size] = w[: self.n_text]
        full[self.vocab_size] = w[self.n_text]
        if self.feature_set.uses_y:
            full[self.vocab_size + 1] = w[self.n_text + 1]
        full[self.vocab_size + 2] = bias
        return full


def fit(data: Dataset, feature_set: FeatureSet = FeatureSet.FULL,
        l2_lambda: float = 1e-4, config: OptimizerConfig = None,
        rng: np.random.Generator = None) -> ClassifierModel:
    """Fit on the labeled (r_a = 1) rows of ``data``.

    Raises ``DegenerateLabelsError`` unless both label values appear.
    Non-convergence within ``config.max_iter`` returns the model anyway with
    ``converged=False`` recorded.
    """
    if l2_lambda < 0:
        raise ValueError("l2_lambda must be nonnegative")
    config = config or OptimizerConfig()
    idx = np.flatnonzero(data.r_a == 1)
    labels = data.a[idx].astype(np.float64)
    if len(idx) < 2 or labels.min() == labels.max():
        raise DegenerateLabelsError(f"{len(idx)} labeled rows, "
                                    f"{int(labels.sum())} positive")
    design = _Design(data, idx, feature_set)
    if design.all_columns_constant():
        raise DegenerateLabelsError("constant features")
    n, mu = design.n, design.mu

    w = np.zeros(design.dim)
    if config.init_scale > 0:
        if rng is None:
            raise ValueError("init_scale > 0 requires an rng")
        w = rng.normal(0.0, config.init_scale, size=design.dim)
    b = 0.0
    # centered scores: z_i = (x_i - mu) . w + b
    z = design.matvec(w) - float(mu @ w) + b

    def objective(z_val: np.ndarray, w_val: np.ndarray) -> float:
        nll = float(np.mean(np.logaddexp(0.0, z_val) - labels * z_val))
        return nll + 0.5 * l2_lambda * float(w_val @ w_val)

    f = objective(z, w)
    trace = [f]
    step = config.init_step
    converged = False
    g_inf = math.inf
    it = 0
    for it in range(1, config.max_iter + 1):
        res = _sigmoid(z) - labels
        res_mean = float(res.mean())
        g_w = design.rmatvec(res) / n - mu * res_mean + l2_lambda * w
        g_b = res_mean
        g_inf = max(float(np.abs(g_w).max()), abs(g_b))
        if g_inf <= config.tol:
            converged = True
            break
        # direction = -gradient; z moves along zd per unit step
        zd = -(design.matvec(g_w) - float(mu @ g_w) + g_b)
        g_sq = float(g_w @ g_w) + g_b * g_b
        t = step * _GROW
        accepted = False
        for _ in range(config.max_backtracks):
            z_new = z + t * zd
            f_new = objective(z_new, w - t * g_w)
            if f_new <= f - _ARMIJO * t * g_sq:
                accepted = True
                break
            t *= config.backtrack
        if not accepted:
            break  # step underflow: cannot decrease further
        w = w - t * g_w
        b = b - t * g_b
        z = z_new
        f = f_new
        step = t
        # guarded Newton polish of the unpenalized bias: with large l2_lambda
        # the shared step size collapses to ~1/lambda and would freeze the
        # intercept; this scalar step costs no kernel pass and never
        # increases the objective
        for _ in range(2):
            p = _sigmoid(z)
            gb = float(np.mean(p - labels))
            if abs(gb) <= config.tol:
                break
            hb = float(np.mean(p * (1.0 - p))) + 1e-12
            db = -gb / hb
            tb = 1.0
            improved = False
            for _ in range(30):
                z_try = z + tb * db
                f_try = objective(z_try, w)
                if f_try <= f:
                    improved = True
                    break
                tb *= 0.5
            if not improved:
                break
            z = z_try
            b += tb * db
            f = f_try
        trace.append(f)

    bias = b - float(mu @ w)
    return ClassifierModel(weights=design.embed(w, bias), feature_set=feature_set,
                           l2_lambda=l2_lambda, vocab_size=data.vocab_size,
                           n_iter=it, final_objective=f, converged=converged,
                           grad_norm=g_inf, objective_trace=tuple(trace))


def _active_slices(design: _Design, weights: np.ndarray):
    """Active-coordinate view (w, bias) of a full (V + 3) weight vector."""
    v = design.vocab_size
    w = np.empty(design.dim)
    if design.feature_set.uses_text:
        w[: design.n_text] = weights[:v]
    w[design.n_text] = weights[v]
    if design.feature_set.uses_y:
        w[design.n_text + 1] = weights[v + 1]
    return w, float(weights[v + 2])


def objective_value(data: Dataset, feature_set: FeatureSet, l2_lambda: float,
                    weights: np.ndarray) -> float:
    """Penalized mean NLL at an arbitrary full weight vector (bias unpenalized)."""
    idx = np.flatnonzero(data.r_a == 1)
    labels = data.a[idx].astype(np.float64)
    design = _Design(data, idx, feature_set)
    w, bias = _active_slices(design, np.asarray(weights, dtype=np.float64))
    z = design.matvec(w) + bias
    nll = float(np.mean(np.logaddexp(0.0, z) - labels * z))
    return nll + 0.5 * l2_lambda * float(w @ w)


def objective_gradient(data: Dataset, feature_set: FeatureSet, l2_lambda: float,
                       weights: np.ndarray) -> np.ndarray:
    """Analytic gradient in raw coordinates, zero in inactive blocks."""
    idx = np.flatnonzero(data.r_a == 1)
    labels = data.a[idx].astype(np.float64)
    design = _Design(data, idx, feature_set)
    w, bias = _active_slices(design, np.asarray(weights, dtype=np.float64))
    res = _sigmoid(design.matvec(w) + bias) - labels
    g_active = design.rmatvec(res) / design.n + l2_lambda * w
    return design.embed(g_active, float(res.mean()))


def _row_score(model: ClassifierModel, row: DataRow) -> float:
    z = model.bias + model.w_c * row.c
    if model.feature_set.uses_y:
        z += model.w_y * row.y
    if model.feature_set.uses_text:
        for j in row.text:
            if j >= model.vocab_size:
                raise MissingFieldError(f"text index {j} outside model vocabulary "
                                        f"of size {model.vocab_size}")
            z += model.weights[j]
    return z


def predict_proba(model: ClassifierModel, row: DataRow) -> float:
    """p(A=1 | features) = sigmoid(w . x), in (0, 1)."""
    return float(_sigmoid(np.array([_row_score(model, row)]))[0])


def sample_label(model: ClassifierModel, row: DataRow,
                 rng: np.random.Generator) -> int:
    """One Bernoulli draw with parameter ``predict_proba``."""
    return int(rng.random() < predict_proba(model, row))


def impute_proxy(model: ClassifierModel, row: DataRow) -> int:
    """Deterministic proxy: 1 iff predict_proba >= 0.5 (ties go to 1)."""
    return int(_row_score(model, row) >= 0.0)


def impute_proxies(model: ClassifierModel, data: Dataset,
                   idx: Optional[np.ndarray] = None) -> np.ndarray:
    """Vectorized ``impute_proxy`` over a dataset."""
    return (model.decision_values(data, idx) >= 0.0).astype(np.int8)


@dataclass(frozen=True)
class ErrorRates:
    """Stratum-wise misclassification rates of the proxy.

    ``eps[c, y] = p(A=0 | A*=1, C=c, Y=y)`` and
    ``delta[c, y] = p(A=1 | A*=0, C=c, Y=y)``, with NaN marking cells whose
    conditioning event had no support.  ``support[c, y, a_star]`` counts the
    labeled rows behind each estimate.
    """

    eps: np.ndarray
    delta: np.ndarray
    support: np.ndarray

    def __post_init__(self):
        for arr in (self.eps, self.delta, self.support):
            arr.flags.writeable = False

    @property
    def estimable(self) -> np.ndarray:
        return np.isfinite(self.eps) & np.isfinite(self.delta)

    @classmethod
    def constant(cls, eps: float, delta: float) -> "ErrorRates":
        """Known (injected) rates, identical in every stratum."""
        return cls(eps=np.full((2, 2), float(eps)),
                   delta=np.full((2, 2), float(delta)),
                   support=np.zeros((2, 2, 2), dtype=np.int64))


def error_rates(model: ClassifierModel, data: Dataset) -> ErrorRates:
    """Empirical eps/delta of the model's deterministic proxies.

    Uses the labeled (r_a = 1) rows; each (c, y) cell needs at least one
    proxy of each value, else the affected entry is NaN and consumers decide
    what to do about it.
    """
    idx = np.flatnonzero(data.r_a == 1)
    if len(idx) == 0:
        raise DegenerateLabelsError("no labeled rows")
    proxies = impute_proxies(model, data, idx)
    a = data.a[idx].astype(np.int64)
    c = data.c[idx].astype(np.int64)
    y = data.y[idx].astype(np.int64)
    flat = ((c * 2 + y) * 2 + proxies) * 2 + a
    counts = np.bincount(flat, minlength=16).reshape(2, 2, 2, 2)  # [c, y, a*, a]
    support = counts.sum(axis=3)
    eps = np.where(support[:, :, 1] > 0,
                   counts[:, :, 1, 0] / np.maximum(support[:, :, 1], 1), np.nan)
    delta = np.where(support[:, :, 0] > 0,
                     counts[:, :, 0, 1] / np.maximum(support[:, :, 0], 1), np.nan)
    return ErrorRates(eps=eps, delta=delta, support=support)


def save_model(model: ClassifierModel, path) -> None:
    """Plain-text dump: header (feature_set, lambda, V), one weight per line."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"feature_set={model.feature_set.value}\n")
        fh.write(f"l2_lambda={model.l2_lambda!r}\n")
        fh.write(f"vocab_size={model.vocab_size}\n")
        for wj in model.weights:
            fh.write(f"{float(wj)!r}\n")


def load_model(path) -> ClassifierModel:
    with open(path, "r", encoding="utf-8") as fh:
        fs = FeatureSet(fh.readline().strip().split("=", 1)[1])
        lam = float(fh.readline().strip().split("=", 1)[1])
        v = int(fh.readline().strip().split("=", 1)[1])
        weights = np.array([float(line) for line in fh], dtype=np.float64)
    return ClassifierModel(weights=weights, feature_set=fs, l2_lambda=lam,
                           vocab_size=v, n_iter=0, final_objective=math.nan,
                           converged=True, grad_norm=math.nan)
