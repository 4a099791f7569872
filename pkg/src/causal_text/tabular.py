"""Stratified counting and the backdoor-adjusted effect on complete data.

The estimand is the average treatment effect tau = E[Y(1)] - E[Y(0)] of a
binary treatment A on a binary outcome Y confounded by a binary C.  With
complete data it is identified by backdoor adjustment,

    tau = sum_c ( p(Y=1 | A=1, C=c) - p(Y=1 | A=0, C=c) ) p(C=c),

and every estimator in this package ultimately evaluates that functional on
some (possibly corrected) joint over (A, C, Y).  ``tau_from_joint`` is the
single arithmetic path used everywhere, so estimators that are supposed to
coincide (for example the unadjusted and adjusted measurement-error estimates
under a zero error matrix) coincide bit for bit.

No smoothing anywhere: an empty stratum is a hard estimation failure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .data import DataRow, Dataset
from .errors import (EmptyDatasetError, EmptyStratumError, MissingFieldError,
                     PositivityError)

VARIABLES = ("A", "C", "Y", "R_A", "A*")


@dataclass(frozen=True)
class StratumTable:
    """Joint counts over an ordered tuple of binary variables.

    ``counts`` has shape (2,) * len(names), indexed by variable values in
    name order.
    """

    names: tuple[str, ...]
    counts: np.ndarray

    def __post_init__(self):
        if self.counts.shape != (2,) * len(self.names):
            raise ValueError("counts shape must be (2,)*len(names)")
        if self.counts.dtype != np.int64:
            object.__setattr__(self, "counts", self.counts.astype(np.int64))
        if (self.counts < 0).any():
            raise ValueError("counts must be nonnegative")
        self.counts.flags.writeable = False

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def _axis(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"variable {name!r} not in table {self.names}") from None

    def count(self, assignment: Mapping[str, int]) -> int:
        """Count of rows matching a (possibly partial) assignment."""
        sub = self.counts
        for name in sorted(assignment, key=self._axis, reverse=True):
            sub = np.take(sub, int(assignment[name]), axis=self._axis(name))
        return int(sub.sum())

    def marginal(self, names: Sequence[str]) -> "StratumTable":
        names = tuple(names)
        keep = [self._axis(n) for n in names]
        drop = tuple(i for i in range(len(self.names)) if i not in keep)
        counts = self.counts.sum(axis=drop) if drop else self.counts
        # reorder axes to the requested name order
        order = np.argsort(np.argsort(keep))
        return StratumTable(names=names, counts=np.transpose(counts, axes=order).copy())

    def probs(self) -> np.ndarray:
        return self.counts / self.total


@dataclass(frozen=True)
class EffectEstimate:
    """A causal-effect value with its per-arm counterfactual means.

    ``tau == mean_y1 - mean_y0`` holds bit-exactly; construct via
    :meth:`from_arm_means`.  ``flags`` carries validity marks such as
    ``"infeasible adjustment"`` -- when present, the [-1, 1] range check is
    waived (the raw over-corrected value is preserved, not hidden).
    """

    tau: float
    mean_y1: float
    mean_y0: float
    estimator_id: str
    n_used: int
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        if self.tau != self.mean_y1 - self.mean_y0:
            raise ValueError("tau must equal mean_y1 - mean_y0 exactly")
        if not self.flags:
            eps = 1e-12
            if not (-1 - eps <= self.tau <= 1 + eps):
                raise ValueError(f"tau {self.tau} outside [-1, 1]")
            for m in (self.mean_y1, self.mean_y0):
                if not (-eps <= m <= 1 + eps):
                    raise ValueError(f"arm mean {m} outside [0, 1]")

    @classmethod
    def from_arm_means(cls, mean_y1: float, mean_y0: float, estimator_id: str,
                       n_used: int, flags: tuple[str, ...] = ()) -> "EffectEstimate":
        return cls(tau=mean_y1 - mean_y0, mean_y1=mean_y1, mean_y0=mean_y0,
                   estimator_id=estimator_id, n_used=n_used, flags=tuple(flags))


def _as_dataset_columns(data, var: str) -> np.ndarray:
    """Resolve a variable name to a 0/1 column of a Dataset."""
    if var == "A":
        a = data.a.astype(np.int64)
        missing = data.r_a == 0
        if missing.any():
            if data.proxy is None:
                raise MissingFieldError(f"A requested but {int(missing.sum())} rows "
                                        "have r_a=0 and no proxy")
            a = np.where(missing, data.proxy.astype(np.int64), a)
        return a
    if var == "C":
        return data.c.astype(np.int64)
    if var == "Y":
        return data.y.astype(np.int64)
    if var == "R_A":
        return data.r_a.astype(np.int64)
    if var == "A*":
        if data.proxy is None:
            raise MissingFieldError("A* requested but no proxy present")
        return data.proxy.astype(np.int64)
    raise ValueError(f"unknown variable {var!r}; expected one of {VARIABLES}")


def _row_value(row: DataRow, var: str):
    if var == "A":
        v = row.a if row.a is not None else row.proxy
        if v is None:
            raise MissingFieldError("A requested on a row with r_a=0 and no proxy")
        return v
    if var == "C":
        return row.c
    if var == "Y":
        return row.y
    if var == "R_A":
        return row.r_a
    if var == "A*":
        if row.proxy is None:
            raise MissingFieldError("A* requested on a row without a proxy")
        return row.proxy
    raise ValueError(f"unknown variable {var!r}; expected one of {VARIABLES}")


def stratum_counts(rows: Union[Dataset, Iterable[DataRow]],
                   variables: Sequence[str]) -> StratumTable:
    """Joint counts of the requested binary variables over the rows.

    ``A`` resolves to the observed treatment, falling back to the proxy on
    rows with r_a=0; rows with neither raise ``MissingFieldError``.  ``A*``
    requires the proxy outright.
    """
    names = tuple(variables)
    if not names:
        raise ValueError("need at least one variable")
    for v in names:
        if v not in VARIABLES:
            raise ValueError(f"unknown variable {v!r}; expected one of {VARIABLES}")
    if isinstance(rows, Dataset):
        cols = [_as_dataset_columns(rows, v) for v in names]
        n = len(rows)
    else:
        rows = list(rows)
        if not rows:
            raise EmptyDatasetError("no rows to count")
        cols = [np.array([_row_value(r, v) for r in rows], dtype=np.int64)
                for v in names]
        n = len(rows)
    flat = np.zeros(n, dtype=np.int64)
    for col in cols:
        flat = flat * 2 + col
    counts = np.bincount(flat, minlength=2 ** len(names)).reshape((2,) * len(names))
    return StratumTable(names=names, counts=counts)


def conditional_prob(table: StratumTable, target: Mapping[str, int],
                     given: Mapping[str, int] = None) -> float:
    """count(target and given) / count(given); no smoothing.

    Raises ``EmptyStratumError`` when the conditioning stratum is empty.
    """
    given = dict(given or {})
    overlap = set(target) & set(given)
    if overlap:
        raise ValueError(f"target and given share variables {sorted(overlap)}")
    denom = table.count(given) if given else table.total
    if denom == 0:
        raise EmptyStratumError(f"given={given}")
    num = table.count({**target, **given})
    return num / denom


def tau_from_joint(p_acy: np.ndarray, estimator_id: str, n_used: int,
                   flags: tuple[str, ...] = ()) -> EffectEstimate:
    """Backdoor functional evaluated on a joint over (A, C, Y).

    ``p_acy[a, c, y]`` must sum to ~1.  Any arm/confounder cell with zero
    (or, for flagged adjusted joints, exactly zero) mass raises
    ``PositivityError``.  Negative cells are permitted only when ``flags``
    mark the joint as an infeasible adjustment.
    """
    p = np.asarray(p_acy, dtype=np.float64)
    if p.shape != (2, 2, 2):
        raise ValueError("joint must have shape (2, 2, 2)")
    p_ac = p.sum(axis=2)
    p_c = p_ac.sum(axis=0)
    if (p_ac == 0).any() or (not flags and (p_ac <= 0).any()):
        bad = [(a, c) for a in (0, 1) for c in (0, 1) if p_ac[a, c] <= 0]
        raise PositivityError(f"empty (A, C) strata {bad}")
    p_y1 = p[:, :, 1] / p_ac
    mean_y1 = float(p_y1[1] @ p_c)
    mean_y0 = float(p_y1[0] @ p_c)
    return EffectEstimate.from_arm_means(mean_y1, mean_y0, estimator_id, n_used,
                                         flags=flags)


def _counts_acy(data, treatment: str) -> np.ndarray:
    """(2,2,2) int64 counts over (A-or-proxy, C, Y)."""
    table = stratum_counts(data, (treatment, "C", "Y"))
    return table.counts


def tau_simple(rows: Union[Dataset, Iterable[DataRow]],
               treatment: str = "A") -> EffectEstimate:
    """Backdoor-adjusted effect from complete binary rows.

    ``treatment="A"`` consumes the observed (or, per caller, proxied)
    treatment; ``treatment="A*"`` consumes the proxy outright.  An empty
    (A, C) stratum raises ``PositivityError``.
    """
    counts = _counts_acy(rows, treatment)
    total = int(counts.sum())
    n_used = len(rows) if isinstance(rows, Dataset) else total
    return tau_from_joint(counts / total, estimator_id="tau_simple", n_used=n_used)
