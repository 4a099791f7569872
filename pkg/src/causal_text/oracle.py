"""Brute-force enumeration over tiny discrete joints.

Ground truth for everything else: exact joint tables over (A, C, Y), up to
three text variables, and a missingness indicator or proxy, built from
factorized specifications and small enough to enumerate outright (at most
2**(4 + V) outcomes).  The identities being checked are dimension-free, so a
vocabulary of two or three words is enough to exercise them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from .errors import EmptyStratumError, PositivityError, UnidentifiedJointError
from .tabular import tau_from_joint

MAX_ORACLE_VOCAB = 3


@dataclass(frozen=True)
class JointTable:
    """Exact probability table over named binary variables."""

    names: tuple[str, ...]
    p: np.ndarray

    def __post_init__(self):
        if self.p.shape != (2,) * len(self.names):
            raise ValueError("p shape must be (2,)*len(names)")
        if (self.p < 0).any() or self.p.sum() <= 0:
            raise ValueError("parameter out of range: probabilities must be >= 0")
        if abs(float(self.p.sum()) - 1.0) > 1e-9:
            raise ValueError(f"joint sums to {self.p.sum()}, expected 1")
        self.p.flags.writeable = False

    def _axis(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"variable {name!r} not in joint {self.names}") from None

    def marginal(self, names: Sequence[str]) -> "JointTable":
        names = tuple(names)
        keep = [self._axis(n) for n in names]
        drop = tuple(i for i in range(len(self.names)) if i not in keep)
        p = self.p.sum(axis=drop) if drop else self.p
        order = np.argsort(np.argsort(keep))
        return JointTable(names=names, p=np.transpose(p, axes=order).copy())

    def prob(self, assignment: Mapping[str, int]) -> float:
        sub = self.p
        for name in sorted(assignment, key=self._axis, reverse=True):
            sub = np.take(sub, int(assignment[name]), axis=self._axis(name))
        return float(sub.sum())

    def conditional(self, target: Mapping[str, int], given: Mapping[str, int]) -> float:
        denom = self.prob(given)
        if denom <= 0:
            raise UnidentifiedJointError(f"conditioning event {given} has zero mass")
        return self.prob({**target, **given}) / denom


def _check_unit(value: np.ndarray, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if ((arr < 0) | (arr > 1)).any():
        raise ValueError(f"parameter out of range: {name} must lie in [0, 1]")
    return arr


def _text_names(v: int) -> tuple[str, ...]:
    return tuple(f"T{i}" for i in range(v))


def _text_joint(p_word: np.ndarray) -> np.ndarray:
    """Product joint over V conditionally independent words; shape (2,)*V."""
    out = np.ones(())
    for p1 in p_word:
        out = np.multiply.outer(out, np.array([1 - p1, p1]))
    return out


@dataclass(frozen=True)
class MissingJointSpec:
    """Factorized joint over (A, C, Y, T_0..T_{V-1}, R_A).

    ``p_r_given_atcy`` is indexed [a, t_0, ..., t_{V-1}, c, y] and gives
    p(R_A=1 | ...); a table constant over the ``a`` axis encodes MAR.
    """

    p_c: float
    p_a_given_c: np.ndarray        # (2,) p(A=1 | C=c)
    p_y_given_ac: np.ndarray       # (2, 2) p(Y=1 | A=a, C=c)
    p_t_given_acy: np.ndarray      # (V, 2, 2, 2) p(T_i=1 | a, c, y)
    p_r_given_atcy: np.ndarray     # (2,) + (2,)*V + (2, 2)

    @property
    def vocab_size(self) -> int:
        return self.p_t_given_acy.shape[0]


@dataclass(frozen=True)
class MeasurementJointSpec:
    """Factorized joint over (A, C, Y, T_0..T_{V-1}, A*).

    ``p_astar_given_atcy`` is indexed like the R_A factor above and gives
    p(A*=1 | a, t, c, y).
    """

    p_c: float
    p_a_given_c: np.ndarray
    p_y_given_ac: np.ndarray
    p_t_given_acy: np.ndarray
    p_astar_given_atcy: np.ndarray

    @property
    def vocab_size(self) -> int:
        return self.p_t_given_acy.shape[0]


def enumerate_joint(spec: Union[MissingJointSpec, MeasurementJointSpec]) -> JointTable:
    """Exact joint table for a factorized specification (V <= 3)."""
    v = spec.vocab_size
    if v > MAX_ORACLE_VOCAB:
        raise ValueError(f"oracle vocabulary capped at {MAX_ORACLE_VOCAB}, got {v}")
    p_c = float(_check_unit(spec.p_c, "p_c"))
    p_a = _check_unit(spec.p_a_given_c, "p_a_given_c")
    p_y = _check_unit(spec.p_y_given_ac, "p_y_given_ac")
    p_t = _check_unit(spec.p_t_given_acy, "p_t_given_acy")
    if isinstance(spec, MissingJointSpec):
        last_factor = _check_unit(spec.p_r_given_atcy, "p_r_given_atcy")
        last_name = "R_A"
    else:
        last_factor = _check_unit(spec.p_astar_given_atcy, "p_astar_given_atcy")
        last_name = "A*"
    if last_factor.shape != (2,) + (2,) * v + (2, 2):
        raise ValueError(f"last factor must have shape (2,)+(2,)*{v}+(2,2)")

    names = ("A", "C", "Y") + _text_names(v) + (last_name,)
    p = np.zeros((2,) * len(names))
    for a in (0, 1):
        for c in (0, 1):
            base_ac = (p_a[c] if a else 1 - p_a[c]) * (p_c if c else 1 - p_c)
            for y in (0, 1):
                base = base_ac * (p_y[a, c] if y else 1 - p_y[a, c])
                t_joint = _text_joint(p_t[:, a, c, y])          # (2,)*V
                last1 = last_factor[(a,) + (Ellipsis, c, y)]    # (2,)*V
                p[(a, c, y)][(Ellipsis, 1)] = base * t_joint * last1
                p[(a, c, y)][(Ellipsis, 0)] = base * t_joint * (1 - last1)
    return JointTable(names=names, p=p)


def exact_tau(table: JointTable, treatment: str = "A") -> float:
    """Backdoor functional evaluated exactly on the joint.

    Raises ``PositivityError`` when some (treatment, C) cell has zero mass.
    """
    m = table.marginal((treatment, "C", "Y"))
    if (m.p.sum(axis=2) <= 0).any():
        raise PositivityError("zero-mass (treatment, C) cell in exact joint")
    return tau_from_joint(m.p, estimator_id="oracle", n_used=0).tau


def naive_diff(table: JointTable, treatment: str = "A") -> float:
    """Unadjusted p(Y=1 | A=1) - p(Y=1 | A=0), exactly."""
    m = table.marginal((treatment, "Y"))
    p_a = m.p.sum(axis=1)
    if (p_a <= 0).any():
        raise EmptyStratumError("zero-mass treatment arm")
    return float(m.p[1, 1] / p_a[1] - m.p[0, 1] / p_a[0])


def generator_process_spec(vocab_size: int = 2, *, scenario: str = "md",
                          p_word: float = 0.5,
                          p_r_base: np.ndarray = None) -> MissingJointSpec:
    """The synthetic generator's structural constants as an oracle spec.

    With text and missingness coefficients zeroed (words at ``p_word``,
    missingness at its (C, Y)-only base rates) the joint is a direct product
    of the stated Bernoullis; tests compare against exactly that.
    """
    if scenario != "md":
        raise ValueError("only the missing-data factorization is needed here")
    c_ax = np.array([0.0, 1.0])
    p_a = 0.4 - 0.3 * c_ax
    p_y = 0.5 + 0.1 * np.array([[0.0], [1.0]]) + 0.2 * c_ax  # (a, c)
    p_t = np.full((vocab_size, 2, 2, 2), p_word)
    if p_r_base is None:
        p_r_base = np.array([[0.7, 0.3], [0.9, 0.5]])  # [c, y]: 0.7 + 0.2c - 0.4y
    p_r = np.broadcast_to(p_r_base, (2,) + (2,) * vocab_size + (2, 2)).copy()
    return MissingJointSpec(p_c=0.4, p_a_given_c=p_a, p_y_given_ac=p_y,
                            p_t_given_acy=p_t, p_r_given_atcy=p_r)
