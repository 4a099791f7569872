"""Synthetic data generators for the two corruption scenarios.

Both scenarios share the structural equations

    C ~ Ber(0.4)
    A ~ Ber(-0.3 C + 0.4)
    Y ~ Ber(0.2 C + 0.1 A + 0.5)

so the true effect of A on Y is exactly 0.1.  Text is a V-word binary
bag-of-words whose per-word probabilities shift linearly with the parents:

  missing data:       T_i ~ Ber(0.5 + u_i A + v_i C)
                      R_A ~ Ber(0.7 + 0.2 C - 0.4 Y + sum_i w_i T_i)
  measurement error:  T_i ~ Ber(0.5 + s_i C + u_i A + v_i Y)

with s, u, v ~ N(0, zeta) and w ~ N(0, eta) i.i.d. per word.  The linear
forms can leave [0, 1], so every Bernoulli parameter is clamped to
[clamp_epsilon, 1 - clamp_epsilon]; the margin is configurable and recorded
in run metadata.

Missingness depends on (T, C, Y) only -- never on the treatment itself -- so
the masking is MAR by construction.  The true treatment for masked rows (and
for every measurement-error test row) is returned in a separate array that
estimators never see; only the evaluation harness may read it.

Determinism: a fixed (seed-derived) generator plus (n, params) produces a
bit-identical dataset.  Draw order per chunk of ``_CHUNK`` rows is C, A, Y,
T, then R_A; text Bernoullis compare float32 uniforms against float32
thresholds (granularity 2**-24, far below any tolerance used here).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, packed_matvec
from .errors import EmptyDatasetError

_CHUNK = 25_000  # fixed: part of the determinism contract


@dataclass(frozen=True)
class SynthParams:
    """Generator constants. zeta/eta are standard deviations."""

    vocab_size: int = 4334
    zeta: float = 0.5
    eta: float = 0.1
    clamp_epsilon: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.vocab_size < 1:
            raise ValueError("vocab_size must be >= 1")
        if not 0 < self.clamp_epsilon < 0.5:
            raise ValueError("clamp_epsilon must lie in (0, 0.5)")
        if self.zeta < 0 or self.eta < 0:
            raise ValueError("zeta and eta must be nonnegative")


@dataclass(frozen=True)
class TextCoefficients:
    """Per-word effects: s (C), u (A), v (Y or C per scenario), w (R_A)."""

    s: np.ndarray
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    zeta: float
    eta: float

    def __post_init__(self):
        v_len = len(self.s)
        for name in ("u", "v", "w"):
            if len(getattr(self, name)) != v_len:
                raise ValueError(f"coefficient vector {name} length mismatch")
        for arr in (self.s, self.u, self.v, self.w):
            arr.flags.writeable = False

    @property
    def vocab_size(self) -> int:
        return len(self.s)


def sample_coefficients(params: SynthParams, rng: np.random.Generator) -> TextCoefficients:
    """Draw the word-effect vectors; order s, u, v, w."""
    v = params.vocab_size
    s = rng.normal(0.0, params.zeta, size=v)
    u = rng.normal(0.0, params.zeta, size=v)
    vv = rng.normal(0.0, params.zeta, size=v)
    w = rng.normal(0.0, params.eta, size=v)
    return TextCoefficients(s=s, u=u, v=vv, w=w, zeta=params.zeta, eta=params.eta)


def _clamp(p: np.ndarray, eps: float) -> np.ndarray:
    return np.clip(p, eps, 1.0 - eps)


def _draw(rng: np.random.Generator, p: np.ndarray) -> np.ndarray:
    return (rng.random(size=p.shape) < p).astype(np.uint8)


def _draw_text(rng: np.random.Generator, pattern: np.ndarray,
               p_table: np.ndarray) -> np.ndarray:
    """Text chunk as packed bits; rows share the per-pattern threshold rows."""
    u = rng.random(size=(len(pattern), p_table.shape[1]), dtype=np.float32)
    present = u < p_table[pattern]
    return np.packbits(present, axis=1)


def generate_md_dataset(n: int, coeffs: TextCoefficients, params: SynthParams,
                        rng: np.random.Generator) -> tuple[Dataset, np.ndarray]:
    """Missing-data sample of size n.

    Returns ``(dataset, true_a)``: the dataset has ``a`` masked wherever
    R_A=0, and ``true_a`` is the evaluation-only pre-masking treatment.
    """
    if n < 1:
        raise EmptyDatasetError("n must be >= 1")
    v = params.vocab_size
    eps = params.clamp_epsilon
    # 4 text threshold rows, one per (a, c) pattern, in float32 like the uniforms
    ac = np.array([(a, c) for a in (0, 1) for c in (0, 1)])
    p_text = _clamp(0.5 + np.outer(ac[:, 0], coeffs.u) + np.outer(ac[:, 1], coeffs.v),
                    eps).astype(np.float32)

    a_true = np.empty(n, dtype=np.int8)
    c_all = np.empty(n, dtype=np.uint8)
    y_all = np.empty(n, dtype=np.uint8)
    r_all = np.empty(n, dtype=np.uint8)
    bits = np.empty((n, (v + 7) // 8), dtype=np.uint8)
    for start in range(0, n, _CHUNK):
        end = min(start + _CHUNK, n)
        m = end - start
        c = _draw(rng, _clamp(np.full(m, 0.4), eps))
        a = _draw(rng, _clamp(0.4 - 0.3 * c, eps))
        y = _draw(rng, _clamp(0.5 + 0.1 * a + 0.2 * c, eps))
        chunk_bits = _draw_text(rng, (a * 2 + c).astype(np.intp), p_text)
        w_sum = packed_matvec(chunk_bits, v, coeffs.w)
        r = _draw(rng, _clamp(0.7 + 0.2 * c - 0.4 * y + w_sum, eps))
        a_true[start:end] = a
        c_all[start:end] = c
        y_all[start:end] = y
        r_all[start:end] = r
        bits[start:end] = chunk_bits
    a_obs = np.where(r_all == 1, a_true, np.int8(-1)).astype(np.int8)
    data = Dataset(a=a_obs, r_a=r_all, c=c_all, y=y_all, text=bits,
                   vocab_size=v, provenance="synthetic")
    return data, a_true


def _generate_me_block(n: int, coeffs: TextCoefficients, params: SynthParams,
                       rng: np.random.Generator, p_text: np.ndarray):
    v = params.vocab_size
    eps = params.clamp_epsilon
    a_all = np.empty(n, dtype=np.int8)
    c_all = np.empty(n, dtype=np.uint8)
    y_all = np.empty(n, dtype=np.uint8)
    bits = np.empty((n, (v + 7) // 8), dtype=np.uint8)
    for start in range(0, n, _CHUNK):
        end = min(start + _CHUNK, n)
        m = end - start
        c = _draw(rng, _clamp(np.full(m, 0.4), eps))
        a = _draw(rng, _clamp(0.4 - 0.3 * c, eps))
        y = _draw(rng, _clamp(0.5 + 0.1 * a + 0.2 * c, eps))
        bits[start:end] = _draw_text(rng, (a * 4 + c * 2 + y).astype(np.intp), p_text)
        a_all[start:end] = a
        c_all[start:end] = c
        y_all[start:end] = y
    return a_all, c_all, y_all, bits


def generate_me_datasets(n_train: int, n_test: int, coeffs: TextCoefficients,
                         params: SynthParams, rng: np.random.Generator
                         ) -> tuple[Dataset, Dataset, np.ndarray]:
    """Measurement-error train/test pair, i.i.d. from one process.

    The train set keeps its labels; the test set hides every treatment
    (``r_a=0`` throughout) and the true values come back as the third
    element, for the evaluation harness only.  Train rows are drawn first.
    """
    if n_train < 1 or n_test < 1:
        raise EmptyDatasetError("n_train and n_test must be >= 1")
    v = params.vocab_size
    acy = np.array([(a, c, y) for a in (0, 1) for c in (0, 1) for y in (0, 1)])
    p_text = _clamp(0.5 + np.outer(acy[:, 0], coeffs.u) + np.outer(acy[:, 1], coeffs.s)
                    + np.outer(acy[:, 2], coeffs.v),
                    params.clamp_epsilon).astype(np.float32)

    a_tr, c_tr, y_tr, bits_tr = _generate_me_block(n_train, coeffs, params, rng, p_text)
    train = Dataset(a=a_tr, r_a=np.ones(n_train, dtype=np.uint8), c=c_tr, y=y_tr,
                    text=bits_tr, vocab_size=v, provenance="synthetic")
    a_te, c_te, y_te, bits_te = _generate_me_block(n_test, coeffs, params, rng, p_text)
    test = Dataset(a=np.full(n_test, -1, dtype=np.int8),
                   r_a=np.zeros(n_test, dtype=np.uint8), c=c_te, y=y_te,
                   text=bits_te, vocab_size=v, provenance="synthetic")
    return train, test, a_te
