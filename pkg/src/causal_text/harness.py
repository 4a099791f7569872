"""Monte-Carlo evaluation harness.

For each (size, replicate) cell the harness draws a sample, corrupts the
treatment (masking for the missing-data scenario, hiding it behind a
classifier proxy for measurement error), runs every scenario model, and
scores each against the perfect-data estimator -- the simple estimator
computed on the same sample with the corruption undone.  Scores are squared
distances; per (model, n) the harness reports their mean and standard error
across replicates, which is what the ``.dat`` plot files carry.

Every cell derives its own random stream from (seed, scenario, n, replicate),
so results are independent of execution order and parallel runs emit
byte-identical files.  Estimator failures (positivity violations, singular
adjustments, degenerate labels) are counted per (model, n) and never abort a
run; a perfect-estimator positivity failure causes one resample with the
cell's next stream, also counted.

Yelp-sourced runs reuse the synthetic corruption mechanisms over real rows:
the missingness model resamples text coefficients on the Yelp vocabulary and
applies the same linear R_A equation; measurement error splits off a labeled
training subset and hides the treatment elsewhere.
"""

from __future__ import annotations

import dataclasses
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import measure, missing, textclf
from .data import Dataset, packed_matvec
from .errors import EstimationError
from .rng import derive_stream
from .synthgen import (SynthParams, TextCoefficients, generate_md_dataset,
                       generate_me_datasets, sample_coefficients)
from .tabular import EffectEstimate, tau_from_joint
from .textclf import FeatureSet, OptimizerConfig

MD_MODELS = ("naive", "no_text", "no_y", "full")
ME_MODELS = ("naive", "unadjusted", "adjusted")
# synthetic vocabulary sizes for the two Yelp-derived vocabulary profiles
VOCAB_PROFILES = {1000: 4334, 10: 53197}
MAX_PLAIN_SIZE = 10 ** 6


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str                  # "md" | "me"
    source: str                    # "synthetic" | "yelp"
    sizes: tuple[int, ...]
    replicates: int = 10
    m_imputations: int = 20
    vocab_min_count: int = 1000    # 1000-style or 10-style vocabulary profile
    seed: int = 0
    zeta: float = 0.5
    eta: float = 0.1
    clamp_epsilon: float = 0.01
    l2_lambda: float = 1e-4
    max_iter: int = 100
    tol: float = 1e-5
    singular_tol: float = 1e-3
    me_train_min: int = 500
    me_train_frac: float = 0.1
    jobs: int = 1
    allow_large: bool = False

    def __post_init__(self):
        if self.scenario not in ("md", "me"):
            raise ValueError(f"scenario must be 'md' or 'me', got {self.scenario!r}")
        if self.source not in ("synthetic", "yelp"):
            raise ValueError(f"source must be 'synthetic' or 'yelp', got {self.source!r}")
        sizes = tuple(int(n) for n in self.sizes)
        if not sizes or any(n < 1 for n in sizes):
            raise ValueError("sizes must be positive")
        if list(sizes) != sorted(sizes):
            raise ValueError("sizes must be ascending")
        if max(sizes) > MAX_PLAIN_SIZE and not self.allow_large:
            raise ValueError(f"sizes above {MAX_PLAIN_SIZE} need allow_large=True")
        object.__setattr__(self, "sizes", sizes)
        if self.replicates < 2:
            raise ValueError("replicates must be >= 2 (standard error needs it)")
        if self.vocab_min_count not in VOCAB_PROFILES:
            raise ValueError(f"vocab_min_count must be one of {sorted(VOCAB_PROFILES)}")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")

    @property
    def models(self) -> tuple[str, ...]:
        return MD_MODELS if self.scenario == "md" else ME_MODELS

    def synth_params(self) -> SynthParams:
        return SynthParams(vocab_size=VOCAB_PROFILES[self.vocab_min_count],
                           zeta=self.zeta, eta=self.eta,
                           clamp_epsilon=self.clamp_epsilon, seed=self.seed)

    def optimizer(self) -> OptimizerConfig:
        return OptimizerConfig(max_iter=self.max_iter, tol=self.tol)

    def me_train_size(self, n: int) -> int:
        return max(self.me_train_min, int(round(n * self.me_train_frac)))

    def manifest(self) -> dict:
        d = dataclasses.asdict(self)
        d["sizes"] = list(self.sizes)
        d["models"] = list(self.models)
        d["synthetic_vocab_size"] = VOCAB_PROFILES[self.vocab_min_count]
        return d


@dataclass(frozen=True)
class ResultRecord:
    model: str
    n: int
    err: float     # mean squared distance to the perfect-data estimate
    se: float      # standard error of the squared distances
    failures: int

    def __post_init__(self):
        if not math.isnan(self.err) and self.err < 0:
            raise ValueError("err must be nonnegative")
        if not math.isnan(self.se) and self.se < 0:
            raise ValueError("se must be nonnegative")


@dataclass(frozen=True)
class ReplicateOutcome:
    model: str
    n: int
    replicate: int
    tau: float          # NaN when the estimator failed
    perfect_tau: float
    sq: float           # NaN when the estimator failed
    failed: bool
    error: str = ""


@dataclass
class RunResult:
    records: list[ResultRecord]
    replicate_log: list[ReplicateOutcome]
    perfect_resamples: int = 0


def perfect_data_estimate(data: Dataset, true_a: np.ndarray) -> EffectEstimate:
    """The simple estimator on the same sample with the corruption undone."""
    a = np.asarray(true_a).astype(np.int64)
    counts = (np.bincount((a * 2 + data.c.astype(np.int64)) * 2 + data.y,
                          minlength=8).reshape(2, 2, 2))
    return tau_from_joint(counts / len(data), estimator_id="perfect",
                          n_used=len(data))


def apply_md_mask(data: Dataset, coeffs: TextCoefficients, clamp_epsilon: float,
                  rng: np.random.Generator) -> tuple[Dataset, np.ndarray]:
    """Mask a fully observed dataset with the linear missingness model.

    R_A ~ Ber(clamp(0.7 + 0.2 C - 0.4 Y + sum_i w_i T_i)); depends on the
    text but never on the treatment, so the masking is MAR.
    """
    if (data.r_a != 1).any():
        raise ValueError("can only mask a fully observed dataset")
    w_sum = packed_matvec(data.text, data.vocab_size, coeffs.w)
    p = np.clip(0.7 + 0.2 * data.c - 0.4 * data.y + w_sum,
                clamp_epsilon, 1 - clamp_epsilon)
    r = (rng.random(len(data)) < p).astype(np.uint8)
    true_a = data.a.copy()
    masked = data.with_columns(a=np.where(r == 1, data.a, np.int8(-1)), r_a=r)
    return masked, true_a


def apply_me_split(data: Dataset, train_size: int, rng: np.random.Generator
                   ) -> tuple[Dataset, Dataset, np.ndarray]:
    """Random split into a labeled train set and a label-hidden test set."""
    n = len(data)
    if not 0 < train_size < n:
        raise ValueError("train_size must be in (0, n)")
    perm = rng.permutation(n)
    train = data.take(perm[:train_size])
    test_rows = data.take(perm[train_size:])
    true_a = test_rows.a.copy()
    test = test_rows.with_columns(a=np.full(len(test_rows), -1, dtype=np.int8),
                                  r_a=np.zeros(len(test_rows), dtype=np.uint8))
    return train, test, true_a


def _md_sample(config: ExperimentConfig, n: int, rep: int, attempt: int,
               yelp_data: Optional[Dataset]):
    params = config.synth_params()
    if config.source == "synthetic":
        coeffs = sample_coefficients(
            params, derive_stream(config.seed, "md", n, rep, "coeffs", attempt))
        return generate_md_dataset(
            n, coeffs, params, derive_stream(config.seed, "md", n, rep, "data", attempt))
    rng = derive_stream(config.seed, "md", n, rep, "yelp", attempt)
    sample = _draw_yelp_rows(yelp_data, n, rng)
    yelp_params = dataclasses.replace(params, vocab_size=yelp_data.vocab_size)
    coeffs = sample_coefficients(yelp_params, rng)
    return apply_md_mask(sample, coeffs, config.clamp_epsilon, rng)


def _me_sample(config: ExperimentConfig, n: int, rep: int, attempt: int,
               yelp_data: Optional[Dataset]):
    params = config.synth_params()
    n_train = config.me_train_size(n)
    if config.source == "synthetic":
        coeffs = sample_coefficients(
            params, derive_stream(config.seed, "me", n, rep, "coeffs", attempt))
        return generate_me_datasets(
            n_train, n, coeffs, params,
            derive_stream(config.seed, "me", n, rep, "data", attempt))
    rng = derive_stream(config.seed, "me", n, rep, "yelp", attempt)
    sample = _draw_yelp_rows(yelp_data, n_train + n, rng)
    return apply_me_split(sample, n_train, rng)


def _draw_yelp_rows(data: Dataset, n: int, rng: np.random.Generator) -> Dataset:
    if data is None:
        raise ValueError("yelp source needs an ingested dataset")
    replace = n > len(data)
    idx = rng.choice(len(data), size=n, replace=replace)
    return data.take(idx)


def _all_failed(models, reason: str):
    return {m: (math.nan, reason) for m in models}


def _run_md_cell(config: ExperimentConfig, n: int, rep: int,
                 yelp_data: Optional[Dataset]):
    resamples = 0
    perfect = None
    for attempt in range(2):
        data, true_a = _md_sample(config, n, rep, attempt, yelp_data)
        try:
            perfect = perfect_data_estimate(data, true_a)
            break
        except EstimationError:
            resamples += 1
    if perfect is None:
        return math.nan, _all_failed(MD_MODELS, "perfect estimator positivity"), resamples
    opt = config.optimizer()
    outcomes = {}
    for model in MD_MODELS:
        try:
            if model == "naive":
                est = missing.tau_md_baseline_naive(data)
            else:
                fs = {"no_text": FeatureSet.NO_TEXT, "no_y": FeatureSet.NO_Y,
                      "full": FeatureSet.FULL}[model]
                est = missing.tau_md_mi(
                    data, fs, m=config.m_imputations, l2_lambda=config.l2_lambda,
                    config=opt,
                    rng=derive_stream(config.seed, "md", n, rep, "mi", model))
            outcomes[model] = (est.tau, "")
        except EstimationError as exc:
            outcomes[model] = (math.nan, str(exc))
    return perfect.tau, outcomes, resamples


def _run_me_cell(config: ExperimentConfig, n: int, rep: int,
                 yelp_data: Optional[Dataset]):
    resamples = 0
    perfect = None
    for attempt in range(2):
        train, test, true_a = _me_sample(config, n, rep, attempt, yelp_data)
        try:
            perfect = perfect_data_estimate(test, true_a)
            break
        except EstimationError:
            resamples += 1
    if perfect is None:
        return math.nan, _all_failed(ME_MODELS, "perfect estimator positivity"), resamples
    opt = config.optimizer()
    outcomes = {}
    try:
        outcomes["naive"] = (measure.tau_me_naive(train).tau, "")
    except EstimationError as exc:
        outcomes["naive"] = (math.nan, str(exc))
    model = None
    proxies = None
    try:
        model = textclf.fit(train, FeatureSet.FULL, config.l2_lambda, opt)
        proxies = textclf.impute_proxies(model, test)
        outcomes["unadjusted"] = (measure.tau_me_unadjusted(test, proxies).tau, "")
    except EstimationError as exc:
        outcomes["unadjusted"] = (math.nan, str(exc))
    try:
        if model is None or proxies is None:
            raise EstimationError("classifier unavailable for adjustment")
        est = measure.tau_me_adjusted(train, test, config.l2_lambda, opt,
                                      singular_tol=config.singular_tol,
                                      model=model, proxies=proxies)
        outcomes["adjusted"] = (est.tau, "")
    except EstimationError as exc:
        outcomes["adjusted"] = (math.nan, str(exc))
    return perfect.tau, outcomes, resamples


def run_experiment(config: ExperimentConfig,
                   yelp_data: Optional[Dataset] = None) -> RunResult:
    """Run every (size, replicate) cell; aggregate per (model, n).

    Deterministic for a fixed config, including under ``config.jobs > 1``:
    each cell's stream depends only on (seed, scenario, n, replicate) and the
    reduction order is fixed.
    """
    cells = [(n, rep) for n in config.sizes for rep in range(config.replicates)]
    runner = _run_md_cell if config.scenario == "md" else _run_me_cell

    def work(cell):
        n, rep = cell
        return cell, runner(config, n, rep, yelp_data)

    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            raw = dict(pool.map(work, cells))
    else:
        raw = dict(map(work, cells))

    log: list[ReplicateOutcome] = []
    resamples = 0
    for n, rep in cells:
        perfect_tau, outcomes, cell_resamples = raw[(n, rep)]
        resamples += cell_resamples
        for model in config.models:
            tau, error = outcomes[model]
            failed = math.isnan(tau)
            sq = math.nan if failed else (tau - perfect_tau) ** 2
            log.append(ReplicateOutcome(model=model, n=n, replicate=rep, tau=tau,
                                        perfect_tau=perfect_tau, sq=sq,
                                        failed=failed, error=error))
    records = []
    for model in config.models:
        for n in config.sizes:
            sqs = [o.sq for o in log if o.model == model and o.n == n and not o.failed]
            failures = sum(1 for o in log
                           if o.model == model and o.n == n and o.failed)
            if sqs:
                err = math.fsum(sqs) / len(sqs)
                if len(sqs) > 1:
                    var = math.fsum((s - err) ** 2 for s in sqs) / (len(sqs) - 1)
                    se = math.sqrt(var / len(sqs))
                else:
                    se = math.nan
            else:
                err = math.nan
                se = math.nan
            records.append(ResultRecord(model=model, n=n, err=err, se=se,
                                        failures=failures))
    return RunResult(records=records, replicate_log=log,
                     perfect_resamples=resamples)


def _format_value(v: float) -> str:
    """Scientific notation with a 6-digit mantissa and no exponent padding."""
    if math.isnan(v):
        return "nan"
    mantissa, exp = f"{v:.6e}".split("e")
    return f"{mantissa}e{int(exp)}"


def emit_dat(records: list[ResultRecord], model: str, path) -> None:
    """Write the plot-data file for one model: header ``n err se``, one row
    per size, deterministic formatting."""
    rows = sorted((r for r in records if r.model == model), key=lambda r: r.n)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("n err se\n")
        for r in rows:
            fh.write(f"{r.n} {_format_value(r.err)} {_format_value(r.se)}\n")


def read_dat(path) -> list[tuple[int, float, float]]:
    """Parse a ``.dat`` file back into (n, err, se) tuples."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "n err se":
            raise ValueError(f"unexpected header {header!r}")
        for line in fh:
            if not line.strip():
                continue
            n, err, se = line.split()
            out.append((int(n), float(err), float(se)))
    return out


def write_outputs(result: RunResult, config: ExperimentConfig, out_dir) -> list[str]:
    """Emit the manifest, per-model .dat files, and the per-replicate log."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    written = []
    manifest_path = os.path.join(out_dir, "manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(config.manifest(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(manifest_path)
    stem = f"{config.scenario}.{config.source}.{config.vocab_min_count}"
    for model in config.models:
        path = os.path.join(out_dir, f"{stem}.{model}.dat")
        emit_dat(result.records, model, path)
        written.append(path)
    log_path = os.path.join(out_dir, "replicates.tsv")
    with open(log_path, "w", encoding="utf-8") as fh:
        fh.write("model\tn\treplicate\ttau\tperfect_tau\tsq\tfailed\terror\n")
        for o in result.replicate_log:
            fh.write(f"{o.model}\t{o.n}\t{o.replicate}\t{o.tau!r}\t"
                     f"{o.perfect_tau!r}\t{o.sq!r}\t{int(o.failed)}\t{o.error}\n")
    written.append(log_path)
    return written
