"""
Estimators under a mismeasured treatment
========================================

Here the test set never reveals A; a classifier trained on a small labeled
set imputes a proxy A*.  Treating A* as the truth (unadjusted) inherits the
classifier's bias; inverting the stratum-wise error relation (matrix
adjustment) corrects it exactly when the rates are exact -- and can
over-correct wildly when they are noisy, which is why the adjusted joint
keeps its raw flagged values instead of clipping them silently.
"""

import numpy as np

from causal_text import measure, textclf
from causal_text.harness import perfect_data_estimate
from causal_text.measure import forward_flip, matrix_adjust, tau_me_from_proxy_joint
from causal_text.rng import derive_stream
from causal_text.synthgen import SynthParams, generate_me_datasets, sample_coefficients
from causal_text.textclf import ErrorRates, FeatureSet

params = SynthParams(vocab_size=4334, seed=13)
coeffs = sample_coefficients(params, derive_stream(13, "coeffs"))
train, test, test_truth = generate_me_datasets(10_000, 100_000, coeffs, params,
                                               derive_stream(13, "data"))
perfect = perfect_data_estimate(test, test_truth)
print(f"perfect-data estimate on the test sample: tau = {perfect.tau:.5f}")

naive = measure.tau_me_naive(train)
print(f"naive (train only, n={naive.n_used}): tau = {naive.tau:.5f}  "
      f"sq.dist = {(naive.tau - perfect.tau) ** 2:.2e}")

model = textclf.fit(train, FeatureSet.FULL)
proxies = textclf.impute_proxies(model, test)
err = textclf.error_rates(model, train)
unadj = measure.tau_me_unadjusted(test, proxies)
adj = measure.tau_me_adjusted(train, test, model=model, proxies=proxies, err=err)
print(f"unadjusted (proxy as truth):  tau = {unadj.tau:.5f}  "
      f"sq.dist = {(unadj.tau - perfect.tau) ** 2:.2e}")
print(f"adjusted (matrix inversion):  tau = {adj.tau:.5f}  "
      f"sq.dist = {(adj.tau - perfect.tau) ** 2:.2e}  flags = {adj.flags}")
print(f"measured error rates: eps = {err.eps.ravel()}, delta = {err.delta.ravel()}")

# a known-flip construction isolates the adjustment algebra from the
# classifier: flip the truth with eps=0.1, delta=0.2 and hand those exact
# rates to the inversion
rng = derive_stream(13, "flip")
u = rng.random(len(test))
flips = np.where(test_truth == 1, u < 0.1, u < 0.2)
flip_proxies = np.where(flips, 1 - test_truth, test_truth).astype(np.int8)
rates = ErrorRates.constant(0.1, 0.2)
q = np.bincount((flip_proxies.astype(np.int64) * 2 + test.c) * 2 + test.y,
                minlength=8).reshape(2, 2, 2) / len(test)
unadj_flip = measure.tau_me_unadjusted(test, flip_proxies)
adj_flip = tau_me_from_proxy_joint(q, rates, n_used=len(test))
print(f"\nknown flips at (0.1, 0.2): unadjusted tau = {unadj_flip.tau:.4f} "
      f"(attenuated), adjusted tau = {adj_flip.tau:.4f} (back near 0.1)")

# and the exact algebra: flipping a joint forward then adjusting recovers it
p = np.random.default_rng(0).random((2, 2, 2))
p /= p.sum()
roundtrip = matrix_adjust(forward_flip(p, rates), rates)
print(f"forward-flip -> adjust roundtrip error: "
      f"{np.abs(roundtrip.p - p).max():.2e}")
