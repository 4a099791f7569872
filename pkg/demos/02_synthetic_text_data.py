"""
Synthetic text generators
=========================

Both corruption scenarios share C ~ Ber(0.4), A ~ Ber(0.4 - 0.3C),
Y ~ Ber(0.5 + 0.1A + 0.2C) and attach a V-word binary bag-of-words whose
word probabilities shift with the parents.  The missing-data generator also
hides A behind an R_A that depends on (text, C, Y) -- never on A itself, so
the masking is MAR.  The truth comes back in a separate array that only the
evaluation harness is supposed to read.
"""

import numpy as np

from causal_text.rng import derive_stream
from causal_text.synthgen import (SynthParams, generate_md_dataset,
                                  generate_me_datasets, sample_coefficients)

params = SynthParams(vocab_size=512, zeta=0.5, eta=0.1, seed=7)
coeffs = sample_coefficients(params, derive_stream(7, "coeffs"))
print(f"coefficient spread: std(u) = {coeffs.u.std():.3f} (target {params.zeta}), "
      f"std(w) = {coeffs.w.std():.3f} (target {params.eta})")

data, true_a = generate_md_dataset(50_000, coeffs, params, derive_stream(7, "md"))
print(f"\nmissing-data sample: n = {len(data)}, vocab = {data.vocab_size}")
print(f"p(C=1) = {data.c.mean():.3f}   (0.4)")
print(f"p(A=1 | C=1) = {true_a[data.c == 1].mean():.3f}   (0.1)")
print(f"observed fraction p(R_A=1) = {data.r_a.mean():.3f}")
print("masked rows carry a = -1:", np.array_equal(data.a == -1, data.r_a == 0))

words_per_row = np.unpackbits(data.text[:100], axis=1, count=512).sum(axis=1)
print(f"words per row (first 100): mean {words_per_row.mean():.1f} of 512")

train, test, test_truth = generate_me_datasets(5_000, 20_000, coeffs, params,
                                               derive_stream(7, "me"))
print(f"\nmeasurement-error pair: train n = {len(train)} (labeled), "
      f"test n = {len(test)} (treatment hidden)")
print(f"test truth retained separately: p(A=1) = {test_truth.mean():.3f}")

again, _ = generate_md_dataset(50_000, coeffs, params, derive_stream(7, "md"))
print("\nsame stream, same bits:", np.array_equal(again.text, data.text))
