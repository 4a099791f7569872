"""
Backdoor adjustment on complete binary data
===========================================

The estimand throughout is tau = E[Y(1)] - E[Y(0)]: the average effect of a
binary treatment A on a binary outcome Y.  When a confounder C drives both,
the raw difference p(Y=1|A=1) - p(Y=1|A=0) is biased; stratifying on C and
reweighting by p(C) removes the bias.
"""

from causal_text import DataRow, conditional_prob, stratum_counts, tau_simple
from causal_text.oracle import generator_process_spec, enumerate_joint, exact_tau, naive_diff
from causal_text.rng import derive_stream
from causal_text.synthgen import SynthParams, generate_me_datasets, sample_coefficients

# a four-row toy table: (A, C, Y)
rows = [DataRow(a=1, r_a=1, c=1, y=0),
        DataRow(a=0, r_a=1, c=1, y=1),
        DataRow(a=0, r_a=1, c=0, y=1),
        DataRow(a=1, r_a=1, c=0, y=1)]

table = stratum_counts(rows, ("A", "C", "Y"))
print("joint counts over (A, C, Y), total =", table.total)
print("p(Y=1 | A=1, C=1) =", conditional_prob(table, {"Y": 1}, {"A": 1, "C": 1}))
print("p(A=1 | C=0)      =", conditional_prob(table, {"A": 1}, {"C": 0}))

# when Y is a deterministic copy of A the effect is exactly 1
det = [DataRow(a=a, r_a=1, c=c, y=a) for a in (0, 1) for c in (0, 1)]
print("\ndeterministic Y=A  ->  tau =", tau_simple(det).tau)

# the simulation process: C ~ Ber(0.4), A ~ Ber(0.4 - 0.3C),
# Y ~ Ber(0.5 + 0.1A + 0.2C).  The A coefficient IS the effect: tau = 0.1.
joint = enumerate_joint(generator_process_spec(vocab_size=1))
print("\nexact tau of the simulation process:", round(exact_tau(joint), 12))
print("exact unadjusted difference:        ", round(naive_diff(joint), 12))
print("(confounding bias is real: 1/35 ~= 0.0286 vs 0.1)")

# estimate both from a finite sample
params = SynthParams(vocab_size=2, seed=1)
coeffs = sample_coefficients(params, derive_stream(1, "coeffs"))
sample, _, _ = generate_me_datasets(200_000, 1, coeffs, params, derive_stream(1, "demo"))
est = tau_simple(sample)
t = stratum_counts(sample, ("A", "Y"))
unadj = (conditional_prob(t, {"Y": 1}, {"A": 1})
         - conditional_prob(t, {"Y": 1}, {"A": 0}))
print(f"\nn=200k sample: adjusted tau = {est.tau:.4f}, unadjusted = {unadj:.4f}")
print(f"per-arm means: E[Y(1)] = {est.mean_y1:.4f}, E[Y(0)] = {est.mean_y0:.4f}")
