import numpy as np
import pytest

from causal_text import textclf
from causal_text.errors import (SingularAdjustmentError, UnestimableCellError)
from causal_text.measure import (AdjustedJoint, forward_flip, matrix_adjust,
                                 tau_me_adjusted, tau_me_from_proxy_joint,
                                 tau_me_naive, tau_me_unadjusted)
from causal_text.rng import derive_stream
from causal_text.synthgen import SynthParams, generate_me_datasets, sample_coefficients
from causal_text.tabular import stratum_counts, tau_from_joint
from causal_text.textclf import ErrorRates, FeatureSet

# exact joint of the generating process over (A, C, Y): p(c) p(a|c) p(y|a,c)
TRUE_ACY = np.zeros((2, 2, 2))
for _a in (0, 1):
    for _c in (0, 1):
        p_c = 0.4 if _c else 0.6
        p_a = (0.4 - 0.3 * _c) if _a else (0.6 + 0.3 * _c)
        py1 = 0.5 + 0.1 * _a + 0.2 * _c
        TRUE_ACY[_a, _c, 1] = p_c * p_a * py1
        TRUE_ACY[_a, _c, 0] = p_c * p_a * (1 - py1)

# unadjusted effect computed from the proxy joint after flipping the truth
# with rates eps=0.1, delta=0.2 (value from the enumeration oracle below)
FLIPPED_NAIVE_TAU = 0.05317000351246925


def random_joint(rng, margin=0.02):
    p = margin + rng.random((2, 2, 2))
    return p / p.sum()


class TestMatrixAdjust:
    def test_zero_rates_identity_bitwise(self):
        rng = derive_stream(60, "q")
        q = random_joint(rng)
        adj = matrix_adjust(q, ErrorRates.constant(0.0, 0.0))
        assert np.array_equal(adj.p, q)
        assert adj.feasible

    def test_forward_flip_roundtrip_exact(self):
        rng = derive_stream(61, "flip")
        for _ in range(50):
            p = random_joint(rng)
            eps = rng.uniform(0.0, 0.45, size=(2, 2))
            delta = np.minimum(rng.uniform(0.0, 0.45, size=(2, 2)), 0.89 - eps)
            err = ErrorRates(eps=eps, delta=delta,
                             support=np.zeros((2, 2, 2), dtype=np.int64))
            q = forward_flip(p, err)
            adj = matrix_adjust(q, err, singular_tol=1e-6)
            assert np.abs(adj.p - p).max() < 1e-10

    def test_half_half_is_singular(self):
        rng = derive_stream(62, "s")
        with pytest.raises(SingularAdjustmentError):
            matrix_adjust(random_joint(rng), ErrorRates.constant(0.5, 0.5))

    def test_unestimable_cell_rejected(self):
        eps = np.zeros((2, 2))
        eps[1, 0] = np.nan
        err = ErrorRates(eps=eps, delta=np.zeros((2, 2)),
                         support=np.zeros((2, 2, 2), dtype=np.int64))
        rng = derive_stream(63, "u")
        with pytest.raises(UnestimableCellError):
            matrix_adjust(random_joint(rng), err)

    def test_adjusted_joint_sums_to_one(self):
        rng = derive_stream(64, "sum")
        for _ in range(30):
            q = random_joint(rng)
            eps = rng.uniform(0.0, 0.4, size=(2, 2))
            delta = rng.uniform(0.0, 0.4, size=(2, 2))
            err = ErrorRates(eps=eps, delta=delta,
                             support=np.zeros((2, 2, 2), dtype=np.int64))
            adj = matrix_adjust(q, err)
            assert abs(adj.p.sum() - 1.0) < 1e-9

    def test_overcorrection_flagged_not_clipped(self):
        # absurd rates against an incompatible observed joint go negative
        q = np.array([[[0.4, 0.05], [0.05, 0.05]],
                      [[0.05, 0.05], [0.05, 0.3]]])
        err = ErrorRates.constant(0.45, 0.45)
        adj = matrix_adjust(q, err)
        assert not adj.feasible
        assert (adj.p < 0).any()
        clipped = adj.clipped()
        assert (clipped >= 0).all()
        assert abs(clipped.sum() - 1.0) < 1e-12

    def test_accepts_stratum_table(self):
        from causal_text.data import DataRow

        rows = [DataRow(a=None, r_a=0, c=c, y=y, proxy=p)
                for p in (0, 1) for c in (0, 1) for y in (0, 1)]
        table = stratum_counts(rows, ("A*", "C", "Y"))
        adj = matrix_adjust(table, ErrorRates.constant(0.0, 0.0))
        assert np.allclose(adj.p, 1 / 8)


@pytest.fixture(scope="module")
def me_setup():
    params = SynthParams(vocab_size=256, seed=65)
    coeffs = sample_coefficients(params, derive_stream(65, "c"))
    train, test, test_a = generate_me_datasets(4000, 20_000, coeffs, params,
                                               derive_stream(65, "d"))
    return params, train, test, test_a


class TestTauMeAdjusted:

    def test_perfect_classifier_equals_unadjusted_bitwise(self, me_setup):
        _, train, test, test_a = me_setup
        model = textclf.fit(train, FeatureSet.FULL)
        err = textclf.error_rates(model, train)
        assert (err.eps == 0).all() and (err.delta == 0).all()
        proxies = textclf.impute_proxies(model, test)
        unadj = tau_me_unadjusted(test, proxies)
        adj = tau_me_adjusted(train, test, model=model, proxies=proxies, err=err)
        assert adj.tau == unadj.tau
        assert adj.mean_y1 == unadj.mean_y1

    def test_proxies_equal_truth_match_perfect_estimate(self, me_setup):
        _, train, test, test_a = me_setup
        perfect_counts = np.bincount(
            (test_a.astype(np.int64) * 2 + test.c) * 2 + test.y,
            minlength=8).reshape(2, 2, 2)
        perfect = tau_from_joint(perfect_counts / len(test), "perfect", len(test))
        unadj = tau_me_unadjusted(test, test_a.astype(np.int8))
        assert unadj.tau == perfect.tau

    def test_known_flip_recovery_via_analytic_q(self, me_setup):
        # expected flip applied to the empirical joint: adjustment undoes it
        # to float precision
        _, train, test, test_a = me_setup
        counts = np.bincount((test_a.astype(np.int64) * 2 + test.c) * 2 + test.y,
                             minlength=8).reshape(2, 2, 2)
        p_emp = counts / counts.sum()
        rates = ErrorRates.constant(0.1, 0.2)
        q = forward_flip(p_emp, rates)
        adj = tau_me_from_proxy_joint(q, rates, n_used=len(test))
        perfect = tau_from_joint(p_emp, "perfect", len(test))
        assert abs(adj.tau - perfect.tau) < 1e-10

    def test_bernoulli_flip_bias_and_recovery(self):
        # flipped-proxy unadjusted estimate lands on the analytic biased
        # value; the adjustment with the true rates lands back on 0.1
        params = SynthParams(vocab_size=2, seed=66)
        coeffs = sample_coefficients(params, derive_stream(66, "c"))
        _, test, test_a = generate_me_datasets(1, 10 ** 6, coeffs, params,
                                               derive_stream(66, "d"))
        rng = derive_stream(66, "flip")
        u = rng.random(len(test))
        flip = np.where(test_a == 1, u < 0.1, u < 0.2)
        proxies = np.where(flip, 1 - test_a, test_a).astype(np.int8)
        rates = ErrorRates.constant(0.1, 0.2)
        unadj = tau_me_unadjusted(test, proxies)
        assert abs(unadj.tau - FLIPPED_NAIVE_TAU) < 0.01
        assert abs(unadj.tau - 0.1) > 0.03  # bias direction: attenuated
        adj = tau_me_from_proxy_joint(
            np.bincount((proxies.astype(np.int64) * 2 + test.c) * 2 + test.y,
                        minlength=8).reshape(2, 2, 2) / len(test),
            rates, n_used=len(test))
        assert abs(adj.tau - 0.1) < 0.01

    def test_flipped_naive_constant_from_oracle(self):
        # freeze check: enumerate the flipped joint and evaluate the
        # unadjusted functional symbolically
        rates = ErrorRates.constant(0.1, 0.2)
        q = forward_flip(TRUE_ACY, rates)
        est = tau_from_joint(q, "flipped", 0)
        assert est.tau == pytest.approx(FLIPPED_NAIVE_TAU, abs=1e-12)

    def test_small_train_naive_is_worse(self, me_setup):
        _, train, test, test_a = me_setup
        small_train = train.take(np.arange(100))
        perfect_counts = np.bincount(
            (test_a.astype(np.int64) * 2 + test.c) * 2 + test.y,
            minlength=8).reshape(2, 2, 2)
        perfect = tau_from_joint(perfect_counts / len(test), "perfect", len(test))
        naive_sq = []
        adj_sq = []
        for rep in range(10):
            rng = derive_stream(67, "boot", rep)
            idx = rng.choice(len(train), size=100, replace=False)
            sub = train.take(idx)
            try:
                naive_sq.append((tau_me_naive(sub).tau - perfect.tau) ** 2)
            except Exception:
                naive_sq.append(1.0)
            model = textclf.fit(sub, FeatureSet.FULL)
            proxies = textclf.impute_proxies(model, test)
            adj_sq.append((tau_me_unadjusted(test, proxies).tau - perfect.tau) ** 2)
        assert np.mean(adj_sq) < np.mean(naive_sq)

    def test_naive_requires_rows(self, me_setup):
        _, train, _, _ = me_setup
        est = tau_me_naive(train)
        assert est.estimator_id == "me.naive"
        assert est.n_used == len(train)


class TestAdjustedJointType:
    def test_flags_property(self):
        adj = AdjustedJoint(p=np.full((2, 2, 2), 0.125),
                            denominators=np.ones((2, 2)), feasible=True)
        assert adj.flags == ()
        bad = AdjustedJoint(p=np.full((2, 2, 2), -0.1),
                            denominators=np.ones((2, 2)), feasible=False)
        assert bad.flags == ("infeasible adjustment",)

    def test_infeasible_estimate_carries_flag(self):
        q = np.array([[[0.4, 0.05], [0.05, 0.05]],
                      [[0.05, 0.05], [0.05, 0.3]]])
        est = tau_me_from_proxy_joint(q, ErrorRates.constant(0.45, 0.45), 100)
        assert "infeasible adjustment" in est.flags
