import math

import numpy as np
import pytest

from causal_text import textclf
from causal_text.data import DataRow, Dataset
from causal_text.errors import DegenerateLabelsError, MissingFieldError
from causal_text.rng import derive_stream
from causal_text.synthgen import SynthParams, generate_me_datasets, sample_coefficients
from causal_text.textclf import (ClassifierModel, ErrorRates, FeatureSet,
                                 OptimizerConfig, error_rates, fit, impute_proxies,
                                 impute_proxy, load_model, objective_gradient,
                                 objective_value, predict_proba, sample_label,
                                 save_model)

from conftest import FIG_MISMEASUREMENT_PAIRS


def tiny_dataset(labels, c=None, y=None, text=None, vocab=4):
    n = len(labels)
    rows = []
    for i in range(n):
        rows.append(DataRow(a=int(labels[i]), r_a=1,
                            c=int(c[i]) if c is not None else i % 2,
                            y=int(y[i]) if y is not None else (i // 2) % 2,
                            text=tuple(text[i]) if text is not None else ()))
    return Dataset.from_rows(rows, vocab_size=vocab)


def synth_training_data(n, vocab, seed):
    params = SynthParams(vocab_size=vocab, seed=seed)
    coeffs = sample_coefficients(params, derive_stream(seed, "c"))
    train, test, test_a = generate_me_datasets(n, max(n // 2, 4), coeffs, params,
                                               derive_stream(seed, "d"))
    return train, test, test_a


class TestFit:
    def test_separable_single_feature_stays_finite(self):
        labels = [1, 1, 1, 0, 0, 0]
        text = [(0,), (0,), (0,), (), (), ()]
        data = tiny_dataset(labels, text=text, vocab=1)
        model = fit(data, FeatureSet.FULL, l2_lambda=1.0)
        assert np.isfinite(model.weights).all()

    def test_single_class_rejected(self):
        data = tiny_dataset([1, 1, 1, 1])
        with pytest.raises(DegenerateLabelsError):
            fit(data, FeatureSet.NO_TEXT)

    def test_constant_features_rejected(self):
        rows = [DataRow(a=i % 2, r_a=1, c=1, y=0, text=()) for i in range(8)]
        data = Dataset.from_rows(rows, vocab_size=2)
        with pytest.raises(DegenerateLabelsError, match="constant"):
            fit(data, FeatureSet.NO_TEXT)

    def test_huge_lambda_shrinks_to_base_rate(self):
        train, _, _ = synth_training_data(400, 8, seed=21)
        model = fit(train, FeatureSet.FULL, l2_lambda=1e7)
        assert np.abs(model.weights[:-1]).max() < 1e-4
        base = train.a[train.r_a == 1].mean()
        p = model.predict_proba_batch(train)
        assert np.allclose(p, base, atol=1e-3)

    def test_objective_nonincreasing(self):
        train, _, _ = synth_training_data(500, 16, seed=22)
        model = fit(train, FeatureSet.FULL, 1e-4, OptimizerConfig(max_iter=60))
        trace = np.array(model.objective_trace)
        assert (np.diff(trace) <= 1e-15).all()

    def test_zero_blocks_respected(self):
        train, _, _ = synth_training_data(300, 8, seed=23)
        no_y = fit(train, FeatureSet.NO_Y)
        assert no_y.weights[train.vocab_size + 1] == 0.0
        no_text = fit(train, FeatureSet.NO_TEXT)
        assert (no_text.weights[: train.vocab_size] == 0.0).all()

    def test_deterministic(self):
        train, _, _ = synth_training_data(300, 8, seed=24)
        m1 = fit(train, FeatureSet.FULL)
        m2 = fit(train, FeatureSet.FULL)
        assert np.array_equal(m1.weights, m2.weights)

    def test_nonconvergence_still_returns_model(self):
        train, _, _ = synth_training_data(500, 16, seed=25)
        model = fit(train, FeatureSet.FULL, 1e-4, OptimizerConfig(max_iter=1))
        assert not model.converged
        assert np.isfinite(model.weights).all()

    def test_trains_only_on_observed_rows(self, small_synth):
        from causal_text.synthgen import generate_md_dataset

        params, coeffs = small_synth
        data, _ = generate_md_dataset(2000, coeffs, params, derive_stream(26, "d"))
        observed = data.take(data.r_a == 1)
        m_masked = fit(data, FeatureSet.FULL)
        m_observed = fit(observed, FeatureSet.FULL)
        assert np.array_equal(m_masked.weights, m_observed.weights)


class TestGradient:
    @pytest.mark.parametrize("seed", range(4))
    def test_gradient_matches_central_differences(self, seed):
        rng = np.random.default_rng(seed)
        vocab = int(rng.integers(3, 20))
        n = int(rng.integers(30, 200))
        params = SynthParams(vocab_size=vocab, seed=seed)
        coeffs = sample_coefficients(params, derive_stream(seed, "g"))
        train, _, _ = generate_me_datasets(n, 2, coeffs, params,
                                           derive_stream(seed, "gd"))
        lam = 10.0 ** -rng.integers(2, 5)
        w = rng.normal(0, 0.7, size=vocab + 3)
        g = objective_gradient(train, FeatureSet.FULL, lam, w)
        h = 1e-6
        for j in rng.choice(vocab + 3, size=min(vocab + 3, 12), replace=False):
            wp, wm = w.copy(), w.copy()
            wp[j] += h
            wm[j] -= h
            fd = (objective_value(train, FeatureSet.FULL, lam, wp)
                  - objective_value(train, FeatureSet.FULL, lam, wm)) / (2 * h)
            assert abs(fd - g[j]) <= 1e-6 * max(1.0, abs(fd))


class TestPrediction:
    def test_zero_weights_give_half(self):
        model = ClassifierModel(weights=np.zeros(7), feature_set=FeatureSet.FULL,
                                l2_lambda=0.0, vocab_size=4, n_iter=0,
                                final_objective=0.0, converged=True, grad_norm=0.0)
        row = DataRow(a=1, r_a=1, c=1, y=0, text=(0, 2))
        assert predict_proba(model, row) == 0.5

    def test_positive_word_monotone(self):
        w = np.zeros(7)
        w[1] = 0.8
        model = ClassifierModel(weights=w, feature_set=FeatureSet.FULL,
                                l2_lambda=0.0, vocab_size=4, n_iter=0,
                                final_objective=0.0, converged=True, grad_norm=0.0)
        without = predict_proba(model, DataRow(a=1, r_a=1, c=0, y=0, text=(0,)))
        with_word = predict_proba(model, DataRow(a=1, r_a=1, c=0, y=0, text=(0, 1)))
        assert with_word > without

    def test_vocab_mismatch_rejected(self):
        model = ClassifierModel(weights=np.zeros(7), feature_set=FeatureSet.FULL,
                                l2_lambda=0.0, vocab_size=4, n_iter=0,
                                final_objective=0.0, converged=True, grad_norm=0.0)
        with pytest.raises(MissingFieldError):
            predict_proba(model, DataRow(a=1, r_a=1, c=0, y=0, text=(9,)))

    def test_heldout_accuracy_on_synthetic_text(self):
        # 10^4 training rows at the experiment vocabulary: near-perfect
        params = SynthParams(vocab_size=4334, seed=28)
        coeffs = sample_coefficients(params, derive_stream(28, "c"))
        train, test, test_a = generate_me_datasets(10_000, 5_000, coeffs, params,
                                                   derive_stream(28, "d"))
        model = fit(train, FeatureSet.FULL)
        acc = ((model.predict_proba_batch(test) >= 0.5) == test_a).mean()
        assert acc > 0.9

    def test_batch_matches_rowwise(self):
        train, test, _ = synth_training_data(300, 8, seed=29)
        model = fit(train, FeatureSet.FULL)
        batch = model.predict_proba_batch(test)
        rowwise = np.array([predict_proba(model, test.row(i))
                            for i in range(len(test))])
        assert np.allclose(batch, rowwise, atol=1e-12)


class TestSampleLabel:
    def test_extreme_probability_pins_label(self):
        w = np.zeros(7)
        w[6] = 40.0  # bias
        model = ClassifierModel(weights=w, feature_set=FeatureSet.FULL,
                                l2_lambda=0.0, vocab_size=4, n_iter=0,
                                final_objective=0.0, converged=True, grad_norm=0.0)
        row = DataRow(a=1, r_a=1, c=0, y=0)
        rng = derive_stream(30, "s")
        assert all(sample_label(model, row, rng) == 1 for _ in range(50))

    def test_reproducible_sequence(self):
        train, _, _ = synth_training_data(300, 8, seed=31)
        model = fit(train, FeatureSet.FULL)
        row = train.row(0)
        seq1 = [sample_label(model, row, derive_stream(31, "r", i)) for i in range(20)]
        seq2 = [sample_label(model, row, derive_stream(31, "r", i)) for i in range(20)]
        assert seq1 == seq2

    def test_empirical_mean_tracks_probability(self):
        w = np.zeros(7)
        w[6] = math.log(0.3 / 0.7)  # sigmoid(bias) = 0.3
        model = ClassifierModel(weights=w, feature_set=FeatureSet.FULL,
                                l2_lambda=0.0, vocab_size=4, n_iter=0,
                                final_objective=0.0, converged=True, grad_norm=0.0)
        row = DataRow(a=1, r_a=1, c=0, y=0)
        rng = derive_stream(32, "mean")
        draws = [sample_label(model, row, rng) for _ in range(10 ** 5)]
        assert abs(np.mean(draws) - 0.3) < 0.005


class TestImputeProxy:
    def test_tie_goes_to_one(self):
        model = ClassifierModel(weights=np.zeros(7), feature_set=FeatureSet.FULL,
                                l2_lambda=0.0, vocab_size=4, n_iter=0,
                                final_objective=0.0, converged=True, grad_norm=0.0)
        assert impute_proxy(model, DataRow(a=1, r_a=1, c=0, y=0)) == 1

    def test_zero_weight_model_imputes_all_ones(self):
        train, test, _ = synth_training_data(200, 8, seed=33)
        model = ClassifierModel(weights=np.zeros(11), feature_set=FeatureSet.FULL,
                                l2_lambda=0.0, vocab_size=8, n_iter=0,
                                final_objective=0.0, converged=True, grad_norm=0.0)
        assert (impute_proxies(model, test) == 1).all()

    def test_batch_matches_rowwise(self):
        train, test, _ = synth_training_data(300, 8, seed=34)
        model = fit(train, FeatureSet.FULL)
        batch = impute_proxies(model, test)
        rowwise = [impute_proxy(model, test.row(i)) for i in range(len(test))]
        assert list(batch) == rowwise


class TestErrorRates:
    def test_perfect_classifier_zero_rates(self):
        train, _, _ = synth_training_data(4000, 64, seed=35)
        model = fit(train, FeatureSet.FULL)
        err = error_rates(model, train)
        assert err.estimable.all()
        assert (err.eps == 0).all() and (err.delta == 0).all()

    def test_mismeasurement_table_rates(self):
        # collapsed single stratum: eps = p(A=0 | A*=1) = 0, delta = 0.5
        counts = np.zeros((2, 2, 2, 2), dtype=np.int64)  # [c, y, a*, a]
        for proxy, true in FIG_MISMEASUREMENT_PAIRS:
            counts[0, 0, proxy, true] += 1
        support = counts.sum(axis=3)
        eps = counts[0, 0, 1, 0] / support[0, 0, 1]
        delta = counts[0, 0, 0, 1] / support[0, 0, 0]
        assert eps == 0.0
        assert delta == 0.5

    def test_rates_match_bruteforce_confusion(self):
        train, _, _ = synth_training_data(500, 8, seed=36)
        model = fit(train, FeatureSet.FULL, 1e-2, OptimizerConfig(max_iter=5))
        err = error_rates(model, train)
        proxies = impute_proxies(model, train)
        for c in (0, 1):
            for y in (0, 1):
                cell = (train.c == c) & (train.y == y)
                for a_star, arr in ((1, err.eps), (0, err.delta)):
                    mask = cell & (proxies == a_star)
                    expect_n = int(mask.sum())
                    assert err.support[c, y, a_star] == expect_n
                    if expect_n:
                        wrong = int((train.a[mask] != a_star).sum())
                        assert arr[c, y] == wrong / expect_n

    def test_labels_independent_of_proxies(self):
        # constant-column proxy: within the populated cell the rates equal
        # the label base rates
        rows = []
        labels = [0, 1] * 40
        for i, a in enumerate(labels):
            rows.append(DataRow(a=a, r_a=1, c=i % 2, y=(i // 2) % 2,
                                text=(0,) if i % 4 < 2 else ()))
        data = Dataset.from_rows(rows, vocab_size=1)
        model = ClassifierModel(weights=np.zeros(4), feature_set=FeatureSet.FULL,
                                l2_lambda=0.0, vocab_size=1, n_iter=0,
                                final_objective=0.0, converged=True, grad_norm=0.0)
        err = error_rates(model, data)  # all proxies 1
        for c in (0, 1):
            for y in (0, 1):
                cell = [r for r in rows if r.c == c and r.y == y]
                p_a0 = np.mean([r.a == 0 for r in cell])
                assert err.eps[c, y] == pytest.approx(p_a0)
                assert math.isnan(err.delta[c, y])  # no proxy-0 support
        assert not err.estimable.any()

    def test_unestimable_cell_marked(self):
        rows = [DataRow(a=i % 2, r_a=1, c=0, y=0, text=(0,) if i % 2 else ())
                for i in range(20)]
        data = Dataset.from_rows(rows, vocab_size=1)
        model = fit(data, FeatureSet.FULL)
        err = error_rates(model, data)
        assert not err.estimable[1, 1]  # no rows there at all


class TestModelDump:
    def test_round_trip(self, tmp_path):
        train, test, _ = synth_training_data(300, 8, seed=37)
        model = fit(train, FeatureSet.NO_Y, l2_lambda=3e-3)
        path = tmp_path / "model.txt"
        save_model(model, path)
        back = load_model(path)
        assert back.feature_set is FeatureSet.NO_Y
        assert back.l2_lambda == model.l2_lambda
        assert back.vocab_size == model.vocab_size
        assert np.array_equal(back.weights, model.weights)
        assert np.array_equal(back.predict_proba_batch(test),
                              model.predict_proba_batch(test))
