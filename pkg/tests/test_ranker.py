"""Linear predictors: ridge regression, pairwise preference model, Borda."""

import numpy as np
import pytest

from summability import ranker
from summability.corpus import PredictionTable
from summability.errors import (
    DataFormatError,
    DegenerateInputError,
    MissingDocumentError,
    SchemaMismatchError,
)
from summability.features import SCHEMA_CORE, SCHEMA_FULL

from oracles import kendall_oracle


def planted_data(n, d, seed, noise=0.0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, d))
    w_true = rng.normal(size=d)
    y = x @ w_true + noise * rng.normal(size=n)
    return x, y, w_true


class TestTrainRegression:
    def test_noiseless_slope_recovery(self):
        # ridge=0: the 3-point system is tiny enough that the default
        # regularizer alone would nudge the intercept past the tolerance
        model = ranker.train_regression(
            [[1.0], [2.0], [3.0]], [2.0, 4.0, 6.0], SCHEMA_CORE, ridge=0.0
        )
        slope, intercept = model.effective_coefficients()
        assert abs(slope[0] - 2.0) < 1e-6
        assert abs(intercept) < 1e-6

    def test_default_ridge_is_near_exact(self):
        model = ranker.train_regression([[1.0], [2.0], [3.0]], [2.0, 4.0, 6.0], SCHEMA_CORE)
        slope, intercept = model.effective_coefficients()
        assert abs(slope[0] - 2.0) < 1e-5
        assert abs(intercept) < 1e-5

    def test_constant_targets(self):
        model = ranker.train_regression([[1.0], [2.0], [3.0]], [5.0, 5.0, 5.0], SCHEMA_CORE)
        assert np.allclose(model.weights, 0.0)
        assert model.bias == 5.0

    def test_duplicated_samples_do_not_change_solution(self):
        x, y, _ = planted_data(20, 3, seed=1)
        base = ranker.train_regression(x, y, SCHEMA_CORE, ridge=0.0)
        doubled = ranker.train_regression(
            np.vstack([x, x]), np.concatenate([y, y]), SCHEMA_CORE, ridge=0.0
        )
        assert np.allclose(base.effective_coefficients()[0],
                           doubled.effective_coefficients()[0])

    def test_feature_rescaling_leaves_predictions_unchanged(self):
        x, y, _ = planted_data(30, 4, seed=2)
        ids = [f"d{i}" for i in range(len(x))]
        base = ranker.predict(ranker.train_regression(x, y, SCHEMA_CORE), ids, x)
        scaled = x * np.asarray([10.0, 0.5, 3.0, 100.0])
        rescaled = ranker.predict(
            ranker.train_regression(scaled, y, SCHEMA_CORE), ids, scaled
        )
        for doc_id in ids:
            assert base[doc_id] == pytest.approx(rescaled[doc_id], abs=1e-8)

    def test_constant_column_is_tolerated(self):
        x = [[1.0, 7.0], [2.0, 7.0], [3.0, 7.0]]
        model = ranker.train_regression(x, [1.0, 2.0, 3.0], SCHEMA_CORE)
        assert (model.feature_stds > 0).all()

    def test_validation(self):
        with pytest.raises(DegenerateInputError):
            ranker.train_regression([[1.0]], [1.0], SCHEMA_CORE)
        with pytest.raises(ValueError):
            ranker.train_regression([[1.0], [2.0]], [1.0, 2.0], SCHEMA_CORE, ridge=-1)
        with pytest.raises(ValueError):
            ranker.train_regression([[np.nan], [2.0]], [1.0, 2.0], SCHEMA_CORE)


class TestPredict:
    def test_zero_weights_yield_bias(self):
        model = ranker.LinearModel(
            weights=np.zeros(2),
            bias=0.5,
            feature_means=np.zeros(2),
            feature_stds=np.ones(2),
            schema_version=SCHEMA_CORE,
        )
        table = ranker.predict(model, ["a", "b"], [[1.0, 2.0], [3.0, 4.0]])
        assert table["a"] == 0.5 and table["b"] == 0.5

    def test_training_set_reproduction(self):
        x, y, _ = planted_data(50, 5, seed=3)
        model = ranker.train_regression(x, y, SCHEMA_CORE)
        ids = [f"d{i}" for i in range(len(x))]
        table = ranker.predict(model, ids, x)
        for i, doc_id in enumerate(ids):
            assert table[doc_id] == pytest.approx(y[i], abs=1e-5)

    def test_permutation_equivariance(self):
        x, y, _ = planted_data(10, 2, seed=4)
        model = ranker.train_regression(x, y, SCHEMA_CORE)
        ids = [f"d{i}" for i in range(10)]
        forward = ranker.predict(model, ids, x)
        backward = ranker.predict(model, ids[::-1], x[::-1])
        assert forward.entries == backward.entries

    def test_width_mismatch_rejected(self):
        x, y, _ = planted_data(10, 2, seed=5)
        model = ranker.train_regression(x, y, SCHEMA_CORE)
        with pytest.raises(SchemaMismatchError):
            ranker.predict(model, ["a"], [[1.0, 2.0, 3.0]])


class TestTrainPairwise:
    def test_all_tied_targets_rejected(self):
        with pytest.raises(DegenerateInputError):
            ranker.train_pairwise([[1.0], [2.0], [3.0]], [1.0, 1.0, 1.0], SCHEMA_CORE)

    def test_pair_probabilities_antisymmetric(self):
        x, y, _ = planted_data(12, 3, seed=6)
        model = ranker.train_pairwise(x, y, SCHEMA_CORE, epochs=20, learning_rate=0.5)
        ids = [f"d{i}" for i in range(len(x))]
        probs = ranker.pair_probabilities(model, ids, x)
        for i in ids:
            for j in ids:
                if i != j:
                    assert abs(probs[(i, j)] + probs[(j, i)] - 1.0) <= 1e-9

    def test_separable_recovery(self):
        x, y, w_true = planted_data(60, 3, seed=7)
        model = ranker.train_pairwise(x, y, SCHEMA_CORE, epochs=50, learning_rate=1.0)
        scores = ranker.score_documents(
            model, [f"d{i}" for i in range(len(x))], x
        )
        got = [scores[f"d{i}"] for i in range(len(x))]
        assert kendall_oracle(got, list(y)) >= 0.9

    def test_max_pairs_subsampling_is_seeded(self):
        x, y, _ = planted_data(30, 3, seed=8)
        a = ranker.train_pairwise(x, y, SCHEMA_CORE, seed=5, max_pairs=100)
        b = ranker.train_pairwise(x, y, SCHEMA_CORE, seed=5, max_pairs=100)
        c = ranker.train_pairwise(x, y, SCHEMA_CORE, seed=6, max_pairs=100)
        assert np.array_equal(a.weights, b.weights)
        assert not np.array_equal(a.weights, c.weights)

    def test_epoch_validation(self):
        with pytest.raises(ValueError):
            ranker.train_pairwise([[1.0], [2.0]], [1.0, 2.0], SCHEMA_CORE, epochs=0)


class TestAggregateRanking:
    def test_hard_total_order_reproduced(self):
        probs = {
            ("A", "B"): 1.0, ("B", "A"): 0.0,
            ("A", "C"): 1.0, ("C", "A"): 0.0,
            ("B", "C"): 1.0, ("C", "B"): 0.0,
        }
        table = ranker.aggregate_ranking(probs)
        assert table["A"] == 2.0 and table["B"] == 1.0 and table["C"] == 0.0

    def test_soft_borda_sums(self):
        probs = {
            ("A", "B"): 0.9, ("B", "A"): 0.1,
            ("A", "C"): 0.8, ("C", "A"): 0.2,
            ("B", "C"): 0.6, ("C", "B"): 0.4,
        }
        table = ranker.aggregate_ranking(probs)
        assert table["A"] == pytest.approx(1.7)
        assert table["B"] == pytest.approx(0.7)
        assert table["C"] == pytest.approx(0.6)

    def test_missing_pair_rejected(self):
        with pytest.raises(DataFormatError):
            ranker.aggregate_ranking({("A", "B"): 1.0})

    def test_antisymmetry_violation_rejected(self):
        probs = {("A", "B"): 0.9, ("B", "A"): 0.2}
        with pytest.raises(DataFormatError):
            ranker.aggregate_ranking(probs)

    def test_latent_scores_order_like_borda(self):
        x, y, _ = planted_data(15, 3, seed=9)
        model = ranker.train_pairwise(x, y, SCHEMA_CORE, epochs=30, learning_rate=0.5)
        ids = [f"d{i}" for i in range(len(x))]
        borda = ranker.aggregate_ranking(ranker.pair_probabilities(model, ids, x))
        latent = ranker.score_documents(model, ids, x)
        borda_order = sorted(ids, key=lambda d: borda[d])
        latent_order = sorted(ids, key=lambda d: latent[d])
        assert borda_order == latent_order


class TestEvaluatePredictions:
    def test_report(self):
        pred = PredictionTable({"a": 1.0, "b": 2.0, "c": 3.0, "d": 4.0})
        gold = {"a": 1.0, "b": 3.0, "c": 2.0, "d": 4.0}
        report = ranker.evaluate_predictions(pred, gold)
        assert report.pearson == pytest.approx(0.8)
        assert report.n == 4

    def test_too_few_shared(self):
        pred = PredictionTable({"a": 1.0, "b": 2.0})
        with pytest.raises(DegenerateInputError):
            ranker.evaluate_predictions(pred, {"a": 1.0, "b": 2.0})


class TestTrainValSplit:
    def test_sizes_and_partition(self):
        ids = [f"d{i}" for i in range(10)]
        train, val = ranker.train_val_split(ids, val_fraction=0.2, seed=0)
        assert len(val) == 2 and len(train) == 8
        assert sorted(train + val) == sorted(ids)

    def test_deterministic_per_seed(self):
        ids = [f"d{i}" for i in range(20)]
        assert ranker.train_val_split(ids, seed=3) == ranker.train_val_split(ids, seed=3)
        assert ranker.train_val_split(ids, seed=3) != ranker.train_val_split(ids, seed=4)

    def test_input_order_does_not_matter(self):
        ids = [f"d{i}" for i in range(9)]
        assert ranker.train_val_split(ids, seed=1) == ranker.train_val_split(
            ids[::-1], seed=1
        )

    def test_fraction_validation(self):
        with pytest.raises(ValueError):
            ranker.train_val_split(["a"], val_fraction=1.0)


class TestModelFiles:
    def test_round_trip_regression(self, tmp_path):
        x, y, _ = planted_data(20, 5, seed=10)
        model = ranker.train_regression(x, y, SCHEMA_CORE)
        path = tmp_path / "model.json"
        ranker.save_model(model, path)
        loaded = ranker.load_model(path)
        assert isinstance(loaded, ranker.LinearModel)
        assert loaded.kind == "regression"
        assert np.array_equal(loaded.weights, model.weights)
        assert loaded.bias == model.bias
        assert loaded.schema_version == model.schema_version

    def test_round_trip_pairwise(self, tmp_path):
        x, y, _ = planted_data(20, 7, seed=11)
        model = ranker.train_pairwise(x, y, SCHEMA_FULL)
        path = tmp_path / "model.json"
        ranker.save_model(model, path)
        loaded = ranker.load_model(path)
        assert isinstance(loaded, ranker.PairwiseModel)
        assert loaded.kind == "pairwise"
        assert np.array_equal(loaded.weights, model.weights)

    def test_future_version_refused(self, tmp_path):
        x, y, _ = planted_data(10, 5, seed=12)
        model = ranker.train_regression(x, y, SCHEMA_CORE)
        path = tmp_path / "model.json"
        ranker.save_model(model, path)
        import json

        payload = json.loads(path.read_text())
        payload["file_version"] = 999
        path.write_text(json.dumps(payload))
        with pytest.raises(SchemaMismatchError):
            ranker.load_model(path)

    def test_unknown_schema_refused(self, tmp_path):
        x, y, _ = planted_data(10, 5, seed=13)
        ranker.save_model(ranker.train_regression(x, y, SCHEMA_CORE), tmp_path / "m.json")
        import json

        payload = json.loads((tmp_path / "m.json").read_text())
        payload["schema_version"] = "core-99"
        (tmp_path / "m.json").write_text(json.dumps(payload))
        with pytest.raises(SchemaMismatchError):
            ranker.load_model(tmp_path / "m.json")

    def test_width_mismatch_refused(self, tmp_path):
        x, y, _ = planted_data(10, 5, seed=14)
        ranker.save_model(ranker.train_regression(x, y, SCHEMA_CORE), tmp_path / "m.json")
        import json

        payload = json.loads((tmp_path / "m.json").read_text())
        payload["weights"] = payload["weights"][:-1]
        (tmp_path / "m.json").write_text(json.dumps(payload))
        with pytest.raises(SchemaMismatchError):
            ranker.load_model(tmp_path / "m.json")

    def test_malformed_json_refused(self, tmp_path):
        (tmp_path / "m.json").write_text("{nope")
        with pytest.raises(DataFormatError):
            ranker.load_model(tmp_path / "m.json")

    def test_weights_width_matches_schema(self, tmp_path):
        x, y, _ = planted_data(10, 5, seed=15)
        model = ranker.train_regression(x, y, SCHEMA_CORE)
        from summability.features import FEATURE_SCHEMAS

        assert len(model.weights) == len(FEATURE_SCHEMAS[SCHEMA_CORE])
