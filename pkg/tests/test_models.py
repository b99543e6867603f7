"""Architecture assembly, training behavior, and prediction contracts."""

import datetime as dt

import numpy as np
import pytest

from fincast.errors import ConfigError, DivergenceError
from fincast.models import (
    ModelSpec,
    TrainConfig,
    build,
    model_inputs,
    predict,
    train,
)
from fincast.nn import Dense, Dropout, LstmLayer
from fincast.preprocess import Scaler, WindowedDataset, build_dataset, split

from helpers import synthetic_series


def weekday_dates(n, start=dt.date(2021, 1, 4)):
    out, day = [], start
    while len(out) < n:
        if day.weekday() < 5:
            out.append(day)
        day += dt.timedelta(days=1)
    return out


def constant_dataset(feature_count, n=40, value=0.5):
    dates = weekday_dates(n)
    ds = WindowedDataset(np.full((n, feature_count), value), np.full(n, value),
                         dates, Scaler(0.0, 1.0), dates)
    return split(ds, 0.85)


class TestModelSpec:
    def test_presets(self):
        mlp = ModelSpec.for_kind("mlp")
        assert mlp.layer_sizes == (50, 30, 20, 1)
        assert mlp.dropout_rates == (0.1, 0.05, 0.01)
        assert (mlp.learning_rate, mlp.input_features) == (0.01, 10)
        lstm = ModelSpec.for_kind("lstm")
        assert lstm.layer_sizes == (50, 30, 20, 1)
        assert (lstm.learning_rate, lstm.input_features) == (0.02, 10)
        fin = ModelSpec.for_kind("finbert_lstm")
        assert fin.layer_sizes == (70, 30, 10, 1)
        assert fin.dropout_rates == ()
        assert (fin.learning_rate, fin.input_features) == (0.02, 11)

    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            ModelSpec.for_kind("gru")

    def test_tampered_spec_rejected(self):
        spec = ModelSpec("mlp", (50, 30, 20, 1), (0.1, 0.05, 0.01), 0.5, 10)
        with pytest.raises(ConfigError, match="preset"):
            build(spec, 0)


class TestBuild:
    def test_mlp_structure(self):
        net = build(ModelSpec.for_kind("mlp"), seed=0)
        kinds = [type(l).__name__ for l in net.layers]
        assert kinds == ["Dense", "Dropout", "Dense", "Dropout",
                         "Dense", "Dropout", "Dense"]
        widths = [l.n_out for l in net.layers if isinstance(l, Dense)]
        assert widths == [50, 30, 20, 1]
        rates = [l.rate for l in net.layers if isinstance(l, Dropout)]
        assert rates == [0.1, 0.05, 0.01]
        assert all(l.activation == "relu" for l in net.layers[:-1]
                   if isinstance(l, Dense))
        assert net.layers[-1].activation == "linear"

    def test_lstm_structure(self):
        net = build(ModelSpec.for_kind("lstm"), seed=0)
        lstms = [l for l in net.layers if isinstance(l, LstmLayer)]
        assert [l.hidden for l in lstms] == [50, 30, 20]
        assert [l.return_sequences for l in lstms] == [True, True, False]
        assert lstms[0].n_in == 1

    def test_finbert_lstm_structure(self):
        spec = ModelSpec.for_kind("finbert_lstm")
        assert spec.input_features == 11
        net = build(spec, seed=0)
        assert not any(isinstance(l, Dropout) for l in net.layers)
        lstms = [l for l in net.layers if isinstance(l, LstmLayer)]
        assert [l.hidden for l in lstms] == [70, 30, 10]

    def test_same_seed_bit_identical(self):
        a = build(ModelSpec.for_kind("lstm"), seed=11)
        b = build(ModelSpec.for_kind("lstm"), seed=11)
        for pa, pb in zip(a.params(), b.params()):
            assert np.array_equal(pa, pb)
        c = build(ModelSpec.for_kind("lstm"), seed=12)
        assert any(not np.array_equal(pa, pc)
                   for pa, pc in zip(a.params(), c.params()))

    def test_parameter_count_formula(self):
        # dense: in*out + out; lstm layer: 4*((hidden+in)*hidden + hidden)
        def expected(sizes, inputs, lstm):
            total, n_in = 0, 1 if lstm else inputs
            for width in sizes[:-1]:
                total += 4 * ((width + n_in) * width + width) if lstm \
                    else n_in * width + width
                n_in = width
            return total + n_in * 1 + 1

        for kind, lstm in (("mlp", False), ("lstm", True), ("finbert_lstm", True)):
            spec = ModelSpec.for_kind(kind)
            net = build(spec, 0)
            assert net.num_params() == expected(spec.layer_sizes,
                                                spec.input_features, lstm)

    def test_lstm_and_finbert_differ_only_in_shape_knobs(self):
        lstm, fin = ModelSpec.for_kind("lstm"), ModelSpec.for_kind("finbert_lstm")
        assert (lstm.input_features, lstm.layer_sizes, lstm.dropout_rates) != \
            (fin.input_features, fin.layer_sizes, fin.dropout_rates)
        assert lstm.learning_rate == fin.learning_rate


class TestTrain:
    def test_epochs_validation(self):
        with pytest.raises(ConfigError):
            TrainConfig(epochs=0)

    def test_constant_series_learned_by_bias(self):
        # constant windows, dropout-free spec: fit must be essentially exact
        data = constant_dataset(11)
        cfg = TrainConfig(epochs=200, batch_size=32, seed=3)
        model = train(build(ModelSpec.for_kind("finbert_lstm"), 3), data, cfg)
        assert min(model.loss_history) < 1e-6
        assert len(model.loss_history) == 200

    def test_noisy_sine_loss_decreases(self):
        series = synthetic_series(120, seed=5)
        data = build_dataset(series, window=10)
        cfg = TrainConfig(epochs=10, batch_size=32, seed=5)
        model = train(build(ModelSpec.for_kind("lstm"), 5), data, cfg)
        assert model.loss_history[-1] < model.loss_history[0]

    def test_deterministic_given_seed(self):
        series = synthetic_series(60, seed=6)
        data = build_dataset(series, window=10)
        cfg = TrainConfig(epochs=3, batch_size=16, seed=9)
        a = train(build(ModelSpec.for_kind("mlp"), 9), data, cfg)
        b = train(build(ModelSpec.for_kind("mlp"), 9), data, cfg)
        assert a.loss_history == b.loss_history
        for pa, pb in zip(a.network.params(), b.network.params()):
            assert np.array_equal(pa, pb)

    def test_feature_count_mismatch(self):
        data = constant_dataset(10)
        with pytest.raises(ConfigError, match="11 features"):
            train(build(ModelSpec.for_kind("finbert_lstm"), 0), data,
                  TrainConfig(epochs=1))

    def test_unbuilt_network_rejected(self):
        from fincast.nn import Network
        net = Network([Dense(10, 1)])
        with pytest.raises(ConfigError, match="spec"):
            train(net, constant_dataset(10), TrainConfig(epochs=1))

    def test_divergence_aborts_with_diagnostics(self):
        data = constant_dataset(10)
        net = build(ModelSpec.for_kind("mlp"), 0)
        net.layers[0].W[:, 0] = float("inf")
        with np.errstate(invalid="ignore"):
            with pytest.raises(DivergenceError, match="epoch 1"):
                train(net, data, TrainConfig(epochs=1, seed=0))

    def test_early_stopping_truncates_history(self):
        data = constant_dataset(11)
        cfg = TrainConfig(epochs=200, batch_size=32, seed=3, early_stop_patience=5)
        model = train(build(ModelSpec.for_kind("finbert_lstm"), 3), data, cfg)
        assert len(model.loss_history) < 200


class TestPredict:
    def test_constant_model_predicts_constant(self):
        data = constant_dataset(11)
        cfg = TrainConfig(epochs=60, batch_size=32, seed=3)
        model = train(build(ModelSpec.for_kind("finbert_lstm"), 3), data, cfg)
        values = np.array([p for _, p in predict(model, data.train)])
        assert np.max(np.abs(values - 0.5) / 0.5) < 1e-3

    def test_inference_mode_is_repeatable(self):
        series = synthetic_series(60, seed=8)
        data = build_dataset(series, window=10)
        cfg = TrainConfig(epochs=2, batch_size=16, seed=1)
        model = train(build(ModelSpec.for_kind("mlp"), 1), data, cfg)
        a = predict(model, data.test)
        b = predict(model, data.test)
        assert a == b

    def test_denormalization_arithmetic(self):
        # a network pinned to emit 0.5 must predict the scaler midpoint
        data = constant_dataset(10)
        net = build(ModelSpec.for_kind("mlp"), 0)
        for layer in net.layers:
            if isinstance(layer, Dense):
                layer.W[:] = 0.0
                layer.b[:] = 0.0
        net.layers[-1].b[:] = 0.5
        from fincast.models import TrainedModel
        model = TrainedModel(ModelSpec.for_kind("mlp"), net,
                             Scaler(10000.0, 16000.0), [0.0])
        values = [p for _, p in predict(model, data.test)]
        assert all(v == 13000.0 for v in values)

    def test_feature_count_checked(self):
        data = constant_dataset(10)
        cfg = TrainConfig(epochs=1, seed=0)
        model = train(build(ModelSpec.for_kind("mlp"), 0), data, cfg)
        data11 = constant_dataset(11)
        with pytest.raises(ConfigError, match="10 features"):
            predict(model, data11.test)

    def test_batch_partition_invariance(self):
        series = synthetic_series(80, seed=12)
        data = build_dataset(series, window=10)
        cfg = TrainConfig(epochs=2, batch_size=16, seed=2)
        model = train(build(ModelSpec.for_kind("lstm"), 2), data, cfg)
        X = model_inputs("lstm", data.test.features)
        batched = model.network.forward(X, training=False)[:, 0]
        singles = np.concatenate([
            model.network.forward(X[i:i + 1], training=False)[:, 0]
            for i in range(len(X))])
        assert np.max(np.abs(batched - singles)) < 1e-10

    def test_order_matches_dataset(self):
        series = synthetic_series(60, seed=13)
        data = build_dataset(series, window=10)
        cfg = TrainConfig(epochs=1, seed=0)
        model = train(build(ModelSpec.for_kind("mlp"), 0), data, cfg)
        assert [d for d, _ in predict(model, data.test)] == list(data.test.target_dates)


class TestCheckpointSidecar:
    def test_save_writes_checkpoint_and_sidecar(self, tmp_path):
        data = constant_dataset(10)
        cfg = TrainConfig(epochs=1, seed=0)
        model = train(build(ModelSpec.for_kind("mlp"), 0), data, cfg)
        ckpt, side = tmp_path / "m.json", tmp_path / "m.meta.json"
        model.save(ckpt, side, extra={"data_fingerprint": "abc"})
        import json
        from fincast.nn import Network
        reloaded = Network.load(ckpt)
        X = model_inputs("mlp", data.test.features)
        assert np.array_equal(reloaded.forward(X), model.network.forward(X))
        meta = json.loads(side.read_text())
        assert meta["spec"]["kind"] == "mlp"
        assert meta["config"]["seed"] == 0
        assert meta["data_fingerprint"] == "abc"
