import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lionlstm.dataio import WindowedSamples
from lionlstm.errors import NumericalError
from lionlstm.lstm import (
    LstmParams, LstmState, bptt_gradient, genome_dim, genome_to_params, lstm_cell_step,
    lstm_forward, mse_loss, params_to_genome, predict, train_lstm_gd,
)
from oracles import central_differences, max_relative_error, scalar_lstm_step


def random_params(rng, H, D, scale=1.0):
    return genome_to_params(rng.uniform(-scale, scale, genome_dim(H, D)), H, D)


class TestCellStep:
    def test_all_zero(self):
        p = LstmParams.zeros(1, 1)
        state, g = lstm_cell_step(p, [0.7], LstmState(np.array([1.0]), np.array([0.0])))
        assert g.f[0] == 0.5 and g.i[0] == 0.5 and g.c_hat[0] == 0.0 and g.o[0] == 0.5
        assert state.C[0] == 0.5
        # 0.5 * tanh(0.5)
        assert state.h[0] == pytest.approx(0.2310585786, abs=1e-10)

    def test_forget_saturation_retains_memory(self):
        p = LstmParams.zeros(1, 1)
        p.b_f[:] = 100.0
        state, _ = lstm_cell_step(p, [0.3], LstmState(np.array([3.0]), np.array([0.0])))
        assert state.C[0] == pytest.approx(3.0, abs=1e-8)

    def test_memory_retention_with_closed_input_gate(self, rng):
        p = random_params(rng, 3, 2)
        p.W_f[:] = 0
        p.W_i[:] = 0
        p.b_f[:] = 100.0
        p.b_i[:] = -100.0
        C0 = rng.uniform(-2, 2, 3)
        state, _ = lstm_cell_step(p, rng.uniform(-1, 1, 2), LstmState(C0, rng.uniform(-0.9, 0.9, 3)))
        np.testing.assert_allclose(state.C, C0, atol=1e-8)

    @given(st.integers(0, 10_000), st.floats(0.1, 20.0))
    @settings(max_examples=60)
    def test_gate_ranges(self, seed, scale):
        rng = np.random.default_rng(seed)
        p = random_params(rng, 2, 2, scale)
        state = LstmState(rng.normal(0, scale, 2), rng.uniform(-0.99, 0.99, 2))
        new, g = lstm_cell_step(p, rng.normal(0, scale, 2), state)
        for gate in (g.f, g.i, g.o):
            assert np.all((gate >= 0) & (gate <= 1))
        assert np.all(np.abs(g.c_hat) <= 1)
        assert np.all(np.abs(new.h) <= 1)
        assert np.all(np.isfinite(new.C))

    def test_gate_ranges_open_interval_moderate_inputs(self, rng):
        for _ in range(50):
            p = random_params(rng, 2, 2)
            new, g = lstm_cell_step(p, rng.uniform(-1, 1, 2), LstmState(rng.uniform(-1, 1, 2), rng.uniform(-0.9, 0.9, 2)))
            for gate in (g.f, g.i, g.o):
                assert np.all((gate > 0) & (gate < 1))
            assert np.all(np.abs(g.c_hat) < 1) and np.all(np.abs(new.h) < 1)

    def test_matches_scalar_reference(self, rng):
        for _ in range(20):
            H = int(rng.integers(1, 5))
            p = random_params(rng, H, 2)
            x, C, h = rng.normal(size=2), rng.normal(size=H), rng.uniform(-1, 1, H)
            new, g = lstm_cell_step(p, x, LstmState(C, h))
            ref = scalar_lstm_step(p.W_f.tolist(), p.W_i.tolist(), p.W_c.tolist(), p.W_o.tolist(),
                                   p.b_f.tolist(), p.b_i.tolist(), p.b_c.tolist(), p.b_o.tolist(),
                                   x.tolist(), C.tolist(), h.tolist())
            np.testing.assert_allclose(new.h, ref["h"], atol=1e-12)
            np.testing.assert_allclose(new.C, ref["C"], atol=1e-12)

    def test_shape_mismatch(self):
        p = LstmParams.zeros(2, 2)
        with pytest.raises(ValueError):
            lstm_cell_step(p, [1.0, 2.0, 3.0], LstmState.zeros(2))
        with pytest.raises(ValueError):
            lstm_cell_step(p, [1.0, 2.0], LstmState.zeros(3))


class TestForward:
    def test_zero_params(self, rng):
        assert lstm_forward(LstmParams.zeros(4, 2), rng.normal(size=(5, 2))) == 0.0

    def test_constant_readout(self, rng):
        p = random_params(rng, 3, 2)
        p.W_y[:] = 0
        p.b_y = 0.7
        assert lstm_forward(p, rng.normal(size=(6, 2))) == 0.7

    def test_single_step_is_cell_plus_readout(self, rng):
        p = random_params(rng, 3, 2)
        x = rng.normal(size=2)
        state, _ = lstm_cell_step(p, x, LstmState.zeros(3))
        assert lstm_forward(p, x[None, :]) == pytest.approx(float(p.W_y @ state.h + p.b_y), abs=1e-15)

    def test_batch_matches_sequential(self, rng):
        p = random_params(rng, 4, 2)
        inputs = rng.uniform(0, 1, size=(7, 5, 2))
        samples = WindowedSamples(inputs, np.zeros(7), np.arange(7))
        batch = predict(p, samples)
        seq = [lstm_forward(p, s) for s in inputs]
        np.testing.assert_allclose(batch, seq, atol=1e-12)

    def test_pure(self, rng):
        p = random_params(rng, 3, 2)
        seq = rng.normal(size=(4, 2))
        assert lstm_forward(p, seq) == lstm_forward(p, seq)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            lstm_forward(LstmParams.zeros(2, 2), np.zeros((3, 3)))


class TestCodec:
    @pytest.mark.parametrize("H,D,dim", [(6, 2, 223), (1, 1, 14)])
    def test_dim(self, H, D, dim):
        assert genome_dim(H, D) == dim

    def test_layout(self):
        H, D = 2, 1
        g = np.arange(genome_dim(H, D), dtype=float)
        p = genome_to_params(g, H, D)
        assert p.W_f.tolist() == [[0, 1, 2], [3, 4, 5]]
        assert p.W_i[0, 0] == 6 and p.W_o[1, 2] == 23
        assert p.b_f.tolist() == [24, 25] and p.b_o.tolist() == [30, 31]
        assert p.W_y.tolist() == [32, 33] and p.b_y == 34

    @given(st.integers(1, 6), st.integers(1, 3), st.integers(0, 2**32 - 1))
    @settings(max_examples=30)
    def test_bijective(self, H, D, seed):
        g = np.random.default_rng(seed).normal(size=genome_dim(H, D))
        back = params_to_genome(genome_to_params(g, H, D))
        assert back.tobytes() == g.tobytes()

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            genome_to_params(np.zeros(10), 2, 2)

    def test_json_wire_format(self, rng):
        p = random_params(rng, 3, 2)
        doc = json.loads(json.dumps(p.to_dict()))
        assert doc["h"] == 3 and doc["d"] == 2 and len(doc["genome"]) == genome_dim(3, 2)
        assert params_to_genome(LstmParams.from_dict(doc)).tobytes() == params_to_genome(p).tobytes()


def _loss_of_genome(samples, H, D):
    return lambda g: mse_loss(genome_to_params(g, H, D), samples)


class TestBptt:
    def test_readout_bias_closed_form(self, rng, small_samples):
        p = random_params(rng, 3, 2)
        g = bptt_gradient(p, small_samples)
        resid = predict(p, small_samples) - small_samples.targets
        assert g[-1] == pytest.approx(np.mean(2 * resid), abs=1e-14)

    def test_zero_residual_kills_gradient(self, rng):
        samples = WindowedSamples(rng.normal(size=(5, 3, 2)), np.zeros(5), np.arange(5))
        g = bptt_gradient(LstmParams.zeros(3, 2), samples)
        assert np.all(g == 0)

    def test_finite_differences(self, rng):
        H, D, L = 3, 2, 4
        for _ in range(5):
            p = random_params(rng, H, D, 0.8)
            samples = WindowedSamples(rng.uniform(0, 1, (6, L, D)), rng.uniform(0, 1, 6), np.arange(6))
            fd = central_differences(_loss_of_genome(samples, H, D), params_to_genome(p), 1e-5)
            assert max_relative_error(bptt_gradient(p, samples), fd, floor=1e-7) < 1e-4

    def test_non_finite_reported(self):
        p = LstmParams.zeros(1, 2)
        samples = WindowedSamples(np.zeros((2, 2, 2)), np.array([np.inf, 0.0]), np.arange(2))
        with pytest.raises(NumericalError):
            bptt_gradient(p, samples)


class TestTrainGd:
    def test_zero_epochs_returns_init(self, small_samples):
        p0, trace = train_lstm_gd(small_samples, 0.1, 0, seed=3, hidden=2)
        p1, _ = train_lstm_gd(small_samples, 0.1, 0, seed=3, hidden=2)
        assert trace == []
        g = params_to_genome(p0)
        assert np.all(np.abs(g) <= 0.1)
        assert g.tobytes() == params_to_genome(p1).tobytes()

    def test_constant_target_descends(self, rng):
        samples = WindowedSamples(rng.uniform(0, 1, (30, 6, 2)), np.full(30, 0.5), np.arange(30))
        params, trace = train_lstm_gd(samples, 0.1, 200, seed=1)
        assert len(trace) == 200
        assert mse_loss(params, samples) < trace[0]

    def test_deterministic(self, small_samples):
        a, ta = train_lstm_gd(small_samples, 0.2, 20, seed=5, hidden=3)
        b, tb = train_lstm_gd(small_samples, 0.2, 20, seed=5, hidden=3)
        assert params_to_genome(a).tobytes() == params_to_genome(b).tobytes()
        assert ta == tb

    def test_divergence_reported(self, small_samples):
        with pytest.raises(NumericalError, match="epoch"):
            train_lstm_gd(small_samples, 1e300, 5, seed=0)

    def test_bad_learning_rate(self, small_samples):
        with pytest.raises(ValueError):
            train_lstm_gd(small_samples, 0.0, 5, seed=0)


def test_sigmoid_extremes():
    from lionlstm.lstm import sigmoid
    out = sigmoid(np.array([-1000.0, 0.0, 1000.0]))
    assert out.tolist() == [0.0, 0.5, 1.0]
    assert math.isfinite(out.sum())
