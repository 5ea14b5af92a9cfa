"""Noise schedules, forward corruption, losses and ancestral sampling."""
import numpy as np
import pandas as pd
import pytest

from autodiff import ParameterStore
from conftest import random_adjacency
from diffusion.ensemble import (
    HISTORY_ID,
    TARGET_ID,
    ForecastEnsemble,
    ensembles_to_frame,
    frame_to_ensembles,
    read_ensembles,
    write_ensembles,
)
from diffusion.process import (
    diffusion_loss,
    forward_sample,
    reverse_step,
    sample,
    training_loss,
    trajectory_rng,
)
from diffusion.schedule import (
    NoiseSchedule,
    cosine_alpha_bar,
    cosine_schedule,
    linear_schedule,
    make_schedule,
)
from errors import ArgumentError, DataError, StructuralError
from graph_core import build_shift
from ugnn_model import UGNN, UGNNConfig


class ConstantModel:
    """Predicts a fixed array regardless of its input."""

    def __init__(self, value):
        self.value = np.asarray(value, dtype=np.float64)

    def forward(self, tape, params, x_t, t, u=None):
        return tape.constant(np.broadcast_to(self.value, np.shape(x_t)).reshape(-1, np.shape(x_t)[-1]))


class GaussianDenoiser:
    """Exact noise predictor when x0 ~ N(0, I)."""

    def __init__(self, schedule):
        self.schedule = schedule

    def predict(self, x_t, t, u=None):
        bar = self.schedule.alpha_bar_at(int(np.asarray(t).ravel()[0]))
        x0_hat = np.sqrt(bar) * x_t
        return (x_t - np.sqrt(bar) * x0_hat) / np.sqrt(1.0 - bar)


class TestSchedules:
    def test_cosine_small(self):
        s = cosine_schedule(2)
        assert s.alpha_bar_at(0) == 1.0
        assert s.alpha_bar_at(1) == pytest.approx(float(cosine_alpha_bar(1, 2)), abs=1e-12)
        assert s.alpha_bar_at(1) == pytest.approx(0.494, abs=1e-3)

    def test_cosine_long(self):
        s = cosine_schedule(500)
        assert s.alpha_bar[-1] < 1e-3
        assert np.all(np.diff(s.alpha_bar) < 0)
        assert s.beta.min() >= 1e-8 and s.beta.max() <= 0.999

    def test_cosine_ratio_matches_alpha(self):
        s = cosine_schedule(100)
        bars = np.concatenate([[1.0], s.alpha_bar])
        np.testing.assert_allclose(bars[1:] / bars[:-1], s.alpha, atol=1e-12)

    def test_cosine_too_short(self):
        with pytest.raises(ArgumentError):
            cosine_schedule(1)

    def test_linear(self):
        s = linear_schedule(2, 0.1, 0.2)
        np.testing.assert_allclose(s.alpha_bar, [0.9, 0.72], atol=1e-15)

    def test_linear_constant(self):
        s = linear_schedule(4, 0.05, 0.05)
        np.testing.assert_array_equal(s.beta, np.full(4, 0.05))

    @pytest.mark.parametrize("bounds", [(0.0, 0.1), (0.2, 0.1), (0.1, 1.0)])
    def test_linear_bounds(self, bounds):
        with pytest.raises(ArgumentError):
            linear_schedule(10, *bounds)

    def test_make_schedule(self):
        assert make_schedule("linear", 10, 1e-4, 0.02).T == 10
        with pytest.raises(ArgumentError):
            make_schedule("sigmoid", 10)

    def test_step_out_of_range(self):
        s = linear_schedule(3, 0.1, 0.3)
        with pytest.raises(ArgumentError):
            s.beta_at(0)
        with pytest.raises(ArgumentError):
            s.alpha_bar_at(4)

    def test_arrays_read_only(self):
        with pytest.raises(ValueError):
            cosine_schedule(5).beta[0] = 0.5


class TestForward:
    def test_t_zero(self):
        s = linear_schedule(3, 0.1, 0.3)
        np.testing.assert_array_equal(forward_sample([1.0, 2.0], 0, [5.0, 5.0], s), [1.0, 2.0])

    def test_hand_example(self):
        s = linear_schedule(1, 0.75, 0.75)
        out = forward_sample([1.0, -1.0], 1, [2.0, 0.0], s)
        np.testing.assert_allclose(out, [2.23205, -0.5], atol=1e-5)

    def test_pure_noise_limit(self):
        s = cosine_schedule(500)
        out = forward_sample([3.0], 500, [0.4], s)
        assert out[0] == pytest.approx(0.4, abs=0.02)

    def test_shape_mismatch(self):
        with pytest.raises(StructuralError):
            forward_sample([1.0, 2.0], 1, [1.0], linear_schedule(2, 0.1, 0.2))

    def test_marginal_statistics(self):
        s = cosine_schedule(200)
        rng = np.random.default_rng(0)
        x0 = 0.7
        n = 100_000
        for t in rng.integers(1, 201, size=5):
            xt = forward_sample(np.full(n, x0), int(t), rng.standard_normal(n), s)
            bar = s.alpha_bar_at(int(t))
            var = 1.0 - bar
            assert abs(xt.mean() - np.sqrt(bar) * x0) < 4 * np.sqrt(var / n)
            assert abs(xt.var() - var) < 4 * var * np.sqrt(2.0 / n)


class TestLoss:
    def test_exact_predictor(self):
        rng = np.random.default_rng(1)
        x0 = rng.standard_normal((3, 4, 2))
        eps = rng.standard_normal((3, 4, 2))
        s = cosine_schedule(10)
        loss, grads = diffusion_loss(ConstantModel(eps), ParameterStore(), x0, None, [1, 5, 9], eps, s)
        assert loss == 0.0 and grads == {}

    def test_x0_objective_target(self):
        rng = np.random.default_rng(2)
        x0 = rng.standard_normal((2, 3, 1))
        eps = rng.standard_normal((2, 3, 1))
        loss, _ = diffusion_loss(ConstantModel(x0), ParameterStore(), x0, None, [2, 3], eps,
                                 cosine_schedule(5), objective="x0_pred")
        assert loss == 0.0

    def test_zero_predictor_unit_loss(self):
        batch = [(np.zeros((10, 10)), None) for _ in range(100)]
        loss, _ = training_loss(ConstantModel(0.0), ParameterStore(), batch, cosine_schedule(50),
                                np.random.default_rng(3), with_grad=False)
        assert loss == pytest.approx(1.0, abs=0.05)

    def test_batch_order_invariant(self):
        rng = np.random.default_rng(4)
        x0 = rng.standard_normal((4, 3, 2))
        eps = rng.standard_normal((4, 3, 2))
        t = np.array([1, 4, 2, 7])
        s = cosine_schedule(8)
        perm = np.array([2, 0, 3, 1])
        a, _ = diffusion_loss(ConstantModel(0.3), ParameterStore(), x0, None, t, eps, s)
        b, _ = diffusion_loss(ConstantModel(0.3), ParameterStore(), x0[perm], None, t[perm], eps[perm], s)
        assert a == pytest.approx(b, rel=1e-14)

    def test_unknown_objective(self):
        with pytest.raises(ArgumentError):
            diffusion_loss(ConstantModel(0.0), ParameterStore(), np.zeros((1, 2, 1)), None, [1],
                           np.zeros((1, 2, 1)), cosine_schedule(3), objective="v_pred")

    def test_mixed_conditioning(self):
        batch = [(np.zeros((2, 1)), np.zeros((2, 1))), (np.zeros((2, 1)), None)]
        with pytest.raises(StructuralError):
            training_loss(ConstantModel(0.0), ParameterStore(), batch, cosine_schedule(3), np.random.default_rng(0))

    def test_ugnn_gradients_keyed_like_params(self):
        rng = np.random.default_rng(5)
        shift = build_shift(random_adjacency(5, rng))
        cfg = UGNNConfig.halving([5, 3], f0=4, target_width=2, conditioning_width=1, layers_per_block=1)
        model = UGNN.build(cfg, shift, seed=0)
        batch = [(rng.standard_normal((5, 2)), rng.standard_normal((5, 1))) for _ in range(3)]
        loss, grads = training_loss(model, model.params, batch, cosine_schedule(10), np.random.default_rng(6))
        assert np.isfinite(loss)
        assert sorted(grads) == model.params.names()
        again, _ = training_loss(model, model.params, batch, cosine_schedule(10), np.random.default_rng(6))
        assert again == loss


class TestReverse:
    def test_hand_example(self):
        s = NoiseSchedule.from_betas([1.0 - 0.5 / 0.9, 0.1])
        assert s.alpha_bar_at(2) == pytest.approx(0.5, abs=1e-15)
        out = reverse_step(np.array([1.0]), 2, np.array([0.2]), s, w=np.array([0.0]))
        assert out[0] == pytest.approx(1.02427, abs=1e-4)

    def test_pure_rescaling(self):
        s = linear_schedule(3, 0.1, 0.3)
        out = reverse_step(np.array([2.0]), 3, np.array([0.0]), s, w=np.array([0.0]))
        assert out[0] == pytest.approx(2.0 / np.sqrt(0.7), abs=1e-14)

    def test_small_beta_identity(self):
        s = NoiseSchedule.from_betas([1e-8, 1e-8])
        out = reverse_step(np.array([1.5]), 2, np.array([0.3]), s, w=np.array([1.0]))
        assert out[0] == pytest.approx(1.5, abs=1e-3)

    def test_last_step_ignores_noise(self):
        s = linear_schedule(2, 0.1, 0.2)
        a = reverse_step(np.array([1.0]), 1, np.array([0.5]), s, w=np.array([9.0]))
        b = reverse_step(np.array([1.0]), 1, np.array([0.5]), s)
        np.testing.assert_array_equal(a, b)

    def test_step_out_of_range(self):
        with pytest.raises(ArgumentError):
            reverse_step(np.zeros(1), 3, np.zeros(1), linear_schedule(2, 0.1, 0.2))


class TestSample:
    def test_gaussian_oracle(self):
        s = cosine_schedule(50)
        ens = sample(GaussianDenoiser(s), None, s, n_traj=10_000, seed=0, shape=(1, 1))
        values = ens.trajs.ravel()
        assert ens.trajs.shape == (10_000, 1, 1)
        assert abs(values.mean()) < 3 * values.std(ddof=1) / np.sqrt(values.size)
        assert values.var(ddof=1) == pytest.approx(1.0, rel=0.05)

    def test_seed_determinism(self):
        s = cosine_schedule(10)
        a = sample(GaussianDenoiser(s), None, s, 6, seed=42, shape=(3, 2))
        b = sample(GaussianDenoiser(s), None, s, 6, seed=42, shape=(3, 2))
        c = sample(GaussianDenoiser(s), None, s, 6, seed=43, shape=(3, 2))
        np.testing.assert_array_equal(a.trajs, b.trajs)
        assert not np.array_equal(a.trajs, c.trajs)
        assert a.meta["seed"] == 42

    def test_chunking_does_not_matter(self):
        s = cosine_schedule(10)
        whole = sample(GaussianDenoiser(s), None, s, 7, seed=1, shape=(2, 3))
        pieces = sample(GaussianDenoiser(s), None, s, 7, seed=1, shape=(2, 3), chunk=3)
        np.testing.assert_array_equal(whole.trajs, pieces.trajs)
        first = sample(GaussianDenoiser(s), None, s, 2, seed=1, shape=(2, 3))
        np.testing.assert_array_equal(first.trajs, whole.trajs[:2])

    def test_streams_independent(self):
        a = trajectory_rng(5, 0).standard_normal(4)
        b = trajectory_rng(5, 1).standard_normal(4)
        assert not np.array_equal(a, b)
        np.testing.assert_array_equal(a, trajectory_rng(5, 0).standard_normal(4))

    def test_ugnn_ensemble_layout(self):
        rng = np.random.default_rng(8)
        shift = build_shift(random_adjacency(5, rng))
        cfg = UGNNConfig.halving([5, 4], f0=4, target_width=3, conditioning_width=2, layers_per_block=1)
        model = UGNN.build(cfg, shift)
        ens = sample(model, rng.standard_normal((5, 2)), cosine_schedule(4), n_traj=3, seed=0)
        assert (ens.n_traj, ens.horizon, ens.n_nodes) == (3, 3, 5)

    def test_bad_n_traj(self):
        s = cosine_schedule(3)
        with pytest.raises(ArgumentError):
            sample(GaussianDenoiser(s), None, s, 0, seed=0, shape=(1, 1))


class TestEnsembleCSV:
    def test_round_trip(self, tmp_path, rng):
        ens = ForecastEnsemble(
            rng.standard_normal((3, 2, 4)), rng.standard_normal((2, 4)), rng.standard_normal((5, 4)),
            {"window_id": 7},
        )
        path = tmp_path / "ens.csv"
        write_ensembles(path, [ens])
        (back,) = read_ensembles(path)
        assert back.window_id == 7
        np.testing.assert_array_equal(back.trajs, ens.trajs)
        np.testing.assert_array_equal(back.target, ens.target)
        np.testing.assert_array_equal(back.history, ens.history)

    def test_frame_layout(self):
        ens = ForecastEnsemble(np.zeros((2, 3, 4)), np.ones((3, 4)), np.ones((2, 4)))
        frame = ensembles_to_frame([ens])
        assert list(frame.columns) == ["window_id", "traj_id", "day", "node_id", "value"]
        assert len(frame) == (2 + 1) * 12 + 8
        assert frame.loc[frame.traj_id == HISTORY_ID, "day"].min() == -2
        assert set(frame.loc[frame.traj_id == TARGET_ID, "day"]) == {0, 1, 2}

    def test_missing_columns(self):
        with pytest.raises(DataError):
            frame_to_ensembles(pd.DataFrame({"traj_id": [0], "value": [1.0]}))

    def test_missing_cells(self):
        frame = ensembles_to_frame([ForecastEnsemble(np.zeros((1, 2, 2)))]).iloc[:-1]
        with pytest.raises(DataError):
            frame_to_ensembles(frame)

    def test_target_shape_checked(self):
        with pytest.raises(StructuralError):
            ForecastEnsemble(np.zeros((2, 3, 4)), np.zeros((4, 3)))

    def test_non_finite(self):
        with pytest.raises(DataError):
            ForecastEnsemble(np.full((1, 1, 1), np.nan))
