"""Forecast scores, GRW baseline, reports and fan charts."""
import numpy as np
import pandas as pd
import pytest

from diffusion.ensemble import ForecastEnsemble
from errors import ArgumentError, DataError, StructuralError
from eval_suite import (
    crps,
    crps_ensemble,
    ensemble_scores,
    fit_grw,
    grw_forecast,
    interval_score,
    mae,
    mis,
    prediction_interval,
    read_report,
    rmse,
    simulate_grw,
    summarize,
    write_report,
)
from eval_suite.fan_chart import fan_data, plotly_fan
from eval_suite.grw import GRWParams
from eval_suite.plots import save_fan_svg
from eval_suite.report import combine, pivot_report, relative_to


class TestGRW:
    def test_constant_returns(self):
        p = fit_grw(np.full((5, 2), 0.01))
        np.testing.assert_allclose(p.drift, 0.01)
        np.testing.assert_array_equal(p.vol, 0.0)

    def test_two_days(self):
        p = fit_grw([0.1, -0.1])
        assert p.drift[0] == pytest.approx(0.0, abs=1e-15)
        assert p.vol[0] == pytest.approx(0.141421, abs=1e-6)

    def test_recovery(self):
        r = np.random.default_rng(0).normal(0.001, 0.02, size=(10_000, 1))
        p = fit_grw(r)
        assert p.vol[0] == pytest.approx(0.02, rel=0.05)
        # drift standard error is 2e-4
        assert abs(p.drift[0] - 0.001) < 4 * 0.02 / np.sqrt(10_000)

    def test_needs_two_days(self):
        with pytest.raises(ArgumentError):
            fit_grw([[0.1, 0.2]])

    def test_zero_vol_paths(self):
        params = GRWParams(np.array([0.002, -0.001]), np.zeros(2))
        trajs = simulate_grw(params, 4, 3, seed=0)
        np.testing.assert_array_equal(trajs, np.broadcast_to([0.002, -0.001], (3, 4, 2)))

    def test_simulation_mean(self):
        params = GRWParams(np.array([0.003]), np.array([0.05]))
        trajs = simulate_grw(params, 1, 100_000, seed=1)
        assert abs(trajs.mean() - 0.003) < 4 * 0.05 / np.sqrt(100_000)

    def test_reproducible(self):
        params = GRWParams(np.array([0.0, 0.1]), np.array([1.0, 2.0]))
        np.testing.assert_array_equal(simulate_grw(params, 3, 5, 9), simulate_grw(params, 3, 5, 9))

    def test_negative_vol(self):
        with pytest.raises(ArgumentError):
            GRWParams(np.zeros(1), np.array([-1.0]))

    def test_forecast_ensemble(self, rng):
        history = rng.normal(0.0, 0.01, size=(20, 3))
        ens = grw_forecast(history, t_h=5, n_traj=7, seed=2, target=np.zeros((5, 3)), window_id=4)
        assert (ens.n_traj, ens.horizon, ens.n_nodes) == (7, 5, 3)
        assert ens.meta["model"] == "GRW" and ens.window_id == 4
        np.testing.assert_array_equal(ens.history, history)


class TestPointScores:
    def test_perfect(self, rng):
        y = rng.standard_normal((4, 3))
        trajs = np.stack([y, y])
        assert rmse(trajs, y) == 0.0 and mae(trajs, y) == 0.0

    def test_cancellation(self):
        y = np.array([[0.5, -0.25]])
        trajs = np.stack([y + 1.0, y - 1.0])
        assert rmse(trajs, y, cumulative=False) == 0.0
        assert mae(trajs, y, cumulative=False) == 0.0

    def test_constant_offset(self):
        y = np.array([[0.5, -0.25], [0.0, 1.0]])
        trajs = (y + 0.75)[None]
        assert rmse(trajs, y, cumulative=False) == pytest.approx(0.75, abs=1e-15)
        assert mae(trajs, y, cumulative=False) == pytest.approx(0.75, abs=1e-15)

    def test_cumulative_scale(self):
        y = np.zeros((3, 1))
        trajs = np.full((1, 3, 1), 0.5)
        # cumulative errors 0.5, 1.0, 1.5
        assert mae(trajs, y) == pytest.approx(1.0)
        assert mae(trajs, y, cumulative=False) == pytest.approx(0.5)

    def test_shape_mismatch(self):
        with pytest.raises(StructuralError):
            rmse(np.zeros((2, 3, 4)), np.zeros((4, 3)))


class TestCRPS:
    def test_single_exact_sample(self):
        assert crps_ensemble(np.array([1.5]), 1.5) == 0.0

    def test_two_samples(self):
        assert crps_ensemble(np.array([0.0, 2.0]), 1.0) == pytest.approx(0.5, abs=1e-15)

    def test_collapsed_ensemble_is_mae(self):
        y = np.array([[0.25, -0.5], [1.0, 0.0]])
        trajs = np.broadcast_to(y + 0.5, (6, 2, 2))
        assert crps(trajs, y, cumulative=False) == mae(trajs, y, cumulative=False)

    def test_matches_pairwise_definition(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            x = rng.standard_normal(int(rng.integers(1, 15)))
            y = rng.standard_normal()
            pairs = np.mean([[abs(a - b) for b in x] for a in x])
            expected = np.mean(np.abs(x - y)) - 0.5 * pairs
            assert crps_ensemble(x, y) == pytest.approx(expected, abs=1e-12)

    def test_cellwise(self, rng):
        x = rng.standard_normal((5, 3, 2))
        y = rng.standard_normal((3, 2))
        out = crps_ensemble(x, y)
        assert out.shape == (3, 2)
        assert out[1, 0] == pytest.approx(crps_ensemble(x[:, 1, 0], y[1, 0]), abs=1e-14)

    def test_empty(self):
        with pytest.raises(ArgumentError):
            crps_ensemble(np.zeros((0,)), 0.0)


class TestIntervals:
    def test_inside(self):
        assert interval_score(0.0, 1.0, 0.5) == 1.0

    def test_outside(self):
        assert interval_score(0.0, 1.0, 2.0, alpha=0.05) == pytest.approx(41.0)

    def test_boundary(self):
        assert interval_score(0.0, 1.0, 1.0) == 1.0

    def test_bad_alpha(self):
        with pytest.raises(ArgumentError):
            interval_score(0.0, 1.0, 0.5, alpha=1.0)

    def test_quantiles(self):
        lo, hi = prediction_interval(np.arange(41.0)[:, None], alpha=0.05)
        np.testing.assert_allclose(lo, [1.0])
        np.testing.assert_allclose(hi, [39.0])

    def test_needs_two_samples(self):
        with pytest.raises(ArgumentError):
            prediction_interval(np.zeros((1, 3)))

    def test_mis_of_wide_ensemble(self):
        trajs = np.stack([np.full((1, 1), v) for v in np.linspace(-1.0, 1.0, 41)])
        y = np.zeros((1, 1))
        assert mis(trajs, y, cumulative=False) == pytest.approx(1.9, abs=1e-12)


class TestReport:
    @staticmethod
    def _ensembles(rng, n=3):
        return [
            ForecastEnsemble(rng.standard_normal((5, 4, 2)), rng.standard_normal((4, 2)), None, {"window_id": i})
            for i in range(n)
        ]

    def test_summary_rows(self, rng):
        report = summarize(self._ensembles(rng), "U-GNN", 20, 4)
        assert list(report["metric"]) == ["RMSE", "MAE", "CRPS", "MIS"]
        assert set(report["model"]) == {"U-GNN"}

    def test_summary_averages_windows(self, rng):
        ens = self._ensembles(rng)
        report = summarize(ens, "U-GNN", 20, 4)
        expected = np.mean([ensemble_scores(e)["CRPS"] for e in ens])
        assert report.set_index("metric").loc["CRPS", "value"] == pytest.approx(expected, rel=1e-12)

    def test_single_trajectory_has_no_mis(self):
        ens = ForecastEnsemble(np.zeros((1, 2, 2)), np.zeros((2, 2)))
        assert "MIS" not in ensemble_scores(ens)

    def test_missing_target(self):
        with pytest.raises(ArgumentError):
            ensemble_scores(ForecastEnsemble(np.zeros((2, 2, 2))))

    def test_empty(self):
        with pytest.raises(DataError):
            summarize([], "GRW", 20, 10)

    def test_file_round_trip(self, tmp_path, rng):
        ens = self._ensembles(rng)
        report = combine([summarize(ens, "U-GNN", 20, 4), summarize(ens[:1], "GRW", 20, 4)])
        path = tmp_path / "metrics.csv"
        write_report(path, report)
        back = read_report(path)
        pd.testing.assert_frame_equal(back, report, check_dtype=False)

    def test_not_a_report(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(DataError):
            read_report(path)

    def test_pivot_and_ratio(self):
        report = pd.DataFrame({
            "model": ["U-GNN", "GRW", "U-GNN", "GRW"],
            "T_p": [20] * 4,
            "T_h": [10] * 4,
            "metric": ["MAE", "MAE", "RMSE", "RMSE"],
            "value": [1.0, 2.0, 3.0, 4.0],
        })
        wide = pivot_report(report)
        assert list(wide["metric"]) == ["RMSE", "MAE"]
        assert wide.loc[0, "U-GNN"] == 3.0
        ratio = relative_to(report, "GRW")
        assert ratio.loc[(20, 10, "MAE", "U-GNN")] == 0.5
        with pytest.raises(DataError):
            relative_to(report, "ARIMA")


class TestFanChart:
    @staticmethod
    def _ensemble():
        trajs = np.tile(np.array([0.25, 0.5])[None, :, None], (3, 1, 2))
        trajs[1] += 0.25
        trajs[2] -= 0.25
        history = np.full((3, 2), 0.5)
        return ForecastEnsemble(trajs, np.zeros((2, 2)), history, {"window_id": 1})

    def test_paths_continue_from_history(self):
        data = fan_data(self._ensemble(), node=1, n_shown=2)
        np.testing.assert_array_equal(data.history, [0.5, 1.0, 1.5])
        np.testing.assert_array_equal(data.history_days, [-3, -2, -1])
        np.testing.assert_array_equal(data.shown[0], [1.75, 2.25])
        np.testing.assert_array_equal(data.realized, [1.5, 1.5])
        assert data.shown.shape == (2, 2)

    def test_bad_node(self):
        with pytest.raises(ArgumentError):
            fan_data(self._ensemble(), node=2)

    def test_plotly_traces(self):
        ens = self._ensemble()
        fig = plotly_fan(fan_data(ens, 0, grw=ens, n_shown=3))
        names = [t.name for t in fig.data]
        assert "GRW 95%" in names and "U-GNN 95%" in names
        assert names.count("samples") == 3
        assert {"history", "realized"} <= set(names)

    def test_svg_is_deterministic(self, tmp_path):
        ens = self._ensemble()
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        save_fan_svg(a, ens, [0, 1], grw=ens)
        save_fan_svg(b, ens, [0, 1], grw=ens)
        assert a.read_bytes() == b.read_bytes()
        assert a.read_text().lstrip().startswith("<?xml")
