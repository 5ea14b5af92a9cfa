"""Command line: synthetic data through GRW forecasts, scores and plots."""
import numpy as np
import pytest

from diffusion.ensemble import read_ensembles
from errors import (
    ConfigError,
    DataError,
    DegenerateGraphError,
    NumericError,
    StructuralError,
    TrainingDiverged,
)
from eval_suite.report import read_report
from graph_core.graph_io import read_adjacency_csv, read_selections
from market import read_prices_csv
from ugnn_cli import EXIT_DATA, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, UsageError, exit_code, main


@pytest.fixture
def flat_market(tmp_path):
    """Four stocks with zero volatility and drift 0.001."""
    prices, fund = tmp_path / "prices.csv", tmp_path / "fund.csv"
    code = main([
        "--log-level", "WARNING", "synth", "--process", "grw", "--n-stocks", "4", "--days", "200",
        "--mu", "0.001", "--sigma", "0", "--out", str(prices), "--fundamentals", str(fund),
    ])
    assert code == EXIT_OK
    return prices, fund


@pytest.fixture
def grw_run(tmp_path, flat_market):
    prices, fund = flat_market
    adj = tmp_path / "adj.csv"
    assert main(["graph", "--fundamentals", str(fund), "--prices", str(prices), "--out", str(adj)]) == EXIT_OK
    out = tmp_path / "grw.csv"
    code = main([
        "sample", "--model", "grw", "--prices", str(prices), "--adjacency", str(adj),
        "--tp", "5", "--th", "3", "--ntraj", "4", "--seed", "1", "--out", str(out),
    ])
    assert code == EXIT_OK
    return out


class TestPipeline:
    def test_synth_writes_tables(self, flat_market):
        table = read_prices_csv(flat_market[0])
        assert table.tickers == ["S000", "S001", "S002", "S003"]
        assert table.prices.shape == (200, 4)

    def test_graph_and_selections(self, tmp_path, flat_market):
        _, fund = flat_market
        adj_path, sel_path = tmp_path / "adj.csv", tmp_path / "sel.txt"
        code = main([
            "graph", "--fundamentals", str(fund), "--out", str(adj_path),
            "--selections", str(sel_path), "--ratios", "0.75", "0.67",
        ])
        assert code == EXIT_OK
        adj, labels = read_adjacency_csv(adj_path)
        assert labels == ["S000", "S001", "S002", "S003"]
        np.testing.assert_array_equal(adj, adj.T)
        assert [s.n_out for s in read_selections(sel_path)] == [3, 2]

    def test_grw_ensembles(self, grw_run):
        ensembles = read_ensembles(grw_run)
        assert ensembles
        first = ensembles[0]
        assert (first.n_traj, first.horizon, first.n_nodes) == (4, 3, 4)
        assert first.history.shape == (5, 4)
        np.testing.assert_allclose(first.trajs, 0.001, atol=1e-12)

    def test_evaluate_flat_market(self, tmp_path, grw_run):
        out = tmp_path / "metrics.csv"
        assert main(["evaluate", "--grw", str(grw_run), "--out", str(out)]) == EXIT_OK
        scores = read_report(out).set_index("metric")["value"]
        assert scores["RMSE"] < 1e-10
        # every trajectory is identical, so CRPS reduces to MAE
        assert scores["CRPS"] == pytest.approx(scores["MAE"], abs=1e-12)

    def test_metrics_are_reproducible(self, tmp_path, flat_market):
        prices, fund = flat_market
        adj = tmp_path / "adj.csv"
        main(["graph", "--fundamentals", str(fund), "--out", str(adj)])
        outputs = []
        for run in ("a", "b"):
            ens, metrics = tmp_path / f"{run}.csv", tmp_path / f"{run}_metrics.csv"
            main([
                "sample", "--model", "grw", "--prices", str(prices), "--adjacency", str(adj),
                "--tp", "5", "--th", "3", "--ntraj", "6", "--seed", "4", "--out", str(ens),
            ])
            main(["evaluate", "--grw", str(ens), "--out", str(metrics)])
            outputs.append(metrics.read_bytes())
        assert outputs[0] == outputs[1]

    def test_plot(self, tmp_path, grw_run):
        out = tmp_path / "fan.svg"
        assert main(["plot", "--ensembles", str(grw_run), "--nodes", "0", "1", "--out", str(out)]) == EXIT_OK
        assert "<svg" in out.read_text()

    def test_plot_unknown_window(self, tmp_path, grw_run):
        out = tmp_path / "fan.svg"
        assert main(["plot", "--ensembles", str(grw_run), "--window", "999", "--out", str(out)]) == EXIT_DATA
        assert not out.exists()


class TestErrors:
    def test_missing_config(self, tmp_path, capsys):
        code = main(["train", "--config", str(tmp_path / "none.toml"), "--out", str(tmp_path / "x.ckpt")])
        assert code == EXIT_USAGE
        assert "not found" in capsys.readouterr().err

    def test_missing_prices(self, tmp_path):
        code = main([
            "sample", "--model", "grw", "--prices", str(tmp_path / "none.csv"), "--out", str(tmp_path / "o.csv"),
        ])
        assert code == EXIT_USAGE

    def test_bad_arguments(self):
        assert main([]) == EXIT_USAGE
        assert main(["synth", "--days", "many", "--out", "x.csv"]) == EXIT_USAGE
        assert main(["benchmark", "--setups", "20by10", "--out", "x.csv"]) == EXIT_USAGE

    def test_evaluate_needs_input(self, tmp_path):
        assert main(["evaluate", "--out", str(tmp_path / "m.csv")]) == EXIT_USAGE

    def test_ugnn_sample_needs_checkpoint(self, tmp_path):
        assert main(["sample", "--model", "ugnn", "--out", str(tmp_path / "o.csv")]) == EXIT_USAGE

    def test_corrupt_ensembles(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("window_id,traj\n0,0\n")
        assert main(["evaluate", "--ugnn", str(bad), "--out", str(tmp_path / "m.csv")]) == EXIT_DATA

    @pytest.mark.parametrize(
        "exc, code",
        [
            (NumericError("nan"), EXIT_NUMERIC),
            (TrainingDiverged("boom", None), EXIT_NUMERIC),
            (DataError("bad"), EXIT_DATA),
            (StructuralError("shape"), EXIT_DATA),
            (DegenerateGraphError("empty"), EXIT_DATA),
            (ConfigError("key"), EXIT_USAGE),
            (UsageError("flag"), EXIT_USAGE),
            (FileNotFoundError("x"), EXIT_USAGE),
        ],
    )
    def test_exit_codes(self, exc, code):
        assert exit_code(exc) == code

    def test_unexpected_errors_propagate(self):
        with pytest.raises(KeyError):
            exit_code(KeyError("x"))
