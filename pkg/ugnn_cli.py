# ugnn_cli.py
"""
Command line entry point.

    python ugnn_cli.py synth --process graph_var --out data/prices.csv --fundamentals data/fundamentals.csv
    python ugnn_cli.py graph --fundamentals data/fundamentals.csv --out data/adjacency.csv
    python ugnn_cli.py train --config configs/synthetic.toml --out runs/ugnn.ckpt
    python ugnn_cli.py sample --model ugnn --checkpoint runs/ugnn.ckpt --out runs/ugnn.csv
    python ugnn_cli.py sample --model grw --config configs/synthetic.toml --out runs/grw.csv
    python ugnn_cli.py evaluate --ugnn runs/ugnn.csv --grw runs/grw.csv --out runs/metrics.csv
    python ugnn_cli.py plot --ensembles runs/ugnn.csv --grw runs/grw.csv --nodes 0 1 --out runs/fan.svg
    python ugnn_cli.py benchmark --config configs/synthetic.toml --setups 20x10 5x5 --out runs/bench.csv
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from config_handler import Settings, load_settings
from diffusion.ensemble import read_ensembles, write_ensembles
from errors import ArgumentError, ConfigError, DataError, NumericError, StructuralError, UGNNError
from eval_suite.plots import save_fan_svg
from eval_suite.report import combine, summarize, write_report
from graph_core.graph_io import read_adjacency_csv, write_adjacency_csv, write_selections
from graph_core.sampling import build_selections, plan_node_counts
from graph_core.shift import build_shift
from market.synth import PROCESSES, SynthParams, synth_fundamentals, synth_market
from market.tables import (
    PriceTable,
    read_fundamentals_csv,
    read_prices_csv,
    write_fundamentals_csv,
    write_prices_csv,
)
from market.transforms import build_fundamentals_graph
from trainer.pipeline import (
    EXPERIMENT_SETUPS,
    fit,
    forecast_grw,
    forecast_ugnn,
    load_model,
    prepare_data,
    run_benchmark,
)

logger = logging.getLogger("ugnn_cli")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, NumericError):
        return EXIT_NUMERIC
    if isinstance(exc, (DataError, StructuralError)):
        return EXIT_DATA
    if isinstance(exc, (UsageError, ConfigError, ArgumentError, FileNotFoundError)):
        return EXIT_USAGE
    if isinstance(exc, UGNNError):
        return EXIT_DATA
    raise exc


# ─────────── shared loading ───────────────────────────────────────────────
def _settings(args) -> Settings:
    settings = load_settings(getattr(args, "config", None))
    return settings.with_overrides(
        data__prices_csv=getattr(args, "prices", None),
        data__adjacency_csv=getattr(args, "adjacency", None),
        data__t_p=getattr(args, "tp", None),
        data__t_h=getattr(args, "th", None),
        train__seed=getattr(args, "seed", None),
        sample__n_traj=getattr(args, "ntraj", None),
    )


def load_market(settings: Settings) -> tuple[PriceTable, np.ndarray]:
    """Prices plus the adjacency, read from CSV or built from fundamentals."""
    d = settings.data
    table = read_prices_csv(d.prices_csv)
    if d.adjacency_csv:
        adj, labels = read_adjacency_csv(d.adjacency_csv)
        if labels is not None:
            pos = {t: i for i, t in enumerate(labels)}
            missing = [t for t in table.tickers if t not in pos]
            if missing:
                raise DataError(f"adjacency has no rows for {missing}")
            order = [pos[t] for t in table.tickers]
            adj = adj[np.ix_(order, order)]
        return table, adj
    fund = read_fundamentals_csv(d.fundamentals_csv).reindexed(table.tickers)
    return table, build_fundamentals_graph(fund)


# ─────────── subcommands ──────────────────────────────────────────────────
def cmd_synth(args) -> None:
    params = SynthParams(mu=args.mu, sigma=args.sigma, rho=args.rho)
    fund = synth_fundamentals(args.n_stocks, args.indicators, args.factors, args.seed)
    graph = build_shift(build_fundamentals_graph(fund)) if args.process == "graph_var" else None
    table = synth_market(args.n_stocks, args.days, graph, args.process, params, args.seed)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_prices_csv(args.out, table)
    if args.fundamentals:
        write_fundamentals_csv(args.fundamentals, fund)
    logger.info("wrote %s", args.out)


def cmd_graph(args) -> None:
    fund = read_fundamentals_csv(args.fundamentals)
    if args.prices:
        fund = fund.reindexed(read_prices_csv(args.prices).tickers)
    adj = build_fundamentals_graph(fund)
    write_adjacency_csv(args.out, adj, fund.tickers)
    if args.selections:
        counts = plan_node_counts(len(fund.tickers), args.ratios)
        selections, _ = build_selections(build_shift(adj), counts)
        write_selections(args.selections, selections)
        logger.info("node plan %s written to %s", counts, args.selections)
    logger.info("wrote %d x %d adjacency to %s", len(fund.tickers), len(fund.tickers), args.out)


def cmd_train(args) -> None:
    settings = _settings(args)
    table, adj = load_market(settings)
    data = prepare_data(table, adj, settings)
    fit(data, settings, args.out, resume=args.resume)


def cmd_sample(args) -> None:
    if args.model == "ugnn":
        if not args.checkpoint:
            raise UsageError("--model ugnn needs --checkpoint")
        loaded = load_model(args.checkpoint)
        settings = loaded.settings.with_overrides(
            data__prices_csv=args.prices, data__adjacency_csv=args.adjacency, sample__n_traj=args.ntraj
        )
        table, adj = load_market(settings)
        if list(table.tickers) != loaded.meta["tickers"]:
            raise DataError("price table tickers differ from the ones the checkpoint was trained on")
        data = prepare_data(table, adj, settings, stats=loaded.stats)
        seed = settings.sample.seed if args.seed is None else args.seed
        ensembles = forecast_ugnn(loaded, data.windows[args.split], data.raw[args.split], settings.sample.n_traj, seed)
    else:
        settings = _settings(args)
        table, adj = load_market(settings)
        data = prepare_data(table, adj, settings)
        seed = settings.sample.seed if args.seed is None else args.seed
        ensembles = forecast_grw(data.raw[args.split], data.t_h, settings.sample.n_traj, seed)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_ensembles(args.out, ensembles)
    logger.info("wrote %d ensembles to %s", len(ensembles), args.out)


def cmd_evaluate(args) -> None:
    if not (args.ugnn or args.grw):
        raise UsageError("evaluate needs --ugnn and/or --grw")
    frames = []
    for label, path in (("U-GNN", args.ugnn), ("GRW", args.grw)):
        if not path:
            continue
        ensembles = read_ensembles(path)
        if not ensembles:
            raise DataError(f"{path} holds no ensembles")
        first = ensembles[0]
        t_p = 0 if first.history is None else first.history.shape[0]
        frames.append(summarize(ensembles, label, t_p, first.horizon, args.alpha, not args.per_day))
    write_report(args.out, combine(frames))
    logger.info("wrote metrics to %s", args.out)


def cmd_plot(args) -> None:
    ensembles = {e.window_id: e for e in read_ensembles(args.ensembles)}
    if args.window not in ensembles:
        raise DataError(f"window {args.window} not in {args.ensembles}")
    grw = None
    if args.grw:
        grw = {e.window_id: e for e in read_ensembles(args.grw)}.get(args.window)
        if grw is None:
            raise DataError(f"window {args.window} not in {args.grw}")
    save_fan_svg(args.out, ensembles[args.window], args.nodes, grw, args.shown)
    logger.info("wrote %s", args.out)


def _setup(text: str) -> tuple[int, int]:
    try:
        t_p, t_h = (int(v) for v in text.lower().split("x"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"setup must look like 20x10, got {text!r}") from exc
    return t_p, t_h


def cmd_benchmark(args) -> None:
    settings = _settings(args)
    table, adj = load_market(settings)
    setups = tuple(args.setups) if args.setups else EXPERIMENT_SETUPS
    report = run_benchmark(table, adj, settings, setups, args.workdir)
    write_report(args.out, report)
    logger.info("wrote benchmark report to %s", args.out)


# ─────────── parser ───────────────────────────────────────────────────────
def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ugnn", description="U-GNN diffusion forecasting of stock log returns")
    p.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="write a synthetic price table")
    s.add_argument("--process", choices=PROCESSES, default="grw")
    s.add_argument("--n-stocks", type=int, default=20)
    s.add_argument("--days", type=int, default=1500)
    s.add_argument("--mu", type=float, default=SynthParams.mu)
    s.add_argument("--sigma", type=float, default=SynthParams.sigma)
    s.add_argument("--rho", type=float, default=SynthParams.rho)
    s.add_argument("--indicators", type=int, default=8)
    s.add_argument("--factors", type=int, default=3)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--fundamentals", help="also write the fundamentals CSV here")
    s.set_defaults(func=cmd_synth)

    g = sub.add_parser("graph", help="adjacency from a fundamentals CSV")
    g.add_argument("--fundamentals", required=True)
    g.add_argument("--prices", help="order rows like this price table")
    g.add_argument("--out", required=True)
    g.add_argument("--selections", help="also write the degree-based node selections here")
    g.add_argument("--ratios", type=float, nargs="+", default=[1.0, 0.8, 0.8])
    g.set_defaults(func=cmd_graph)

    def data_flags(q, with_window: bool = True):
        q.add_argument("--config")
        q.add_argument("--prices")
        q.add_argument("--adjacency")
        q.add_argument("--seed", type=int)
        if with_window:
            q.add_argument("--tp", type=int)
            q.add_argument("--th", type=int)

    t = sub.add_parser("train", help="fit a U-GNN and write a checkpoint")
    data_flags(t)
    t.add_argument("--out", required=True)
    t.add_argument("--resume", help="continue from this checkpoint")
    t.set_defaults(func=cmd_train)

    sm = sub.add_parser("sample", help="forecast ensembles for a data split")
    data_flags(sm)
    sm.add_argument("--model", choices=["ugnn", "grw"], default="ugnn")
    sm.add_argument("--checkpoint")
    sm.add_argument("--split", choices=["train", "val", "test"], default="test")
    sm.add_argument("--ntraj", type=int)
    sm.add_argument("--out", required=True)
    sm.set_defaults(func=cmd_sample)

    e = sub.add_parser("evaluate", help="score ensembles into a metrics report")
    e.add_argument("--ugnn")
    e.add_argument("--grw")
    e.add_argument("--alpha", type=float, default=0.05)
    e.add_argument("--per-day", action="store_true", help="score daily instead of cumulative log returns")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_evaluate)

    pl = sub.add_parser("plot", help="SVG fan chart of one window")
    pl.add_argument("--ensembles", required=True)
    pl.add_argument("--grw")
    pl.add_argument("--window", type=int, default=0)
    pl.add_argument("--nodes", type=int, nargs="+", default=[0])
    pl.add_argument("--shown", type=int, default=10)
    pl.add_argument("--out", required=True)
    pl.set_defaults(func=cmd_plot)

    b = sub.add_parser("benchmark", help="train/sample/evaluate for several (T_p, T_h) setups")
    data_flags(b, with_window=False)
    b.add_argument("--setups", type=_setup, nargs="+")
    b.add_argument("--ntraj", type=int)
    b.add_argument("--workdir", default="runs")
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_benchmark)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"ugnn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=getattr(logging, args.log_level), format=LOG_FORMAT)
    try:
        args.func(args)
    except (UGNNError, UsageError, FileNotFoundError) as exc:
        code = exit_code(exc)
        logger.error("%s", exc)
        print(f"ugnn: error: {exc}", file=sys.stderr)
        return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
