"""Command-line surface: synthetic panels, diagnostics, backtests, rankings.

Four subcommands (``synth``, ``stationarity``, ``backtest``, ``rank``)
write their outputs under ``--out-dir``. Every JSON report embeds a run
manifest (command, resolved config, input digests, seed, tool version) so
identical manifests imply identical outputs; nothing volatile such as a
wall-clock timestamp goes into the files, which keeps repeated runs byte
identical. Exit code 0 means every output was fully written; on failure
partial outputs are removed.
"""

from __future__ import annotations

import argparse
import datetime as dt
import hashlib
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .backtest import (
    BacktestConfig,
    BacktestError,
    render_equity_csv,
    render_equity_svg,
    run_backtest,
)
from .ranker import RankerState
from .stats import (
    SIDEDNESS_VALUES,
    monthly_stationarity_report,
    render_report_table,
)
from .timeseries import (
    JumpDiffusionConfig,
    QuotePanel,
    load_csv,
    render_csv,
    simulate_jump_diffusion,
)

__all__ = ["main", "RunManifest"]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunManifest:
    """Provenance block embedded in every emitted report."""

    command: str
    config: dict
    inputs: dict[str, str]
    seed: int | None
    version: str

    def to_json_dict(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "inputs": self.inputs,
            "seed": self.seed,
            "version": self.version,
        }


def _sha256(path: Path) -> str:
    return "sha256:" + hashlib.sha256(path.read_bytes()).hexdigest()


def _json_text(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _emit(out_dir: Path, files: dict[str, str]) -> list[Path]:
    """Write all outputs, removing everything written if any write fails."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    try:
        for name, text in files.items():
            path = out_dir / name
            path.write_text(text, encoding="utf-8", newline="")
            written.append(path)
    except OSError:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    return written


def _cmd_synth(args: argparse.Namespace) -> int:
    config = JumpDiffusionConfig(
        drift=args.drift,
        volatility=args.vol,
        jump_intensity=args.jumps,
        jump_mean=args.jump_mean,
        jump_stdev=args.jump_std,
        n_steps=args.steps,
        n_assets=args.assets,
        cross_correlation=args.corr,
        seed=args.seed,
        spread=args.spread,
        start_price=args.start_price,
        start_date=dt.date.fromisoformat(args.start_date),
    )
    panel = simulate_jump_diffusion(config)
    if args.sectors:
        labels = [s.strip() for s in args.sectors.split(",") if s.strip()]
        if not labels:
            raise ValueError("--sectors must name at least one sector")
        sectors = tuple(labels[i % len(labels)] for i in range(panel.n_assets))
        panel = QuotePanel(
            dates=panel.dates, assets=panel.assets, bids=panel.bids, asks=panel.asks, sectors=sectors
        )
    manifest = RunManifest(
        command="synth",
        config={
            "drift": config.drift,
            "volatility": config.volatility,
            "jump_intensity": config.jump_intensity,
            "jump_mean": config.jump_mean,
            "jump_stdev": config.jump_stdev,
            "n_steps": config.n_steps,
            "n_assets": config.n_assets,
            "cross_correlation": config.cross_correlation,
            "spread": config.spread,
            "start_price": config.start_price,
            "start_date": config.start_date.isoformat(),
            "sectors": args.sectors or None,
        },
        inputs={},
        seed=config.seed,
        version=__version__,
    )
    written = _emit(
        Path(args.out_dir),
        {
            "panel.csv": render_csv(panel),
            "panel.manifest.json": _json_text(manifest.to_json_dict()),
        },
    )
    print(f"wrote {written[0]} ({panel.n_dates} dates x {panel.n_assets} assets)")
    return 0


def _cmd_stationarity(args: argparse.Namespace) -> int:
    panel_path = Path(args.panel)
    panel = load_csv(panel_path)
    report = monthly_stationarity_report(
        panel,
        max_shift=args.max_shift,
        alpha=args.alpha,
        sidedness=args.sidedness,
        min_month_obs=args.min_month_obs,
    )
    manifest = RunManifest(
        command="stationarity",
        config={
            "panel": panel_path.name,
            "max_shift": args.max_shift,
            "alpha": args.alpha,
            "sidedness": args.sidedness,
            "min_month_obs": args.min_month_obs,
        },
        inputs={panel_path.name: _sha256(panel_path)},
        seed=None,
        version=__version__,
    )
    table = render_report_table(report)
    payload = {"manifest": manifest.to_json_dict(), "report": report.to_json_dict()}
    written = _emit(
        Path(args.out_dir),
        {"stationarity.json": _json_text(payload), "stationarity.txt": table},
    )
    print(table, end="")
    print(f"wrote {written[0]} and {written[1]}")
    return 0


def _cmd_backtest(args: argparse.Namespace) -> int:
    panel_path = Path(args.panel)
    panel = load_csv(panel_path)
    config = BacktestConfig(
        mode=args.mode,
        strategy=args.strategy,
        decile_fraction=args.decile,
        tau=args.tau,
        ridge_lambda=args.ridge_lambda,
        nbar_input=args.nbar_input,
        nbar_membership=args.nbar_membership,
        cost_model=args.cost,
    )
    report = run_backtest(panel, config)
    manifest = RunManifest(
        command="backtest",
        config={"panel": panel_path.name, **config.to_json_dict()},
        inputs={panel_path.name: _sha256(panel_path)},
        seed=None,
        version=__version__,
    )
    payload = {"manifest": manifest.to_json_dict(), **report.to_json_dict()}
    written = _emit(
        Path(args.out_dir),
        {
            "backtest.json": _json_text(payload),
            "equity.csv": render_equity_csv(report),
            "equity.svg": render_equity_svg(report),
        },
    )
    strat = report.strategy_metrics
    bench = report.benchmark_metrics
    print(
        f"{config.strategy} {config.mode}: days={strat.days} sum={strat.total:.4f} "
        f"sr={_fmt(strat.sharpe)} max_dd={strat.max_drawdown:.4f} | "
        f"benchmark sum={bench.total:.4f} sr={_fmt(bench.sharpe)}"
    )
    print(f"wrote {', '.join(str(p) for p in written)}")
    return 0


def _cmd_rank(args: argparse.Namespace) -> int:
    panel_path = Path(args.panel)
    panel = load_csv(panel_path)
    ranker = RankerState(panel.n_assets, args.tau)
    lines = []
    for i in range(panel.returns.shape[0]):
        ranker.update(panel.returns[i])
        ranking = ranker.rank()
        lines.append(
            json.dumps(
                {
                    "date": panel.dates[i + 1].isoformat(),
                    "order": [panel.assets[j] for j in ranking.order],
                    "order_index": ranking.order.tolist(),
                    "posterior": ranking.posterior.tolist(),
                },
                sort_keys=True,
            )
        )
    manifest = RunManifest(
        command="rank",
        config={"panel": panel_path.name, "tau": args.tau},
        inputs={panel_path.name: _sha256(panel_path)},
        seed=None,
        version=__version__,
    )
    written = _emit(
        Path(args.out_dir),
        {
            "rank.jsonl": "\n".join(lines) + "\n",
            "rank.manifest.json": _json_text(manifest.to_json_dict()),
        },
    )
    print(f"wrote {written[0]} ({len(lines)} days)")
    return 0


def _fmt(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.3f}"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqrank",
        description="sequential asset ranking, forecasting diagnostics and backtests",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="generate a synthetic quote panel CSV")
    synth.add_argument("--assets", type=int, default=10)
    synth.add_argument("--steps", type=int, default=500, help="number of return steps")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--drift", type=float, default=0.0, help="per-step log drift")
    synth.add_argument("--vol", type=float, default=0.01, help="per-step volatility")
    synth.add_argument("--jumps", type=float, default=0.0, help="expected jumps per step")
    synth.add_argument("--jump-mean", type=float, default=0.0)
    synth.add_argument("--jump-std", type=float, default=0.0)
    synth.add_argument("--corr", type=float, default=0.0, help="pairwise shock correlation")
    synth.add_argument("--spread", type=float, default=0.001, help="proportional bid/ask spread")
    synth.add_argument("--start-price", type=float, default=100.0)
    synth.add_argument("--start-date", default="2018-01-02")
    synth.add_argument("--sectors", default="", help="comma-separated sector labels, cycled")
    synth.add_argument("--out-dir", default=".")
    synth.set_defaults(func=_cmd_synth)

    stat = sub.add_parser("stationarity", help="monthly stationarity diagnostics for a panel")
    stat.add_argument("panel", help="panel CSV path")
    stat.add_argument("--max-shift", type=int, default=6)
    stat.add_argument("--alpha", type=float, default=0.05)
    stat.add_argument("--sidedness", choices=SIDEDNESS_VALUES, default="one-sided")
    stat.add_argument("--min-month-obs", type=int, default=12)
    stat.add_argument("--out-dir", default=".")
    stat.set_defaults(func=_cmd_stationarity)

    back = sub.add_parser("backtest", help="run a strategy and the benchmark over a panel")
    back.add_argument("panel", help="panel CSV path")
    back.add_argument("--mode", choices=("long-only", "long-short"), default="long-only")
    back.add_argument("--strategy", choices=("curds-whey", "nbar"), default="curds-whey")
    back.add_argument("--tau", type=float, default=0.999)
    back.add_argument("--lambda", dest="ridge_lambda", type=float, default=1.0)
    back.add_argument("--decile", type=float, default=0.1)
    back.add_argument("--nbar-input", choices=("forecasts", "realised"), default="forecasts")
    back.add_argument("--nbar-membership", choices=("by-p", "by-forecast"), default="by-p")
    back.add_argument("--cost", choices=("half-spread", "zero"), default="half-spread")
    back.add_argument("--out-dir", default=".")
    back.set_defaults(func=_cmd_backtest)

    rank = sub.add_parser("rank", help="per-day posterior ranking from realised returns")
    rank.add_argument("panel", help="panel CSV path")
    rank.add_argument("--tau", type=float, default=0.999)
    rank.add_argument("--out-dir", default=".")
    rank.set_defaults(func=_cmd_rank)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, BacktestError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
