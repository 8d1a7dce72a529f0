"""Daily-rebalanced cross-sectional backtest with half-spread costs.

Each day the engine feeds the latest return vector into the two-stage
recursive forecaster, scores every asset, buys the top slice of the
cross-section (and sells the bottom slice in long/short mode), charges a
transaction cost of half-spread rate times absolute weight change per
asset, and accrues the next day's return on the chosen weights. Records
are stamped with the rebalance date; the gross return booked on a record
spans that close to the next.

Two strategies share the loop: ``curds-whey`` scores assets by the shrunk
forecasts and equal-weights each leg, while ``nbar`` feeds the forecasts
(or realised returns) into the sequential ranker and weights legs by its
posterior. An equal-weight, zero-cost benchmark is always computed
alongside. The loop itself is deterministic: identical panel and config
give an identical report.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ranker import RankerState
from .regression import CurdsWheyState
from .timeseries import QuotePanel

__all__ = [
    "BacktestError",
    "BacktestConfig",
    "PortfolioState",
    "DailyRecord",
    "MetricsBlock",
    "BacktestReport",
    "select_decile",
    "cw_weights",
    "nbar_weights",
    "transaction_cost",
    "compute_metrics",
    "run_backtest",
    "equity_rows",
    "render_equity_csv",
    "render_equity_svg",
]

MODES = ("long-only", "long-short")
STRATEGIES = ("curds-whey", "nbar")
NBAR_INPUTS = ("forecasts", "realised")
NBAR_MEMBERSHIPS = ("by-p", "by-forecast")
COST_MODELS = ("half-spread", "zero")

TRADING_DAYS_PER_YEAR = 252


class BacktestError(RuntimeError):
    """Raised when a run cannot continue (for example a non-finite forecast)."""


@dataclass(frozen=True)
class BacktestConfig:
    """Strategy, portfolio and cost settings for one run."""

    mode: str = "long-only"
    strategy: str = "curds-whey"
    decile_fraction: float = 0.1
    tau: float = 0.999
    ridge_lambda: float = 1.0
    nbar_input: str = "forecasts"
    nbar_membership: str = "by-p"
    cost_model: str = "half-spread"

    def __post_init__(self) -> None:
        checks = (
            ("mode", self.mode, MODES),
            ("strategy", self.strategy, STRATEGIES),
            ("nbar_input", self.nbar_input, NBAR_INPUTS),
            ("nbar_membership", self.nbar_membership, NBAR_MEMBERSHIPS),
            ("cost_model", self.cost_model, COST_MODELS),
        )
        for name, value, allowed in checks:
            if value not in allowed:
                raise ValueError(f"{name} must be one of {allowed}, got {value!r}")
        if not (0.0 < self.decile_fraction <= 0.5):
            raise ValueError(f"decile_fraction must lie in (0, 0.5], got {self.decile_fraction}")
        if not (0.0 < self.tau <= 1.0):
            raise ValueError(f"tau must lie in (0, 1], got {self.tau}")
        if not (self.ridge_lambda > 0.0):
            raise ValueError(f"ridge_lambda must be positive, got {self.ridge_lambda}")

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode,
            "strategy": self.strategy,
            "decile_fraction": self.decile_fraction,
            "tau": self.tau,
            "ridge_lambda": self.ridge_lambda,
            "nbar_input": self.nbar_input,
            "nbar_membership": self.nbar_membership,
            "cost_model": self.cost_model,
        }


@dataclass(frozen=True)
class PortfolioState:
    """Signed per-asset weights; longs positive, shorts negative."""

    weights: np.ndarray

    def __post_init__(self) -> None:
        weights = np.asarray(self.weights, dtype=float)
        if weights.ndim != 1:
            raise ValueError("weights must be a vector")
        if not np.isfinite(weights).all():
            raise ValueError("weights contain non-finite values")
        object.__setattr__(self, "weights", weights)


def select_decile(
    scores: Sequence[float] | np.ndarray,
    fraction: float = 0.1,
    mode: str = "long-only",
) -> tuple[list[int], list[int]]:
    """Top and bottom slices of the cross-section, ``k = max(1, floor(d * fraction))``.

    Assets are ordered by descending score with ties broken by ascending
    index; the long set is the head of that order and the short set the
    tail (empty in long-only mode, and any index already long is dropped
    from it). Both sets come back sorted.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if not (0.0 < fraction <= 0.5):
        raise ValueError(f"fraction must lie in (0, 0.5], got {fraction}")
    s = np.asarray(scores, dtype=float)
    d = len(s)
    if d < 2:
        raise ValueError(f"need at least 2 scores, got {d}")
    if not np.isfinite(s).all():
        raise ValueError("scores contain non-finite values")
    k = max(1, int(math.floor(d * fraction)))
    order = np.argsort(-s, kind="stable")
    long_set = sorted(int(i) for i in order[:k])
    if mode == "long-only":
        return long_set, []
    taken = set(long_set)
    short_set = sorted(int(i) for i in order[d - k :] if int(i) not in taken)
    return long_set, short_set


def cw_weights(d: int, long_set: Sequence[int], short_set: Sequence[int]) -> PortfolioState:
    """Equal weights of 1/k on each leg: +1/len(long) long, -1/len(short) short."""
    weights = np.zeros(d)
    if long_set:
        weights[list(long_set)] = 1.0 / len(long_set)
    if short_set:
        weights[list(short_set)] -= 1.0 / len(short_set)
    return PortfolioState(weights=weights)


def nbar_weights(
    state: RankerState, long_set: Sequence[int], short_set: Sequence[int]
) -> PortfolioState:
    """Posterior-proportional long leg and complement-proportional short leg."""
    weights = np.zeros(state.d)
    if long_set:
        idx = list(long_set)
        weights[idx] += state.long_weights(idx)
    if short_set:
        idx = list(short_set)
        weights[idx] -= state.short_weights(idx)
    return PortfolioState(weights=weights)


def transaction_cost(
    prev: PortfolioState,
    new: PortfolioState,
    half_spread_rates: Sequence[float] | np.ndarray,
) -> float:
    """Cost rate of a rebalance: sum of half-spread rate times |weight change|."""
    rates = np.asarray(half_spread_rates, dtype=float)
    if rates.shape != prev.weights.shape or rates.shape != new.weights.shape:
        raise ValueError("weights and spread rates must share one length")
    if (rates < 0.0).any():
        raise ValueError("half-spread rates must be non-negative")
    return float(rates @ np.abs(new.weights - prev.weights))


@dataclass(frozen=True)
class DailyRecord:
    """One rebalance day: pnl decomposition plus selection sizes."""

    date: dt.date
    gross_return: float
    cost: float
    net_return: float
    turnover: float
    n_long: int
    n_short: int

    def to_json_dict(self) -> dict:
        return {
            "date": self.date.isoformat(),
            "gross": self.gross_return,
            "cost": self.cost,
            "net": self.net_return,
            "turnover": self.turnover,
            "n_long": self.n_long,
            "n_short": self.n_short,
        }


@dataclass(frozen=True)
class MetricsBlock:
    """Summary statistics of a daily net-return series.

    ``cagr`` compounds geometrically and annualises over 252 trading
    days; ``sharpe`` is mean over sample stdev times sqrt(252);
    ``prob_positive`` is the standard normal CDF at the Sharpe ratio;
    ``max_drawdown`` is the largest peak-to-trough drop of the cumulative
    sum (starting from zero). Ratios that would divide by zero are None.
    """

    days: int
    mean: float
    std: float
    min: float
    q25: float
    median: float
    q75: float
    max: float
    total: float
    cagr: float | None
    sharpe: float | None
    prob_positive: float | None
    max_drawdown: float
    return_over_maxdd: float | None
    win_ratio: float
    loss_ratio: float

    def to_json_dict(self) -> dict:
        return {
            "days": self.days,
            "mean": self.mean,
            "std": self.std,
            "min": self.min,
            "25%": self.q25,
            "50%": self.median,
            "75%": self.q75,
            "max": self.max,
            "sum": self.total,
            "cagr": self.cagr,
            "sr": self.sharpe,
            "pr(pnl>0)": self.prob_positive,
            "max_dd": self.max_drawdown,
            "pnl_over_max_dd": self.return_over_maxdd,
            "win_ratio": self.win_ratio,
            "loss_ratio": self.loss_ratio,
        }


def _normal_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def compute_metrics(daily_net: Sequence[float] | np.ndarray) -> MetricsBlock:
    """Summarise a daily return series; needs at least two observations."""
    r = np.asarray(daily_net, dtype=float)
    if r.ndim != 1 or len(r) < 2:
        raise ValueError("need a one-dimensional series of at least 2 returns")
    if not np.isfinite(r).all():
        raise ValueError("returns contain non-finite values")
    n = len(r)
    # a truly constant series has zero stdev; computing deviations from a
    # rounded mean would report a spurious ~1e-19 instead
    std = 0.0 if np.ptp(r) == 0.0 else float(r.std(ddof=1))
    total = float(r.sum())

    growth = 1.0 + r
    cagr: float | None = None
    if (growth > 0.0).all():
        cagr = float(np.prod(growth) ** (TRADING_DAYS_PER_YEAR / n) - 1.0)

    sharpe: float | None = None
    prob_positive: float | None = None
    if std > 0.0:
        sharpe = float(r.mean()) / std * math.sqrt(TRADING_DAYS_PER_YEAR)
        prob_positive = _normal_cdf(sharpe)

    equity = np.concatenate([[0.0], np.cumsum(r)])
    max_drawdown = float((np.maximum.accumulate(equity) - equity).max())
    return_over_maxdd = total / max_drawdown if max_drawdown > 0.0 else None

    win_ratio = float((r > 0.0).mean())
    return MetricsBlock(
        days=n,
        mean=float(r.mean()),
        std=std,
        min=float(r.min()),
        q25=float(np.percentile(r, 25)),
        median=float(np.percentile(r, 50)),
        q75=float(np.percentile(r, 75)),
        max=float(r.max()),
        total=total,
        cagr=cagr,
        sharpe=sharpe,
        prob_positive=prob_positive,
        max_drawdown=max_drawdown,
        return_over_maxdd=return_over_maxdd,
        win_ratio=win_ratio,
        loss_ratio=1.0 - win_ratio,
    )


@dataclass(frozen=True)
class BacktestReport:
    """Everything one run produced: per-day records and metric blocks."""

    config: BacktestConfig
    records: tuple[DailyRecord, ...]
    benchmark_returns: tuple[float, ...]
    strategy_metrics: MetricsBlock
    benchmark_metrics: MetricsBlock
    sector_selection: dict[str, dict[str, int]] | None = None

    def to_json_dict(self) -> dict:
        return {
            "config": self.config.to_json_dict(),
            "days": [
                {**rec.to_json_dict(), "benchmark": bench}
                for rec, bench in zip(self.records, self.benchmark_returns)
            ],
            "metrics": {
                "strategy": self.strategy_metrics.to_json_dict(),
                "benchmark": self.benchmark_metrics.to_json_dict(),
            },
            "sector_selection": self.sector_selection,
        }


def run_backtest(panel: QuotePanel, config: BacktestConfig) -> BacktestReport:
    """Run one strategy over a panel, benchmarked against equal weighting.

    Day ``t`` folds today's return vector into the forecaster, scores the
    assets, rebalances to the target weights (paying half-spread cost on
    the weight change at today's quotes), and earns tomorrow's returns on
    those weights. Positions start flat, so the first rebalance pays the
    full entry cost. Any non-finite forecast aborts the run.
    """
    d = panel.n_assets
    rets = panel.returns
    if rets.shape[0] < 3:
        raise ValueError(
            "panel must provide at least 4 dates: each record needs a next-day "
            "return and the metric block needs 2 records"
        )
    model = CurdsWheyState(d, config.ridge_lambda, config.tau)
    ranker = RankerState(d, config.tau) if config.strategy == "nbar" else None
    zero_cost = config.cost_model == "zero"
    zero_rates = np.zeros(d)

    weights_prev = PortfolioState(weights=np.zeros(d))
    records: list[DailyRecord] = []
    benchmark: list[float] = []
    tallies: dict[str, dict[str, int]] | None = None
    if panel.sectors is not None:
        tallies = {sector: {"long": 0, "short": 0} for sector in sorted(set(panel.sectors))}

    x = np.empty(d + 1)
    x[0] = 1.0
    for i in range(rets.shape[0] - 1):
        today = panel.dates[i + 1]
        r_today = rets[i]
        x[1:] = r_today
        forecast = model.step(x, r_today)
        scores = forecast.y_tilde
        if not np.isfinite(scores).all():
            raise BacktestError(f"non-finite forecast at {today.isoformat()}")
        if ranker is not None:
            ranker.update(scores if config.nbar_input == "forecasts" else r_today)
            member_scores = ranker.p if config.nbar_membership == "by-p" else scores
        else:
            member_scores = scores
        long_set, short_set = select_decile(member_scores, config.decile_fraction, config.mode)
        if ranker is not None:
            target = nbar_weights(ranker, long_set, short_set)
        else:
            target = cw_weights(d, long_set, short_set)
        rates = zero_rates if zero_cost else panel.half_spread_rates[i + 1]
        cost = transaction_cost(weights_prev, target, rates)
        r_next = rets[i + 1]
        gross = float(target.weights @ r_next)
        records.append(
            DailyRecord(
                date=today,
                gross_return=gross,
                cost=cost,
                net_return=gross - cost,
                turnover=float(np.abs(target.weights - weights_prev.weights).sum()),
                n_long=len(long_set),
                n_short=len(short_set),
            )
        )
        benchmark.append(float(r_next.mean()))
        if tallies is not None:
            for idx in long_set:
                tallies[panel.sectors[idx]]["long"] += 1
            for idx in short_set:
                tallies[panel.sectors[idx]]["short"] += 1
        weights_prev = target

    return BacktestReport(
        config=config,
        records=tuple(records),
        benchmark_returns=tuple(benchmark),
        strategy_metrics=compute_metrics([rec.net_return for rec in records]),
        benchmark_metrics=compute_metrics(benchmark),
        sector_selection=tallies,
    )


def equity_rows(report: BacktestReport) -> list[tuple[str, float, float]]:
    """Per-day cumulative net sums for the strategy and the benchmark."""
    rows = []
    cum_strategy = 0.0
    cum_benchmark = 0.0
    for rec, bench in zip(report.records, report.benchmark_returns):
        cum_strategy += rec.net_return
        cum_benchmark += bench
        rows.append((rec.date.isoformat(), cum_strategy, cum_benchmark))
    return rows


def render_equity_csv(report: BacktestReport) -> str:
    lines = ["date,cum_net_strategy,cum_net_benchmark"]
    for day, strat, bench in equity_rows(report):
        lines.append(f"{day},{strat!r},{bench!r}")
    return "\n".join(lines) + "\n"


def render_equity_svg(report: BacktestReport, width: int = 800, height: int = 400) -> str:
    """Static two-line SVG chart of the cumulative net curves."""
    rows = equity_rows(report)
    series = {
        "strategy": [row[1] for row in rows],
        "benchmark": [row[2] for row in rows],
    }
    pad = 50
    lo = min(0.0, min(min(v) for v in series.values()))
    hi = max(0.0, max(max(v) for v in series.values()))
    span = (hi - lo) or 1.0
    n = len(rows)

    def to_xy(i: int, value: float) -> tuple[float, float]:
        x = pad + (width - 2 * pad) * (i / max(n - 1, 1))
        y = height - pad - (height - 2 * pad) * ((value - lo) / span)
        return x, y

    colors = {"strategy": "#1f77b4", "benchmark": "#888888"}
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" '
        f'fill="none" stroke="#cccccc"/>',
    ]
    for name, values in series.items():
        points = " ".join(f"{x:.2f},{y:.2f}" for x, y in (to_xy(i, v) for i, v in enumerate(values)))
        parts.append(
            f'<polyline fill="none" stroke="{colors[name]}" stroke-width="1.5" points="{points}"/>'
        )
    parts.append(
        f'<text x="{pad}" y="{pad - 10}" font-family="monospace" font-size="12">'
        f"cumulative net return, {rows[0][0]} to {rows[-1][0]} "
        f"(blue strategy, grey benchmark; range {lo:.3f} to {hi:.3f})</text>"
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
