"""Sequential asset ranking, forecasting, diagnostics and backtesting."""

__version__ = "0.1.0"

from .backtest import (
    BacktestConfig,
    BacktestError,
    BacktestReport,
    DailyRecord,
    MetricsBlock,
    PortfolioState,
    compute_metrics,
    cw_weights,
    nbar_weights,
    run_backtest,
    select_decile,
    transaction_cost,
)
from .ranker import RankerState, RankOutput
from .regression import CurdsWheyState, Forecast, batch_ridge, batch_shrinkage
from .stats import (
    AdfResult,
    DegenerateDataError,
    LeveneResult,
    StationarityReport,
    TTestResult,
    adf_test,
    levene_test,
    monthly_stationarity_report,
    welch_t_test,
)
from .timeseries import (
    JumpDiffusionConfig,
    Quote,
    QuotePanel,
    build_panel,
    half_spread_rate,
    load_csv,
    mid_price,
    simple_return,
    simulate_jump_diffusion,
    weekday_range,
    write_csv,
)

__all__ = [
    "__version__",
    "BacktestConfig",
    "BacktestError",
    "BacktestReport",
    "DailyRecord",
    "MetricsBlock",
    "PortfolioState",
    "compute_metrics",
    "cw_weights",
    "nbar_weights",
    "run_backtest",
    "select_decile",
    "transaction_cost",
    "RankerState",
    "RankOutput",
    "CurdsWheyState",
    "Forecast",
    "batch_ridge",
    "batch_shrinkage",
    "AdfResult",
    "DegenerateDataError",
    "LeveneResult",
    "StationarityReport",
    "TTestResult",
    "adf_test",
    "levene_test",
    "monthly_stationarity_report",
    "welch_t_test",
    "JumpDiffusionConfig",
    "Quote",
    "QuotePanel",
    "build_panel",
    "half_spread_rate",
    "load_csv",
    "mid_price",
    "simple_return",
    "simulate_jump_diffusion",
    "weekday_range",
    "write_csv",
]
