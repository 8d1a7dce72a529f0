"""Nonstationarity diagnostics for daily price panels.

Three building blocks and one report:

* :func:`adf_test` regresses the first difference of a series on a
  constant and the lagged level; the t value of the lagged-level
  coefficient is compared against left-tail unit-root critical values from
  an embedded response-surface polynomial in 1/n (constant-only case).
* :func:`levene_test` checks homogeneity of variance across groups using
  absolute deviations from group means, referred to an F distribution.
* :func:`welch_t_test` compares two sample means without assuming equal
  variances (fractional degrees of freedom).
* :func:`monthly_stationarity_report` runs all three per asset on a quote
  panel, grouping daily returns by calendar month and testing each month's
  mean against months 1..max_shift earlier.

Student-t and F critical values come from scipy's incomplete-beta based
quantile routines, not lookup tables.

Sidedness of the mean test is configurable because daily-return studies
report both conventions: ``"one-sided"`` compares ``|t|`` against the
one-tailed quantile (a looser gate whose null rejection rate is twice
alpha), ``"two-sided"`` against the two-tailed quantile (null rejection
rate equal to alpha).
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import f as f_dist
from scipy.stats import t as t_dist

from .timeseries import QuotePanel

__all__ = [
    "DegenerateDataError",
    "AdfResult",
    "LeveneResult",
    "TTestResult",
    "MonthGroup",
    "MonthPairTest",
    "AssetDiagnostics",
    "ShiftRejection",
    "StationarityReport",
    "adf_test",
    "levene_test",
    "welch_t_test",
    "monthly_stationarity_report",
    "render_report_table",
]

SIDEDNESS_VALUES = ("one-sided", "two-sided")

# Unit-root critical values for the constant-only regression, as a cubic
# response surface in 1/n: cv = b0 + b1/n + b2/n^2 + b3/n^3 where n is the
# regression sample size. b0 is the asymptotic value (-3.43 / -2.86 / -2.57).
_UNIT_ROOT_SURFACE: dict[float, tuple[float, float, float, float]] = {
    0.01: (-3.43035, -6.5393, -16.786, -79.433),
    0.05: (-2.86154, -2.8903, -4.234, -40.040),
    0.10: (-2.56677, -1.5384, -2.809, 0.0),
}
DEFAULT_ADF_LEVELS = (0.01, 0.05, 0.10)


class DegenerateDataError(ValueError):
    """Raised when a test statistic is undefined for the given data."""


def _unit_root_critical_value(alpha: float, nobs: int) -> float:
    try:
        b0, b1, b2, b3 = _UNIT_ROOT_SURFACE[alpha]
    except KeyError:
        raise ValueError(
            f"unit-root critical values are available at levels "
            f"{sorted(_UNIT_ROOT_SURFACE)}, not {alpha}"
        ) from None
    return b0 + b1 / nobs + b2 / nobs**2 + b3 / nobs**3


@dataclass(frozen=True)
class AdfResult:
    """Unit-root regression output.

    ``reject_unit_root[alpha]`` is True iff ``t_stat`` falls below the
    left-tail critical value at that level (rejection means the series
    looks stationary).
    """

    theta0: float
    theta1: float
    t_stat: float
    critical_values: dict[float, float]
    reject_unit_root: dict[float, bool]
    nobs: int

    def reject(self, alpha: float) -> bool:
        return self.reject_unit_root[alpha]

    def to_json_dict(self) -> dict:
        return {
            "theta0": self.theta0,
            "theta1": self.theta1,
            "t_stat": self.t_stat,
            "critical_values": {f"{a:g}": v for a, v in sorted(self.critical_values.items())},
            "reject_unit_root": {f"{a:g}": v for a, v in sorted(self.reject_unit_root.items())},
            "nobs": self.nobs,
        }


@dataclass(frozen=True)
class LeveneResult:
    w_stat: float
    dof_between: int
    dof_within: int
    critical_value: float
    reject: bool
    alpha: float

    def to_json_dict(self) -> dict:
        return {
            "w_stat": self.w_stat,
            "dof_between": self.dof_between,
            "dof_within": self.dof_within,
            "critical_value": self.critical_value,
            "reject": self.reject,
            "alpha": self.alpha,
        }


@dataclass(frozen=True)
class TTestResult:
    t_stat: float
    dof: float
    critical_value: float
    reject: bool
    alpha: float
    sidedness: str

    def to_json_dict(self) -> dict:
        return {
            "t_stat": self.t_stat,
            "dof": self.dof,
            "critical_value": self.critical_value,
            "reject": self.reject,
            "alpha": self.alpha,
            "sidedness": self.sidedness,
        }


def adf_test(
    series: Sequence[float] | np.ndarray,
    alpha_levels: Sequence[float] = DEFAULT_ADF_LEVELS,
) -> AdfResult:
    """Unit-root test: OLS of ``diff(y)`` on ``[1, y_lagged]``.

    Needs at least 20 observations. Raises :class:`DegenerateDataError`
    for constant series and for series whose differences are fitted with
    zero residual variance (the t value would be 0/0).
    """
    y = np.asarray(series, dtype=float)
    if y.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if len(y) < 20:
        raise ValueError(f"series too short for a unit-root test: {len(y)} < 20")
    if not np.isfinite(y).all():
        raise ValueError("series contains non-finite values")
    if np.ptp(y) == 0.0:
        raise DegenerateDataError("series is constant")
    dy = np.diff(y)
    if np.ptp(dy) == 0.0:
        raise DegenerateDataError("differenced series is constant (zero residual variance)")
    nobs = len(dy)
    X = np.column_stack([np.ones(nobs), y[:-1]])
    coef, _, rank, _ = np.linalg.lstsq(X, dy, rcond=None)
    if rank < 2:
        raise DegenerateDataError("regression design is rank deficient")
    resid = dy - X @ coef
    sse = float(resid @ resid)
    dof = nobs - 2
    if sse <= 0.0:
        raise DegenerateDataError("zero residual variance")
    sigma2 = sse / dof
    xtx_inv = np.linalg.inv(X.T @ X)
    stderr = float(np.sqrt(sigma2 * xtx_inv[1, 1]))
    t_stat = float(coef[1]) / stderr
    levels = tuple(float(a) for a in alpha_levels)
    critical = {a: _unit_root_critical_value(a, nobs) for a in levels}
    reject = {a: bool(t_stat < cv) for a, cv in critical.items()}
    return AdfResult(
        theta0=float(coef[0]),
        theta1=float(coef[1]),
        t_stat=t_stat,
        critical_values=critical,
        reject_unit_root=reject,
        nobs=nobs,
    )


def levene_test(groups: Sequence[Sequence[float]], alpha: float = 0.05) -> LeveneResult:
    """Homogeneity-of-variance W statistic on mean-centred absolute deviations.

    Raises :class:`DegenerateDataError` when the within-group deviations
    carry no variance at all (W would be 0/0 or unbounded).
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    arrays = [np.asarray(g, dtype=float) for g in groups]
    k = len(arrays)
    if k < 2:
        raise ValueError(f"need at least 2 groups, got {k}")
    for i, g in enumerate(arrays):
        if g.ndim != 1 or len(g) < 2:
            raise ValueError(f"group {i} must hold at least 2 observations")
        if not np.isfinite(g).all():
            raise ValueError(f"group {i} contains non-finite values")
    sizes = np.array([len(g) for g in arrays])
    total = int(sizes.sum())
    devs = [np.abs(g - g.mean()) for g in arrays]
    dev_means = np.array([z.mean() for z in devs])
    grand = float(np.concatenate(devs).mean())
    within = sum(float(((z - z.mean()) ** 2).sum()) for z in devs)
    if within == 0.0:
        raise DegenerateDataError("absolute deviations carry no within-group variance")
    between = float((sizes * (dev_means - grand) ** 2).sum())
    dof_between = k - 1
    dof_within = total - k
    w_stat = (dof_within / dof_between) * between / within
    critical = float(f_dist.ppf(1.0 - alpha, dof_between, dof_within))
    return LeveneResult(
        w_stat=float(w_stat),
        dof_between=dof_between,
        dof_within=dof_within,
        critical_value=critical,
        reject=bool(w_stat > critical),
        alpha=alpha,
    )


def welch_t_test(
    a: Sequence[float],
    b: Sequence[float],
    alpha: float = 0.05,
    sidedness: str = "one-sided",
) -> TTestResult:
    """Two-sample mean test with unequal variances.

    The statistic is ``(mean(a) - mean(b)) / sqrt(var(a)/n1 + var(b)/n2)``
    with Welch-Satterthwaite degrees of freedom. Rejection compares
    ``|t|`` against the one- or two-tailed quantile per ``sidedness``
    (see the module docstring for the null rejection rates implied).
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if sidedness not in SIDEDNESS_VALUES:
        raise ValueError(f"sidedness must be one of {SIDEDNESS_VALUES}, got {sidedness!r}")
    xa = np.asarray(a, dtype=float)
    xb = np.asarray(b, dtype=float)
    if len(xa) < 2 or len(xb) < 2:
        raise ValueError("both samples need at least 2 observations")
    if not (np.isfinite(xa).all() and np.isfinite(xb).all()):
        raise ValueError("samples contain non-finite values")
    n1, n2 = len(xa), len(xb)
    va = float(xa.var(ddof=1))
    vb = float(xb.var(ddof=1))
    se2 = va / n1 + vb / n2
    if se2 == 0.0:
        raise DegenerateDataError("both samples are constant; t statistic undefined")
    t_stat = (float(xa.mean()) - float(xb.mean())) / float(np.sqrt(se2))
    dof = se2**2 / ((va / n1) ** 2 / (n1 - 1) + (vb / n2) ** 2 / (n2 - 1))
    tail = alpha if sidedness == "one-sided" else alpha / 2.0
    critical = float(t_dist.ppf(1.0 - tail, dof))
    return TTestResult(
        t_stat=float(t_stat),
        dof=float(dof),
        critical_value=critical,
        reject=bool(abs(t_stat) > critical),
        alpha=alpha,
        sidedness=sidedness,
    )


@dataclass(frozen=True)
class MonthGroup:
    year: int
    month: int
    count: int
    mean: float
    var: float

    @property
    def key(self) -> tuple[int, int]:
        return (self.year, self.month)

    @property
    def label(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"

    def to_json_dict(self) -> dict:
        return {
            "month": self.label,
            "count": self.count,
            "mean": self.mean,
            "var": self.var,
        }


@dataclass(frozen=True)
class MonthPairTest:
    shift: int
    month: str
    prior_month: str
    result: TTestResult

    def to_json_dict(self) -> dict:
        return {
            "shift": self.shift,
            "month": self.month,
            "prior_month": self.prior_month,
            **self.result.to_json_dict(),
        }


@dataclass(frozen=True)
class AssetDiagnostics:
    asset: str
    adf_price: AdfResult | None
    adf_return: AdfResult | None
    levene: LeveneResult | None
    month_groups: tuple[MonthGroup, ...]
    pair_tests: tuple[MonthPairTest, ...]

    def to_json_dict(self) -> dict:
        return {
            "asset": self.asset,
            "adf_price": self.adf_price.to_json_dict() if self.adf_price else None,
            "adf_return": self.adf_return.to_json_dict() if self.adf_return else None,
            "levene": self.levene.to_json_dict() if self.levene else None,
            "month_groups": [g.to_json_dict() for g in self.month_groups],
            "t_tests": [p.to_json_dict() for p in self.pair_tests],
        }


@dataclass(frozen=True)
class ShiftRejection:
    shift: int
    n_tests: int
    n_rejections: int

    @property
    def frequency(self) -> float:
        return self.n_rejections / self.n_tests if self.n_tests else float("nan")

    def to_json_dict(self) -> dict:
        return {
            "shift": self.shift,
            "tests": self.n_tests,
            "rejections": self.n_rejections,
            "frequency": self.frequency,
        }


@dataclass(frozen=True)
class StationarityReport:
    alpha: float
    sidedness: str
    max_shift: int
    adf_level: float
    assets: tuple[AssetDiagnostics, ...]
    rejection_by_shift: tuple[ShiftRejection, ...]
    skipped: dict[str, int]
    price_nonstationary_fraction: float | None
    return_stationary_fraction: float | None
    levene_rejection_fraction: float | None

    def to_json_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "sidedness": self.sidedness,
            "max_shift": self.max_shift,
            "adf_level": self.adf_level,
            "assets": [a.to_json_dict() for a in self.assets],
            "rejection_by_shift": [s.to_json_dict() for s in self.rejection_by_shift],
            "skipped": dict(self.skipped),
            "price_nonstationary_fraction": self.price_nonstationary_fraction,
            "return_stationary_fraction": self.return_stationary_fraction,
            "levene_rejection_fraction": self.levene_rejection_fraction,
        }


def _shift_month(key: tuple[int, int], shift: int) -> tuple[int, int]:
    total = key[0] * 12 + (key[1] - 1) - shift
    return (total // 12, total % 12 + 1)


def _nearest_level(alpha: float, levels: Sequence[float]) -> float:
    return min(levels, key=lambda lvl: abs(lvl - alpha))


def monthly_stationarity_report(
    panel: QuotePanel,
    max_shift: int = 6,
    alpha: float = 0.05,
    sidedness: str = "one-sided",
    min_month_obs: int = 12,
) -> StationarityReport:
    """Per-asset stationarity diagnostics with calendar-month grouping.

    For every asset: unit-root tests on mid prices and on returns, a
    variance-homogeneity test across its monthly return groups, and mean
    tests between each month and the month ``k`` earlier for every shift
    ``k`` in ``1..max_shift``. Months with fewer than ``min_month_obs``
    returns are dropped. Degenerate inputs are skipped and counted rather
    than failing the whole report.
    """
    if max_shift < 1:
        raise ValueError("max_shift must be at least 1")
    if sidedness not in SIDEDNESS_VALUES:
        raise ValueError(f"sidedness must be one of {SIDEDNESS_VALUES}, got {sidedness!r}")
    return_dates = panel.dates[1:]
    month_keys = sorted({(day.year, day.month) for day in return_dates})
    if len(month_keys) < max_shift + 2:
        raise ValueError(
            f"panel spans {len(month_keys)} calendar months; "
            f"max_shift={max_shift} needs at least {max_shift + 2}"
        )
    adf_level = _nearest_level(alpha, DEFAULT_ADF_LEVELS)
    skipped = {"adf_price": 0, "adf_return": 0, "levene": 0, "t_test": 0}
    per_asset: list[AssetDiagnostics] = []
    shift_tests = {k: 0 for k in range(1, max_shift + 1)}
    shift_rejects = {k: 0 for k in range(1, max_shift + 1)}
    price_flags: list[bool] = []
    return_flags: list[bool] = []
    levene_flags: list[bool] = []

    month_index = {day: (day.year, day.month) for day in return_dates}
    for j, asset in enumerate(panel.assets):
        prices = panel.mids[:, j]
        rets = panel.returns[:, j]

        adf_price = adf_return = None
        try:
            adf_price = adf_test(prices)
            price_flags.append(not adf_price.reject(adf_level))
        except DegenerateDataError:
            skipped["adf_price"] += 1
        try:
            adf_return = adf_test(rets)
            return_flags.append(adf_return.reject(adf_level))
        except DegenerateDataError:
            skipped["adf_return"] += 1

        grouped: dict[tuple[int, int], list[float]] = {}
        for day, value in zip(return_dates, rets):
            grouped.setdefault(month_index[day], []).append(float(value))
        kept = {k: np.asarray(v) for k, v in sorted(grouped.items()) if len(v) >= min_month_obs}
        month_groups = tuple(
            MonthGroup(
                year=k[0],
                month=k[1],
                count=len(v),
                mean=float(v.mean()),
                var=float(v.var(ddof=1)),
            )
            for k, v in kept.items()
        )

        levene = None
        if len(kept) >= 2:
            try:
                levene = levene_test(list(kept.values()), alpha=alpha)
                levene_flags.append(levene.reject)
            except DegenerateDataError:
                skipped["levene"] += 1

        pair_tests: list[MonthPairTest] = []
        for key in kept:
            for shift in range(1, max_shift + 1):
                earlier = _shift_month(key, shift)
                if earlier not in kept:
                    continue
                try:
                    result = welch_t_test(kept[key], kept[earlier], alpha=alpha, sidedness=sidedness)
                except DegenerateDataError:
                    skipped["t_test"] += 1
                    continue
                shift_tests[shift] += 1
                shift_rejects[shift] += int(result.reject)
                pair_tests.append(
                    MonthPairTest(
                        shift=shift,
                        month=f"{key[0]:04d}-{key[1]:02d}",
                        prior_month=f"{earlier[0]:04d}-{earlier[1]:02d}",
                        result=result,
                    )
                )
        per_asset.append(
            AssetDiagnostics(
                asset=asset,
                adf_price=adf_price,
                adf_return=adf_return,
                levene=levene,
                month_groups=month_groups,
                pair_tests=tuple(pair_tests),
            )
        )

    rejection_by_shift = tuple(
        ShiftRejection(shift=k, n_tests=shift_tests[k], n_rejections=shift_rejects[k])
        for k in range(1, max_shift + 1)
    )
    return StationarityReport(
        alpha=alpha,
        sidedness=sidedness,
        max_shift=max_shift,
        adf_level=adf_level,
        assets=tuple(per_asset),
        rejection_by_shift=rejection_by_shift,
        skipped=skipped,
        price_nonstationary_fraction=(
            float(np.mean(price_flags)) if price_flags else None
        ),
        return_stationary_fraction=(
            float(np.mean(return_flags)) if return_flags else None
        ),
        levene_rejection_fraction=(
            float(np.mean(levene_flags)) if levene_flags else None
        ),
    )


_TABLE_ROWS = ("count", "mean", "std", "min", "25%", "50%", "75%", "max")


def _describe(values: np.ndarray) -> dict[str, float]:
    if len(values) == 0:
        return {row: float("nan") for row in _TABLE_ROWS}
    return {
        "count": float(len(values)),
        "mean": float(values.mean()),
        "std": float(values.std(ddof=1)) if len(values) > 1 else float("nan"),
        "min": float(values.min()),
        "25%": float(np.percentile(values, 25)),
        "50%": float(np.percentile(values, 50)),
        "75%": float(np.percentile(values, 75)),
        "max": float(values.max()),
    }


def render_report_table(report: StationarityReport) -> str:
    """Plain-text summary table over monthly groups and shift-1 mean tests.

    Columns describe the monthly group sizes, means and variances plus the
    shift-1 test statistics, degrees of freedom, critical values and 0/1
    rejections; rows are the usual describe() statistics.
    """
    counts, means, variances = [], [], []
    tstats, dofs, cvs, rejects = [], [], [], []
    for diag in report.assets:
        for group in diag.month_groups:
            counts.append(group.count)
            means.append(group.mean)
            variances.append(group.var)
        for pair in diag.pair_tests:
            if pair.shift != 1:
                continue
            tstats.append(pair.result.t_stat)
            dofs.append(pair.result.dof)
            cvs.append(pair.result.critical_value)
            rejects.append(float(pair.result.reject))
    columns = {
        "count": _describe(np.asarray(counts, dtype=float)),
        "mean": _describe(np.asarray(means, dtype=float)),
        "var": _describe(np.asarray(variances, dtype=float)),
        "test stat": _describe(np.asarray(tstats, dtype=float)),
        "dof": _describe(np.asarray(dofs, dtype=float)),
        "cv": _describe(np.asarray(cvs, dtype=float)),
        "reject H0": _describe(np.asarray(rejects, dtype=float)),
    }
    width = 11
    lines = [
        f"monthly return diagnostics (alpha={report.alpha:g}, {report.sidedness}, "
        f"shift-1 mean tests)",
        " " * 6 + "".join(f"{name:>{width}}" for name in columns),
    ]
    for row in _TABLE_ROWS:
        cells = []
        for name in columns:
            value = columns[name][row]
            if row == "count":
                cells.append(f"{value:>{width}.0f}")
            else:
                cells.append(f"{value:>{width}.3f}")
        lines.append(f"{row:<6}" + "".join(cells))
    lines.append("")
    lines.append("rejection frequency of equal monthly means, by month shift:")
    for item in report.rejection_by_shift:
        lines.append(
            f"  shift {item.shift:>2}: {item.frequency:7.4f} "
            f"({item.n_rejections}/{item.n_tests})"
        )
    if report.price_nonstationary_fraction is not None:
        lines.append(
            f"price series not rejecting the unit root (nonstationary): "
            f"{report.price_nonstationary_fraction:.1%}"
        )
    if report.return_stationary_fraction is not None:
        lines.append(
            f"return series rejecting the unit root (stationary): "
            f"{report.return_stationary_fraction:.1%}"
        )
    if report.levene_rejection_fraction is not None:
        lines.append(
            f"assets rejecting equal monthly variances: "
            f"{report.levene_rejection_fraction:.1%}"
        )
    return "\n".join(lines) + "\n"
