"""Forecast scoring and repeated-noise experiment protocols.

Scores recursive forecasts with the coefficient of determination against a
held-out chronological segment, and runs the seeded multi-run noise
protocol that reports mean/std of per-run scores.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import FactorMatrix, split_train_test
from .errors import TrendkitError
from .forecasting import NoiseConfig, fit_bank, forecast, forecast_noisy


@dataclass(frozen=True)
class EvalReport:
    """Score of one noiseless out-of-sample forecast."""

    r2: float
    n_points: int
    target_factor: str
    horizon: int

    def __post_init__(self):
        if self.r2 > 1.0:
            raise TrendkitError("r2 cannot exceed 1")
        if self.n_points < 2:
            raise TrendkitError("need at least 2 scored points")


@dataclass
class NoiseProtocolReport:
    """Per-run scores of the repeated-noise protocol plus their mean/std."""

    runs: int
    r2_mean: float
    r2_std: float
    per_run: list[tuple[int, float]]  # (seed, r2)

    def __post_init__(self):
        if len(self.per_run) != self.runs:
            raise TrendkitError("per_run length does not match run count")


def r_squared(truth: np.ndarray, pred: np.ndarray) -> float:
    """1 - SSE/SST. Undefined (error) for constant truth."""
    truth = np.asarray(truth, dtype=float)
    pred = np.asarray(pred, dtype=float)
    if truth.shape != pred.shape:
        raise TrendkitError(
            f"length mismatch: truth {truth.shape} vs pred {pred.shape}"
        )
    if truth.ndim != 1 or len(truth) < 2:
        raise TrendkitError("need two equal-length 1-d series")
    sst = float(np.sum((truth - truth.mean()) ** 2))
    if sst == 0.0:
        raise TrendkitError("truth series is constant; R^2 is undefined")
    sse = float(np.sum((truth - pred) ** 2))
    return 1.0 - sse / sst


def _backtest_parts(matrix: FactorMatrix, target: str, train_fraction: float,
                    lambda_grid: list[float], horizon: int, val_fraction: float):
    """Shared setup: split, fit, and pull out the truth segment."""
    train, test = split_train_test(matrix, train_fraction)
    if test.n_rows < horizon:
        raise TrendkitError(
            f"horizon {horizon} exceeds test segment of {test.n_rows} rows"
        )
    bank = fit_bank(train, lambda_grid, val_fraction=val_fraction)
    initial = train.values[-1]
    truth = test.column(target)[:horizon]
    return bank, initial, truth


def backtest(matrix: FactorMatrix, target: str, train_fraction: float,
             lambda_grid: list[float], horizon: int,
             val_fraction: float = 0.2) -> EvalReport:
    """Fit on the head, roll a noiseless forecast over the test head, score it.

    The forecast starts from the last training state; its target-factor
    values at steps 1..horizon are compared with the first `horizon`
    held-out rows.
    """
    bank, initial, truth = _backtest_parts(matrix, target, train_fraction,
                                           lambda_grid, horizon, val_fraction)
    path = forecast(bank, initial, horizon)
    r2 = r_squared(truth, path.factor(target)[1:])
    return EvalReport(r2=r2, n_points=horizon, target_factor=target, horizon=horizon)


def noise_protocol(matrix: FactorMatrix, target: str, train_fraction: float,
                   lambda_grid: list[float], horizon: int, config: NoiseConfig,
                   runs: int, val_fraction: float = 0.2) -> NoiseProtocolReport:
    """Repeat the backtest with seeded noisy forecasts; run r uses seed + r.

    The bank is fitted once (noise only enters the rollout). Mean and
    population std are taken over the per-run scores.
    """
    if runs < 1:
        raise TrendkitError(f"runs must be >= 1, got {runs}")
    bank, initial, truth = _backtest_parts(matrix, target, train_fraction,
                                           lambda_grid, horizon, val_fraction)
    per_run: list[tuple[int, float]] = []
    for r in range(runs):
        seed = config.seed + r
        run_cfg = NoiseConfig(alpha=config.alpha, t1=config.t1, t2=config.t2, seed=seed)
        path = forecast_noisy(bank, initial, horizon, run_cfg)
        per_run.append((seed, r_squared(truth, path.factor(target)[1:])))
    scores = np.array([s for _, s in per_run])
    return NoiseProtocolReport(runs=runs, r2_mean=float(scores.mean()),
                               r2_std=float(scores.std()), per_run=per_run)


def eval_report_text(report: EvalReport) -> str:
    return (
        "forecast evaluation\n"
        f"  target factor : {report.target_factor}\n"
        f"  horizon       : {report.horizon}\n"
        f"  points scored : {report.n_points}\n"
        f"  r2            : {report.r2!r}\n"
    )


def eval_report_csv(report: EvalReport) -> str:
    return ("target_factor,horizon,n_points,r2\n"
            f"{report.target_factor},{report.horizon},{report.n_points},{report.r2!r}\n")


def noise_report_text(report: NoiseProtocolReport, target: str = "",
                      horizon: int | None = None) -> str:
    lines = ["noise protocol"]
    if target:
        lines.append(f"  target factor : {target}")
    if horizon is not None:
        lines.append(f"  horizon       : {horizon}")
    lines.append(f"  runs          : {report.runs}")
    lines.append(f"  r2 mean       : {report.r2_mean!r}")
    lines.append(f"  r2 std        : {report.r2_std!r}")
    for seed, r2 in report.per_run:
        lines.append(f"  run seed={seed}: r2={r2!r}")
    return "\n".join(lines) + "\n"


def noise_report_csv(report: NoiseProtocolReport) -> str:
    """One row per run plus a summary row carrying mean and std."""
    lines = ["run,seed,r2,r2_mean,r2_std"]
    for i, (seed, r2) in enumerate(report.per_run):
        lines.append(f"{i},{seed},{r2!r},,")
    lines.append(f"summary,,,{report.r2_mean!r},{report.r2_std!r}")
    return "\n".join(lines) + "\n"
