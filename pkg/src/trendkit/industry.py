"""Company-to-industry aggregation.

Combines member companies' factor series into two industry-level curves:
the realized aggregate ("actual", the red line in the output figures) and
the forecast aggregate over a future horizon ("expected", the blue line).
Each member's signal factor is z-scored over the members' common date
range so the weighted sum is unit-free, and the forecast segment reuses
the same per-member normalization.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

import numpy as np

from .data import FactorMatrix
from .errors import DivergenceError, TrendkitError
from .forecasting import FactorModelBank, forecast

WEIGHT_TOL = 1e-9


@dataclass
class IndustryPanel:
    """Fixed-weight member list aggregated on one signal factor."""

    industry_name: str
    members: list[tuple[str, float]]  # (entity_id, weight)
    signal_factor: str

    def __post_init__(self):
        if not self.members:
            raise TrendkitError("panel needs at least one member")
        if any(w < 0 for _, w in self.members):
            raise TrendkitError("member weights must be non-negative")
        total = sum(w for _, w in self.members)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise TrendkitError(f"member weights sum to {total!r}, expected 1")
        ids = [e for e, _ in self.members]
        if len(set(ids)) != len(ids):
            raise TrendkitError("duplicate member entity ids")


@dataclass
class IndustryTrend:
    """Actual curve over dates plus expected curve over a forward horizon."""

    industry_name: str
    dates: list[dt.date]
    actual: np.ndarray
    expected: np.ndarray
    horizon_days: int

    def __post_init__(self):
        self.actual = np.asarray(self.actual, dtype=float)
        self.expected = np.asarray(self.expected, dtype=float)
        if len(self.actual) != len(self.dates):
            raise TrendkitError("actual series not aligned to dates")
        if len(self.expected) != self.horizon_days:
            raise TrendkitError("expected series length must equal horizon_days")


@dataclass(frozen=True)
class TrendAssessment:
    """Computable direction call from the two curves."""

    direction: str  # rising | falling | uncertain
    actual_slope: float
    expected_slope: float
    volatility: float


@dataclass(frozen=True)
class MemberNormalization:
    mean: float
    std: float  # 1.0 stands in for degenerate constant series

    def apply(self, values: np.ndarray) -> np.ndarray:
        return (np.asarray(values, dtype=float) - self.mean) / self.std


def common_dates(panel: IndustryPanel, matrices: dict[str, FactorMatrix]) -> list[dt.date]:
    """Sorted intersection of all members' dates; empty intersection is an error."""
    shared: set[dt.date] | None = None
    for entity, _ in panel.members:
        if entity not in matrices:
            raise TrendkitError(f"missing factor matrix for member {entity!r}")
        member_dates = set(matrices[entity].dates)
        shared = member_dates if shared is None else shared & member_dates
    if not shared:
        raise TrendkitError("members share no common dates")
    return sorted(shared)


def member_normalization(panel: IndustryPanel, matrices: dict[str, FactorMatrix],
                         dates: list[dt.date] | None = None) -> dict[str, MemberNormalization]:
    """Per-member z-score parameters of the signal factor over the common range."""
    dates = dates if dates is not None else common_dates(panel, matrices)
    params: dict[str, MemberNormalization] = {}
    for entity, _ in panel.members:
        values = _signal_on_dates(matrices[entity], panel.signal_factor, dates)
        std = float(np.std(values))
        params[entity] = MemberNormalization(mean=float(np.mean(values)),
                                             std=std if std > 0 else 1.0)
    return params


def _signal_on_dates(matrix: FactorMatrix, factor: str, dates: list[dt.date]) -> np.ndarray:
    index = {d: i for i, d in enumerate(matrix.dates)}
    col = matrix.column(factor)
    return np.array([col[index[d]] for d in dates])


def actual_trend(panel: IndustryPanel, matrices: dict[str, FactorMatrix]
                 ) -> tuple[list[dt.date], np.ndarray]:
    """Weighted sum of members' z-scored signal factors on their common dates."""
    dates = common_dates(panel, matrices)
    params = member_normalization(panel, matrices, dates)
    total = np.zeros(len(dates))
    for entity, weight in panel.members:
        values = _signal_on_dates(matrices[entity], panel.signal_factor, dates)
        total += weight * params[entity].apply(values)
    return dates, total


def expected_trend(panel: IndustryPanel, banks: dict[str, FactorModelBank],
                   initial_states: dict[str, np.ndarray], horizon_days: int,
                   norm_params: dict[str, MemberNormalization]) -> np.ndarray:
    """Weighted sum of members' forecast signal factors over the horizon.

    Each member gets a noiseless rollout from its initial state; the signal
    factor is normalized with the same per-member parameters as the actual
    curve before the weighted sum.
    """
    if horizon_days < 1:
        raise TrendkitError(f"horizon_days must be >= 1, got {horizon_days}")
    total = np.zeros(horizon_days)
    for entity, weight in panel.members:
        if entity not in banks:
            raise TrendkitError(f"missing model bank for member {entity!r}")
        if entity not in initial_states:
            raise TrendkitError(f"missing initial state for member {entity!r}")
        if entity not in norm_params:
            raise TrendkitError(f"missing normalization for member {entity!r}")
        try:
            path = forecast(banks[entity], initial_states[entity], horizon_days)
        except DivergenceError as exc:
            raise DivergenceError(exc.step, f"member {entity!r}: {exc}") from None
        signal = path.factor(panel.signal_factor)[1:]
        total += weight * norm_params[entity].apply(signal)
    return total


def build_industry_trend(panel: IndustryPanel, matrices: dict[str, FactorMatrix],
                         banks: dict[str, FactorModelBank], horizon_days: int) -> IndustryTrend:
    """Compose actual and expected curves into one IndustryTrend.

    Member forecasts start from each member's factor state on the last
    common date, so the expected curve continues the actual one.
    """
    dates, actual = actual_trend(panel, matrices)
    params = member_normalization(panel, matrices, dates)
    last = dates[-1]
    initial_states = {}
    for entity, _ in panel.members:
        m = matrices[entity]
        initial_states[entity] = m.values[m.dates.index(last)]
    expected = expected_trend(panel, banks, initial_states, horizon_days, params)
    return IndustryTrend(industry_name=panel.industry_name, dates=dates,
                         actual=actual, expected=expected, horizon_days=horizon_days)


def _slope(values: np.ndarray) -> float:
    """Least-squares per-step slope; constant or single-point series get
    exactly 0 rather than floating-point dust."""
    if len(values) < 2 or np.all(values == values[0]):
        return 0.0
    x = np.arange(len(values), dtype=float)
    xc = x - x.mean()
    return float((xc @ (values - values.mean())) / (xc @ xc))


def assess(trend: IndustryTrend, volatility_threshold: float = 1.0) -> TrendAssessment:
    """Direction call: rising/falling only when both slopes agree in sign and
    the actual curve is not too choppy; anything else is uncertain."""
    if len(trend.actual) < 2:
        raise TrendkitError("need at least 2 actual points to assess a trend")
    actual_slope = _slope(trend.actual)
    expected_slope = _slope(trend.expected)
    volatility = float(np.std(np.diff(trend.actual)))
    if volatility > volatility_threshold:
        direction = "uncertain"
    elif actual_slope > 0 and expected_slope > 0:
        direction = "rising"
    elif actual_slope < 0 and expected_slope < 0:
        direction = "falling"
    else:
        direction = "uncertain"
    return TrendAssessment(direction=direction, actual_slope=actual_slope,
                           expected_slope=expected_slope, volatility=volatility)


def parse_panel_file(text: str) -> tuple[IndustryPanel, int]:
    """Parse a panel definition.

    First non-comment line: ``industry_name,signal_factor,horizon_days``;
    each following line: ``entity_id,weight``.
    """
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise TrendkitError("empty panel file")
    head = [p.strip() for p in lines[0].split(",")]
    if len(head) != 3:
        raise TrendkitError(
            "panel header must be 'industry_name,signal_factor,horizon_days'"
        )
    name, signal = head[0], head[1]
    try:
        horizon = int(head[2])
    except ValueError:
        raise TrendkitError(f"bad horizon {head[2]!r} in panel header") from None
    if horizon < 1:
        raise TrendkitError(f"panel horizon must be >= 1, got {horizon}")
    members: list[tuple[str, float]] = []
    for lineno, ln in enumerate(lines[1:], start=2):
        parts = [p.strip() for p in ln.split(",")]
        if len(parts) != 2:
            raise TrendkitError(f"panel line {lineno}: expected 'entity_id,weight'")
        try:
            members.append((parts[0], float(parts[1])))
        except ValueError:
            raise TrendkitError(f"panel line {lineno}: bad weight {parts[1]!r}") from None
    return IndustryPanel(industry_name=name, members=members, signal_factor=signal), horizon


def trend_to_csv(trend: IndustryTrend) -> str:
    """CSV rows tagged by segment: actual rows carry dates, expected rows
    carry forward day offsets (+1, +2, ...)."""
    lines = ["segment,date,value"]
    for date, v in zip(trend.dates, trend.actual):
        lines.append(f"actual,{date.isoformat()},{float(v)!r}")
    for k, v in enumerate(trend.expected, start=1):
        lines.append(f"expected,+{k},{float(v)!r}")
    return "\n".join(lines) + "\n"


def assessment_line(trend: IndustryTrend, assessment: TrendAssessment) -> str:
    return (
        f"{trend.industry_name}: direction={assessment.direction} "
        f"actual_slope={assessment.actual_slope:.6g} "
        f"expected_slope={assessment.expected_slope:.6g} "
        f"volatility={assessment.volatility:.6g}"
    )
