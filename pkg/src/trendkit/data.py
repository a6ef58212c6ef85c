"""Price data ingestion and factor matrix construction.

Parses OHLCV CSV files into validated price series, derives named factor
columns (close, returns, moving averages, rolling volatility, momentum),
and assembles the one-step-ahead supervised pairs the per-factor
regressions train on.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import math
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

from .errors import TrendkitError

CSV_HEADER = ["date", "open", "high", "low", "close", "volume"]

# Factor kinds that take a rolling window.
WINDOWED_KINDS = frozenset({"sma", "volatility", "momentum"})
PLAIN_KINDS = frozenset({"close", "return_1", "log_return_1"})


@dataclass(frozen=True)
class PriceBar:
    """One day of OHLCV data. Prices must be positive and OHLC-consistent."""

    date: dt.date
    open: float
    high: float
    low: float
    close: float
    volume: float

    def __post_init__(self):
        for name in ("open", "high", "low", "close"):
            v = getattr(self, name)
            if not math.isfinite(v) or v <= 0:
                raise TrendkitError(f"{name} must be a positive finite price, got {v}")
        if not (self.low <= self.open <= self.high):
            raise TrendkitError(
                f"open {self.open} outside [low={self.low}, high={self.high}]"
            )
        if not (self.low <= self.close <= self.high):
            raise TrendkitError(
                f"close {self.close} outside [low={self.low}, high={self.high}]"
            )
        if not math.isfinite(self.volume) or self.volume < 0:
            raise TrendkitError(f"volume must be non-negative, got {self.volume}")


@dataclass
class PriceSeries:
    """Ordered daily bars for one entity. Dates are strictly increasing."""

    entity_id: str
    bars: list[PriceBar]

    def __post_init__(self):
        if not self.bars:
            raise TrendkitError("price series is empty")
        for prev, cur in zip(self.bars, self.bars[1:]):
            if cur.date <= prev.date:
                raise TrendkitError(
                    f"dates not strictly increasing at {cur.date} (after {prev.date})"
                )

    def __len__(self) -> int:
        return len(self.bars)

    def closes(self) -> np.ndarray:
        return np.array([b.close for b in self.bars], dtype=float)

    def dates(self) -> list[dt.date]:
        return [b.date for b in self.bars]


@dataclass(frozen=True)
class FactorSpec:
    """Recipe for one factor column.

    kind is one of: close, return_1, log_return_1, sma, volatility, momentum.
    Windowed kinds (sma, volatility, momentum) require window >= 1.
    """

    name: str
    kind: str
    window: int = 1

    def __post_init__(self):
        if self.kind not in PLAIN_KINDS and self.kind not in WINDOWED_KINDS:
            raise TrendkitError(f"unknown factor kind: {self.kind!r}")
        if self.window < 1:
            raise TrendkitError(f"window must be >= 1, got {self.window}")

    @property
    def warmup(self) -> int:
        """Number of leading rows with undefined values for this factor."""
        if self.kind == "close":
            return 0
        if self.kind in ("return_1", "log_return_1"):
            return 1
        if self.kind == "sma":
            return self.window - 1
        if self.kind == "volatility":
            # window stddev over return_1 values, which themselves lag by one
            return self.window
        return self.window  # momentum


def factor_spec_from_name(name: str) -> FactorSpec:
    """Parse a compact factor name like 'sma_20' or 'close' into a spec."""
    name = name.strip()
    if name in PLAIN_KINDS:
        return FactorSpec(name=name, kind=name)
    for kind in WINDOWED_KINDS:
        prefix = kind + "_"
        if name.startswith(prefix):
            try:
                window = int(name[len(prefix):])
            except ValueError:
                raise TrendkitError(f"bad window in factor name {name!r}") from None
            return FactorSpec(name=name, kind=kind, window=window)
    raise TrendkitError(f"unknown factor kind: {name!r}")


def default_factor_specs() -> list[FactorSpec]:
    """Standard technical-indicator factor set used when none is given."""
    return [
        factor_spec_from_name(n)
        for n in ("close", "return_1", "sma_5", "sma_20", "volatility_20", "momentum_10")
    ]


@dataclass
class FactorMatrix:
    """Time-indexed matrix of named factors for one entity (row = day)."""

    entity_id: str
    dates: list[dt.date]
    names: list[str]
    values: np.ndarray  # shape (T, n)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise TrendkitError("factor values must be a 2-d matrix")
        if self.values.shape[0] != len(self.dates):
            raise TrendkitError("row count does not match date count")
        if self.values.shape[1] != len(self.names):
            raise TrendkitError("column count does not match factor name count")
        if not np.all(np.isfinite(self.values)):
            raise TrendkitError("factor matrix contains non-finite values")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_factors(self) -> int:
        return self.values.shape[1]

    def column(self, name: str) -> np.ndarray:
        try:
            j = self.names.index(name)
        except ValueError:
            raise TrendkitError(f"no factor named {name!r}") from None
        return self.values[:, j]


@dataclass
class SupervisedSet:
    """One-step-ahead training pairs: Y[j] is the factor vector after X[j]."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        if self.X.shape != self.Y.shape:
            raise TrendkitError("X and Y shapes differ")


def parse_price_csv(stream: str | TextIO | Iterable[str], entity_id: str = "series") -> PriceSeries:
    """Parse OHLCV CSV text into a PriceSeries.

    Expects the exact header `date,open,high,low,close,volume`, ISO dates and
    decimal numbers. Rows are sorted by date; duplicate dates and OHLC bound
    violations are errors that name the offending line.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise TrendkitError("empty price CSV") from None
    if [h.strip() for h in header] != CSV_HEADER:
        raise TrendkitError(
            f"bad header {','.join(header)!r}, expected {','.join(CSV_HEADER)!r}"
        )

    bars: list[PriceBar] = []
    seen: dict[dt.date, int] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue  # ignore blank lines
        if len(row) != 6:
            raise TrendkitError(f"line {lineno}: expected 6 fields, got {len(row)}")
        try:
            date = dt.date.fromisoformat(row[0].strip())
        except ValueError:
            raise TrendkitError(f"line {lineno}: bad date {row[0]!r}") from None
        try:
            o, h, l, c, v = (float(x) for x in row[1:])
        except ValueError:
            raise TrendkitError(f"line {lineno}: non-numeric field") from None
        if date in seen:
            raise TrendkitError(
                f"line {lineno}: duplicate date {date} (first seen on line {seen[date]})"
            )
        seen[date] = lineno
        try:
            bars.append(PriceBar(date, o, h, l, c, v))
        except TrendkitError as exc:
            raise TrendkitError(f"line {lineno}: {exc}") from None
    if not bars:
        raise TrendkitError("price CSV has no data rows")
    bars.sort(key=lambda b: b.date)
    return PriceSeries(entity_id=entity_id, bars=bars)


def read_price_csv(path, entity_id: str | None = None) -> PriceSeries:
    """Read a price CSV file; the entity id defaults to the file stem."""
    from pathlib import Path

    p = Path(path)
    if not p.exists():
        raise TrendkitError(f"price file not found: {p}")
    with open(p, "r", encoding="utf-8", newline="") as fh:
        return parse_price_csv(fh, entity_id=entity_id or p.stem)


def _factor_column(spec: FactorSpec, closes: np.ndarray) -> np.ndarray:
    """Full-length factor column; the first `spec.warmup` entries are undefined."""
    T = len(closes)
    out = np.full(T, np.nan)
    if spec.kind == "close":
        out[:] = closes
    elif spec.kind == "return_1":
        out[1:] = closes[1:] / closes[:-1] - 1.0
    elif spec.kind == "log_return_1":
        out[1:] = np.log(closes[1:] / closes[:-1])
    elif spec.kind == "sma":
        w = spec.window
        csum = np.cumsum(np.concatenate(([0.0], closes)))
        out[w - 1:] = (csum[w:] - csum[:-w]) / w
    elif spec.kind == "volatility":
        w = spec.window
        rets = closes[1:] / closes[:-1] - 1.0
        for t in range(w, T):
            out[t] = float(np.std(rets[t - w:t]))  # population std of last w returns
    elif spec.kind == "momentum":
        w = spec.window
        out[w:] = closes[w:] / closes[:-w] - 1.0
    return out


def compute_factors(series: PriceSeries, specs: list[FactorSpec]) -> FactorMatrix:
    """Build a FactorMatrix from a price series.

    Leading rows inside the largest warm-up window are dropped rather than
    imputed, so every remaining cell is finite.
    """
    if not specs:
        raise TrendkitError("no factor specs given")
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise TrendkitError("duplicate factor names")
    T = len(series)
    for s in specs:
        if s.kind in WINDOWED_KINDS and s.window >= T:
            raise TrendkitError(
                f"factor {s.name!r}: window {s.window} too large for series of length {T}"
            )
    closes = series.closes()
    cols = [_factor_column(s, closes) for s in specs]
    trim = max(s.warmup for s in specs)
    if trim >= T:
        raise TrendkitError(f"warm-up of {trim} rows leaves no data (series length {T})")
    values = np.column_stack(cols)[trim:]
    return FactorMatrix(
        entity_id=series.entity_id,
        dates=series.dates()[trim:],
        names=names,
        values=values,
    )


def make_supervised(matrix: FactorMatrix) -> SupervisedSet:
    """Pair each row with its successor: X = rows 0..T-2, Y = rows 1..T-1."""
    if matrix.n_rows < 2:
        raise TrendkitError("need at least 2 rows to build supervised pairs")
    return SupervisedSet(X=matrix.values[:-1].copy(), Y=matrix.values[1:].copy())


def split_train_test(matrix: FactorMatrix, train_fraction: float) -> tuple[FactorMatrix, FactorMatrix]:
    """Chronological split: train rows strictly precede test rows, no shuffling."""
    if not (0.0 < train_fraction < 1.0):
        raise TrendkitError(f"train_fraction must be in (0, 1), got {train_fraction}")
    T = matrix.n_rows
    n_train = int(T * train_fraction + 1e-9)
    if n_train < 1 or n_train >= T:
        raise TrendkitError(
            f"train_fraction {train_fraction} yields an empty split for {T} rows"
        )
    head = FactorMatrix(matrix.entity_id, matrix.dates[:n_train], list(matrix.names),
                        matrix.values[:n_train].copy())
    tail = FactorMatrix(matrix.entity_id, matrix.dates[n_train:], list(matrix.names),
                        matrix.values[n_train:].copy())
    return head, tail


def factor_matrix_to_csv(matrix: FactorMatrix) -> str:
    """Serialize to CSV: a `date` column followed by one column per factor."""
    lines = ["date," + ",".join(matrix.names)]
    for date, row in zip(matrix.dates, matrix.values):
        lines.append(date.isoformat() + "," + ",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def factor_matrix_from_csv(text: str, entity_id: str = "series") -> FactorMatrix:
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows:
        raise TrendkitError("empty factor CSV")
    header = rows[0]
    if header[:1] != ["date"] or len(header) < 2:
        raise TrendkitError("factor CSV must start with a 'date' column")
    names = header[1:]
    dates, values = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise TrendkitError(f"line {lineno}: expected {len(header)} fields")
        dates.append(dt.date.fromisoformat(row[0]))
        values.append([float(x) for x in row[1:]])
    return FactorMatrix(entity_id=entity_id, dates=dates, names=names,
                        values=np.array(values, dtype=float))
