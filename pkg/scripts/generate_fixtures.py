#!/usr/bin/env python3
"""Regenerate the committed test fixtures under tests/fixtures/.

Everything is seeded, so reruns reproduce the committed files byte for
byte. The price series follow a log-price process with a deterministic
growth component, one slow sine cycle, and a small AR(1) disturbance:

    log P_t = log P_0 + growth * t + amp * sin(2*pi*t/period + phase) + u_t
    u_t     = ar_phi * u_{t-1} + ar_sigma * eps_t,   eps_t ~ N(0, 1)

The main fixture (ar_prices.csv, seed 29) is tuned so the default
pipeline's 50-step out-of-sample backtest scores R^2 ~ 0.69 and the
10-run noise protocol at amplitude 0.002 lands near 0.54 +/- 0.35.
"""

from __future__ import annotations

import datetime as dt
from pathlib import Path

import numpy as np

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def weekdays(start: dt.date, n: int) -> list[dt.date]:
    out, day = [], start
    while len(out) < n:
        if day.weekday() < 5:
            out.append(day)
        day += dt.timedelta(days=1)
    return out


def price_csv(seed: int, T: int, start: dt.date, p0: float, growth: float,
              amp: float, period: float, phase: float, ar_phi: float,
              ar_sigma: float) -> str:
    rng = np.random.default_rng(seed)
    t = np.arange(T)
    u = np.zeros(T)
    eps = rng.normal(size=T)
    for i in range(1, T):
        u[i] = ar_phi * u[i - 1] + ar_sigma * eps[i]
    close = np.exp(np.log(p0) + growth * t + amp * np.sin(2 * np.pi * t / period + phase) + u)

    a = rng.uniform(-1, 1, T)
    b = rng.uniform(0, 1, T)
    d = rng.uniform(0, 1, T)
    e = rng.uniform(0, 1, T)
    opens = close * (1 + 0.002 * a)
    highs = np.maximum(opens, close) * (1 + 0.003 * b)
    lows = np.minimum(opens, close) * (1 - 0.003 * d)
    volumes = np.round(1e6 * (1 + 0.25 * e))

    lines = ["date,open,high,low,close,volume"]
    for i, day in enumerate(weekdays(start, T)):
        lines.append(f"{day},{opens[i]:.4f},{highs[i]:.4f},{lows[i]:.4f},"
                     f"{close[i]:.4f},{volumes[i]:.0f}")
    return "\n".join(lines) + "\n"


CORPUS = """\
solar demand is rising . outlook ? answer : bright expansion ahead for solar power
coal demand is falling . outlook ? answer : weak contraction ahead for coal mining
solar demand is rising . outlook ? answer : bright expansion ahead for solar power
coal demand is falling . outlook ? answer : weak contraction ahead for coal mining
solar capacity grows quickly as panel costs drop every year
coal output shrinks steadily as plants close across the region
investors favor solar projects with strong subsidy support
lenders avoid coal projects with weak demand support
the grid adds solar faster than any other source
the market prices coal lower than any other fuel
"""

PANEL = """\
techdemo,close,90
alpha,0.6
beta,0.4
"""


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    (FIXTURES / "prices").mkdir(exist_ok=True)

    # primary backtest fixture: 400 weekdays, gentle uptrend with one bend
    (FIXTURES / "ar_prices.csv").write_text(
        price_csv(seed=29, T=400, start=dt.date(2021, 1, 4), p0=40.0,
                  growth=2.0e-3, amp=0.025, period=200.0, phase=2.4,
                  ar_phi=0.8, ar_sigma=0.002),
        encoding="utf-8",
    )

    # two industry members sharing one date range
    (FIXTURES / "prices" / "alpha.csv").write_text(
        price_csv(seed=101, T=260, start=dt.date(2022, 1, 3), p0=25.0,
                  growth=1.2e-3, amp=0.02, period=130.0, phase=1.0,
                  ar_phi=0.8, ar_sigma=0.0025),
        encoding="utf-8",
    )
    (FIXTURES / "prices" / "beta.csv").write_text(
        price_csv(seed=202, T=260, start=dt.date(2022, 1, 3), p0=60.0,
                  growth=0.9e-3, amp=0.03, period=160.0, phase=2.2,
                  ar_phi=0.85, ar_sigma=0.003),
        encoding="utf-8",
    )

    (FIXTURES / "panel.txt").write_text(PANEL, encoding="utf-8")
    (FIXTURES / "corpus.txt").write_text(CORPUS, encoding="utf-8")
    print(f"fixtures written under {FIXTURES}")


if __name__ == "__main__":
    main()
