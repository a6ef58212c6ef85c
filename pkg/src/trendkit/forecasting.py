"""Recursive factor forecasting.

Rolls a bank of per-factor one-step predictors forward in time: each step
feeds the full predicted factor vector back in as the next step's input.
Optional multiplicative noise (sign drawn through a piecewise threshold
function of a uniform variate, amplitude per factor) breaks the tendency
of the deterministic recursion to converge to a fixed value.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import FactorMatrix, make_supervised
from .errors import DivergenceError, TrendkitError
from .regression import LassoConfig, LinearModel, fit_lasso, fit_ols, model_from_text, model_to_text, predict

# Abort a path once any state component grows beyond this magnitude;
# expansive linear maps otherwise overflow into inf/nan silently.
DIVERGENCE_LIMIT = 1e12


@dataclass(frozen=True)
class SelectionEntry:
    """Which candidate won the validation race for one factor."""

    candidate: str  # "ols" or "lasso"
    lam: float
    score: float


@dataclass
class FactorModelBank:
    """One fitted one-step predictor per factor, in a fixed vector layout."""

    models: dict[str, LinearModel]
    factor_order: list[str]
    selection_report: dict[str, SelectionEntry] = field(default_factory=dict)

    def __post_init__(self):
        if set(self.models) != set(self.factor_order):
            raise TrendkitError("bank models do not match factor order")
        n = len(self.factor_order)
        for name, model in self.models.items():
            if model.n_features != n:
                raise TrendkitError(
                    f"model for {name!r} takes {model.n_features} inputs, expected {n}"
                )

    @property
    def n_factors(self) -> int:
        return len(self.factor_order)


@dataclass(frozen=True)
class NoiseConfig:
    """Multiplicative shock settings: per-factor amplitudes, thresholds, seed.

    A uniform draw above t1 bumps the factor up by its amplitude, below t2
    bumps it down, and in [t2, t1] leaves it alone.
    """

    alpha: tuple[float, ...]
    t1: float = 0.9
    t2: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if any(a < 0 for a in self.alpha):
            raise TrendkitError("noise amplitudes must be >= 0")
        for name, v in (("t1", self.t1), ("t2", self.t2)):
            if not (0.0 <= v <= 1.0):
                raise TrendkitError(f"{name} must be in [0, 1], got {v}")
        if self.t2 > self.t1:
            raise TrendkitError(f"t2 ({self.t2}) must be <= t1 ({self.t1})")
        if self.seed < 0:
            raise TrendkitError("seed must be non-negative")

    @staticmethod
    def uniform(alpha: float, n_factors: int, t1: float = 0.9, t2: float = 0.1,
                seed: int = 0) -> "NoiseConfig":
        """Same amplitude for every factor."""
        return NoiseConfig(alpha=(alpha,) * n_factors, t1=t1, t2=t2, seed=seed)


@dataclass
class ForecastPath:
    """A rolled-out trajectory; row 0 is the initial state."""

    horizon: int
    states: np.ndarray  # shape (horizon + 1, n)
    factor_names: list[str]
    seed_used: int | None = None

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float)
        if self.states.shape[0] != self.horizon + 1:
            raise TrendkitError("path must have horizon + 1 rows")
        if not np.all(np.isfinite(self.states)):
            raise TrendkitError("path contains non-finite values")

    def factor(self, name: str) -> np.ndarray:
        try:
            j = self.factor_names.index(name)
        except ValueError:
            raise TrendkitError(f"no factor named {name!r}") from None
        return self.states[:, j]


def _validation_r2(truth: np.ndarray, pred: np.ndarray) -> float:
    """One-step-ahead R^2 used for model selection.

    Constant validation truth has no defined R^2; score it 0 by convention
    so degenerate factors fall back to whichever candidate comes first.
    """
    sst = float(np.sum((truth - truth.mean()) ** 2))
    if sst == 0.0:
        return 0.0
    sse = float(np.sum((truth - pred) ** 2))
    return 1.0 - sse / sst


def fit_bank(train: FactorMatrix, lambda_grid: list[float], val_fraction: float = 0.2,
             include_ols: bool = True, lasso_config: LassoConfig | None = None) -> FactorModelBank:
    """Fit one predictor per factor, selected on a chronological validation tail.

    Candidates are OLS plus one L1 fit per grid value; each is trained on the
    leading pairs and scored by one-step-ahead R^2 on the trailing pairs.
    Ties go to the larger lambda (sparser model).
    """
    if not include_ols and not lambda_grid:
        raise TrendkitError("no candidate models: empty grid and OLS excluded")
    if not (0.0 < val_fraction < 1.0):
        raise TrendkitError(f"val_fraction must be in (0, 1), got {val_fraction}")
    pairs = make_supervised(train)
    n_pairs = pairs.X.shape[0]
    n_val = int(n_pairs * val_fraction + 1e-9)
    if n_val < 1:
        raise TrendkitError(
            f"validation tail is empty ({n_pairs} pairs, val_fraction {val_fraction})"
        )
    n_fit = n_pairs - n_val
    if n_fit < 2:
        raise TrendkitError(
            f"too few training pairs ({n_fit}) after reserving {n_val} for validation"
        )
    X_fit, X_val = pairs.X[:n_fit], pairs.X[n_fit:]

    base = lasso_config or LassoConfig()
    models: dict[str, LinearModel] = {}
    report: dict[str, SelectionEntry] = {}
    for i, name in enumerate(train.names):
        y_fit, y_val = pairs.Y[:n_fit, i], pairs.Y[n_fit:, i]
        candidates: list[tuple[str, float, LinearModel]] = []
        if include_ols:
            candidates.append(("ols", 0.0, fit_ols(X_fit, y_fit, target_name=name)))
        for lam in sorted(lambda_grid):
            cfg = LassoConfig(lam=lam, max_sweeps=base.max_sweeps, tol=base.tol,
                              standardize=base.standardize)
            candidates.append(("lasso", lam, fit_lasso(X_fit, y_fit, cfg, target_name=name)))

        best: tuple[str, float, LinearModel] | None = None
        best_score = -np.inf
        for kind, lam, model in candidates:
            pred = X_val @ model.weights + model.intercept
            score = _validation_r2(y_val, pred)
            # >= so later candidates (larger lambda) win exact ties
            if best is None or score >= best_score:
                best, best_score = (kind, lam, model), score
        kind, lam, model = best
        models[name] = model
        report[name] = SelectionEntry(candidate=kind, lam=lam, score=best_score)
    return FactorModelBank(models=models, factor_order=list(train.names),
                           selection_report=report)


def step(bank: FactorModelBank, state: np.ndarray) -> np.ndarray:
    """One deterministic transition: component i is model i applied to state."""
    state = np.asarray(state, dtype=float)
    if state.shape != (bank.n_factors,):
        raise TrendkitError(
            f"state has shape {state.shape}, expected ({bank.n_factors},)"
        )
    return np.array([predict(bank.models[name], state) for name in bank.factor_order])


def psi(x: float, t1: float, t2: float) -> int:
    """Three-way threshold: +1 above t1, -1 below t2, else 0.

    Both boundaries belong to the middle branch.
    """
    if t2 > t1:
        raise TrendkitError(f"t2 ({t2}) must be <= t1 ({t1})")
    if x > t1:
        return 1
    if x < t2:
        return -1
    return 0


def perturb(state: np.ndarray, config: NoiseConfig, rng: np.random.Generator) -> np.ndarray:
    """Apply one multiplicative shock per factor.

    Draws one uniform variate per factor, in factor order, and scales
    component i by (1 + psi(eps_i) * alpha_i).
    """
    state = np.asarray(state, dtype=float)
    if state.shape != (len(config.alpha),):
        raise TrendkitError(
            f"state has {state.shape[0]} components but config has {len(config.alpha)} amplitudes"
        )
    eps = rng.random(len(state))
    signs = np.array([psi(e, config.t1, config.t2) for e in eps], dtype=float)
    return state * (1.0 + signs * np.asarray(config.alpha))


def _roll(bank: FactorModelBank, initial: np.ndarray, horizon: int,
          noise: NoiseConfig | None) -> ForecastPath:
    initial = np.asarray(initial, dtype=float)
    if horizon < 1:
        raise TrendkitError(f"horizon must be >= 1, got {horizon}")
    if initial.shape != (bank.n_factors,):
        raise TrendkitError(
            f"initial state has shape {initial.shape}, expected ({bank.n_factors},)"
        )
    rng = np.random.default_rng(noise.seed) if noise is not None else None
    states = np.empty((horizon + 1, bank.n_factors))
    states[0] = initial
    for t in range(1, horizon + 1):
        nxt = step(bank, states[t - 1])
        if noise is not None:
            nxt = perturb(nxt, noise, rng)
        if not np.all(np.isfinite(nxt)) or np.max(np.abs(nxt)) > DIVERGENCE_LIMIT:
            raise DivergenceError(t, f"forecast diverged at step {t}")
        states[t] = nxt
    return ForecastPath(horizon=horizon, states=states,
                        factor_names=list(bank.factor_order),
                        seed_used=noise.seed if noise is not None else None)


def forecast(bank: FactorModelBank, initial: np.ndarray, horizon: int) -> ForecastPath:
    """Deterministic rollout: states[t] = step(bank, states[t-1])."""
    return _roll(bank, initial, horizon, noise=None)


def forecast_noisy(bank: FactorModelBank, initial: np.ndarray, horizon: int,
                   config: NoiseConfig) -> ForecastPath:
    """Rollout with a shock after each step; identical seeds give identical paths."""
    return _roll(bank, initial, horizon, noise=config)


def path_to_csv(path: ForecastPath) -> str:
    """CSV with a step column and one column per factor; seed in a comment line."""
    lines = [f"# seed: {path.seed_used if path.seed_used is not None else 'none'}"]
    lines.append("step," + ",".join(path.factor_names))
    for t, row in enumerate(path.states):
        lines.append(str(t) + "," + ",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def path_from_csv(text: str) -> ForecastPath:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    seed: int | None = None
    if lines and lines[0].startswith("#"):
        tag = lines.pop(0).partition(":")[2].strip()
        seed = None if tag in ("none", "") else int(tag)
    if not lines:
        raise TrendkitError("empty path CSV")
    names = lines[0].split(",")[1:]
    states = [[float(v) for v in ln.split(",")[1:]] for ln in lines[1:]]
    return ForecastPath(horizon=len(states) - 1, states=np.array(states),
                        factor_names=names, seed_used=seed)


def save_bank(bank: FactorModelBank, initial_state: np.ndarray, path) -> None:
    """Write a bank, its selection report, and a starting state to a text file."""
    initial_state = np.asarray(initial_state, dtype=float)
    if initial_state.shape != (bank.n_factors,):
        raise TrendkitError("initial state length does not match factor count")
    blocks = ["# trendkit factor model bank"]
    blocks.append("factors: " + ",".join(bank.factor_order))
    blocks.append("initial: " + ",".join(repr(float(v)) for v in initial_state))
    blocks.append("[selection]")
    for name in bank.factor_order:
        e = bank.selection_report.get(name)
        if e is not None:
            blocks.append(f"{name}: candidate={e.candidate} lambda={e.lam!r} score={e.score!r}")
    for name in bank.factor_order:
        blocks.append("[model]")
        blocks.append(model_to_text(bank.models[name], bank.factor_order).rstrip("\n"))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(blocks) + "\n")


def load_bank(path) -> tuple[FactorModelBank, np.ndarray]:
    """Inverse of save_bank; returns the bank and the stored initial state."""
    from pathlib import Path

    p = Path(path)
    if not p.exists():
        raise TrendkitError(f"model file not found: {p}")
    text = p.read_text(encoding="utf-8")

    factor_order: list[str] = []
    initial: np.ndarray | None = None
    report: dict[str, SelectionEntry] = {}
    models: dict[str, LinearModel] = {}

    sections = text.split("[model]")
    for raw in sections[0].splitlines():
        line = raw.strip()
        if not line or line.startswith("#") or line == "[selection]":
            continue
        key, _, value = line.partition(":")
        key, value = key.strip(), value.strip()
        if key == "factors":
            factor_order = [n.strip() for n in value.split(",") if n.strip()]
        elif key == "initial":
            initial = np.array([float(v) for v in value.split(",")])
        else:
            parts = dict(item.split("=", 1) for item in value.split())
            report[key] = SelectionEntry(candidate=parts["candidate"],
                                         lam=float(parts["lambda"]),
                                         score=float(parts["score"]))
    if not factor_order:
        raise TrendkitError(f"model file {p} has no factor list")
    if initial is None:
        raise TrendkitError(f"model file {p} has no initial state")
    for block in sections[1:]:
        model, _ = model_from_text(block)
        models[model.target_name] = model
    bank = FactorModelBank(models=models, factor_order=factor_order,
                           selection_report=report)
    return bank, initial
