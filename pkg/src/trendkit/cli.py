"""trendkit command line interface.

Subcommands map one-to-one onto the pipeline stages:

    trendkit fit       fit per-factor predictors on a price CSV
    trendkit forecast  roll a fitted model bank forward in time
    trendkit industry  aggregate member companies into industry curves
    trendkit evaluate  backtest a forecast against held-out data
    trendkit probe     query the n-gram trend model with a prompted question

Every command writes CSV/text outputs to declared files; report-style
commands also render a matplotlib figure next to the CSV unless --no-plot
is given. All randomness requires an explicit --seed. Exit codes: 0 on
success, 1 for user/data errors, 2 for internal failures.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import data, evaluation, industry as ind, lm, plots
from . import forecasting as fc
from .errors import TrendkitError


class _Parser(argparse.ArgumentParser):
    """Argparse that treats usage mistakes as user errors (exit 1)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _parse_floats(text: str, flag: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise TrendkitError(f"{flag} must be comma-separated numbers, got {text!r}") from None


def _parse_factors(text: str) -> list[data.FactorSpec]:
    return [data.factor_spec_from_name(n) for n in text.split(",") if n.strip()]


def _load_matrix(prices_path: str, factors: str) -> data.FactorMatrix:
    series = data.read_price_csv(prices_path)
    if len(series) < 2:
        raise TrendkitError(f"too few rows in {prices_path}: {len(series)}")
    return data.compute_factors(series, _parse_factors(factors))


def _noise_config(args, n_factors: int, alpha_override: float | None = None) -> fc.NoiseConfig:
    if args.seed is None:
        raise TrendkitError("randomized runs require an explicit --seed")
    alpha_text = args.alpha if alpha_override is None else str(alpha_override)
    values = _parse_floats(alpha_text, "--alpha")
    if len(values) == 1:
        alpha = tuple(values * n_factors)
    elif len(values) == n_factors:
        alpha = tuple(values)
    else:
        raise TrendkitError(
            f"--alpha needs 1 or {n_factors} values, got {len(values)}"
        )
    return fc.NoiseConfig(alpha=alpha, t1=args.t1, t2=args.t2, seed=args.seed)


def _outdir(path_str: str) -> Path:
    path = Path(path_str)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    return path


# --- fit ---------------------------------------------------------------------

def cmd_fit(args) -> int:
    matrix = _load_matrix(args.prices, args.factors)
    grid = _parse_floats(args.lambda_grid, "--lambda-grid")
    bank = fc.fit_bank(matrix, grid, val_fraction=args.val_fraction)
    fc.save_bank(bank, matrix.values[-1], _outdir(args.out))
    for name in bank.factor_order:
        entry = bank.selection_report[name]
        print(f"{name}: {entry.candidate} lambda={entry.lam:g} "
              f"validation_r2={entry.score:.6g}")
    print(f"model bank written to {args.out}", file=sys.stderr)
    return 0


# --- forecast ----------------------------------------------------------------

def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")


def cmd_forecast(args) -> int:
    bank, initial = fc.load_bank(args.model)
    out = _outdir(args.out)
    stem = out.with_suffix("")
    target = args.target or bank.factor_order[0]
    if target not in bank.factor_order:
        raise TrendkitError(f"no factor named {target!r} in model bank")

    if args.runs is None:
        if args.noise:
            cfg = _noise_config(args, bank.n_factors)
            path = fc.forecast_noisy(bank, initial, args.horizon, cfg)
        else:
            path = fc.forecast(bank, initial, args.horizon)
        _write(out, fc.path_to_csv(path))
        if not args.no_plot:
            plots.plot_forecast(path, stem.with_suffix(".png"))
        print(f"forecast path written to {out}", file=sys.stderr)
        return 0

    # multi-run protocol: seeded noisy paths scored against the noiseless
    # rollout, plus a per-run report
    base_cfg = _noise_config(args, bank.n_factors,
                             alpha_override=None if args.noise else 0.0)
    reference = fc.forecast(bank, initial, args.horizon)
    truth = reference.factor(target)[1:]
    paths, per_run = [], []
    for r in range(args.runs):
        cfg = fc.NoiseConfig(alpha=base_cfg.alpha, t1=base_cfg.t1, t2=base_cfg.t2,
                             seed=base_cfg.seed + r)
        path = fc.forecast_noisy(bank, initial, args.horizon, cfg)
        paths.append(path)
        per_run.append((cfg.seed, evaluation.r_squared(truth, path.factor(target)[1:])))
        _write(Path(f"{stem}_run{r}.csv"), fc.path_to_csv(path))
    scores = np.array([s for _, s in per_run])
    report = evaluation.NoiseProtocolReport(runs=args.runs, r2_mean=float(scores.mean()),
                                            r2_std=float(scores.std()), per_run=per_run)
    _write(Path(f"{stem}_report.txt"),
           evaluation.noise_report_text(report, target=target, horizon=args.horizon))
    _write(Path(f"{stem}_report.csv"), evaluation.noise_report_csv(report))
    if not args.no_plot:
        plots.plot_forecast_runs(paths, target, stem.with_suffix(".png"),
                                 reference=reference)
    print(f"{args.runs} forecast runs written with prefix {stem}", file=sys.stderr)
    return 0


# --- industry ----------------------------------------------------------------

def cmd_industry(args) -> int:
    panel_path = Path(args.panel)
    if not panel_path.exists():
        raise TrendkitError(f"panel file not found: {panel_path}")
    panel, horizon = ind.parse_panel_file(panel_path.read_text(encoding="utf-8"))
    if args.horizon is not None:
        horizon = args.horizon
    specs = _parse_factors(args.factors)
    if panel.signal_factor not in [s.name for s in specs]:
        raise TrendkitError(
            f"signal factor {panel.signal_factor!r} is not among computed factors"
        )
    grid = _parse_floats(args.lambda_grid, "--lambda-grid")

    matrices: dict[str, data.FactorMatrix] = {}
    banks: dict[str, fc.FactorModelBank] = {}
    for entity, _ in panel.members:
        member_csv = Path(args.prices_dir) / f"{entity}.csv"
        if not member_csv.exists():
            raise TrendkitError(f"missing price file for member {entity!r}: {member_csv}")
        series = data.read_price_csv(member_csv, entity_id=entity)
        matrices[entity] = data.compute_factors(series, specs)
        banks[entity] = fc.fit_bank(matrices[entity], grid, val_fraction=args.val_fraction)

    trend = ind.build_industry_trend(panel, matrices, banks, horizon)
    assessment = ind.assess(trend, volatility_threshold=args.volatility_threshold)
    out = _outdir(args.out)
    _write(out, ind.trend_to_csv(trend))
    if not args.no_plot:
        plots.plot_industry(trend, out.with_suffix(".png"))
    print(ind.assessment_line(trend, assessment))
    print(f"industry trend written to {out}", file=sys.stderr)
    return 0


# --- evaluate ----------------------------------------------------------------

def cmd_evaluate(args) -> int:
    matrix = _load_matrix(args.prices, args.factors)
    grid = _parse_floats(args.lambda_grid, "--lambda-grid")
    train, test = data.split_train_test(matrix, args.train_fraction)
    if test.n_rows < args.horizon:
        raise TrendkitError(
            f"horizon {args.horizon} exceeds test segment of {test.n_rows} rows"
        )
    bank = fc.fit_bank(train, grid, val_fraction=args.val_fraction)
    initial = train.values[-1]
    truth = test.column(args.target)[:args.horizon]
    path = fc.forecast(bank, initial, args.horizon)
    pred = path.factor(args.target)[1:]
    report = evaluation.EvalReport(r2=evaluation.r_squared(truth, pred),
                                   n_points=args.horizon, target_factor=args.target,
                                   horizon=args.horizon)

    prefix = _outdir(args.out_prefix)
    text = evaluation.eval_report_text(report)
    noisy_paths = None
    if args.runs is not None:
        cfg = _noise_config(args, matrix.n_factors,
                            alpha_override=None if args.noise else 0.0)
        protocol = evaluation.noise_protocol(matrix, args.target, args.train_fraction,
                                             grid, args.horizon, cfg, args.runs,
                                             val_fraction=args.val_fraction)
        text += evaluation.noise_report_text(protocol, target=args.target,
                                             horizon=args.horizon)
        _write(Path(f"{prefix}.csv"), evaluation.noise_report_csv(protocol))
        noisy_paths = [fc.forecast_noisy(bank, initial, args.horizon,
                                         fc.NoiseConfig(alpha=cfg.alpha, t1=cfg.t1,
                                                        t2=cfg.t2, seed=cfg.seed + r))
                       for r in range(args.runs)]
    else:
        _write(Path(f"{prefix}.csv"), evaluation.eval_report_csv(report))
    _write(Path(f"{prefix}.txt"), text)
    if not args.no_plot:
        plots.plot_backtest(truth, pred, args.target, Path(f"{prefix}.png"),
                            noisy_paths=noisy_paths)
    print(f"r2={report.r2!r} target={args.target} horizon={args.horizon}")
    print(f"evaluation written with prefix {prefix}", file=sys.stderr)
    return 0


# --- probe -------------------------------------------------------------------

def cmd_probe(args) -> int:
    corpus_path = Path(args.corpus)
    if not corpus_path.exists():
        raise TrendkitError(f"corpus file not found: {corpus_path}")
    docs, vocab = lm.load_corpus(corpus_path.read_text(encoding="utf-8"))
    model = lm.train_ngram(docs, order=args.order, smoothing_k=args.smoothing_k)
    template = lm.PromptTemplate(event_context=args.event, question=args.question,
                                 task_form=args.task, separator=args.separator)
    prompt = lm.build_prompt(template, vocab)
    full = lm.generate_greedy(model, prompt, args.max_new)
    continuation = lm.TokenSeq(tokens=full.tokens[len(prompt):], vocab=vocab)
    if len(continuation):
        logprob = lm.sequence_logprob(model, full) - lm.sequence_logprob(model, prompt)
    else:
        logprob = 0.0
    print(f"prompt: {prompt.text()}")
    print(f"generated: {continuation.text()}")
    print(f"logprob: {logprob!r}")
    return 0


# --- parser ------------------------------------------------------------------

DEFAULT_FACTORS = "close,return_1,sma_5,sma_20,volatility_20,momentum_10"
DEFAULT_GRID = "0,0.001,0.01,0.1"


def _add_noise_flags(p: _Parser) -> None:
    p.add_argument("--noise", action="store_true", help="perturb each forecast step")
    p.add_argument("--alpha", default="0.002",
                   help="shock amplitude: one value or one per factor (default 0.002)")
    p.add_argument("--t1", type=float, default=0.9, help="upper threshold (default 0.9)")
    p.add_argument("--t2", type=float, default=0.1, help="lower threshold (default 0.1)")
    p.add_argument("--seed", type=int, default=None, help="base RNG seed (required with noise)")


def build_parser() -> _Parser:
    parser = _Parser(prog="trendkit", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a per-factor model bank from a price CSV")
    p.add_argument("--prices", required=True, help="OHLCV CSV file")
    p.add_argument("--out", required=True, help="output model bank file")
    p.add_argument("--factors", default=DEFAULT_FACTORS)
    p.add_argument("--lambda-grid", default=DEFAULT_GRID)
    p.add_argument("--val-fraction", type=float, default=0.2)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("forecast", help="roll a fitted bank forward")
    p.add_argument("--model", required=True, help="model bank file from `fit`")
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--out", required=True, help="output path CSV")
    p.add_argument("--target", default=None, help="factor for reports/plots")
    p.add_argument("--runs", type=int, default=None,
                   help="write N seeded noisy paths plus a report")
    p.add_argument("--no-plot", action="store_true")
    _add_noise_flags(p)
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("industry", help="aggregate members into industry curves")
    p.add_argument("--panel", required=True, help="panel definition file")
    p.add_argument("--prices-dir", required=True, help="directory of <entity>.csv files")
    p.add_argument("--out", required=True, help="output trend CSV")
    p.add_argument("--horizon", type=int, default=None,
                   help="override the panel horizon (trading days)")
    p.add_argument("--factors", default=DEFAULT_FACTORS)
    p.add_argument("--lambda-grid", default=DEFAULT_GRID)
    p.add_argument("--val-fraction", type=float, default=0.2)
    p.add_argument("--volatility-threshold", type=float, default=1.0)
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_industry)

    p = sub.add_parser("evaluate", help="backtest forecasts on held-out data")
    p.add_argument("--prices", required=True)
    p.add_argument("--target", default="close")
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--horizon", type=int, default=50)
    p.add_argument("--factors", default=DEFAULT_FACTORS)
    p.add_argument("--lambda-grid", default=DEFAULT_GRID)
    p.add_argument("--val-fraction", type=float, default=0.2)
    p.add_argument("--out-prefix", required=True,
                   help="reports are written as <prefix>.txt/.csv/.png")
    p.add_argument("--runs", type=int, default=None,
                   help="also run the seeded noise protocol with N runs")
    p.add_argument("--no-plot", action="store_true")
    _add_noise_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("probe", help="prompt the n-gram trend model")
    p.add_argument("--corpus", required=True, help="UTF-8 text, one document per line")
    p.add_argument("--question", required=True)
    p.add_argument("--event", default="", help="current-event background text")
    p.add_argument("--task", default="", help="task form appended after the question")
    p.add_argument("--separator", default=" ")
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--smoothing-k", type=float, default=0.01)
    p.add_argument("--max-new", type=int, default=20)
    p.set_defaults(func=cmd_probe)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TrendkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
