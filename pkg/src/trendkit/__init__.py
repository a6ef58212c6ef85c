"""trendkit: hierarchical industry trend analysis from stock factor data.

Pipeline: OHLCV ingestion -> factor matrices -> per-factor linear
predictors (OLS / L1 coordinate descent) -> recursive multi-step
forecasts with optional stochastic perturbation -> company-to-industry
aggregation -> R^2 backtests and seeded noise protocols, plus an
autoregressive n-gram probe for prompt-conditioned trend questions.
"""

from .data import (
    FactorMatrix,
    FactorSpec,
    PriceBar,
    PriceSeries,
    SupervisedSet,
    compute_factors,
    default_factor_specs,
    factor_spec_from_name,
    make_supervised,
    parse_price_csv,
    read_price_csv,
    split_train_test,
)
from .errors import DivergenceError, TrendkitError
from .evaluation import (
    EvalReport,
    NoiseProtocolReport,
    backtest,
    noise_protocol,
    r_squared,
)
from .forecasting import (
    FactorModelBank,
    ForecastPath,
    NoiseConfig,
    fit_bank,
    forecast,
    forecast_noisy,
    load_bank,
    perturb,
    psi,
    save_bank,
    step,
)
from .industry import (
    IndustryPanel,
    IndustryTrend,
    TrendAssessment,
    actual_trend,
    assess,
    build_industry_trend,
    expected_trend,
    member_normalization,
    parse_panel_file,
)
from .lm import (
    NgramModel,
    PromptTemplate,
    StreamBackend,
    TokenSeq,
    Vocab,
    build_prompt,
    build_vocab,
    generate_greedy,
    load_corpus,
    sequence_logprob,
    serve_backend,
    tokenize,
    train_ngram,
)
from .regression import (
    LassoConfig,
    LinearModel,
    fit_lasso,
    fit_ols,
    objective,
    predict,
    soft_threshold,
)

__version__ = "0.1.0"
