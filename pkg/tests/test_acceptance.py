"""Acceptance gate: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v` (add -s to see the summary
lines as they print). Every tolerance is pinned here, not configured.
"""

import datetime as dt
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import DEFAULT_GRID, FIXTURES, generator_matrix, make_linear_generator
from oracles import ngram_conditional_ref, normal_equations_fit, rollout, soft_threshold_ref
from trendkit import data, evaluation as ev, industry as ind, lm
from trendkit import forecasting as fc
from trendkit import regression as reg


def ok(tag: str, detail: str = "") -> None:
    print(f"[{tag}] PASS {detail}".rstrip())


def random_standardized_system(rng, n_samples=50, n_features=5, mix_scale=0.2):
    """Random full-rank design with bounded column correlation. The mixing
    scale stays small so the systems are well conditioned and cyclic
    coordinate descent converges inside the tolerance budget."""
    base = rng.normal(size=(n_samples, n_features))
    mix = rng.normal(size=(n_features, n_features)) * mix_scale + np.eye(n_features)
    X = base @ mix
    X = (X - X.mean(axis=0)) / X.std(axis=0)
    w = rng.normal(size=n_features)
    y = X @ w + rng.normal(scale=0.4, size=n_samples) + rng.normal()
    return X, y


def test_c01_solver_oracle_equivalence():
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    for _ in range(20):
        X, y = random_standardized_system(rng)
        model = reg.fit_lasso(X, y, reg.LassoConfig(lam=0.0))
        w_ref, b_ref = normal_equations_fit(X, y)
        assert np.all(np.abs(model.weights - w_ref) < 1e-6)
        assert abs(model.intercept - b_ref) < 1e-6
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    ok("C01", f"20 systems, {elapsed * 1000:.0f} ms")


def test_c02_one_dimensional_closed_form():
    rng = np.random.default_rng(102)
    for _ in range(100):
        n = int(rng.integers(5, 80))
        x = rng.normal(size=n)
        x = (x - x.mean()) / x.std()
        y = rng.normal(scale=rng.uniform(0.5, 4.0), size=n) + rng.normal()
        lam = float(rng.uniform(0.0, 2.0))
        model = reg.fit_lasso(x[:, None], y, reg.LassoConfig(lam=lam))
        expected = soft_threshold_ref(float(x @ y) / n, lam) / (float(x @ x) / n)
        assert abs(model.weights[0] - expected) < 1e-8
    ok("C02", "100 single-feature instances")


def test_c03_lambda_max_shutdown():
    rng = np.random.default_rng(103)
    for _ in range(20):
        X, y = random_standardized_system(rng, n_samples=int(rng.integers(20, 70)),
                                          n_features=int(rng.integers(2, 8)))
        # evaluate the bound on the standardized data exactly as the solver
        # sees it (same centering/scaling and per-column dot products)
        means, scales = X.mean(axis=0), X.std(axis=0)
        scales = np.where(scales > 0, scales, 1.0)
        Xs = (X - means) / scales
        yc = y - y.mean()
        lam_max = max(abs(float(Xs[:, j] @ yc)) for j in range(X.shape[1])) / len(y)
        for factor in (1.0, 1.01, 2.0, 100.0):
            model = reg.fit_lasso(X, y, reg.LassoConfig(lam=lam_max * factor))
            assert np.all(model.weights == 0.0)
    ok("C03", "all weights exactly zero at and above the bound")


def test_c04_monotone_descent():
    rng = np.random.default_rng(104)
    sweeps_checked = 0
    for _ in range(60):
        X, y = random_standardized_system(rng, n_samples=int(rng.integers(10, 80)),
                                          n_features=int(rng.integers(1, 8)))
        lam = float(rng.choice([0.0, 1e-4, 1e-3, 1e-2, 0.1, 0.5, 1.0]))
        model = reg.fit_lasso(X, y, reg.LassoConfig(lam=lam))
        hist = np.array(model.objective_history)
        assert np.all(np.diff(hist) <= 1e-12)
        sweeps_checked += len(hist)
    assert sweeps_checked > 100
    ok("C04", f"{sweeps_checked} recorded sweeps, no increase above 1e-12")


def test_c05_generator_recovery():
    A, b, states = make_linear_generator()
    matrix = generator_matrix(states)
    bank = fc.fit_bank(matrix, [0.0], val_fraction=0.2)
    initial = matrix.values[-1]
    path = fc.forecast(bank, initial, 20)
    truth = rollout(A, b, initial, 20)
    rel = np.abs(path.states - truth) / np.maximum(np.abs(truth), 1e-12)
    assert rel.max() < 1e-3
    report = ev.backtest(matrix, "f1", 0.8, [0.0], 20)
    assert report.r2 >= 0.99
    ok("C05", f"max rel err {rel.max():.2e}, backtest r2 {report.r2:.4f}")


@pytest.fixture(scope="module")
def fixture_matrix():
    series = data.read_price_csv(FIXTURES / "ar_prices.csv")
    return data.compute_factors(series, data.default_factor_specs())


def test_c06_paper_analogue_forecast(fixture_matrix):
    start = time.perf_counter()
    report = ev.backtest(fixture_matrix, "close", 0.8, DEFAULT_GRID, 50)
    elapsed = time.perf_counter() - start
    assert report.r2 >= 0.5
    assert elapsed < 5.0
    ok("C06", f"50-step out-of-sample r2 {report.r2:.4f} in {elapsed:.2f} s")


def test_c07_noise_protocol_shape(fixture_matrix):
    base = ev.backtest(fixture_matrix, "close", 0.8, DEFAULT_GRID, 50)
    cfg = fc.NoiseConfig.uniform(0.002, fixture_matrix.n_factors, seed=7)
    p1 = ev.noise_protocol(fixture_matrix, "close", 0.8, DEFAULT_GRID, 50, cfg, 10)
    p2 = ev.noise_protocol(fixture_matrix, "close", 0.8, DEFAULT_GRID, 50, cfg, 10)
    assert p1.r2_std > 0.0
    assert p1.r2_mean <= base.r2
    assert p1.per_run == p2.per_run
    assert ev.noise_report_csv(p1) == ev.noise_report_csv(p2)
    quiet = fc.NoiseConfig.uniform(0.0, fixture_matrix.n_factors, seed=7)
    pz = ev.noise_protocol(fixture_matrix, "close", 0.8, DEFAULT_GRID, 50, quiet, 10)
    assert pz.r2_std == 0.0
    assert pz.r2_mean == base.r2
    ok("C07", f"mean {p1.r2_mean:.3f} std {p1.r2_std:.3f}, alpha=0 degenerates exactly")


def test_c08_psi_truth_table():
    rng = np.random.default_rng(108)
    checked = 0
    # grid of sampled triples plus explicit boundary triples
    while checked < 1000:
        t2, t1 = sorted(rng.uniform(0, 1, size=2))
        for x in (float(rng.uniform(-0.5, 1.5)), t1, t2):
            got = fc.psi(x, t1, t2)
            if x > t1:
                assert got == 1
            elif x < t2:
                assert got == -1
            else:
                assert got == 0
            checked += 1
    assert fc.psi(0.9, 0.9, 0.1) == 0  # x = t1 belongs to the middle branch
    assert fc.psi(0.1, 0.9, 0.1) == 0  # x = t2 belongs to the middle branch
    ok("C08", f"{checked} triples incl. boundaries")


def test_c09_lm_normalization_and_factorization():
    # three-document corpus over a two-word alphabet: 5 ids with specials
    vocab = lm.Vocab(["a", "b"])
    texts = ["a b a", "b b a", "a a b"]
    docs = [lm.tokenize(t, vocab) for t in texts]
    model = lm.train_ngram(docs, order=2, smoothing_k=0.25)
    V = len(vocab)
    assert V == 5

    for ctx in range(V):
        total = np.exp(model.next_token_logprobs([ctx])).sum()
        assert abs(total - 1.0) < 1e-9
    assert abs(np.exp(model.next_token_logprobs([])).sum() - 1.0) < 1e-9

    for text in ("a b a b", "b a", "a a a"):
        seq = lm.tokenize(text, vocab)
        stepwise = sum(float(model.next_token_logprobs(seq.tokens[:i])[tok])
                       for i, tok in enumerate(seq.tokens))
        assert abs(lm.sequence_logprob(model, seq) - stepwise) < 1e-12

    sequences = [d.tokens for d in docs]
    for ctx in range(V):
        table = [ngram_conditional_ref(sequences, 2, 0.25, V, vocab.bos_id, [ctx], t)
                 for t in range(V)]
        brute = int(np.argmax(table))
        got = lm.generate_greedy(model, lm.TokenSeq([ctx], vocab), 1).tokens[-1]
        assert got == brute
    ok("C09", "sums to 1, factorization exact, greedy = brute force")


def test_c10_context_sensitivity():
    text = (FIXTURES / "corpus.txt").read_text(encoding="utf-8")
    docs, vocab = lm.load_corpus(text)
    model = lm.train_ngram(docs, order=7)
    prompt = lambda event: lm.build_prompt(
        lm.PromptTemplate(event_context=event, question="outlook ?",
                          task_form="answer :"), vocab)
    pa, pb = prompt("solar demand is rising ."), prompt("coal demand is falling .")
    ga = lm.generate_greedy(model, pa, 6)
    gb = lm.generate_greedy(model, pb, 6)
    assert ga.tokens[len(pa):] != gb.tokens[len(pb):]
    ga2 = lm.generate_greedy(model, prompt("solar demand is rising ."), 6)
    assert ga.tokens == ga2.tokens
    ok("C10", f"continuations differ: {ga.tokens[len(pa):][:1]} vs {gb.tokens[len(pb):][:1]}")


def test_c11_industry_aggregation():
    rng = np.random.default_rng(111)

    def col_matrix(entity, values):
        dates = [dt.date(2022, 1, 3) + dt.timedelta(days=i) for i in range(len(values))]
        return data.FactorMatrix(entity, dates, ["close"], np.asarray(values)[:, None])

    for trial in range(5):
        values = rng.normal(size=25) + 10
        panel = ind.IndustryPanel("solo", [("a", 1.0)], "close")
        _, series = ind.actual_trend(panel, {"a": col_matrix("a", values)})
        assert np.allclose(series, (values - values.mean()) / values.std())

        a, b, c = (rng.normal(size=25) + rng.uniform(5, 50) for _ in range(3))
        mats = {k: col_matrix(k, v) for k, v in (("a", a), ("b", b), ("c", c))}
        p1 = ind.IndustryPanel("x", [("a", 0.5), ("b", 0.3), ("c", 0.2)], "close")
        p2 = ind.IndustryPanel("x", [("c", 0.2), ("b", 0.3), ("a", 0.5)], "close")
        _, s1 = ind.actual_trend(p1, mats)
        _, s2 = ind.actual_trend(p2, mats)
        assert np.allclose(s1, s2)

        scale = float(rng.uniform(0.1, 40.0))
        scaled = dict(mats)
        scaled["a"] = col_matrix("a", a * scale)
        _, s3 = ind.actual_trend(p1, scaled)
        assert np.allclose(s1, s3)

    dates = [dt.date(2022, 1, 3) + dt.timedelta(days=i) for i in range(20)]
    rising = ind.IndustryTrend("up", dates, np.linspace(0, 1, 20),
                               np.linspace(1, 2, 10), 10)
    assert ind.assess(rising).direction == "rising"
    disagree = ind.IndustryTrend("mix", dates, np.linspace(0, 1, 20),
                                 np.linspace(1, 0.5, 10), 10)
    assert ind.assess(disagree).direction == "uncertain"
    ok("C11", "identity, permutation and rescaling invariance; direction rules")


def _scripted_pipeline(workdir: Path) -> tuple[float, dict[str, bytes]]:
    """Run fit -> forecast -> evaluate -> industry -> probe; return elapsed
    seconds and every produced artifact (stdout included) keyed by name."""
    workdir.mkdir(parents=True, exist_ok=True)
    steps = [
        ("fit", ["fit", "--prices", str(FIXTURES / "ar_prices.csv"),
                 "--out", str(workdir / "bank.txt")]),
        ("forecast", ["forecast", "--model", str(workdir / "bank.txt"),
                      "--horizon", "50", "--out", str(workdir / "forecast.csv"),
                      "--noise", "--seed", "11", "--target", "close"]),
        ("evaluate", ["evaluate", "--prices", str(FIXTURES / "ar_prices.csv"),
                      "--target", "close", "--train-fraction", "0.8",
                      "--horizon", "50", "--out-prefix", str(workdir / "eval"),
                      "--noise", "--runs", "10", "--seed", "7"]),
        ("industry", ["industry", "--panel", str(FIXTURES / "panel.txt"),
                      "--prices-dir", str(FIXTURES / "prices"),
                      "--out", str(workdir / "trend.csv"), "--horizon", "60"]),
        ("probe", ["probe", "--corpus", str(FIXTURES / "corpus.txt"),
                   "--order", "7", "--max-new", "6",
                   "--event", "solar demand is rising .",
                   "--question", "outlook ?", "--task", "answer :"]),
    ]
    outputs: dict[str, bytes] = {}
    start = time.perf_counter()
    for name, args in steps:
        res = subprocess.run([sys.executable, "-m", "trendkit", *args],
                             capture_output=True, text=True)
        assert res.returncode == 0, f"{name} failed: {res.stderr}"
        outputs[f"stdout:{name}"] = res.stdout.encode()
    elapsed = time.perf_counter() - start
    for path in sorted(workdir.iterdir()):
        outputs[path.name] = path.read_bytes()
    return elapsed, outputs


def test_c12_end_to_end_cli(tmp_path):
    t1, run1 = _scripted_pipeline(tmp_path / "run1")
    t2, run2 = _scripted_pipeline(tmp_path / "run2")
    assert t1 < 30.0 and t2 < 30.0
    assert run1.keys() == run2.keys()
    for name in run1:
        assert run1[name] == run2[name], f"output {name} differs between runs"
    n_files = sum(1 for k in run1 if not k.startswith("stdout:"))
    assert any(k.endswith(".png") for k in run1)  # figures rendered with the CSVs
    ok("C12", f"{n_files} artifacts byte-identical, runs {t1:.1f}s / {t2:.1f}s")
