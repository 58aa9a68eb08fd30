import math

import numpy as np
import pytest

from leggett.correlations import leggett_bound
from leggett.counting import (
    CountsFormatError,
    CountTable,
    ExperimentConfig,
    LabeledCounts,
    NoDataError,
    analyze_counts,
    estimate_correlation,
    ingest_counts,
    joint_probability,
    read_report_csv,
    run_sweep,
    simulate_counts,
    simulate_sweep_counts,
    write_counts_csv,
    write_report_csv,
)
from leggett.settings import PAIR_LABELS, build_triad, sweep_grid
from leggett.statespace import InvalidInputError


def bootstrap_sigma(t: CountTable, n=20000, seed=1):
    """Parametric Poisson bootstrap of the correlation estimator."""
    rng = np.random.default_rng(seed)
    draws = rng.poisson([t.n_pp, t.n_mm, t.n_pm, t.n_mp], size=(n, 4))
    s, d = draws[:, 0] + draws[:, 1], draws[:, 2] + draws[:, 3]
    return float(np.std((s - d) / (s + d), ddof=1))


@pytest.mark.parametrize(
    "c, x, y, p",
    [(-1, 1, 1, 0.0), (0, 1, -1, 0.25), (0, -1, -1, 0.25),
     (-math.cos(math.radians(14)), 1, -1, 0.49257393156899912)],
)
def test_joint_probability(c, x, y, p):
    assert joint_probability(c, x, y) == pytest.approx(p, abs=1e-15)


def test_joint_probability_complete(rng):
    for c in rng.uniform(-1, 1, 1000):
        total = sum(joint_probability(c, x, y) for x in (1, -1) for y in (1, -1))
        assert abs(total - 1) <= 1e-15
    with pytest.raises(InvalidInputError):
        joint_probability(1.01, 1, 1)


def test_simulate_perfect_anticorrelation():
    for seed in range(20):
        t = simulate_counts(-1.0, ExperimentConfig(1e4, 1.0, seed))
        assert t.n_pp == 0 and t.n_mm == 0 and t.n_pm > 0


def test_simulate_uncorrelated_large_counts():
    mean = 1e6
    for seed in range(10):
        t = simulate_counts(0.0, ExperimentConfig(mean, 1.0, seed))
        for k in ("pp", "mm", "pm", "mp"):
            assert abs(t.get(k) - mean) < 5 * math.sqrt(mean)
        assert abs(estimate_correlation(t).value) < 0.005


def test_simulate_deterministic():
    cfg = ExperimentConfig(1e3, 0.9, 42)
    assert simulate_counts(-0.5, cfg) == simulate_counts(-0.5, cfg)
    assert simulate_counts(-0.5, cfg, (1, 2)) != simulate_counts(-0.5, cfg, (1, 3))


def test_config_validation():
    for args in ((0, 1, 0), (10, 1.5, 0), (10, -0.1, 0), (10, 0.5, -1)):
        with pytest.raises(InvalidInputError):
            ExperimentConfig(*args)


def test_estimator_examples():
    assert estimate_correlation(CountTable(100, 100, 0, 0)).value == 1
    c = estimate_correlation(CountTable(50, 50, 50, 50))
    assert c.value == 0
    assert c.sigma == pytest.approx(math.sqrt(1 / 200), rel=1e-14)
    assert c.sigma == pytest.approx(bootstrap_sigma(CountTable(50, 50, 50, 50)), rel=0.05)
    assert estimate_correlation(CountTable(75, 75, 25, 25)).value == 0.5


def test_estimator_sigma_matches_propagation_formula():
    # 2 sqrt(S D) / N^1.5 is the first-order Poisson propagation
    for t in (CountTable(120, 80, 30, 10), CountTable(5, 3, 700, 650)):
        s, d = t.n_pp + t.n_mm, t.n_pm + t.n_mp
        c = estimate_correlation(t)
        assert c.sigma == pytest.approx(2 * math.sqrt(s * d) / (s + d) ** 1.5, rel=1e-14)
        assert c.sigma == pytest.approx(math.sqrt((1 - c.value**2) / (s + d)), rel=1e-12)
        assert c.sigma == pytest.approx(bootstrap_sigma(t), rel=0.08)


def test_estimator_floor_and_errors():
    c = estimate_correlation(CountTable(100, 100, 0, 0))
    assert c.floored
    # zeros replaced by 1: S = 200, D = 2, N = 202
    assert c.sigma == pytest.approx(2 * math.sqrt(400) / 202**1.5, rel=1e-14)
    assert not estimate_correlation(CountTable(10, 1, 1, 1)).floored
    with pytest.raises(NoDataError):
        estimate_correlation(CountTable(0, 0, 0, 0))
    with pytest.raises(InvalidInputError):
        CountTable(-1, 0, 0, 0)


def test_estimator_consistency(rng):
    hits = 0
    trials = 1000
    for k in range(trials):
        c, v = rng.uniform(-1, 1), rng.uniform(0, 1)
        est = estimate_correlation(simulate_counts(c, ExperimentConfig(1e5, v, k)))
        hits += abs(est.value - v * c) < 5 * est.sigma
    assert hits >= 0.99 * trials


@pytest.mark.parametrize("c", [0.0, 0.5, -0.5, 0.9, -0.9])
def test_sigma_calibration(c):
    mean = 1e3
    cfg = [ExperimentConfig(mean, 1.0, s) for s in range(10_000)]
    vals = np.array([estimate_correlation(simulate_counts(c, k)).value for k in cfg])
    predicted = math.sqrt((1 - c * c) / (4 * mean))
    assert np.std(vals, ddof=1) == pytest.approx(predicted, rel=0.10)


def test_run_sweep_strong_violation_at_28():
    reports = run_sweep([build_triad(28)], ExperimentConfig(1e4, 1.0, 3))
    assert len(reports) == 1 and reports[0].n_sigma > 20


def test_run_sweep_no_violation_at_120():
    r = run_sweep([build_triad(120)], ExperimentConfig(1e4, 1.0, 3))[0]
    assert r.n_sigma < 0
    assert r.l3 == pytest.approx(leggett_bound(120))


def test_run_sweep_visibility_zero():
    for r in run_sweep(sweep_grid(4, 180, 8), ExperimentConfig(1e4, 0.0, 5)):
        assert r.e3_est < 0.03
        assert r.n_sigma < 0


def test_run_sweep_report_invariant_and_order():
    reports = run_sweep(sweep_grid(0, 180, 20)[::-1], ExperimentConfig(1e3, 0.9, 1))
    phis = [r.phi for r in reports]
    assert phis == sorted(phis)
    for r in reports:
        assert r.n_sigma == pytest.approx((r.e3_est - r.l3) / r.sigma_e3, rel=1e-14)


def test_run_sweep_deterministic():
    grid = sweep_grid(0, 180, 4)
    cfg = ExperimentConfig(1e4, 0.96, 11)
    assert run_sweep(grid, cfg) == run_sweep(grid, cfg)
    with pytest.raises(InvalidInputError):
        run_sweep([], cfg)


def test_monotone_significance():
    means = (1e2, 1e3, 1e4)
    triad = [build_triad(28)]
    avg = [np.mean([run_sweep(triad, ExperimentConfig(m, 0.96, s))[0].n_sigma for s in range(100)])
           for m in means]
    assert avg[0] <= avg[1] <= avg[2]


# --- ingestion -------------------------------------------------------------

def _one_phi_csv(phi=28.0, counts=(10, 20, 30, 40)):
    lines = ["phi_deg,pair_index,combo,count"]
    for p in PAIR_LABELS:
        for combo, n in zip(("pp", "mm", "pm", "mp"), counts):
            lines.append(f"{phi},{p},{combo},{n}")
    return "\n".join(lines) + "\n"


def test_ingest_well_formed():
    tables = ingest_counts(_one_phi_csv())
    assert len(tables) == 6
    assert {t.pair_index for t in tables} == set(PAIR_LABELS)
    assert tables[0].table == CountTable(10, 20, 30, 40)


def test_ingest_negative_count_names_line():
    text = _one_phi_csv().replace("28.0,2,pm,30", "28.0,2,pm,-3")
    with pytest.raises(CountsFormatError) as exc:
        ingest_counts(text)
    assert exc.value.line == 12
    assert "line 12" in str(exc.value)


def test_ingest_full_grid():
    labeled = simulate_sweep_counts(sweep_grid(), ExperimentConfig(100, 0.9, 0))
    assert len(ingest_counts(write_counts_csv(labeled))) == 46 * 6 == 276


@pytest.mark.parametrize(
    "mutate, line",
    [
        (lambda s: s.replace("phi_deg,pair_index", "phi,pair"), 1),
        (lambda s: s + "28.0,1,pp,5\n", 26),  # duplicate key
        (lambda s: s.replace("28.0,1p,mm,20", "28.0,4,mm,20"), 7),
        (lambda s: s.replace("28.0,1p,mm,20", "28.0,1p,xx,20"), 7),
        (lambda s: s.replace("28.0,1p,mm,20", "28.0,1p,mm,2.5"), 7),
        (lambda s: s.replace("28.0,1p,mm,20", "abc,1p,mm,20"), 7),
        (lambda s: s.replace("28.0,1p,mm,20", "28.0,1p,mm"), 7),
        (lambda s: s.replace("28.0,1p,mm,20\n", ""), 6),  # group lacks a combo
    ],
)
def test_ingest_schema_errors(mutate, line):
    with pytest.raises(CountsFormatError) as exc:
        ingest_counts(mutate(_one_phi_csv()))
    assert exc.value.line == line


def test_analyze_flags_incomplete_phi():
    text = _one_phi_csv(28.0) + _one_phi_csv(40.0).split("\n", 1)[1]
    labeled = [t for t in ingest_counts(text) if not (t.phi == 40.0 and t.pair_index == "3p")]
    reports = analyze_counts(labeled)
    assert [r.phi for r in reports] == [28.0, 40.0]
    assert reports[0].complete
    assert not reports[1].complete and math.isnan(reports[1].e3_est)
    assert reports[1].flags == ("incomplete:missing=3p",)


def test_count_csv_round_trip():
    labeled = simulate_sweep_counts(sweep_grid(0, 40, 4), ExperimentConfig(500, 0.96, 9))
    text = write_counts_csv(labeled)
    assert text.startswith("phi_deg,pair_index,combo,count\n")
    assert "\r" not in text
    assert ingest_counts(text) == labeled


def test_report_csv_round_trip():
    reports = run_sweep(sweep_grid(), ExperimentConfig(1e3, 0.96, 2))
    reports += analyze_counts([LabeledCounts(50.0, "1", CountTable(1, 1, 1, 1))])
    text = write_report_csv(reports)
    assert text.splitlines()[0] == "phi_deg,e3_est,sigma_e3,l3,n_sigma,flags"
    back = read_report_csv(text)
    assert len(back) == len(reports)
    for a, b in zip(back, reports):
        assert a.phi == b.phi and a.flags == b.flags
        for f in ("e3_est", "sigma_e3", "l3", "n_sigma"):
            x, y = getattr(a, f), getattr(b, f)
            assert (math.isnan(x) and math.isnan(y)) or x == y
