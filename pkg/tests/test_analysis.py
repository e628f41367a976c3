"""Gini, power tables, the scaling benchmark and Pareto calibration.

Frozen Gini constants come from tests/oracles/gini_oracle.py, an O(n^2)
pairwise implementation fed by a hand-rolled LCG (no shared code or RNG
with the package).
"""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from posc import analysis, kernels
from posc.analysis import (Distribution, calibrate_alpha, generate_powerlaw,
                           gini, power_table, scaled_gini,
                           threshold_benchmark)
from posc.errors import AllZero, BadParams, BadShares, ValidationError

ORACLE_GINIS = [
    ((1, 40, 1000), 0.291863127351861),
    ((2, 100, 50), 0.328731942215088),
    ((3, 257, 10 ** 6), 0.338223535972050),
]


def lcg_sample(seed, n, span):
    state = seed
    out = []
    for _ in range(n):
        state = (6364136223846793005 * state + 1442695040888963407) % 2 ** 64
        out.append((state >> 11) % span + 1)
    return out


def gini_pairwise(values):
    n = len(values)
    mean = sum(values) / n
    diff = sum(abs(a - b) for a in values for b in values)
    return diff / (2.0 * n * n * mean)


# ---------------------------------------------------------------------------
# gini
# ---------------------------------------------------------------------------

def test_gini_textbook_values():
    assert gini([1, 2, 3, 4, 5]) == pytest.approx(0.26666666666666666, abs=1e-12)
    assert gini([7, 7, 7, 7]) == pytest.approx(0.0, abs=1e-12)
    assert gini([0, 0, 0, 10]) == pytest.approx(0.75, abs=1e-12)
    assert gini([42]) == pytest.approx(0.0, abs=1e-12)


def test_gini_matches_frozen_oracle():
    for (seed, n, span), expected in ORACLE_GINIS:
        assert gini(lcg_sample(seed, n, span)) == pytest.approx(expected,
                                                                abs=1e-12)


def test_gini_agrees_with_pairwise_definition():
    for seed in range(10):
        values = lcg_sample(seed, 80, 10 ** 4)
        assert gini(values) == pytest.approx(gini_pairwise(values), abs=1e-10)


def test_gini_rejections():
    with pytest.raises(ValidationError):
        gini([])
    with pytest.raises(ValidationError):
        gini([1.0, -2.0])
    with pytest.raises(AllZero):
        gini([0.0, 0.0])


@given(st.lists(st.floats(min_value=0.01, max_value=1e6), min_size=2,
                max_size=60),
       st.floats(min_value=0.001, max_value=1e4))
def test_gini_is_scale_invariant(values, c):
    assert gini([v * c for v in values]) == pytest.approx(gini(values),
                                                          abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(min_value=0.1, max_value=1e7), min_size=2,
                max_size=60))
def test_scaling_never_increases_gini(values):
    base = gini(values)
    for function in ("sqrt", "log2", "cbrt"):
        assert scaled_gini(values, function) <= base + 1e-9


def test_distribution_csv_round_trip(tmp_path):
    d = Distribution([3.0, 1.5, 9.25], label="demo")
    path = tmp_path / "demo.csv"
    d.to_csv(path)
    text = path.read_text()
    path.write_text("# counts\n\n" + text)   # comments and blanks survive
    again = Distribution.from_csv(path)
    assert again.values == d.values
    assert again.label == "demo"
    with pytest.raises(ValidationError):
        Distribution([])
    with pytest.raises(ValidationError):
        Distribution([1.0, float("nan")])
    with pytest.raises(ValidationError):
        Distribution([1.0, -0.5])


# ---------------------------------------------------------------------------
# power tables
# ---------------------------------------------------------------------------

def test_mild_table_matches_published_rows():
    table = power_table(analysis.MILD_SHARES)
    assert table.rows["active"] == pytest.approx((40, 25, 15, 12, 8))
    assert table.rows["q_voting"] == table.rows["active"]
    assert table.rows["q_voting_split"] == table.rows["active"]
    assert table.rows["sqrt_scaled"] == pytest.approx(
        (29.43, 23.27, 18.02, 16.12, 13.16), abs=0.01)
    assert table.rows["log2_scaled"] == pytest.approx(
        (23.32, 21.49, 19.50, 18.63, 17.06), abs=0.01)
    matches = [n for n in table.notes if "matches the published table" in n]
    assert len(matches) == 3                   # active, sqrt, log2
    assert not any("diverges" in n for n in table.notes)
    # raw 40% exceeds the liveness threshold; scaled rows do not
    assert table.flagged["active"][0] is True
    assert not any(table.flagged["sqrt_scaled"])
    assert not any(table.flagged["log2_scaled"])
    assert table.render().count("*") >= 1
    assert table.csv_rows()[0] == ["row", "node_1", "node_2", "node_3",
                                   "node_4", "node_5"]


def test_strong_table_keeps_published_divergence_visible():
    table = power_table(analysis.STRONG_SHARES)
    # printed inputs sum to 99; normalization shifts the active row
    assert sum(analysis.STRONG_SHARES) == 99.0
    assert table.rows["active"][0] == pytest.approx(70 / 99 * 100, abs=1e-9)
    diverging = [n for n in table.notes if "diverges" in n]
    assert diverging                           # divergence recorded, not hidden
    assert any("44.28" in n or "computed" in n for n in diverging)
    assert table.flagged["active"][0] is True
    assert table.flagged["sqrt_scaled"][0] is True   # 44%: sqrt alone fails
    assert not any(table.flagged["log2_scaled"])     # log2 restores liveness


def test_uniform_table_is_unmoved_by_scaling():
    table = power_table([20, 20, 20, 20, 20])
    for row in table.rows.values():
        assert row == pytest.approx((20, 20, 20, 20, 20), abs=1e-9)
    assert not any(any(f) for f in table.flagged.values())


def test_power_table_rejections():
    with pytest.raises(BadShares):
        power_table([50, 30, 10])              # sums to 90
    with pytest.raises(BadShares):
        power_table([])
    with pytest.raises(BadShares):
        power_table([110, -10])
    with pytest.raises(BadShares):
        power_table([99.9, 0.05, 0.05])        # log2 needs > 1 unit per node
    with pytest.raises(BadShares):
        power_table(analysis.MILD_SHARES, functions=("quartic",))
    # sqrt-only works at any positive total (scale invariant in ratio)
    tiny = power_table(analysis.MILD_SHARES, functions=("sqrt",),
                       total_units=1.0)
    full = power_table(analysis.MILD_SHARES, functions=("sqrt",))
    assert tiny.rows["sqrt_scaled"] == pytest.approx(full.rows["sqrt_scaled"])


def test_log2_rows_depend_on_absolute_units():
    near = power_table(analysis.MILD_SHARES, total_units=1000.0)
    far = power_table(analysis.MILD_SHARES, total_units=10 ** 9)
    a = near.rows["log2_scaled"]
    b = far.rows["log2_scaled"]
    assert max(abs(x - y) for x, y in zip(a, b)) > 1.0


# ---------------------------------------------------------------------------
# benchmark
# ---------------------------------------------------------------------------

def test_benchmark_report_shape():
    report = threshold_benchmark(10_000, threads=2, repeats=2)
    assert report["n"] == 10_000
    assert set(report["backends"]) == set(kernels.available_backends())
    for entry in report["backends"].values():
        assert entry["serial"]["total_s"] > 0
        assert entry["parallel"]["ns_per_element"] > 0
        assert entry["speedup"] > 0
    with pytest.raises(BadParams):
        threshold_benchmark(0)


# ---------------------------------------------------------------------------
# pareto generation and calibration
# ---------------------------------------------------------------------------

def test_powerlaw_is_deterministic_and_bounded():
    a = generate_powerlaw(500, 1.7, seed=11)
    b = generate_powerlaw(500, 1.7, seed=11)
    assert a.values == b.values
    assert min(a.values) >= 1000.0             # xm floor
    assert generate_powerlaw(500, 1.7, seed=12).values != a.values
    with pytest.raises(BadParams):
        generate_powerlaw(0, 1.7)
    with pytest.raises(BadParams):
        generate_powerlaw(10, 1.0)
    with pytest.raises(BadParams):
        generate_powerlaw(10, 1.7, xm=0.0)


def test_powerlaw_gini_tracks_theory():
    # Pareto Gini is 1/(2*alpha - 1); sampling noise shrinks with n
    for alpha in (1.52, 2.0, 3.0):
        d = generate_powerlaw(20_000, alpha, seed=5)
        assert gini(d) == pytest.approx(1 / (2 * alpha - 1), abs=0.02)


def test_calibration_hits_target():
    for target in (0.49, 0.78):
        alpha, achieved = calibrate_alpha(target, n=10_000, seed=0)
        assert abs(achieved - target) <= 0.01
        assert achieved == gini(generate_powerlaw(10_000, alpha, seed=0))
        assert alpha == pytest.approx(
            (1 / target + 1) / 2, rel=0.15)    # near the theory curve
    with pytest.raises(BadParams):
        calibrate_alpha(0.0)
    with pytest.raises(BadParams):
        calibrate_alpha(0.001, tol=0.002)      # below what alpha<=64 reaches
    with pytest.raises(BadParams):
        calibrate_alpha(0.995, n=200, seed=0)  # beyond the sample's ceiling
