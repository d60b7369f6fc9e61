"""Monte Carlo estimators against the closed-form backend and against
their own fallback code paths."""

import itertools
import math
from dataclasses import replace

import numpy as np
import pytest

from fsgentropy import binary
from fsgentropy.binary import ExactCylinderMeasure, all_points, s_count
from fsgentropy.errors import (
    CenterNotInSample,
    InvalidEpsilon,
    WordTooShort,
)
from fsgentropy.estimators import (
    EmpiricalMeasure,
    ball_measure,
    corr_entropy_series,
    corr_integral,
    correlation_sum,
    doubling_ratio,
    local_corr_entropy_series,
    local_entropy_series,
    omega_words,
    separated_set,
    spanning_set,
    top_entropy_series,
)
from fsgentropy.seeding import substream
from fsgentropy.systems import (
    GeneratorSystem,
    binary_shift_odometer,
    circle_double_rotate,
)
from fsgentropy.words import word

LOG2 = math.log(2.0)
BIN = binary_shift_odometer(depth=60)
CIRCLE = circle_double_rotate()


def _rand_binary_points(n, depth, seed):
    rng = substream(seed)
    return tuple(binary.random_point(depth, rng) for _ in range(n))


# ---------------------------------------------------------------------------
# correlation_sum


def test_correlation_sum_single_point_orbit():
    x = binary.random_point(60, substream(0))
    est = correlation_sum(BIN, x, 0.25, word((1, 2), 2), 2, 1, 4, seed=1)
    assert est.value == 1.0
    assert est.stderr == 0.0


def test_correlation_sum_epsilon_at_diameter():
    x = binary.random_point(60, substream(0))
    est = correlation_sum(BIN, x, BIN.diameter, word((1,), 2), 2, 40, 3, seed=2)
    assert est.value == 1.0
    y = 0.37
    est = correlation_sum(CIRCLE, y, CIRCLE.diameter, word((1,), 2), 2, 40, 3, seed=2)
    assert est.value == 1.0


def test_correlation_sum_bounds_and_determinism():
    x = binary.random_point(60, substream(4))
    a = correlation_sum(BIN, x, 0.125, word((1, 2, 1), 2), 3, 50, 8, seed=5)
    b = correlation_sum(BIN, x, 0.125, word((1, 2, 1), 2), 3, 50, 8, seed=5)
    c = correlation_sum(BIN, x, 0.125, word((1, 2, 1), 2), 3, 50, 8, seed=6)
    assert a.per_upsilon == b.per_upsilon
    assert a.per_upsilon != c.per_upsilon
    assert 1 / 50 <= a.value <= 1.0
    assert all(1 / 50 <= v <= 1.0 for v in a.per_upsilon)


def test_correlation_sum_errors():
    x = binary.random_point(60, substream(0))
    with pytest.raises(InvalidEpsilon):
        correlation_sum(BIN, x, 0.0, word((1,), 2), 1, 10, 2, seed=0)
    with pytest.raises(WordTooShort):
        correlation_sum(BIN, x, 0.5, word((1,), 2), 3, 10, 2, seed=0)


def test_correlation_sum_key_path_equals_generic():
    generic = replace(BIN, ball_key=None)
    x = binary.random_point(60, substream(7))
    for eps in (0.5, 3 * 2.0**-5):
        fast = correlation_sum(BIN, x, eps, word((1, 2), 2), 3, 30, 4, seed=8)
        slow = correlation_sum(generic, x, eps, word((1, 2), 2), 3, 30, 4, seed=8)
        assert fast.per_upsilon == slow.per_upsilon


def test_correlation_sum_array_path_equals_generic():
    generic = replace(CIRCLE, array_ops=None)
    for eps in (0.21, 0.05):
        fast = correlation_sum(CIRCLE, 0.3, eps, word((1, 2), 2), 3, 30, 4, seed=9)
        slow = correlation_sum(generic, 0.3, eps, word((1, 2), 2), 3, 30, 4, seed=9)
        assert fast.per_upsilon == slow.per_upsilon


def test_correlation_sum_converges_to_exact_ball_measure():
    # single-seed spot check of the orbit-limit identity; the 100-seed
    # envelope version lives in the acceptance suite
    sys_ = binary_shift_odometer(depth=2000 + 4 + 40)
    omega = word((1, 2), 2)
    target = 2.0 ** -(4 + s_count(omega, 3))
    x = sys_.mu_sampler(substream(30))
    est = correlation_sum(sys_, x, 3 * 2.0**-5, omega, 3, 2000, 32, seed=30)
    assert abs(est.value - target) <= 2.0 / 2000 + 3 * est.stderr


# ---------------------------------------------------------------------------
# ball measures


def test_ball_measure_single_sample_point():
    em = EmpiricalMeasure(_rand_binary_points(1, 60, 1))
    assert ball_measure(em, BIN, word((1,), 2), 2, em.points[0], 0.25) == 1.0


def test_ball_measure_diameter():
    em = EmpiricalMeasure(_rand_binary_points(32, 60, 2))
    assert ball_measure(em, BIN, word((1,), 2), 2, em.points[3], 1.0) == 1.0


def test_ball_measure_center_not_in_sample():
    em = EmpiricalMeasure(_rand_binary_points(8, 60, 3))
    outsider = binary.random_point(59, substream(99))
    with pytest.raises(CenterNotInSample):
        ball_measure(em, BIN, word((1,), 2), 2, outsider, 0.25)


def test_ball_measure_binomial_band():
    # dyadic radius: the true ball is a cylinder of measure 2**-(t+s);
    # the empirical count is 1 + Binomial(N-1, p), so allow 3 sigma
    # plus the 1/N self-inclusion shift
    n_pts = 4096
    em = EmpiricalMeasure(_rand_binary_points(n_pts, 60, 4))
    t, k = 2, 3
    for syms in itertools.product((1, 2), repeat=k - 1):
        omega = word(syms, 2)
        p = 2.0 ** -(t + s_count(omega, k))
        got = ball_measure(em, BIN, omega, k, em.points[0], 2.0**-t)
        tol = 3 * math.sqrt(p * (1 - p) / n_pts) + 1.0 / n_pts
        assert abs(got - p) <= tol


def test_ball_measures_paths_agree():
    pts = _rand_binary_points(64, 60, 5)
    em = EmpiricalMeasure(pts)
    generic = replace(BIN, ball_key=None)
    omega = word((2, 1, 2), 2)
    a = em.ball_measures(BIN, omega, 3, 0.25)
    b = em.ball_measures(generic, omega, 3, 0.25)
    assert np.array_equal(a, b)
    rng = substream(6)
    cpts = tuple(float(rng.random()) for _ in range(48))
    cem = EmpiricalMeasure(cpts)
    nogen = replace(CIRCLE, array_ops=None)
    a = cem.ball_measures(CIRCLE, omega, 3, 0.07)
    b = cem.ball_measures(nogen, omega, 3, 0.07)
    assert np.array_equal(a, b)


# ---------------------------------------------------------------------------
# correlation integral


def test_corr_integral_trivial_values():
    em = EmpiricalMeasure(_rand_binary_points(32, 60, 7))
    for q in (0.0, 1.0, 2.0, 5.0):
        assert corr_integral(em, BIN, 1.0, 3, q, 16, seed=1) == 0.0
    single = EmpiricalMeasure(_rand_binary_points(1, 60, 8))
    for q in (0.0, 1.0, 2.0):
        assert corr_integral(single, BIN, 0.25, 2, q, 16, seed=1) == 0.0


def test_corr_integral_against_closed_form():
    # closed form: c = -(2 + 2.5) * log 2 at radius 1/4, horizon 6.
    # The empirical value carries a small upward self-inclusion bias
    # (~1/(N p) per ball, ~0.007 at N=4096) on top of ~0.001 sampling
    # noise; 0.02 covers both with margin (max |dev| over 30 dev-run
    # seeds and q in {0,1,2} was 0.0095).
    sys_ = binary_shift_odometer(depth=2 + 6 + 40)
    em = EmpiricalMeasure.draw(sys_, 4096, seed=11)
    target = -(2 + 2.5) * LOG2
    for q in (0.0, 1.0, 2.0):
        c = corr_integral(em, sys_, 0.25, 6, q, 64, seed=11)
        assert abs(c - target) <= 0.02


def test_corr_integral_exact_measure_matches_series():
    em = ExactCylinderMeasure.draw(60, 8, substream(12))
    for k in (1, 2, 5, 9):
        c = corr_integral(em, BIN, 0.125, k, 2.0, 4096, seed=0)
        assert c == pytest.approx(-(3 + (k - 1) / 2) * LOG2, rel=1e-12)


def test_corr_entropy_series_rows_vs_exact():
    em = ExactCylinderMeasure.draw(60, 8, substream(13))
    series = corr_entropy_series(em, BIN, [0.25, 0.125], [1, 2, 3, 4], 2.0, 4096, seed=0)
    for s in series:
        t = binary.prefix_length_for(s.epsilon)
        for k, v in s.rows:
            assert v == pytest.approx((t + (k - 1) / 2) * LOG2 / k, rel=1e-12)


def test_corr_entropy_series_q_ordering_exact_mode():
    # the q-mean is non-decreasing in q, so the entropy rows are
    # non-increasing; on constant measures they coincide
    em = ExactCylinderMeasure.draw(60, 8, substream(14))
    s0 = corr_entropy_series(em, BIN, [0.25], [2, 3, 4], 0.0, 4096, seed=0)[0]
    s2 = corr_entropy_series(em, BIN, [0.25], [2, 3, 4], 2.0, 4096, seed=0)[0]
    assert all(a >= b - 1e-12 for a, b in zip(s0.values, s2.values))


def test_omega_words_exhaustive_weights():
    pairs = omega_words(2, 3, None, 64, seed=0)
    assert len(pairs) == 4
    assert sum(w for _, w in pairs) == pytest.approx(1.0, abs=1e-15)
    pairs = omega_words(2, 12, None, 8, seed=0)
    assert len(pairs) == 8  # Monte Carlo once enumeration exceeds budget


# ---------------------------------------------------------------------------
# local correlation entropy


def test_local_corr_entropy_trivial_at_diameter():
    x = binary.random_point(60, substream(15))
    series = local_corr_entropy_series(BIN, x, [1.0], [1, 2, 3], 20, 4, 8, seed=3)
    assert all(v == 0.0 for v in series[0].values)


def test_local_corr_entropy_matches_exact_series():
    # the orbit-limit identity makes the local series approach the
    # q = 2 closed form; at n = 2000 the finite-orbit bias per word is
    # at most ~2**(t+s)/n, so rows match within 0.01
    n = 2000
    sys_ = binary_shift_odometer(depth=n + 5 + 40)
    x = sys_.mu_sampler(substream(16))
    series = local_corr_entropy_series(
        sys_, x, [0.25], [1, 2, 3], n, 16, 16, seed=16
    )[0]
    for k, v in series.rows:
        expected = (2 + (k - 1) / 2) * LOG2 / k
        assert abs(v - expected) <= 0.01


def test_local_corr_entropy_rows_carry_stability_flags():
    x = binary.random_point(60, substream(29))
    series = local_corr_entropy_series(BIN, x, [0.25], [1, 2], 40, 8, 8, seed=29)[0]
    assert series.flags is not None and len(series.flags) == len(series.rows)
    assert all(f in ("", "unstable") for f in series.flags)
    assert series.stderrs is not None


def test_local_corr_entropy_degenerate_alphabet():
    one = GeneratorSystem(
        "doubling-only",
        (CIRCLE.maps[0],),
        CIRCLE.metric,
        CIRCLE.diameter,
        CIRCLE.mu_sampler,
        array_ops=None,
    )
    a = local_corr_entropy_series(one, 0.3, [0.1], [1, 2], 60, 4, 1, seed=5)
    b = local_corr_entropy_series(one, 0.3, [0.1], [1, 2], 60, 4, 17, seed=5)
    assert a[0].rows == b[0].rows  # the word average has a single word


# ---------------------------------------------------------------------------
# separated and spanning sets


def test_separated_singleton_and_diameter():
    pts = _rand_binary_points(16, 60, 17)
    assert separated_set([pts[0]], BIN, word((1,), 2), 2, 0.25) == [pts[0]]
    assert len(separated_set(pts, BIN, word((1,), 2), 2, 1.0)) == 1
    assert len(spanning_set(pts, BIN, word((1,), 2), 2, 1.0)) == 1


def test_separated_cardinality_full_prefix_sample():
    t, k = 2, 3
    depth = t + k + 2
    sample = all_points(depth, pad=8)
    for syms in itertools.product((1, 2), repeat=k - 1):
        omega = word(syms, 2)
        kept = separated_set(sample, BIN, omega, k, 2.0**-t)
        assert len(kept) == 2 ** (t + s_count(omega, k))
        assert len(spanning_set(sample, BIN, omega, k, 2.0**-t)) == len(kept)


def test_greedy_net_paths_agree():
    pts = list(_rand_binary_points(48, 60, 18))
    generic = replace(BIN, ball_key=None)
    omega = word((1, 2), 2)
    assert separated_set(pts, BIN, omega, 3, 0.25) == separated_set(
        pts, generic, omega, 3, 0.25
    )
    rng = substream(19)
    cpts = [float(rng.random()) for _ in range(80)]
    nogen = replace(CIRCLE, array_ops=None)
    assert separated_set(cpts, CIRCLE, omega, 3, 0.04) == separated_set(
        cpts, nogen, omega, 3, 0.04
    )


def test_spanning_vs_separated_sandwich():
    # points more than 2 eps apart in the Bowen metric cannot share an
    # eps cover center, so the cover is at least as large as any
    # 2 eps-separated set
    rng = substream(20)
    for trial in range(25):
        sys_, pts = (
            (CIRCLE, [float(rng.random()) for _ in range(40)])
            if trial % 2
            else (BIN, list(_rand_binary_points(40, 60, 100 + trial)))
        )
        k = int(rng.integers(1, 4))
        omega = word(tuple(rng.integers(1, 3, size=max(0, k - 1))), 2)
        eps = float(rng.uniform(0.02, 0.2))
        spanning = spanning_set(pts, sys_, omega, k, eps)
        separated2 = separated_set(pts, sys_, omega, k, 2 * eps)
        assert len(spanning) >= len(separated2)


def test_separated_kept_points_are_pairwise_far():
    from fsgentropy.systems import bowen_distance

    pts = list(_rand_binary_points(40, 60, 21))
    omega = word((2, 1), 2)
    eps = 0.25
    kept = separated_set(pts, BIN, omega, 3, eps)
    for i, a in enumerate(kept):
        for b in kept[i + 1 :]:
            assert bowen_distance(BIN, omega, 3, a, b) > eps
    # maximality makes it a cover
    for p in pts:
        assert any(bowen_distance(BIN, omega, 3, p, c) <= eps for c in kept)


# ---------------------------------------------------------------------------
# topological entropy series


def test_top_entropy_series_diameter_rows_are_zero():
    series = top_entropy_series(BIN, [1.0], [1, 2, 3], 16, 32, seed=22)
    assert all(v == 0.0 for v in series[0].values)


def test_top_entropy_series_exact_sample_matches_closed_form():
    t = 2
    ks = [1, 2, 3, 4]
    depth = t + max(ks) + 2
    sample = all_points(depth, pad=8)
    series = top_entropy_series(
        BIN, [2.0**-t], ks, m_omega=4096, n_sample=1, seed=0, sample=sample
    )[0]
    for k, v in series.rows:
        assert v == pytest.approx((t + (k - 1) / 2) * LOG2 / k, rel=1e-12)


# ---------------------------------------------------------------------------
# doubling diagnostic and local entropy


def test_doubling_ratio_trivials():
    em = EmpiricalMeasure(_rand_binary_points(16, 60, 23))
    assert doubling_ratio(em, BIN, word((1,), 2), 2, 1.0) == 0.0
    single = EmpiricalMeasure(_rand_binary_points(1, 60, 24))
    assert doubling_ratio(single, BIN, word((1,), 2), 2, 0.25) == 0.0


def test_doubling_ratio_exact_backend_bitwise():
    em = ExactCylinderMeasure.draw(60, 8, substream(25))
    for k in (1, 2, 5, 12):
        got = doubling_ratio(em, BIN, word((1, 2) * 6, 2), k, 2.0**-3)
        assert got == math.log(2.0) / k


def test_local_entropy_series_trivials():
    em = EmpiricalMeasure(_rand_binary_points(16, 60, 26))
    s = local_entropy_series(em, BIN, word((1, 2), 2), em.points[0], [1.0], [1, 2, 3])
    assert all(v == 0.0 for v in s[0].values)
    single = EmpiricalMeasure(_rand_binary_points(1, 60, 27))
    s = local_entropy_series(
        single, BIN, word((1, 2), 2), single.points[0], [0.25], [1, 2]
    )
    assert all(v == 0.0 for v in s[0].values)
    with pytest.raises(CenterNotInSample):
        local_entropy_series(
            em, BIN, word((1, 2), 2), binary.random_point(59, substream(0)), [0.5], [1]
        )


def test_local_entropy_series_tracks_cylinder_measure():
    n_pts = 4096
    em = EmpiricalMeasure(_rand_binary_points(n_pts, 60, 28))
    t = 2
    omega = word((1, 2, 1, 1), 2)
    series = local_entropy_series(em, BIN, omega, em.points[0], [2.0**-t], [1, 2, 3])[0]
    for k, v in series.rows:
        p = 2.0 ** -(t + s_count(omega, k))
        sigma_log = math.sqrt((1 - p) / (n_pts * p))
        tol = (3 * sigma_log + 1.0 / (n_pts * p)) / k
        assert abs(v - (t + s_count(omega, k)) * LOG2 / k) <= tol
