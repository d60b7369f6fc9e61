"""Monte Carlo estimators for the entropy quantities of a free
semigroup action: correlation sums, q-order correlation integrals,
local correlation entropy, separated/spanning-set topological entropy,
ball-measure doubling diagnostics and local entropy along a word.

Conventions shared by everything here:

* The outer average over driving words is exhaustive (all m**(k-1)
  prefixes with their exact Bernoulli weights) whenever the enumeration
  is no larger than the configured word budget, capped at
  EXHAUSTIVE_OMEGA_CAP, and Monte Carlo otherwise.
* Estimators only ever look at the first k-1 symbols of the word
  argument, so any two words agreeing there give identical results.
* Every stochastic choice draws from a substream derived from
  (seed, stream kind, task index); results are bit-reproducible and
  independent of evaluation order.
* Pair counting and ball counting include the diagonal / the center
  itself, so correlation sums live in [1/n, 1] and empirical ball
  measures in [1/N, 1]; logs and negative powers stay finite.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CenterNotInSample,
    InvalidEpsilon,
    KZero,
    WordTooShort,
)
from .seeding import MU, OMEGA, UPSILON, substream
from .series import EntropySeries
from .systems import GeneratorSystem, bowen_within
from .words import BernoulliSpec, SymbolWord, sample_word, uniform_spec

# Above this many word prefixes the outer symbol average switches from
# exhaustive enumeration to Monte Carlo sampling.
EXHAUSTIVE_OMEGA_CAP = 4096


# ---------------------------------------------------------------------------
# Word averaging machinery


def _check_eps(eps: float) -> None:
    if not eps > 0.0:
        raise InvalidEpsilon(f"epsilon must be > 0, got {eps!r}")


def _check_word(omega: SymbolWord, k: int) -> None:
    if k < 1:
        raise KZero(f"k must be >= 1, got {k}")
    if len(omega) < k - 1:
        raise WordTooShort(f"need {k - 1} symbols, have {len(omega)}")


def exhaustive_omega(m: int, k: int, m_omega: int) -> bool:
    """Whether the outer word average enumerates all prefixes exactly."""
    return m ** (k - 1) <= min(EXHAUSTIVE_OMEGA_CAP, m_omega)


def omega_words(
    m: int, k: int, weights: BernoulliSpec | None, m_omega: int, seed: int
) -> list[tuple[SymbolWord, float]]:
    """Weighted word prefixes for the outer symbol-space average.

    Exhaustive with exact Bernoulli weights when enumerating all
    m**(k-1) prefixes costs no more than the Monte Carlo budget (and at
    most EXHAUSTIVE_OMEGA_CAP); otherwise m_omega draws with weight
    1/m_omega.  Exhaustive averages are exact and consume no
    randomness.
    """
    if weights is None:
        weights = uniform_spec(m)
    if m_omega < 1:
        raise ValueError("m_omega must be >= 1")
    if exhaustive_omega(m, k, m_omega):
        out = []
        for syms in itertools.product(range(1, m + 1), repeat=k - 1):
            wt = 1.0
            for s in syms:
                wt *= weights.weights[s - 1]
            out.append((SymbolWord(syms, m), wt))
        return out
    return [
        (sample_word(weights, k - 1, substream(seed, OMEGA, k, j)), 1.0 / m_omega)
        for j in range(m_omega)
    ]


def _weighted_mean(values, weights) -> float:
    return math.fsum(v * w for v, w in zip(values, weights))


# ---------------------------------------------------------------------------
# Pairwise Bowen-proximity counting (three interchangeable paths)


def _bowen_keys(sys: GeneratorSystem, omega, k, eps, points) -> list:
    """Per-point tuple of stage ball keys; two points are within Bowen
    distance eps exactly when their tuples agree."""
    keyf = sys.ball_key
    maps = sys.maps
    syms = omega.symbols
    out = []
    for p in points:
        cur = p
        kk = [keyf(cur, eps)]
        for i in range(k - 1):
            cur = maps[syms[i] - 1](cur)
            kk.append(keyf(cur, eps))
        out.append(tuple(kk))
    return out


def _stage_arrays(sys: GeneratorSystem, omega, k, arr):
    ops = sys.array_ops
    stages = [arr]
    for i in range(k - 1):
        arr = ops.apply(omega.symbols[i], arr)
        stages.append(arr)
    return stages


def _within_matrix(sys: GeneratorSystem, omega, k, eps, points) -> np.ndarray:
    ops = sys.array_ops
    stages = _stage_arrays(sys, omega, k, ops.to_array(points))
    mat = ops.within(stages[0], stages[0], eps)
    for a in stages[1:]:
        mat &= ops.within(a, a, eps)
    return mat


def _stage_lists(sys: GeneratorSystem, omega, k, points):
    maps = sys.maps
    syms = omega.symbols
    stages = [list(points)]
    for i in range(k - 1):
        f = maps[syms[i] - 1]
        stages.append([f(p) for p in stages[-1]])
    return stages


def _pair_fraction(sys: GeneratorSystem, omega, k, eps, points) -> float:
    """Fraction of ordered pairs (diagonal included) whose Bowen
    distance along omega is <= eps."""
    n = len(points)
    if sys.ball_key is not None:
        counts = Counter(_bowen_keys(sys, omega, k, eps, points))
        return sum(c * c for c in counts.values()) / (n * n)
    if sys.array_ops is not None:
        return float(_within_matrix(sys, omega, k, eps, points).sum()) / (n * n)
    stages = _stage_lists(sys, omega, k, points)
    metric = sys.metric
    close = 0
    for i in range(n):
        for j in range(i + 1, n):
            for s in range(k):
                if metric(stages[s][i], stages[s][j]) > eps:
                    break
            else:
                close += 1
    return (n + 2 * close) / (n * n)


def _ball_counts(sys: GeneratorSystem, omega, k, eps, points) -> np.ndarray:
    """For each point, how many sample points (itself included) lie in
    its Bowen eps-ball."""
    n = len(points)
    if sys.ball_key is not None:
        keys = _bowen_keys(sys, omega, k, eps, points)
        counts = Counter(keys)
        return np.array([counts[key] for key in keys], dtype=float)
    if sys.array_ops is not None:
        return _within_matrix(sys, omega, k, eps, points).sum(axis=1).astype(float)
    stages = _stage_lists(sys, omega, k, points)
    metric = sys.metric
    out = np.ones(n)
    for i in range(n):
        for j in range(i + 1, n):
            for s in range(k):
                if metric(stages[s][i], stages[s][j]) > eps:
                    break
            else:
                out[i] += 1.0
                out[j] += 1.0
    return out


# ---------------------------------------------------------------------------
# Empirical measure


@dataclass(frozen=True)
class EmpiricalMeasure:
    """N sample points standing in for the reference measure.

    Ball measures are counting fractions over the sample; a center that
    is itself a sample point always contributes, so values stay in
    [1/N, 1].
    """

    points: tuple

    def __post_init__(self):
        if len(self.points) < 1:
            raise ValueError("need at least one sample point")

    @property
    def n(self) -> int:
        return len(self.points)

    @classmethod
    def draw(cls, sys: GeneratorSystem, n_points: int, seed: int):
        if n_points < 1:
            raise ValueError("n_points must be >= 1")
        rng = substream(seed, MU)
        return cls(tuple(sys.mu_sampler(rng) for _ in range(n_points)))

    def ball_measures(self, sys, omega, k, eps) -> np.ndarray:
        """Empirical Bowen-ball measure centered at every sample point."""
        _check_eps(eps)
        _check_word(omega, k)
        return _ball_counts(sys, omega, k, eps, self.points) / self.n

    def ball_measure(self, sys, omega, k, center, eps) -> float:
        """Empirical Bowen-ball measure at one center from the sample."""
        _check_eps(eps)
        _check_word(omega, k)
        if not any(p == center for p in self.points):
            raise CenterNotInSample("center must be one of the sample points")
        if sys.ball_key is not None:
            keys = _bowen_keys(sys, omega, k, eps, self.points)
            ckey = _bowen_keys(sys, omega, k, eps, [center])[0]
            return sum(1 for key in keys if key == ckey) / self.n
        if sys.array_ops is not None:
            ops = sys.array_ops
            stages_all = _stage_arrays(sys, omega, k, ops.to_array(self.points))
            stages_c = _stage_arrays(sys, omega, k, ops.to_array([center]))
            row = ops.within(stages_c[0], stages_all[0], eps)
            for sc, sa in zip(stages_c[1:], stages_all[1:]):
                row &= ops.within(sc, sa, eps)
            return float(row.sum()) / self.n
        cnt = sum(
            1 for p in self.points if bowen_within(sys, omega, k, center, p, eps)
        )
        return cnt / self.n


def ball_measure(em, sys, omega, k, center, eps) -> float:
    """Module-level alias of the empirical (or exact) ball measure."""
    return em.ball_measure(sys, omega, k, center, eps)


# ---------------------------------------------------------------------------
# Correlation sum


@dataclass(frozen=True)
class CorrSumEstimate:
    """Correlation sum averaged over sampled driving words."""

    value: float
    stderr: float
    n: int
    k: int
    epsilon: float
    m_upsilon: int
    per_upsilon: tuple[float, ...] = field(repr=False, default=())


def _upsilon_orbits(sys, x, n, m_upsilon, seed, weights):
    """Orbits of x along m_upsilon independently sampled driving words."""
    if weights is None:
        weights = uniform_spec(sys.m)
    orbits = []
    maps = sys.maps
    for j in range(m_upsilon):
        ups = sample_word(weights, n - 1, substream(seed, UPSILON, j))
        pts = [x]
        cur = x
        for s in ups.symbols:
            cur = maps[s - 1](cur)
            pts.append(cur)
        orbits.append(pts)
    return orbits


def correlation_sum(
    sys: GeneratorSystem,
    x,
    eps: float,
    omega: SymbolWord,
    k: int,
    n: int,
    m_upsilon: int,
    seed: int,
    weights: BernoulliSpec | None = None,
) -> CorrSumEstimate:
    """Normalised count of Bowen-close pairs among the first n orbit
    points, averaged over m_upsilon sampled driving words.

    Each driving word contributes one value (pair fraction including
    the diagonal, so in [1/n, 1]); the reported standard error is the
    sample standard error across those values.  Only the first k-1
    symbols of omega enter.
    """
    _check_eps(eps)
    _check_word(omega, k)
    if n < 1:
        raise ValueError("n must be >= 1")
    if m_upsilon < 1:
        raise ValueError("m_upsilon must be >= 1")
    values = [
        _pair_fraction(sys, omega, k, eps, pts)
        for pts in _upsilon_orbits(sys, x, n, m_upsilon, seed, weights)
    ]
    value = math.fsum(values) / m_upsilon
    stderr = (
        float(np.std(values, ddof=1)) / math.sqrt(m_upsilon) if m_upsilon > 1 else 0.0
    )
    return CorrSumEstimate(value, stderr, n, k, eps, m_upsilon, tuple(values))


# ---------------------------------------------------------------------------
# Correlation integral and entropy series


def _q_log_mean(logs: np.ndarray, q: float) -> float:
    """log of the q-mean of ball measures, given their logs.

    Computed in the log domain (log-sum-exp) so negative orders cannot
    overflow; a constant input short-circuits to that constant, which
    is the exact value for every q.
    """
    first = float(logs[0])
    if np.all(logs == logs[0]):
        return first
    if q == 1.0:
        return math.fsum(logs) / len(logs)
    a = (q - 1.0) * logs
    mx = float(a.max())
    return (mx + math.log(math.fsum(np.exp(a - mx)) / len(a))) / (q - 1.0)


def _corr_integral_detail(measure, sys, eps, k, q, m_omega, seed, weights):
    _check_eps(eps)
    pairs = omega_words(sys.m, k, weights, m_omega, seed)
    inners = []
    for w, _ in pairs:
        ms = np.asarray(measure.ball_measures(sys, w, k, eps), dtype=float)
        inners.append(_q_log_mean(np.log(ms), q))
    wts = [wt for _, wt in pairs]
    c = _weighted_mean(inners, wts)
    if exhaustive_omega(sys.m, k, m_omega) or len(inners) < 2:
        se = 0.0
    else:
        se = float(np.std(inners, ddof=1)) / math.sqrt(len(inners))
    return c, se


def corr_integral(
    measure,
    sys: GeneratorSystem,
    eps: float,
    k: int,
    q: float,
    m_omega: int,
    seed: int,
    weights: BernoulliSpec | None = None,
) -> float:
    """q-order correlation integral: the word average of the log
    q-mean of Bowen-ball measures under `measure`.

    `measure` is an EmpiricalMeasure or the exact closed-form measure
    of the binary backend; the order-1 value is the plain mean of log
    measures (the continuity limit of the q-mean), and every value is
    finite because ball measures are bounded below.
    """
    if not math.isfinite(q):
        raise ValueError("q must be finite")
    c, _ = _corr_integral_detail(measure, sys, eps, k, q, m_omega, seed, weights)
    return c


def corr_entropy_series(
    measure,
    sys: GeneratorSystem,
    eps_list,
    k_list,
    q: float,
    m_omega: int,
    seed: int,
    weights: BernoulliSpec | None = None,
) -> list[EntropySeries]:
    """One series per epsilon with rows (k, -c/k); the limit extraction
    over k and the epsilon trend are left to the limits module."""
    _check_grids(eps_list, k_list)
    out = []
    for eps in eps_list:
        rows = []
        ses = []
        for k in k_list:
            c, se = _corr_integral_detail(measure, sys, eps, k, q, m_omega, seed, weights)
            rows.append((k, -c / k))
            ses.append(se / k)
        out.append(
            EntropySeries(
                epsilon=eps,
                rows=rows,
                kind="corr-entropy",
                q=q,
                stderrs=ses,
                meta={"m_omega": m_omega, "seed": seed,
                      "n_points": len(measure.points)},
            )
        )
    return out


def _check_grids(eps_list, k_list):
    if not eps_list:
        raise ValueError("need at least one epsilon")
    if any(e <= 0 for e in eps_list):
        raise InvalidEpsilon("epsilons must be > 0")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("epsilons must be strictly decreasing")
    if not k_list or any(k < 1 for k in k_list):
        raise ValueError("k values must be >= 1")
    if any(b <= a for a, b in zip(k_list, k_list[1:])):
        raise ValueError("k values must be strictly increasing")


def local_corr_entropy_series(
    sys: GeneratorSystem,
    x,
    eps_list,
    k_list,
    n: int,
    m_upsilon: int,
    m_omega: int,
    seed: int,
    weights: BernoulliSpec | None = None,
) -> list[EntropySeries]:
    """Local correlation entropy integrand at a starting point x.

    The inner limit over orbit length is approximated by one large n,
    with a stability check: each row also evaluates the correlation sum
    at n/2 (same driving words), and the row is flagged "unstable" when
    the two word-averaged values differ by more than twice their
    combined standard error.
    """
    _check_grids(eps_list, k_list)
    if n < 1:
        raise ValueError("n must be >= 1")
    orbits = _upsilon_orbits(sys, x, n, m_upsilon, seed, weights)
    n_half = max(1, n // 2)
    half_orbits = [pts[:n_half] for pts in orbits]
    out = []
    for eps in eps_list:
        rows = []
        ses = []
        flags = []
        for k in k_list:
            pairs = omega_words(sys.m, k, weights, m_omega, seed)
            logs_full = []
            logs_half = []
            se_full = []
            se_half = []
            for w, _ in pairs:
                vals = [_pair_fraction(sys, w, k, eps, pts) for pts in orbits]
                hvals = [_pair_fraction(sys, w, k, eps, pts) for pts in half_orbits]
                cf = math.fsum(vals) / len(vals)
                ch = math.fsum(hvals) / len(hvals)
                logs_full.append(math.log(cf))
                logs_half.append(math.log(ch))
                sf = np.std(vals, ddof=1) / math.sqrt(len(vals)) if len(vals) > 1 else 0.0
                sh = np.std(hvals, ddof=1) / math.sqrt(len(hvals)) if len(hvals) > 1 else 0.0
                se_full.append(float(sf) / cf)
                se_half.append(float(sh) / ch)
            wts = [wt for _, wt in pairs]
            mean_full = _weighted_mean(logs_full, wts)
            mean_half = _weighted_mean(logs_half, wts)
            var_full = math.fsum((w * s) ** 2 for w, s in zip(wts, se_full))
            var_half = math.fsum((w * s) ** 2 for w, s in zip(wts, se_half))
            gap = abs(mean_full - mean_half)
            tol = 2.0 * math.sqrt(var_full + var_half)
            rows.append((k, -mean_full / k))
            ses.append(math.sqrt(var_full) / k)
            flags.append("" if gap <= tol or tol == 0.0 else "unstable")
        out.append(
            EntropySeries(
                epsilon=eps,
                rows=rows,
                kind="local-corr-entropy",
                q=None,
                stderrs=ses,
                flags=flags,
                meta={"n": n, "m_upsilon": m_upsilon, "m_omega": m_omega,
                      "seed": seed},
            )
        )
    return out


# ---------------------------------------------------------------------------
# Separated / spanning sets and topological entropy


def _greedy_net(sample, sys, omega, k, eps):
    """First-come greedy net: keep a point unless it is Bowen-within
    eps of an already kept one.  The result is a maximal eps-separated
    subset, and by maximality every sample point is within eps of a
    kept one, so the same set is also an eps-cover."""
    _check_eps(eps)
    _check_word(omega, k)
    sample = list(sample)
    if sys.ball_key is not None:
        keys = _bowen_keys(sys, omega, k, eps, sample)
        seen = set()
        kept = []
        for p, key in zip(sample, keys):
            if key not in seen:
                seen.add(key)
                kept.append(p)
        return kept
    if sys.array_ops is not None and len(sample) > 64:
        mat = _within_matrix(sys, omega, k, eps, sample)
        kept_idx: list[int] = []
        for i in range(len(sample)):
            if not kept_idx or not mat[i, kept_idx].any():
                kept_idx.append(i)
        return [sample[i] for i in kept_idx]
    kept = []
    for p in sample:
        if all(not bowen_within(sys, omega, k, p, q_, eps) for q_ in kept):
            kept.append(p)
    return kept


def separated_set(sample, sys: GeneratorSystem, omega, k, eps) -> list:
    """Greedy maximal Bowen eps-separated subset of the sample (kept
    points are pairwise more than eps apart; a lower bound on the
    maximum packing)."""
    return _greedy_net(sample, sys, omega, k, eps)


def spanning_set(sample, sys: GeneratorSystem, omega, k, eps) -> list:
    """Greedy Bowen eps-cover of the sample (every sample point is
    within eps of a returned one); never larger than the greedy
    separated set at the same radius."""
    return _greedy_net(sample, sys, omega, k, eps)


def top_entropy_series(
    sys: GeneratorSystem,
    eps_list,
    k_list,
    m_omega: int,
    n_sample: int,
    seed: int,
    weights: BernoulliSpec | None = None,
    sample=None,
) -> list[EntropySeries]:
    """Growth rate of separated-set cardinality: rows are the word
    average of log #separated divided by k.

    The sample is drawn from the reference measure unless one is passed
    in; with a finite sample and a greedy packing the rows are biased
    low, approaching the true rate as the sample fills the space.
    """
    _check_grids(eps_list, k_list)
    if sample is None:
        if n_sample < 1:
            raise ValueError("n_sample must be >= 1")
        rng = substream(seed, MU)
        sample = [sys.mu_sampler(rng) for _ in range(n_sample)]
    out = []
    for eps in eps_list:
        rows = []
        ses = []
        for k in k_list:
            pairs = omega_words(sys.m, k, weights, m_omega, seed)
            logs = [
                math.log(len(_greedy_net(sample, sys, w, k, eps))) for w, _ in pairs
            ]
            wts = [wt for _, wt in pairs]
            rows.append((k, _weighted_mean(logs, wts) / k))
            if exhaustive_omega(sys.m, k, m_omega) or len(logs) < 2:
                ses.append(0.0)
            else:
                ses.append(float(np.std(logs, ddof=1)) / math.sqrt(len(logs)) / k)
        out.append(
            EntropySeries(
                epsilon=eps,
                rows=rows,
                kind="top-entropy",
                stderrs=ses,
                meta={"n_sample": len(sample), "m_omega": m_omega, "seed": seed},
            )
        )
    return out


# ---------------------------------------------------------------------------
# Doubling diagnostic and local entropy


def doubling_ratio(measure, sys: GeneratorSystem, omega, k, eps) -> float:
    """Entropy-doubling diagnostic per horizon: (1/k) * log of the
    worst ratio of 2eps- to eps-ball measures over the sample centers.
    Trending to 0 in k is the signature of a doubling-friendly
    measure."""
    _check_eps(eps)
    _check_word(omega, k)
    m1 = np.asarray(measure.ball_measures(sys, omega, k, eps), dtype=float)
    m2 = np.asarray(measure.ball_measures(sys, omega, k, 2.0 * eps), dtype=float)
    ratio = float((m2 / m1).max())
    return math.log(ratio) / k


def local_entropy_series(
    measure, sys: GeneratorSystem, omega, x, eps_list, k_list
) -> list[EntropySeries]:
    """Decay rate of the ball measure at a fixed center x along a fixed
    word: rows (k, -(1/k) log measure(Bowen ball))."""
    _check_grids(eps_list, k_list)
    if not any(p == x for p in measure.points):
        raise CenterNotInSample("x must be one of the sample points")
    out = []
    for eps in eps_list:
        rows = []
        for k in k_list:
            mu = measure.ball_measure(sys, omega, k, x, eps)
            rows.append((k, -math.log(mu) / k))
        out.append(
            EntropySeries(
                epsilon=eps,
                rows=rows,
                kind="local-entropy",
                meta={"n_points": len(measure.points)},
            )
        )
    return out
