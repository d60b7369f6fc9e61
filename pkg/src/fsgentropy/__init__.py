"""Entropy estimators for free semigroup actions.

m continuous self-maps of a compact metric space, composed along random
words, generate a free semigroup action; this package estimates its
correlation entropy, local correlation entropy, topological entropy and
local entropy, and ships a closed-form shift+odometer backend that
every estimator is validated against.
"""

from . import binary, cli, estimators, limits, seeding, series, systems, words
from .binary import (
    BinaryPoint,
    Cylinder,
    ExactCylinderMeasure,
    exact_bowen_ball,
    exact_corr_integral_series,
    exact_measure_entropy_series,
    exact_top_entropy_series,
    s_count,
)
from .estimators import (
    CorrSumEstimate,
    EmpiricalMeasure,
    ball_measure,
    corr_entropy_series,
    corr_integral,
    correlation_sum,
    doubling_ratio,
    local_corr_entropy_series,
    local_entropy_series,
    separated_set,
    spanning_set,
    top_entropy_series,
)
from .limits import LimitEstimate, TrendReport, epsilon_trend, k_limit
from .series import EntropySeries
from .systems import (
    GeneratorSystem,
    OrbitTable,
    apply_word,
    binary_shift_odometer,
    bowen_distance,
    bowen_within,
    build_power_system,
    circle_double_rotate,
    ergodic_average,
    make_system,
    orbit_table,
    skew_step,
    torus_affine,
)
from .words import (
    BernoulliSpec,
    SymbolWord,
    power_weights,
    power_word_map,
    power_word_unmap,
    sample_word,
    shift,
    uniform_spec,
    word,
)

__version__ = "0.1.0"
