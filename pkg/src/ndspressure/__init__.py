"""Entropy and pressure of nonautonomous dynamical systems on finite carriers."""

from .core import (
    FAILS,
    UNBOUNDED,
    BowenBallSpec,
    LevelOutOfRange,
    NDSystem,
    PotentialSeq,
    SpaceBackend,
    birkhoff_sum,
    bowen_ball_points,
    bowen_distance,
    compose,
    constant_potential,
    cylinder_length,
    equicontinuity_modulus,
    level_potential,
    potential_norm,
    symbol_potential,
    zero_potential,
)
from .covering import (
    BallFamily,
    disjoint_subfamily_5r,
    disjoint_subfamily_bowen_3eps,
    separated_set,
    spanning_set,
)
from .measures import (
    AtomicMeasure,
    BernoulliMeasure,
    ball_mass,
    frostman_dual,
    integrated_exponent,
    local_exponents,
    pushforward,
)
from .pressure import (
    EstimatorConfig,
    PressureEstimate,
    bowen_entropy,
    bowen_pressure,
    cover_value,
    critical_exponent,
    packing_entropy,
    packing_pressure,
    packing_value,
    weighted_cover_value,
)
from .systems import (
    DoublingChainSpec,
    NIFSSpec,
    ShiftSpec,
    bernoulli_measure,
    make_doubling_chain,
    make_na_shift,
    make_nifs_repeller,
    middle_third,
    tilted_bernoulli,
    uniform_bernoulli,
)

__version__ = "0.1.0"
