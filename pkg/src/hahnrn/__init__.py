"""Constructive Hahn decompositions and parameter-measurable Radon-Nikodym derivatives.

All arithmetic is exact (``fractions.Fraction``).  Measurable sets are
canonical unions of dyadic half-open intervals in ``[0, 1)`` or subsets of
a finite atom space.
"""

from .charges import (
    AtomCharge,
    DensityCharge,
    InfimumResult,
    charge_eval,
    charge_from_json,
    combine,
    infimum_over_family,
    total_variation,
)
from .derivative import (
    DerivativeField,
    LevelSetFamily,
    RationalGrid,
    auto_grid,
    build_level_family,
    evaluate_derivative,
    null_defects,
    rn_field,
    staircase,
    two_family_rn,
    verify_rn_identity,
)
from .errors import AbsoluteContinuityError, ConstructionError, InputError
from .hahn import (
    EpsSchedule,
    HahnCertificate,
    HahnDecomposition,
    build_X_minus,
    construct_hahn,
    exact_negative_set,
    near_inf_sets,
    verify_hahn,
)
from .parametric import (
    JointSet,
    ParamGrid,
    ParametricCharge,
    SelectionTable,
    beta_curve,
    build_joint_X_minus,
    selection_table,
)
from .space import (
    AtomFamily,
    AtomSet,
    IntervalFamily,
    IntervalUnionSet,
    canonicalize,
    enumerate_family,
    lebesgue,
    set_complement,
    set_intersect,
    set_union,
    sym_diff,
)

__version__ = "0.1.0"
