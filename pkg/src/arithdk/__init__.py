"""Exact arithmetic for divided-power differential operators over Z/p^N."""

from .coeff import AtLeast, MultiPoly, PadicScalar, div_exact, gauss_vp, mul_p_power, vp
from .diffop import (
    DiffOp,
    LevelBasisOp,
    apply,
    commutator,
    compose,
    conjugate,
    from_level_basis,
    level_part,
    order,
    reduction_order,
    sigma,
    slice_op,
    to_level_basis,
    transpose,
)
from .errors import *  # noqa: F401,F403
from .growth import (
    BetaCertificate,
    GrowthConstants,
    check_beta_bounded,
    convert_growth_constants,
    estimate_alpha,
    estimate_level,
    slice_equiv_check,
)
from .kashiwara import (
    Chart,
    FinPresentation,
    InducedElement,
    decompose_torsion,
    direct_image,
    kernel_functor,
    normalizer_member,
    restrict,
    roundtrip_unit_check,
    twisted_roundtrip,
)
from .keylemma import commutant_solve, invert_unipotent, key_lemma_solve, normalize_generators
from .matrix import OpMatrix

__version__ = "0.1.0"
