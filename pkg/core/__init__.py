# Core module initialization
from config import VERSION as __version__

from .lattice import (
    LatticeBasis,
    SpecialFormLattice,
    DiagonalSplitMap,
    check_general_position,
    certify_special_form,
    special_form_basis,
    kernel_split,
    to_special_form,
    transport_window,
    lift_window_points,
)
from .window import (
    Box,
    Parallelepiped,
    Simplex,
    SimplexUnion,
    WindowUnion,
    measure,
    contains,
    chi,
    linear_image,
    brs_parallelepiped,
)
from .modelset import (
    Patch,
    generate_patch,
    generate_patch_general,
    arithmetic_progression,
    nu,
    counting_formula_gap,
)
from .discrepancy import (
    discrepancy_profile,
    two_sided_scan,
    brs_classify,
    classify_on_grid,
    pair_gap_profile,
    shifted_gap_identity_residual,
    uniformity_scan,
)
from .matching import (
    build_instance,
    max_matching,
    hall_check,
    bounded_distance_match,
    minimal_bde_constant,
    counting_diff,
    orbit_enumerate,
    translation_spread,
    product_reduction_check,
)
from .equidecomp import (
    make_piecewise_translation,
    apply,
    verify_equidecomposition,
    pieces_from_orbit_matchings,
)

__all__ = [
    '__version__',
    'LatticeBasis',
    'SpecialFormLattice',
    'DiagonalSplitMap',
    'check_general_position',
    'certify_special_form',
    'special_form_basis',
    'kernel_split',
    'to_special_form',
    'transport_window',
    'lift_window_points',
    'Box',
    'Parallelepiped',
    'Simplex',
    'SimplexUnion',
    'WindowUnion',
    'measure',
    'contains',
    'chi',
    'linear_image',
    'brs_parallelepiped',
    'Patch',
    'generate_patch',
    'generate_patch_general',
    'arithmetic_progression',
    'nu',
    'counting_formula_gap',
    'discrepancy_profile',
    'two_sided_scan',
    'brs_classify',
    'classify_on_grid',
    'pair_gap_profile',
    'shifted_gap_identity_residual',
    'uniformity_scan',
    'build_instance',
    'max_matching',
    'hall_check',
    'bounded_distance_match',
    'minimal_bde_constant',
    'counting_diff',
    'orbit_enumerate',
    'translation_spread',
    'product_reduction_check',
    'make_piecewise_translation',
    'apply',
    'verify_equidecomposition',
    'pieces_from_orbit_matchings',
]
