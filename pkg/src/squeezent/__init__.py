"""squeezent: certified entanglement bounds for collective-spin thermal states.

Lower bounds come from a complete family of spin-squeezing inequalities on
collective-spin moments; upper bounds from explicitly constructed separable
ensembles.  States are handled in the permutation- and z-rotation-invariant
block representation throughout, which keeps hundreds of qubits tractable.
"""

from .blocks import (
    BlockDiagonalState,
    MomentSummary,
    SectorIndex,
    bsa_mixing_parameter,
    maximally_mixed,
    mix,
    moments_from_blocks,
    multiplicity,
    sector_cell_state,
    sector_two_j_values,
    singlet_state,
    two_norm_distance,
)
from .errors import CapabilityError, IntegrityError
from .schur import (
    SchurBasis,
    WignerD,
    blocks_to_dense,
    build_schur_basis,
    cached_schur_basis,
    dense_block_coefficients,
    jz_product_state_blocks,
    load_schur_basis,
    rotate_and_twirl,
    rotated_jz_product_blocks,
    save_schur_basis,
    symmetrize_product_state,
    wigner_d,
)
from .separable import (
    EnsembleMember,
    GeneralProduct,
    SimpleAnsatz,
    UpperBoundReport,
    refit_weights,
    sandwich_report,
    seesaw_best_product,
    separable_ball_check,
    simple_ansatz_library,
    upper_bound_full,
    upper_bound_simple,
    verify_certificate,
)
from .thermal import (
    ThermalPoint,
    XXZParams,
    asymptotic_xx_bound,
    asymptotic_xxx_bound,
    dense_hamiltonian,
    gibbs_blocks,
    partition_function,
    sector_energy,
    thermal_moments,
)
from .witness import (
    FacetValues,
    SSIResult,
    evaluate_inequality_set,
    gamma_matrix,
    ssi_parameter,
    x_matrix,
)

__version__ = "0.1.0"
