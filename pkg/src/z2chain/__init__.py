"""Numerical toolkit for a qubit chain whose low-energy dynamics realize an
emergent Z2 gauge structure: Hamiltonian builders, exact and tensor-network
time evolution, gauge observables, and a model of the measurement chain.
"""

__version__ = "0.1.0"

from .params import (  # noqa: F401
    DeviceParams,
    InitialStateSpec,
    RunConfig,
    device_default,
    load_config,
    uniform_params,
)
from .pauli import (  # noqa: F401
    OperatorSum,
    PauliString,
    build_effective,
    build_full,
    build_rotated_effective,
    commutator_norm,
    rotate_frame,
)
from .exact import (  # noqa: F401
    StateVector,
    diagonalize_dense,
    evolve_krylov,
    matter_sector_project,
    prepare_initial,
)
from .mps import (  # noqa: F401
    MatrixProductState,
    dmrg_ground_state,
    product_mps,
    tebd_evolve,
)
from .observables import (  # noqa: F401
    extended_imbalance,
    fit_gaussian_peak,
    gauge_correlation_residual,
    gauge_curve,
    gauge_generator,
    gauss_law_residual,
    occupation_profile,
    steady_value,
    z2_charge,
    z2_flux,
)
