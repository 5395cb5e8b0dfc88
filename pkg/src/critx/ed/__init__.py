"""Matrix-free Lanczos exact diagonalization for spin-1/2 and spin-1 chains."""
from .basis import SectorBasis, SectorError, build_sector_basis, ground_sector
from .hamiltonian import DimensionError, HamiltonianOperator, apply_hamiltonian
from .kernels import BACKEND
from .lanczos import GroundStateResult, LanczosError, LanczosOptions, lanczos, lanczos_lowest
from .observables import (
    SiteError,
    UnsupportedObservable,
    expectation_local,
    gap,
    one_site_rdm,
    reduced_density_matrix,
    two_site_rdm,
)

__all__ = [
    "BACKEND",
    "DimensionError",
    "GroundStateResult",
    "HamiltonianOperator",
    "LanczosError",
    "LanczosOptions",
    "SectorBasis",
    "SectorError",
    "SiteError",
    "UnsupportedObservable",
    "apply_hamiltonian",
    "build_sector_basis",
    "expectation_local",
    "gap",
    "ground_sector",
    "lanczos",
    "lanczos_lowest",
    "one_site_rdm",
    "reduced_density_matrix",
    "two_site_rdm",
]
