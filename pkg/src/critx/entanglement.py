"""Local measures of entanglement from one- and two-site density matrices.

Entropies are in nats.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

TRACE_TOL = 1e-10
HERMITIAN_TOL = 1e-12
NEGATIVE_TOL = 1e-10


class DensityMatrixError(ValueError):
    """Matrix is not a valid density matrix."""


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Validated density matrix of dimension 2, 3, 4 or 9."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in (2, 3, 4, 9):
            raise DensityMatrixError(f"unsupported shape {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise DensityMatrixError("matrix is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise DensityMatrixError(f"trace {tr} differs from 1")
        m = 0.5 * (m + m.conj().T)
        w = np.linalg.eigvalsh(m)
        if w[0] < -NEGATIVE_TOL:
            raise DensityMatrixError(f"negative eigenvalue {w[0]:.3e}")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "_eigvals", np.clip(w, 0.0, None))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def eigenvalues(self) -> np.ndarray:
        return self._eigvals


def as_density_matrix(rho) -> DensityMatrix:
    return rho if isinstance(rho, DensityMatrix) else DensityMatrix(rho)


@dataclass(frozen=True)
class MagnetizationVector:
    m_x: float = 0.0
    m_y: float = 0.0
    m_z: float = 0.0

    @property
    def norm(self) -> float:
        return math.sqrt(self.m_x ** 2 + self.m_y ** 2 + self.m_z ** 2)


def von_neumann_entropy(rho) -> float:
    """``-Tr rho ln rho`` with ``0 ln 0 = 0``."""
    lam = as_density_matrix(rho).eigenvalues
    lam = lam[lam > 0]
    return float(max(-np.sum(lam * np.log(lam)), 0.0))


def linear_entropy(rho) -> float:
    """``1 - Tr rho^2``."""
    lam = as_density_matrix(rho).eigenvalues
    return float(max(1.0 - np.sum(lam ** 2), 0.0))


def purity(rho) -> float:
    return 1.0 - linear_entropy(rho)


def rho1_spin_half(m: MagnetizationVector) -> DensityMatrix:
    """Single-qubit state ``(1 + m . sigma) / 2``."""
    if m.norm > 1.0 + 1e-10:
        raise DensityMatrixError(f"|m| = {m.norm} > 1 is not a state")
    mat = 0.5 * (np.eye(2) + m.m_x * SIGMA_X + m.m_y * SIGMA_Y + m.m_z * SIGMA_Z)
    return DensityMatrix(mat)


def mx_spontaneous(h: float) -> float:
    """Spontaneous order ``(1 - h^2)^{1/8}`` below ``h = 1``, zero above."""
    if h < 0:
        raise ValueError("mx_spontaneous needs h >= 0")
    return (1.0 - h * h) ** 0.125 if h < 1.0 else 0.0


_SYSY = np.kron(SIGMA_Y, SIGMA_Y)


def concurrence(rho) -> float:
    """Wootters concurrence of a two-qubit state.

    The lambdas (square roots of the eigenvalues of ``rho (sy sy) rho* (sy sy)``)
    are computed as the singular values of ``sqrt(rho) (sy sy) sqrt(rho)*``,
    which keeps rank-deficient states accurate to rounding instead of to its
    square root.
    """
    rho = as_density_matrix(rho)
    if rho.dim != 4:
        raise DensityMatrixError(f"concurrence needs a 4x4 matrix, got {rho.dim}x{rho.dim}")
    w, U = np.linalg.eigh(rho.matrix)
    sqrt_rho = (U * np.sqrt(np.clip(w, 0.0, None))) @ U.conj().T
    lam = np.linalg.svd(sqrt_rho @ _SYSY @ sqrt_rho.conj(), compute_uv=False)
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def concurrence_from_correlators(xx: float, yy: float, zz: float) -> float:
    """``max(0, (xx - yy + zz - 1) / 2)``, the TFIM closed form for ``C(r >= 2)``."""
    return max(0.0, 0.5 * (xx - yy + zz - 1.0))


def two_site_rdm_spin_half(mz: float, xx: float, yy: float, zz: float, mx: float = 0.0) -> DensityMatrix:
    """Two-qubit rdm of a translation-invariant, real, parity-symmetric state.

    ``rho = (1 + mz(sz 1 + 1 sz) + mx(sx 1 + 1 sx) + sum_a <sa sa> sa sa) / 4``.
    ``mx`` is only meaningful together with symmetry-broken correlators.
    """
    one = np.eye(2)
    mat = (np.eye(4) + mz * (np.kron(SIGMA_Z, one) + np.kron(one, SIGMA_Z))
           + mx * (np.kron(SIGMA_X, one) + np.kron(one, SIGMA_X))
           + xx * np.kron(SIGMA_X, SIGMA_X) + yy * np.kron(SIGMA_Y, SIGMA_Y)
           + zz * np.kron(SIGMA_Z, SIGMA_Z)) / 4.0
    return DensityMatrix(mat)


def single_site_entropy_spin1(o_d: float) -> float:
    """Single-site entropy of a spin-1 chain from ``O_D = <(Sz)^2>``.

    The rdm is ``diag(O_D/2, 1-O_D, O_D/2)``, giving
    ``-O_D ln(O_D/2) - (1-O_D) ln(1-O_D)``.
    """
    if not 0.0 <= o_d <= 1.0:
        raise ValueError(f"O_D={o_d} outside [0, 1]")
    s = 0.0
    if o_d > 0.0:
        s -= o_d * math.log(o_d / 2.0)
    if o_d < 1.0:
        s -= (1.0 - o_d) * math.log(1.0 - o_d)
    return s


def tfim_entropy_1site(h: float, L=None, broken: bool = False) -> float:
    """Single-site entropy of the TFIM ground state from ``m^z`` (and ``m_x`` if ``broken``)."""
    from . import tfim_exact

    mz = tfim_exact.magnetization_z(h, tfim_exact.INFINITE if L is None else L)
    mx = mx_spontaneous(h) if broken else 0.0
    # the two closed forms are only jointly consistent up to rounding near |m| = 1
    norm = math.hypot(mx, mz)
    if norm > 1.0:
        mx, mz = mx / norm, mz / norm
    return von_neumann_entropy(rho1_spin_half(MagnetizationVector(mx, 0.0, mz)))


def tfim_concurrence(r: int, h: float, L: int) -> float:
    """Wootters concurrence between sites ``i`` and ``i + r`` from free-fermion correlators."""
    from . import tfim_exact

    table = tfim_exact.ContractionTable.build(h, L, r + 1)
    xx, yy, zz = (tfim_exact.correlator(a, r, h, L, table) for a in "xyz")
    return concurrence(two_site_rdm_spin_half(table[0], xx, yy, zz))
