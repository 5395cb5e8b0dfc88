"""Matrix-free Hamiltonian action on a sector basis."""
from __future__ import annotations

import numpy as np

from ..models import Family, ModelSpec
from . import kernels
from .basis import SectorBasis


class DimensionError(ValueError):
    pass


def local_sz(basis: SectorBasis) -> np.ndarray:
    """``sz`` (spin-1/2, Pauli units) or ``Sz`` (spin-1) of every site, shape ``(dim, L)``."""
    d = basis.digits.astype(np.float64)
    if basis.model.family is Family.TFIM:
        return 1.0 - 2.0 * d
    return d - 1.0


def diagonal(model: ModelSpec, basis: SectorBasis) -> np.ndarray:
    sz = local_sz(basis)
    if model.family is Family.TFIM:
        return -model.coupling("h") * sz.sum(axis=1)
    lam, D = model.coupling("lambda"), model.coupling("D")
    zz = np.zeros(basis.dim)
    for i, j in model.bonds():
        zz += sz[:, i] * sz[:, j]
    return lam * zz + D * (sz * sz).sum(axis=1)


class HamiltonianOperator:
    """Callable ``v -> H v`` for one model on one sector.

    The basis may have been built for a different coupling value of the same
    chain; only family, length and boundary must match.
    """

    def __init__(self, model: ModelSpec, basis: SectorBasis):
        bm = basis.model
        if (bm.family, bm.L, bm.boundary) != (model.family, model.L, model.boundary):
            raise DimensionError("basis was built for a different chain")
        self.model = model
        self.basis = basis
        self.dim = basis.dim
        self.diag = diagonal(model, basis)
        bonds = model.bonds()
        if model.family is Family.TFIM:
            self._masks = np.array([(1 << i) | (1 << j) for i, j in bonds], dtype=np.int64)
        else:
            self._bond_i = np.array([i for i, _ in bonds], dtype=np.int64)
            self._bond_j = np.array([j for _, j in bonds], dtype=np.int64)
            self._pow3 = 3 ** np.arange(model.L, dtype=np.int64)

    def matvec(self, v: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        v = np.ascontiguousarray(v, dtype=np.float64)
        if v.shape != (self.dim,):
            raise DimensionError(f"vector has shape {v.shape}, sector dim is {self.dim}")
        if out is None:
            out = np.empty(self.dim)
        b = self.basis
        if self.model.family is Family.TFIM:
            kernels.tfim_matvec(v, out, b.states, b.lookup, self.diag, self._masks, -1.0)
        else:
            kernels.spin1_matvec(v, out, b.states, b.digits, b.lookup, self.diag,
                                 self._bond_i, self._bond_j, self._pow3, 1.0)
        return out

    __call__ = matvec

    def dense(self) -> np.ndarray:
        """Dense matrix, column by column; for small sectors and tests."""
        H = np.empty((self.dim, self.dim))
        e = np.zeros(self.dim)
        for a in range(self.dim):
            e[a] = 1.0
            H[:, a] = self.matvec(e)
            e[a] = 0.0
        return H


def apply_hamiltonian(model: ModelSpec, basis: SectorBasis, v) -> np.ndarray:
    """Return ``H v`` for amplitudes ``v`` over ``basis``."""
    return HamiltonianOperator(model, basis).matvec(np.asarray(v, dtype=np.float64))
