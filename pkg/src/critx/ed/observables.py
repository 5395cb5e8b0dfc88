"""Local expectation values, reduced density matrices and gaps from ED vectors."""
from __future__ import annotations

from typing import Iterable, Mapping

import numpy as np

from ..models import Boundary, Family, ModelSpec, ObservableKind, ObservableSpec
from .basis import SectorBasis, build_sector_basis
from .hamiltonian import local_sz
from .lanczos import LanczosOptions, lanczos_lowest


class UnsupportedObservable(ValueError):
    pass


class SiteError(ValueError):
    pass


def _check_site(basis: SectorBasis, *sites: int) -> None:
    for s in sites:
        if not 0 <= s < basis.L:
            raise SiteError(f"site {s} outside chain of length {basis.L}")
    if len(set(sites)) != len(sites):
        raise SiteError(f"sites must be distinct, got {sites}")


def _offdiag_flip(vector, basis, i, j, weight):
    """<v| O |v> for an operator flipping spin-1/2 sites i and j with row weights."""
    mask = (1 << i) | (1 << j)
    partner = basis.lookup[basis.states ^ mask]
    ok = partner >= 0
    return float(np.sum(vector[ok] * weight[ok] * vector[partner[ok]]))


def expectation_local(vector, basis: SectorBasis, observable: ObservableSpec,
                      site: int = 0) -> float:
    """``<v| O_site |v>`` for a site-local (or site/site+r) observable.

    Two-point observables act on ``site`` and ``site + r`` (mod ``L`` when
    periodic).  The returned value includes ``observable.sign``.
    """
    v = np.asarray(vector, dtype=np.float64)
    fam = basis.model.family
    kind = observable.kind
    L = basis.L
    _check_site(basis, site)
    sz = local_sz(basis)
    p = v * v

    def partner(offset):
        j = site + offset
        if basis.model.boundary is Boundary.PERIODIC:
            return j % L
        if j >= L:
            raise SiteError(f"site {site}+{offset} leaves the open chain")
        return j

    if kind is ObservableKind.MAGNETIZATION_Z:
        val = p @ sz[:, site]
    elif kind is ObservableKind.SZ_SQUARED:
        if fam is not Family.SPIN1_XXZD:
            raise UnsupportedObservable("sz_squared is trivial for spin-1/2")
        val = p @ sz[:, site] ** 2
    elif kind is ObservableKind.SZSZ_NN:
        j = partner(1)
        val = p @ (sz[:, site] * sz[:, j])
    elif kind is ObservableKind.CORRELATOR_ZZ:
        j = partner(observable.r)
        val = p @ (sz[:, site] * sz[:, j])
    elif kind in (ObservableKind.CORRELATOR_XX, ObservableKind.CORRELATOR_YY):
        if fam is not Family.TFIM:
            raise UnsupportedObservable(f"{kind.value} is implemented for the TFIM only")
        j = partner(observable.r)
        if kind is ObservableKind.CORRELATOR_XX:
            w = np.ones(basis.dim)
        else:
            # sy_i sy_j |a> = -s_i s_j |a with i, j flipped>
            w = -sz[:, site] * sz[:, j]
        val = _offdiag_flip(v, basis, site, j, w)
    else:
        raise UnsupportedObservable(f"{kind.value} is not a local expectation value")
    return observable.sign * float(val)


def _full_tensor(vector, basis: SectorBasis) -> np.ndarray:
    q, L = basis.local_dim, basis.L
    psi = np.zeros(q ** L)
    psi[basis.states] = vector
    # C order puts the most significant digit (site L-1) first; reverse to site order
    return psi.reshape((q,) * L).transpose(tuple(range(L - 1, -1, -1)))


def _local_basis_order(basis: SectorBasis) -> np.ndarray:
    """Permutation from digit order to the matrix basis order used for rdms.

    Spin-1/2 rdms use ``[up, down]`` (digit order).  Spin-1 rdms use
    ``[+1, 0, -1]``, matching the usual ``Sz = diag(1, 0, -1)``.
    """
    if basis.model.family is Family.TFIM:
        return np.array([0, 1])
    return np.array([2, 1, 0])


def reduced_density_matrix(vector, basis: SectorBasis, sites: Iterable[int]) -> np.ndarray:
    sites = tuple(int(s) for s in sites)
    _check_site(basis, *sites)
    psi = _full_tensor(np.asarray(vector, dtype=np.float64), basis)
    rest = [s for s in range(basis.L) if s not in sites]
    order = _local_basis_order(basis)
    psi = np.transpose(psi, sites + tuple(rest))
    for ax in range(len(sites)):
        psi = np.take(psi, order, axis=ax)
    q = basis.local_dim
    n = q ** len(sites)
    m = psi.reshape(n, -1)
    rho = m @ m.conj().T
    return 0.5 * (rho + rho.conj().T)


def one_site_rdm(vector, basis: SectorBasis, site: int) -> np.ndarray:
    return reduced_density_matrix(vector, basis, (site,))


def two_site_rdm(vector, basis: SectorBasis, site_i: int, site_j: int) -> np.ndarray:
    """Two-site rdm in the product basis ``|a_i b_j>`` (site ``i`` is the left factor)."""
    return reduced_density_matrix(vector, basis, (site_i, site_j))


def gap(model: ModelSpec, sector_list: Iterable[Mapping[str, int]],
        opts: LanczosOptions | None = None) -> float:
    """Second-lowest minus lowest energy over the union of the listed sectors.

    Each sector is diagonalized independently for its two lowest levels (one
    if the sector has dimension 1).
    """
    sectors = list(sector_list)
    if not sectors:
        raise ValueError("sector_list is empty")
    base = opts or LanczosOptions()
    levels = []
    for qn in sectors:
        basis = build_sector_basis(model, qn)
        k = min(2, basis.dim)
        o = LanczosOptions(n_eigs=k, max_iter=base.max_iter, tol=base.tol,
                           reorthogonalize=base.reorthogonalize, seed=base.seed)
        levels.extend(lanczos_lowest(model, basis, o).energies)
    if len(levels) < 2:
        raise ValueError("need at least two levels across the listed sectors")
    levels = np.sort(levels)
    return float(max(levels[1] - levels[0], 0.0))
