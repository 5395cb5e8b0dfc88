"""Symmetry-sector bases for spin-1/2 and spin-1 chains.

A configuration is labelled by the integer ``sum_i d_i * q**i`` where ``q`` is
the local dimension and ``d_i`` the local state index of site ``i``:

* spin-1/2: ``d = 0`` is up (``sz = +1``), ``d = 1`` is down;
* spin-1: ``d = 0, 1, 2`` stand for ``m = -1, 0, +1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..models import Family, ModelSpec


class SectorError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SectorBasis:
    """Sorted configuration labels of one sector plus a dense reverse lookup.

    ``lookup[label]`` is the index of ``label`` in :attr:`states` or ``-1``.
    ``digits[a, i]`` is the local state of site ``i`` in configuration ``a``.
    """

    model: ModelSpec
    quantum_numbers: tuple[tuple[str, int], ...]
    states: np.ndarray
    digits: np.ndarray = field(repr=False)
    lookup: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return int(self.states.shape[0])

    @property
    def L(self) -> int:
        return self.model.L

    @property
    def local_dim(self) -> int:
        return self.model.local_dim


def _all_digits(L: int, q: int) -> np.ndarray:
    labels = np.arange(q ** L, dtype=np.int64)
    digits = np.empty((labels.size, L), dtype=np.int8)
    rest = labels.copy()
    for i in range(L):
        digits[:, i] = rest % q
        rest //= q
    return digits


def build_sector_basis(model: ModelSpec,
                       quantum_numbers: Mapping[str, int] | None = None) -> SectorBasis:
    """Enumerate the configurations of one symmetry sector.

    TFIM sectors are labelled by ``parity`` (eigenvalue of ``prod_i sz_i``);
    spin-1 sectors by ``total_sz``.  ``None`` or an empty mapping selects the
    full Hilbert space.
    """
    qn = dict(quantum_numbers or {})
    L, q = model.L, model.local_dim
    allowed = {Family.TFIM: {"parity"}, Family.SPIN1_XXZD: {"total_sz"}}[model.family]
    unknown = set(qn) - allowed
    if unknown:
        raise SectorError(f"quantum numbers {sorted(unknown)} do not apply to {model.family.value}")

    digits = _all_digits(L, q)
    keep = np.ones(digits.shape[0], dtype=bool)
    if "parity" in qn:
        parity = int(qn["parity"])
        if parity not in (1, -1):
            raise SectorError(f"parity must be +1 or -1, got {parity}")
        n_down = digits.sum(axis=1, dtype=np.int64)
        keep &= (n_down % 2) == (0 if parity == 1 else 1)
    if "total_sz" in qn:
        total = int(qn["total_sz"])
        keep &= (digits.sum(axis=1, dtype=np.int64) - L) == total

    states = np.flatnonzero(keep).astype(np.int64)
    if states.size == 0:
        raise SectorError(f"empty sector {qn} for L={L}")
    lookup = np.full(q ** L, -1, dtype=np.int64)
    lookup[states] = np.arange(states.size, dtype=np.int64)
    return SectorBasis(
        model=model,
        quantum_numbers=tuple(sorted(qn.items())),
        states=states,
        digits=np.ascontiguousarray(digits[states]),
        lookup=lookup,
    )


def ground_sector(model: ModelSpec) -> dict[str, int]:
    """Sector holding the ground state: even parity (TFIM) or total Sz = 0 (spin-1)."""
    if model.family is Family.TFIM:
        return {"parity": 1}
    return {"total_sz": 0}
