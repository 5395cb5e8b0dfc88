"""Model definitions shared by the exact and ED engines.

Two chains are supported, both written as ``H = H0 + g V`` for any of their
couplings ``g``:

* ``TFIM``: ``H = -sum_i [sx_i sx_{i+1} + h sz_i]`` (Pauli matrices).
* ``SPIN1_XXZD``: ``H = sum_i [Sx_i Sx_{i+1} + Sy_i Sy_{i+1} + lam Sz_i Sz_{i+1} + D (Sz_i)^2]``.

Periodic chains sum over ``i = 0..L-1`` with ``i+1`` taken mod ``L``; at
``L = 2`` this visits the single bond twice.  The free-fermion TFIM formulas
carry the same double counting, so both engines agree there.  Periodic
spin-1 chains must have even ``L >= 4``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping


class Family(str, enum.Enum):
    TFIM = "tfim"
    SPIN1_XXZD = "spin1_xxzd"


class Boundary(str, enum.Enum):
    PERIODIC = "periodic"
    OPEN = "open"


class ObservableKind(str, enum.Enum):
    ENERGY_DENSITY = "energy_density"
    MAGNETIZATION_Z = "magnetization_z"
    SZ_SQUARED = "sz_squared"
    SZSZ_NN = "szsz_nn"
    CORRELATOR_XX = "correlator_xx"
    CORRELATOR_YY = "correlator_yy"
    CORRELATOR_ZZ = "correlator_zz"
    ENTROPY_1SITE = "entropy_1site"
    CONCURRENCE = "concurrence"


COUPLING_NAMES = {
    Family.TFIM: ("h",),
    Family.SPIN1_XXZD: ("lambda", "D"),
}

LOCAL_DIM = {Family.TFIM: 2, Family.SPIN1_XXZD: 3}

_SEPARATED = {
    ObservableKind.CORRELATOR_XX,
    ObservableKind.CORRELATOR_YY,
    ObservableKind.CORRELATOR_ZZ,
    ObservableKind.CONCURRENCE,
}


class ModelError(ValueError):
    """Invalid model definition or coupling name."""


@dataclass(frozen=True)
class ModelSpec:
    """Chain family, length, boundary condition and couplings.

    ``couplings`` is stored as a sorted tuple of ``(name, value)`` pairs so the
    record stays hashable; use :attr:`coupling_map` or :meth:`coupling` to read
    it.
    """

    family: Family
    L: int
    boundary: Boundary = Boundary.PERIODIC
    couplings: tuple[tuple[str, float], ...] = field(default=())

    def __post_init__(self):
        family = Family(self.family)
        boundary = Boundary(self.boundary)
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "boundary", boundary)
        if isinstance(self.couplings, Mapping):
            pairs = self.couplings.items()
        else:
            pairs = self.couplings
        pairs = tuple(sorted((str(k), float(v)) for k, v in pairs))
        object.__setattr__(self, "couplings", pairs)

        if int(self.L) != self.L or self.L < 2:
            raise ModelError(f"L must be an integer >= 2, got {self.L}")
        object.__setattr__(self, "L", int(self.L))
        if (family is Family.SPIN1_XXZD and boundary is Boundary.PERIODIC
                and (self.L < 4 or self.L % 2)):
            raise ModelError("periodic spin-1 chains need even L >= 4")

        names = {k for k, _ in pairs}
        expected = set(COUPLING_NAMES[family])
        if names != expected:
            raise ModelError(
                f"{family.value} needs couplings {sorted(expected)}, got {sorted(names)}")
        for k, v in pairs:
            if not math.isfinite(v):
                raise ModelError(f"coupling {k}={v} is not finite")

    @classmethod
    def tfim(cls, L: int, h: float, boundary: Boundary | str = Boundary.PERIODIC) -> "ModelSpec":
        return cls(Family.TFIM, L, Boundary(boundary), (("h", h),))

    @classmethod
    def spin1(cls, L: int, lam: float, D: float,
              boundary: Boundary | str = Boundary.PERIODIC) -> "ModelSpec":
        return cls(Family.SPIN1_XXZD, L, Boundary(boundary), (("lambda", lam), ("D", D)))

    @property
    def coupling_map(self) -> dict[str, float]:
        return dict(self.couplings)

    def coupling(self, name: str) -> float:
        for k, v in self.couplings:
            if k == name:
                return v
        raise ModelError(f"unknown coupling {name!r} for {self.family.value}")

    def with_coupling(self, name: str, value: float) -> "ModelSpec":
        self.coupling(name)
        cmap = self.coupling_map
        cmap[name] = value
        return ModelSpec(self.family, self.L, self.boundary, tuple(cmap.items()))

    def with_length(self, L: int) -> "ModelSpec":
        return ModelSpec(self.family, L, self.boundary, self.couplings)

    @property
    def local_dim(self) -> int:
        return LOCAL_DIM[self.family]

    def bonds(self) -> list[tuple[int, int]]:
        """Nearest-neighbour bonds ``(i, i+1)``, wrapping for periodic chains."""
        if self.boundary is Boundary.PERIODIC:
            return [(i, (i + 1) % self.L) for i in range(self.L)]
        return [(i, i + 1) for i in range(self.L - 1)]


@dataclass(frozen=True)
class DrivingParameter:
    name: str
    value: float

    def check(self, model: ModelSpec) -> None:
        model.coupling(self.name)


@dataclass(frozen=True)
class ObservableSpec:
    """A per-site observable.

    ``r`` is the separation for two-point quantities.  ``sign`` multiplies the
    bare expectation value; :func:`driving_term` uses it to make the average
    equal to ``de/dg`` exactly.
    """

    kind: ObservableKind
    r: int = 0
    sign: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ObservableKind(self.kind))
        if int(self.r) != self.r or self.r < 0:
            raise ModelError(f"separation r must be a non-negative integer, got {self.r}")
        object.__setattr__(self, "r", int(self.r))
        if self.kind in _SEPARATED and self.r < 1:
            raise ModelError(f"{self.kind.value} needs r >= 1")

    def check_length(self, L: int, boundary: Boundary = Boundary.PERIODIC) -> None:
        if Boundary(boundary) is Boundary.PERIODIC and self.r > L // 2:
            raise ModelError(f"r={self.r} exceeds L/2={L // 2} on a periodic chain")
        if self.r >= L:
            raise ModelError(f"r={self.r} does not fit in L={L}")


def driving_term(model: ModelSpec, name: str) -> ObservableSpec:
    """Per-site observable whose ground-state average is ``de/dg`` for coupling ``name``.

    For the TFIM the field enters as ``-h sz``, so the returned observable is
    ``magnetization_z`` with ``sign=-1``.
    """
    model.coupling(name)
    if model.family is Family.TFIM:
        return ObservableSpec(ObservableKind.MAGNETIZATION_Z, sign=-1.0)
    if name == "D":
        return ObservableSpec(ObservableKind.SZ_SQUARED)
    return ObservableSpec(ObservableKind.SZSZ_NN)
