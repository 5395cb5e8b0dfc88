"""Parameter sweeps of ground-state observables, cached on disk as CSV."""
from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, entanglement, tfim_exact
from .ed import (
    BACKEND,
    LanczosError,
    LanczosOptions,
    SectorError,
    build_sector_basis,
    expectation_local,
    ground_sector,
    lanczos_lowest,
    one_site_rdm,
    two_site_rdm,
)
from .io import SeriesFile, SeriesRecord, SweepConfig, read_series, write_series
from .models import Boundary, Family, ModelSpec, ObservableKind, ObservableSpec

log = logging.getLogger(__name__)

THREADS_ENV = "CRITX_THREADS"


def worker_count() -> int:
    cores = os.cpu_count() or 1
    raw = os.environ.get(THREADS_ENV, str(cores))
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


# ------------------------------------------------------------ evaluation


def evaluate_exact(model: ModelSpec, obs: ObservableSpec) -> float:
    """Free-fermion value for a periodic TFIM chain."""
    h, L = model.coupling("h"), model.L
    kind = obs.kind
    if kind is ObservableKind.ENERGY_DENSITY:
        val = tfim_exact.energy_density(h, L)
    elif kind is ObservableKind.MAGNETIZATION_Z:
        val = tfim_exact.magnetization_z(h, L)
    elif kind is ObservableKind.SZSZ_NN:
        val = tfim_exact.correlator("z", 1, h, L)
    elif kind in (ObservableKind.CORRELATOR_XX, ObservableKind.CORRELATOR_YY,
                  ObservableKind.CORRELATOR_ZZ):
        val = tfim_exact.correlator(kind.value[-1], obs.r, h, L)
    elif kind is ObservableKind.ENTROPY_1SITE:
        val = entanglement.tfim_entropy_1site(h, L)
    elif kind is ObservableKind.CONCURRENCE:
        val = entanglement.tfim_concurrence(obs.r, h, L)
    else:
        raise ValueError(f"{kind.value} has no free-fermion expression")
    return obs.sign * val


def _sites(model: ModelSpec, r: int) -> list[int]:
    if model.boundary is Boundary.PERIODIC:
        return [0]
    return list(range(model.L - r))


def evaluate_state(model: ModelSpec, basis, vector, energy: float, obs: ObservableSpec) -> float:
    """Observable in an ED ground state.

    Periodic chains are translation invariant and use site 0; open chains
    average over every admissible site.
    """
    kind = obs.kind
    if kind is ObservableKind.ENERGY_DENSITY:
        return obs.sign * energy / model.L
    if kind is ObservableKind.ENTROPY_1SITE:
        sites = _sites(model, 0)
        vals = [entanglement.von_neumann_entropy(one_site_rdm(vector, basis, s)) for s in sites]
        return obs.sign * float(np.mean(vals))
    if kind is ObservableKind.CONCURRENCE:
        if model.family is not Family.TFIM:
            raise ValueError("concurrence is defined for spin-1/2 chains")
        sites = _sites(model, obs.r)
        vals = [entanglement.concurrence(two_site_rdm(vector, basis, s, s + obs.r)) for s in sites]
        return obs.sign * float(np.mean(vals))
    reach = 1 if kind is ObservableKind.SZSZ_NN else obs.r
    sites = _sites(model, reach)
    return float(np.mean([expectation_local(vector, basis, obs, s) for s in sites]))


def _evaluate_size(config: SweepConfig, L: int) -> list[float]:
    """All grid values at one size; the sector basis is shared across the grid."""
    grid = config.grid()
    if config.engine == "exact":
        return [evaluate_exact(config.model(L, g), config.observable) for g in grid]
    opts = LanczosOptions(n_eigs=1, max_iter=config.lanczos_max_iter, tol=config.lanczos_tol,
                          seed=config.lanczos_seed)
    first = config.model(L, grid[0])
    basis = build_sector_basis(first, ground_sector(first))
    out = []
    for g in grid:
        model = config.model(L, g)
        try:
            res = lanczos_lowest(model, basis, opts)
            val = evaluate_state(model, basis, res.ground_vector, res.ground_energy,
                                 config.observable)
        except (LanczosError, SectorError, FloatingPointError) as exc:
            log.warning("L=%d %s=%.10g: %s; writing nan", L, config.param_name, g, exc)
            val = math.nan
        out.append(val)
    return out


# ------------------------------------------------------------ driver


@dataclass(frozen=True)
class SweepResult:
    path: Path
    n_computed: int
    cached: bool


def sweep_records(config: SweepConfig, workers: int | None = None) -> list[SeriesRecord]:
    """Records ordered by ``L`` then parameter value."""
    workers = worker_count() if workers is None else workers
    Ls = list(config.L_list)
    if workers > 1 and len(Ls) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(Ls))) as pool:
            columns = list(pool.map(_evaluate_size, [config] * len(Ls), Ls))
    else:
        columns = [_evaluate_size(config, L) for L in Ls]
    grid = config.grid()
    recs = []
    for L, vals in sorted(zip(Ls, columns), key=lambda t: t[0]):
        for g, v in zip(grid, vals):
            recs.append(SeriesRecord(config.family.value, L, config.param_name, float(g),
                                     config.observable.kind.value, config.observable.r, float(v)))
    return recs


def sweep_metadata(config: SweepConfig) -> dict[str, str]:
    meta = {"config_hash": config.config_hash(), "critx_version": __version__,
            "engine": config.engine, "boundary": config.boundary.value}
    for k, v in config.fixed_couplings:
        if k != config.param_name:
            meta[k] = repr(float(v))
    if config.engine == "ed":
        meta["lanczos_tol"] = repr(config.lanczos_tol)
        meta["ed_backend"] = BACKEND
    return meta


def is_cached(config: SweepConfig, path) -> bool:
    path = Path(path)
    if not path.is_file():
        return False
    try:
        existing = read_series(path)
    except (ValueError, OSError):
        return False
    expected = len(config.L_list) * len(config.grid())
    return (existing.meta.get("config_hash") == config.config_hash()
            and len(existing.records) == expected)


def run_sweep(config: SweepConfig, output=None, workers: int | None = None) -> SweepResult:
    """Compute the sweep unless ``output`` already holds it for the same config.

    A file written for a different configuration is replaced.
    """
    path = Path(output if output is not None else config.output)
    if is_cached(config, path):
        log.info("%s is up to date (config hash %s)", path, config.config_hash())
        return SweepResult(path, 0, True)
    recs = sweep_records(config, workers)
    write_series(path, SeriesFile(sweep_metadata(config), recs))
    return SweepResult(path, len(recs), False)
