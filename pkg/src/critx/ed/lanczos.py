"""Lanczos iteration with full reorthogonalization."""
from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from ..models import ModelSpec
from .basis import SectorBasis
from .hamiltonian import HamiltonianOperator


class LanczosError(RuntimeError):
    """Raised when the requested eigenpairs do not converge."""

    def __init__(self, message: str, best_residual: float):
        super().__init__(f"{message} (best residual {best_residual:.3e})")
        self.best_residual = best_residual


@dataclass(frozen=True)
class LanczosOptions:
    n_eigs: int = 1
    max_iter: int = 500
    tol: float = 1e-10
    reorthogonalize: bool = True
    seed: int = 1234

    def __post_init__(self):
        if not 1 <= self.n_eigs <= 4:
            raise ValueError("n_eigs must be between 1 and 4")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")


@dataclass(frozen=True)
class GroundStateResult:
    energies: np.ndarray
    vectors: np.ndarray  # shape (n_eigs, dim), unit norm rows
    residuals: np.ndarray
    iterations: int = 0
    ritz_history: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)

    @property
    def ground_energy(self) -> float:
        return float(self.energies[0])

    @property
    def ground_vector(self) -> np.ndarray:
        return self.vectors[0]


_workspace = threading.local()


def _krylov_buffer(rows: int, dim: int) -> np.ndarray:
    """Reusable ``(rows, dim)`` storage; touching fresh pages is the dominant cost otherwise."""
    buf = getattr(_workspace, "buf", None)
    if buf is None or buf.shape[1] != dim or buf.shape[0] < rows:
        old_rows = 0 if buf is None or buf.shape[1] != dim else buf.shape[0]
        buf = np.empty((max(rows, 2 * old_rows), dim))
        _workspace.buf = buf
    return buf


def _orthogonalize(w, V, m, passes, tmp):
    for _ in range(passes):
        np.dot(V[:m] @ w, V[:m], out=tmp)
        w -= tmp
    return w


def _lowest_pair(op, dim, V, base, opts, rng, tmp, w):
    """Lowest eigenpair of ``op`` on the complement of the locked rows ``V[:base]``.

    Krylov vectors are stored in ``V[base:]``.  Returns ``(theta, vector,
    residual, iterations, ritz_history, V)``; ``V`` may have been regrown.
    """
    room = dim - base
    cap = min(room, opts.max_iter)
    alphas, betas = [], []  # betas[m] couples Krylov vectors m and m+1
    history = []
    passes = 2 if opts.reorthogonalize else 0

    def fresh(n):
        x = rng.standard_normal(dim)
        x = _orthogonalize(x, V, n, 2, tmp)
        return x / np.linalg.norm(x)

    V[base] = fresh(base)
    best = np.inf
    est = np.array([np.inf])
    m = 0
    check_every = 5
    while True:
        j = base + m
        op(V[j], w)
        if m:
            np.multiply(V[j - 1], betas[m - 1], out=tmp)
            w -= tmp
        a = float(V[j] @ w)
        np.multiply(V[j], a, out=tmp)
        w -= tmp
        alphas.append(a)
        if passes:
            _orthogonalize(w, V, j + 1, passes, tmp)
        elif base:
            _orthogonalize(w, V, base, 1, tmp)
        b = float(np.linalg.norm(w))
        m += 1

        # tolerance on b follows the operator scale, estimated from |alpha|
        scale = max(1.0, max(abs(x) for x in alphas))
        closed = b < 1e-12 * scale or m == room
        if closed or m % check_every == 0 or m >= opts.max_iter:
            theta, S = eigh_tridiagonal(np.array(alphas), np.array(betas[:m - 1]))
            history.append(theta[0])
            est = np.abs(b * S[-1, :1])
            if closed:
                est[:] = 0.0
            if est[0] <= 0.1 * opts.tol or closed:
                vec = S[:, 0] @ V[base:base + m]
                vec /= np.linalg.norm(vec)
                op(vec, tmp)
                tmp -= theta[0] * vec
                res = float(np.linalg.norm(tmp))
                best = min(best, res)
                if res <= opts.tol:
                    return theta[0], vec, res, m, history, V
        if m >= cap:
            raise LanczosError(f"Lanczos did not converge in {m} iterations",
                               best if np.isfinite(best) else float(est[0]))
        if base + m >= V.shape[0]:
            grown = _krylov_buffer(min(2 * V.shape[0], dim + 1), dim)
            grown[:base + m] = V[:base + m]
            V = grown
        if closed:
            betas.append(0.0)
            V[base + m] = fresh(base + m)
        else:
            betas.append(b)
            np.divide(w, b, out=V[base + m])


def lanczos(op, dim: int, opts: LanczosOptions = LanczosOptions()) -> GroundStateResult:
    """Lowest ``opts.n_eigs`` eigenpairs of the symmetric operator ``op``.

    Eigenpairs are found one at a time.  Each converged vector is locked and
    later runs stay orthogonal to it, so degenerate levels are returned with
    their multiplicity (a single Krylov space holds one vector per distinct
    eigenvalue).  When a Krylov space closes before convergence, the
    iteration continues from a fresh random vector orthogonal to everything
    built so far.
    """
    k = opts.n_eigs
    if dim < k:
        raise ValueError(f"sector dim {dim} smaller than n_eigs={k}")
    if dim == 1:
        e = np.zeros(1)
        op(np.ones(1), e)
        return GroundStateResult(np.array([e[0]]), np.ones((1, 1)), np.zeros(1), 0,
                                 np.array([e[0]]))

    rng = np.random.default_rng(opts.seed)
    V = _krylov_buffer(min(dim, opts.max_iter) + k if k > 1 else min(dim + 1, 64), dim)
    w = np.empty(dim)
    tmp = np.empty(dim)
    energies, vectors, residuals, history = [], [], [], []
    iterations = 0
    for i in range(k):
        theta, vec, res, its, hist, V = _lowest_pair(op, dim, V, i, opts, rng, tmp, w)
        V[i] = vec
        energies.append(theta)
        vectors.append(vec.copy())
        residuals.append(res)
        iterations += its
        if i == 0:
            history = hist
    order = np.argsort(energies, kind="stable")
    return GroundStateResult(np.array(energies)[order], np.array(vectors)[order],
                             np.array(residuals)[order], iterations, np.array(history))


def lanczos_lowest(model: ModelSpec, basis: SectorBasis,
                   opts: LanczosOptions = LanczosOptions()) -> GroundStateResult:
    """Lowest eigenpairs of ``model`` restricted to ``basis``."""
    op = HamiltonianOperator(model, basis)
    return lanczos(op.matvec, basis.dim, opts)
