"""Finite-size crossing analysis.

Curves ``O(g; L)`` of the driving-term average cross at ``g*_L`` for
successive sizes; the sequence ``g*_L`` extrapolates to ``g_c``.  This module
finds crossings, fits ``g*_L = g_c + a L^-omega``, estimates derivatives at
``g_c`` and fits their size dependence, checks scaling collapse, and provides
the scaled-gap (PRG) crossing for comparison.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import interpolate, optimize


class FSSError(ValueError):
    pass


class NoCrossingError(FSSError):
    pass


class MultipleCrossingsError(FSSError):
    def __init__(self, brackets):
        self.brackets = list(brackets)
        listed = ", ".join(f"[{lo:.10g}, {hi:.10g}]" for lo, hi in self.brackets)
        super().__init__(f"{len(self.brackets)} sign changes in bracket: {listed}")


class BKTError(FSSError):
    pass


@dataclass(frozen=True, eq=False)
class ObservableSeries:
    """Observable sampled on a strictly increasing grid at fixed ``L``."""

    L: int
    param_name: str
    grid: np.ndarray
    values: np.ndarray
    model: str = ""

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.ndim != 1 or g.shape != v.shape:
            raise FSSError("grid and values must be 1D arrays of equal length")
        if g.size < 4:
            raise FSSError(f"need at least 4 samples, got {g.size}")
        if np.any(np.diff(g) <= 0):
            raise FSSError("grid must be strictly increasing (no duplicate points)")
        if not np.all(np.isfinite(v)):
            raise FSSError("values must be finite")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    @classmethod
    def sample(cls, f: Callable[[float], float], L: int, grid, param_name: str = "g",
               model: str = "") -> "ObservableSeries":
        grid = np.asarray(grid, dtype=float)
        return cls(L, param_name, grid, np.array([f(x) for x in grid]), model)


@dataclass(frozen=True)
class CrossingPoint:
    L_small: int
    L_large: int
    g_star: float
    value_at_crossing: float
    bracket: tuple[float, float]


@dataclass(frozen=True)
class PowerLawFit:
    g_c: float
    amplitude: float
    exponent: float
    covariance: np.ndarray = field(repr=False)
    residual_norm: float = 0.0

    @property
    def stderr(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))


def interpolate_series(series: ObservableSeries) -> interpolate.PchipInterpolator:
    """Shape-preserving (monotone) cubic interpolant of the samples."""
    return interpolate.PchipInterpolator(series.grid, series.values, extrapolate=False)


# alternative name used by callers that think in curves
interpolate_curve = interpolate_series


def _sign_change_brackets(f, lo, hi, nodes):
    xs = np.unique(np.concatenate([[lo, hi], nodes[(nodes > lo) & (nodes < hi)]]))
    # refine between nodes so that a pair of roots inside one cell is still seen
    fine = np.concatenate([np.linspace(a, b, 9)[:-1] for a, b in zip(xs[:-1], xs[1:])] + [[hi]])
    vals = np.array([f(x) for x in fine])
    brackets = []
    i = 0
    while i < len(fine) - 1:
        if vals[i] == 0.0:
            brackets.append((fine[i], fine[i]))
            i += 1
            continue
        if vals[i] * vals[i + 1] < 0:
            brackets.append((fine[i], fine[i + 1]))
        i += 1
    if vals[-1] == 0.0:
        brackets.append((fine[-1], fine[-1]))
    return brackets


def _root(f, a, b):
    if a == b:
        return a
    return optimize.brentq(f, a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)


def find_roots(f: Callable[[float], float], bracket, nodes=None) -> list[float]:
    lo, hi = map(float, bracket)
    if not lo < hi:
        raise FSSError(f"empty bracket [{lo}, {hi}]")
    nodes = np.linspace(lo, hi, 65) if nodes is None else np.asarray(nodes, dtype=float)
    return [_root(f, a, b) for a, b in _sign_change_brackets(f, lo, hi, nodes)]


def crossing_of_functions(f_small: Callable[[float], float], f_large: Callable[[float], float],
                          L_small: int, L_large: int, bracket, nodes=None) -> CrossingPoint:
    """Unique root of ``f_small - f_large`` inside ``bracket``."""
    lo, hi = map(float, bracket)
    if not lo < hi:
        raise FSSError(f"empty bracket [{lo}, {hi}]")

    def diff(x):
        return f_small(x) - f_large(x)

    nodes = np.linspace(lo, hi, 65) if nodes is None else np.asarray(nodes, dtype=float)
    brackets = _sign_change_brackets(diff, lo, hi, nodes)
    if not brackets:
        raise NoCrossingError(f"no sign change of O(L={L_small}) - O(L={L_large}) "
                              f"in [{lo:.10g}, {hi:.10g}]")
    if len(brackets) > 1:
        raise MultipleCrossingsError(brackets)
    g = _root(diff, *brackets[0])
    return CrossingPoint(L_small, L_large, g, 0.5 * (f_small(g) + f_large(g)), (lo, hi))


def crossing(series_a: ObservableSeries, series_b: ObservableSeries, bracket) -> CrossingPoint:
    """Crossing of two interpolated series of different sizes."""
    if series_a.L == series_b.L:
        raise FSSError("series must have different L")
    lo, hi = map(float, bracket)
    for s in (series_a, series_b):
        if lo < s.grid[0] or hi > s.grid[-1]:
            raise FSSError(f"bracket [{lo}, {hi}] not covered by the L={s.L} grid")
    small, large = sorted((series_a, series_b), key=lambda s: s.L)
    fa, fb = interpolate_series(small), interpolate_series(large)
    nodes = np.union1d(small.grid, large.grid)
    return crossing_of_functions(lambda x: float(fa(x)), lambda x: float(fb(x)),
                                 small.L, large.L, (lo, hi), nodes)


def _power_law(L, g_c, a, omega):
    return g_c + a * L ** (-omega)


def extrapolate_crossings(points: Sequence[CrossingPoint], size: str = "mean") -> PowerLawFit:
    """Fit ``g*_L = g_c + a L^-omega`` to a crossing sequence.

    ``size`` chooses the abscissa attached to a pair ``(L, L')``: ``"mean"``
    (default, ``(L + L')/2``), ``"small"`` or ``"large"``.  The labels differ
    at order ``L^-3`` and ``"mean"`` absorbs the asymmetric part of it.  The
    start values come from a log-log fit of consecutive differences of ``g*``.
    """
    if size not in ("mean", "small", "large"):
        raise FSSError(f"size must be 'mean', 'small' or 'large', got {size!r}")
    pts = sorted(points, key=lambda p: p.L_small)
    if len(pts) < 4:
        raise FSSError(f"need at least 4 crossing points, got {len(pts)}")
    Ls = np.array([{"small": p.L_small, "large": p.L_large,
                    "mean": 0.5 * (p.L_small + p.L_large)}[size] for p in pts], dtype=float)
    if len(np.unique(Ls)) != len(Ls):
        raise FSSError("crossing points must have distinct sizes")
    g = np.array([p.g_star for p in pts])
    return fit_power_law_offset(Ls, g)


def fit_power_law_offset(Ls, y) -> PowerLawFit:
    Ls = np.asarray(Ls, dtype=float)
    y = np.asarray(y, dtype=float)
    # d(g*)/dL ~ -omega a L^(-omega-1): slope of log|diff| vs log(mid L) gives -(omega+1)
    dy = np.diff(y) / np.diff(Ls)
    mid = 0.5 * (Ls[1:] + Ls[:-1])
    ok = dy != 0
    if ok.sum() >= 2:
        slope, icpt = np.polyfit(np.log(mid[ok]), np.log(np.abs(dy[ok])), 1)
        omega0 = max(-slope - 1.0, 0.1)
        a0 = -np.sign(np.mean(dy[ok])) * math.exp(icpt) / omega0
    else:
        omega0, a0 = 1.0, 0.0
    g0 = y[-1] - a0 * Ls[-1] ** (-omega0)

    scale = max(np.max(np.abs(y - y.mean())), 1e-300)

    def resid(p):
        return (_power_law(Ls, *p) - y) / scale

    try:
        sol = optimize.least_squares(resid, [g0, a0, omega0], method="lm",
                                     xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=20000)
    except ValueError as exc:
        raise FSSError(f"fit failed: {exc}") from exc
    if not sol.success or not np.all(np.isfinite(sol.x)):
        raise FSSError(f"power-law fit diverged: {sol.message}")
    J = sol.jac * scale
    res = (_power_law(Ls, *sol.x) - y)
    dof = max(len(y) - 3, 1)
    s2 = float(res @ res) / dof
    try:
        cov = np.linalg.pinv(J.T @ J) * s2
    except np.linalg.LinAlgError:
        cov = np.full((3, 3), np.inf)
    cov = 0.5 * (cov + cov.T)
    return PowerLawFit(float(sol.x[0]), float(sol.x[1]), float(sol.x[2]), cov,
                       float(np.linalg.norm(res)))


def derivative(series: ObservableSeries, order: int, at: float) -> float:
    """Derivative of the sampled curve at an interior point.

    Order 1 differentiates the monotone cubic interpolant; order 2 a natural
    cubic spline through the samples.
    """
    if order not in (1, 2):
        raise FSSError(f"derivative order must be 1 or 2, got {order}")
    if not series.grid[0] < at < series.grid[-1]:
        raise FSSError(f"g={at} is not interior to the grid [{series.grid[0]}, {series.grid[-1]}]")
    if order == 1:
        return float(interpolate_series(series).derivative()(at))
    spline = interpolate.CubicSpline(series.grid, series.values, bc_type="natural")
    return float(spline(at, 2))


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    stderr: float


def _linear_fit(x, y) -> SlopeFit:
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - A @ coef
    dof = len(x) - 2
    s2 = float(res @ res) / dof if dof > 0 else 0.0
    cov = s2 * np.linalg.inv(A.T @ A)
    return SlopeFit(float(coef[0]), float(coef[1]), float(math.sqrt(max(cov[0, 0], 0.0))))


def _check_sizes(points):
    pts = sorted((float(L), float(y)) for L, y in points)
    if len(pts) < 3:
        raise FSSError(f"need at least 3 sizes, got {len(pts)}")
    Ls = np.array([p[0] for p in pts])
    if len(np.unique(Ls)) != len(Ls) or np.any(Ls <= 0):
        raise FSSError("sizes must be distinct and positive")
    return Ls, np.array([p[1] for p in pts])


def fit_log_slope(points) -> SlopeFit:
    """Least squares ``y = s ln L + b``."""
    Ls, y = _check_sizes(points)
    return _linear_fit(np.log(Ls), y)


def fit_power_slope(points) -> SlopeFit:
    """Least squares ``ln y = b ln L + ln a``; returns ``(b, a, stderr(b))``."""
    Ls, y = _check_sizes(points)
    if np.any(y <= 0):
        raise FSSError("power-law fit needs positive values")
    fit = _linear_fit(np.log(Ls), np.log(y))
    return SlopeFit(fit.slope, math.exp(fit.intercept), fit.stderr)


EXPONENT_TOL = 1e-12
NEAR_BKT_K = 1.9


@dataclass(frozen=True)
class ExponentSet:
    """Critical exponents with ``rho = (d + zeta) nu - 1`` and, given ``K``,
    ``rho = K/(2-K)``, ``nu = 1/(2-K)``."""

    d: int = 1
    zeta: float = 1.0
    nu: float = 1.0
    rho: float = 1.0
    K: float | None = None

    def __post_init__(self):
        if self.nu <= 0:
            raise FSSError("nu must be positive")
        if self.K is not None:
            if abs(self.rho - self.K / (2 - self.K)) > EXPONENT_TOL:
                raise FSSError("rho inconsistent with K")
            if abs(self.nu - 1 / (2 - self.K)) > EXPONENT_TOL:
                raise FSSError("nu inconsistent with K")

    @property
    def rho_over_nu(self) -> float:
        return self.rho / self.nu

    @property
    def near_bkt(self) -> bool:
        return self.K is not None and self.K >= NEAR_BKT_K


def exponent_set_from_K(K: float, d: int = 1, zeta: float = 1.0) -> ExponentSet:
    if not 0 < K:
        raise FSSError(f"K must be positive, got {K}")
    if K >= 2:
        raise BKTError(f"K={K} is at or beyond the BKT point K=2; "
                       "power-law crossings degenerate there (level spectroscopy needed)")
    return ExponentSet(d=d, zeta=zeta, nu=1.0 / (2.0 - K), rho=K / (2.0 - K), K=K)


def exponent_set_from_nu(d: int, zeta: float, nu: float) -> ExponentSet:
    if not nu > 0:
        raise FSSError(f"nu must be positive, got {nu}")
    return ExponentSet(d=d, zeta=zeta, nu=nu, rho=(d + zeta) * nu - 1.0)


def K_from_derivative_exponent(b: float) -> float:
    """``K`` from the size exponent ``b = (1 - rho)/nu = 2 - 2K`` of ``dO/dg`` at ``g_c``."""
    return (2.0 - b) / 2.0


def scaling_collapse(series_set: Sequence[ObservableSeries], g_c: float, rho_over_nu: float,
                     nu: float, n_points: int = 200) -> float:
    """Relative mean squared spread of rescaled curves ``(L^{1/nu}(g-g_c), L^{rho/nu} O)``.

    Curves are compared on the x-range covered by all of them, each evaluated
    through its monotone cubic interpolant.  The variance across curves,
    averaged over ``n_points`` abscissae, is divided by the mean square of
    the rescaled values so that shrinking every curve (smaller ``rho/nu``)
    does not count as a better collapse.  Lower is better.
    """
    if len(series_set) < 3:
        raise FSSError("scaling collapse needs at least 3 series")
    curves = []
    for s in series_set:
        if not s.grid[0] <= g_c <= s.grid[-1]:
            raise FSSError(f"g_c={g_c} outside the L={s.L} grid")
        x = s.L ** (1.0 / nu) * (s.grid - g_c)
        y = s.L ** rho_over_nu * s.values
        curves.append(interpolate.PchipInterpolator(x, y, extrapolate=False))
    lo = max(c.x[0] for c in curves)
    hi = min(c.x[-1] for c in curves)
    if not lo < hi:
        raise FSSError("rescaled curves have no overlap region")
    xs = np.linspace(lo, hi, n_points)
    ys = np.array([c(xs) for c in curves])
    spread = float(np.mean(np.var(ys, axis=0)))
    norm = float(np.mean(ys ** 2))
    return spread / norm if norm > 0 else spread


def prg_crossing(gap_a: ObservableSeries, gap_b: ObservableSeries, bracket) -> list[CrossingPoint]:
    """All roots of ``L_a Delta_a(g) - L_b Delta_b(g)`` in ``bracket``.

    Scaled gaps are even around ``g_c`` in the scaling limit and may cross
    twice; at most two roots are expected and more is an error.
    """
    lo, hi = map(float, bracket)
    if not lo < hi:
        raise FSSError(f"empty bracket [{lo}, {hi}]")
    if gap_a.L == gap_b.L:
        raise FSSError("gap series must have different L")
    for s in (gap_a, gap_b):
        if np.any(s.values < 0):
            raise FSSError("gaps must be non-negative")
        if lo < s.grid[0] or hi > s.grid[-1]:
            raise FSSError(f"bracket [{lo}, {hi}] not covered by the L={s.L} grid")
    small, large = sorted((gap_a, gap_b), key=lambda s: s.L)
    fa, fb = interpolate_series(small), interpolate_series(large)

    def diff(x):
        return small.L * float(fa(x)) - large.L * float(fb(x))

    nodes = np.union1d(small.grid, large.grid)
    roots = find_roots(diff, (lo, hi), nodes)
    if not roots:
        raise NoCrossingError(f"scaled gaps of L={small.L} and L={large.L} do not cross "
                              f"in [{lo:.10g}, {hi:.10g}]")
    if len(roots) > 2:
        raise MultipleCrossingsError([(r, r) for r in roots])
    return [CrossingPoint(small.L, large.L, r, small.L * float(fa(r)), (lo, hi)) for r in roots]
