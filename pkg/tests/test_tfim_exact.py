import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import optimize, special

from critx import tfim_exact as te

from .oracles import SX, SY, SZ, dense_tfim, parity_projected, two_site_expectation, site_op


# ---------------------------------------------------------------- momenta, dispersion


def test_momenta_small_chains():
    np.testing.assert_allclose(te.momenta(2).momenta, [np.pi / 2, 3 * np.pi / 2])
    np.testing.assert_allclose(te.momenta(4).momenta, np.pi * np.array([1, 3, 5, 7]) / 4)


@pytest.mark.parametrize("L", [3, 0, -2, 2.5])
def test_momenta_rejects_bad_length(L):
    with pytest.raises(ValueError):
        te.momenta(L)


@given(st.integers(1, 200))
def test_momenta_symmetric_and_inside_circle(half):
    k = te.momenta(2 * half).momenta
    assert k.size == 2 * half
    assert np.all((k > 0) & (k < 2 * np.pi))
    np.testing.assert_allclose(np.sort(2 * np.pi - k), k, atol=1e-12)


def test_dispersion_values():
    assert te.dispersion(1.0, np.pi) == pytest.approx(2.0)
    np.testing.assert_allclose(te.dispersion(0.0, np.linspace(0, 6, 7)), 1.0)
    assert te.dispersion(1.0, 0.0) == 0.0


@given(h=st.floats(0.05, 20), k=st.floats(0, 2 * np.pi))
def test_dispersion_duality(h, k):
    assert te.dispersion(h, k) == pytest.approx(h * te.dispersion(1 / h, k), rel=1e-12, abs=1e-14)


# ---------------------------------------------------------------- energies and magnetization


def test_energy_density_examples():
    assert te.energy_density(0.0, 2) == pytest.approx(-1.0, abs=1e-15)
    assert te.energy_density(1.0, 2) == pytest.approx(-math.sqrt(2), abs=1e-15)
    assert te.energy_density(1.0) == pytest.approx(-4 / math.pi, abs=1e-12)


@pytest.mark.parametrize("h", [0.0, 0.3, 0.9, 0.999, 1.0, 1.001, 1.5, 4.0])
def test_infinite_energy_matches_elliptic_closed_form(h):
    m = 4 * h / (1 + h) ** 2
    closed = -2 / np.pi * (1 + h) * special.ellipe(m)
    assert te.energy_density(h) == pytest.approx(closed, abs=1e-12)


@pytest.mark.parametrize("h", [0.2, 0.8, 0.97, 1.0, 1.03, 1.6, 3.0])
def test_infinite_magnetization_is_minus_derivative_of_closed_form(h):
    def e(x):
        return -2 / mpmath.pi * (1 + x) * mpmath.ellipe(4 * x / (1 + x) ** 2)

    with mpmath.workdps(30):
        if h == 1.0:
            ref = 2 / mpmath.pi
        else:
            ref = -mpmath.diff(e, h)
    assert te.magnetization_z(h) == pytest.approx(float(ref), abs=1e-10)


def test_magnetization_examples():
    for L in (2, 4, 10, 50):
        assert te.magnetization_z(0.0, L) == pytest.approx(0.0, abs=1e-14)
    assert te.magnetization_z(1.0) == pytest.approx(2 / math.pi, abs=1e-12)
    assert te.magnetization_z(1.0, 2) == pytest.approx(1 / math.sqrt(2), abs=1e-15)


def test_hellmann_feynman_random_pairs():
    rng = np.random.default_rng(7)
    d = 1e-6
    for _ in range(50):
        h = rng.uniform(0.0, 3.0)
        L = 2 * int(rng.integers(1, 60))
        fd = -(te.energy_density(h + d, L) - te.energy_density(h - d, L)) / (2 * d)
        assert te.magnetization_z(h, L) == pytest.approx(fd, abs=1e-8)


# ---------------------------------------------------------------- dense ED oracle


def _even_ground(L, h):
    H = dense_tfim(L, h)
    Hs, keep = parity_projected(H, L, +1)
    w, v = np.linalg.eigh(Hs)
    psi = np.zeros(2 ** L)
    psi[keep] = v[:, 0]
    return w[0], psi


@pytest.mark.parametrize("L", [2, 4, 6, 8, 10])
@pytest.mark.parametrize("h", [0.5, 0.9, 1.0, 1.1, 2.0])
def test_against_dense_even_sector(L, h):
    E0, psi = _even_ground(L, h)
    assert te.energy_density(h, L) == pytest.approx(E0 / L, abs=1e-10)
    mz = float(psi @ site_op(SZ, 0, L) @ psi)
    assert te.magnetization_z(h, L) == pytest.approx(mz, abs=1e-10)
    table = te.ContractionTable.build(h, L, L // 2 + 1)
    assert table[0] == pytest.approx(mz, abs=1e-12)
    for r in range(1, L // 2 + 1):
        for axis, op in (("x", SX), ("y", SY), ("z", SZ)):
            ref = two_site_expectation(psi, op, op, 0, r, L)
            assert te.correlator(axis, r, h, L, table) == pytest.approx(ref, abs=1e-8), (axis, r)


@pytest.mark.parametrize("L", [2, 4, 6, 8])
@pytest.mark.parametrize("h", [0.3, 1.0, 1.7])
def test_odd_sector_energy_against_dense(L, h):
    Hs, _ = parity_projected(dense_tfim(L, h), L, -1)
    assert te.odd_sector_energy(h, L) == pytest.approx(np.linalg.eigvalsh(Hs)[0], abs=1e-10)


def test_xx_r2_example_against_dense():
    _, psi = _even_ground(8, 1.05)
    ref = two_site_expectation(psi, SX, SX, 0, 2, 8)
    assert te.correlator("x", 2, 1.05, 8) == pytest.approx(ref, abs=1e-8)


# ---------------------------------------------------------------- contractions and correlators


def test_contraction_limits():
    assert te.contraction(1e6, 20, 0) == pytest.approx(1.0, abs=1e-5)
    assert te.contraction(1e6, 20, 0) < 1.0
    for h in (0.4, 1.0, 2.2):
        assert te.contraction(h, 16, 0) == pytest.approx(te.magnetization_z(h, 16), abs=1e-12)
    with pytest.raises(ValueError):
        te.contraction(1.0, 8, 9)


@given(h=st.floats(0.0, 5.0), half=st.integers(1, 20))
@settings(max_examples=50)
def test_contraction_bounded(h, half):
    L = 2 * half
    table = te.ContractionTable.build(h, L, L)
    assert max(abs(v) for v in table.G.values()) <= 1 + 1e-12


def test_correlator_limits():
    for r in (1, 3, 7):
        assert te.correlator("z", r, 1e7, 20) == pytest.approx(1.0, abs=1e-6)
    assert te.correlator("x", 1, 0.0, 12) == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("r", [0, 5, -1])
def test_correlator_range(r):
    with pytest.raises(ValueError):
        te.correlator("x", r, 1.0, 8)


def test_correlator_axis_and_size_limits():
    with pytest.raises(ValueError):
        te.correlator("w", 1, 1.0, 8)
    with pytest.raises(ValueError):
        te.correlator("x", 65, 1.0, 200)
    assert abs(te.correlator("x", 64, 1.0, 200)) < 1


# ---------------------------------------------------------------- correlation length and asymptotics


def test_correlation_length():
    assert te.correlation_length(1.0) == math.inf
    with pytest.raises(ValueError):
        te.correlation_length(0.0)
    # |1-h|/(2 sqrt h) = sinh(1/2) has a root above 1
    h = optimize.brentq(lambda x: (x - 1) / (2 * math.sqrt(x)) - math.sinh(0.5), 1.0, 10.0)
    assert te.correlation_length(h) == pytest.approx(1.0, abs=1e-12)
    for d in (1e-3, 1e-5):
        assert te.correlation_length(1 + d) * d == pytest.approx(1.0, rel=1e-2)


def test_energy_tail_ratio_far_and_near():
    xi = te.correlation_length(1.3)
    L = 20 * math.ceil(xi)
    assert te.energy_tail_ratio(1.3, L) == pytest.approx(1.0, abs=0.05)
    assert abs(te.energy_tail_ratio(1.3, 2) - 1.0) > 0.15
    with pytest.raises(te.TailOverflowError):
        te.energy_tail_ratio(1.3, 2 * int(400 * xi))
    with pytest.raises(ValueError):
        te.energy_tail_ratio(1.0, 10)


@pytest.mark.parametrize("h", [0.6, 1.4])
def test_even_sector_energy_lies_below_thermodynamic_value(h):
    for L in (8, 16, 24):
        assert te.energy_density_mp(h, L) < te.energy_density_mp(h)


def test_energy_density_mp_consistent():
    for h in (0.5, 1.0, 1.9):
        assert float(te.energy_density_mp(h)) == pytest.approx(te.energy_density(h), abs=1e-12)
        assert float(te.energy_density_mp(h, 14)) == pytest.approx(te.energy_density(h, 14), abs=1e-13)


def test_expansion_examples():
    assert te.mz_critical_expansion(1.0) == 2 / math.pi
    for L in (10, 50, 100):
        assert te.mz_finite_size_critical(1.0, L) == pytest.approx(2 / math.pi + math.pi / (12 * L * L))
    L, d = 100, 1e-3
    slope = (te.mz_finite_size_critical(1 + d, L) - te.mz_finite_size_critical(1 - d, L)) / (2 * d)
    assert slope == pytest.approx((math.log(100) + math.log(8 / math.pi) + 0.5772156649 - 1) / math.pi)


@pytest.mark.parametrize("d", [-0.01, -0.003, 0.003, 0.01])
def test_expansion_tracks_exact_magnetization(d):
    # error of the first-order expansion is O(d^2 ln|d|)
    assert te.magnetization_z(1 + d) == pytest.approx(te.mz_critical_expansion(1 + d), abs=5 * d * d * abs(math.log(abs(d))))


def test_crossing_law():
    rows = []
    for L in (10, 20, 40, 80, 160):
        hs = optimize.brentq(lambda h: te.magnetization_z(h, L) - te.magnetization_z(h, L + 2),
                             0.99, 1.1, xtol=1e-15)
        rows.append((L, (hs - 1 - math.pi ** 2 / 6 / L ** 2) * L ** 3))
    c = [v for _, v in rows]
    # L^3 * deviation settles on a constant
    assert all(abs(v) < 3.5 for v in c)
    assert abs(c[-1] - c[-2]) < abs(c[1] - c[0])
