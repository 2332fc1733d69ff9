import math

import numpy as np
import pytest
from scipy.integrate import quad, solve_ivp

from confwave.duffing import (
    DuffingSolution,
    amplitude_from_frequency,
    complete_elliptic_K,
    duffing_energy,
    duffing_frequency,
    duffing_kappa,
    duffing_profile,
    jacobi_cn,
)


def K_quadrature(kappa: float) -> float:
    val, _ = quad(
        lambda t: 1.0 / math.sqrt(1.0 - (kappa * math.sin(t)) ** 2),
        0.0,
        math.pi / 2,
        epsabs=1e-14,
        epsrel=1e-14,
    )
    return val


def test_elliptic_K_at_zero():
    assert complete_elliptic_K(0.0) == pytest.approx(math.pi / 2, abs=1e-15)


@pytest.mark.parametrize("kappa", [0.1, 1 / math.sqrt(2)])
def test_elliptic_K_against_quadrature(kappa):
    assert abs(complete_elliptic_K(kappa) - K_quadrature(kappa)) < 1e-12


def test_elliptic_K_domain():
    with pytest.raises(ValueError):
        complete_elliptic_K(1.0)


def test_frequency_linear_limit():
    assert duffing_frequency(0.0) == 1.0


def test_frequency_small_amplitude_expansion():
    assert abs(duffing_frequency(0.1) - (1 + 3 * 0.01 / 8)) < 1e-4


def test_frequency_large_amplitude_asymptote():
    asym = math.sqrt(2 * math.pi) * 100 * math.gamma(0.75) / math.gamma(0.25)
    assert abs(duffing_frequency(100.0) / asym - 1) < 0.01


def test_energy_closed_form():
    assert duffing_energy(0.0) == 0.0
    assert duffing_energy(1.0) == pytest.approx(3 * math.pi / 8, rel=1e-15)
    assert duffing_energy(2.0) == pytest.approx(3 * math.pi, rel=1e-15)


def test_profile_initial_data():
    assert duffing_profile(0.7, 0.0) == pytest.approx(0.7, abs=1e-15)


def test_profile_quarter_period():
    eps = 0.9
    kappa = duffing_kappa(eps)
    t_quarter = complete_elliptic_K(kappa) / math.sqrt(1 + eps * eps)
    assert abs(duffing_profile(eps, t_quarter)) < 1e-10


def _integrate_oscillator(eps: float, t_end: float):
    return solve_ivp(
        lambda t, y: [y[1], -y[0] - y[0] ** 3],
        (0.0, t_end),
        [eps, 0.0],
        method="DOP853",
        rtol=1e-12,
        atol=1e-14,
        dense_output=True,
    )


def test_profile_against_ode_oracle():
    eps = 0.5
    sol = _integrate_oscillator(eps, 1.0)
    assert abs(duffing_profile(eps, 1.0) - sol.y[0, -1]) < 1e-9


def test_ode_residual_with_extrapolated_differences():
    # residual normalized by the cubic-term scale: an absolute threshold is
    # unreachable in double precision at the largest amplitudes
    for eps in np.logspace(-3, 3, 50):
        omega = duffing_frequency(float(eps))
        t0 = 0.37 / omega
        h = 1e-3 / omega
        phis = {}
        for step in (h, h / 2):
            vals = [duffing_profile(float(eps), t0 + i * step) for i in (-1, 0, 1)]
            phis[step] = (vals[0] - 2 * vals[1] + vals[2]) / step**2
        # Richardson: eliminate the h^2 error term of the central difference
        second = (4 * phis[h / 2] - phis[h]) / 3
        phi0 = duffing_profile(float(eps), t0)
        residual = second + phi0 + phi0**3
        scale = 1.0 + abs(float(eps)) ** 3
        assert abs(residual) / scale < 1e-8


def test_frequency_monotone():
    eps = np.linspace(0.0, 20.0, 400)
    freqs = [duffing_frequency(float(e)) for e in eps]
    assert all(b > a for a, b in zip(freqs, freqs[1:]))


def test_period_consistency_with_ode():
    eps = 1.3
    omega = duffing_frequency(eps)
    period = 2 * math.pi / omega
    sol = _integrate_oscillator(eps, 1.2 * period)
    # displacement returns to the initial amplitude after one period
    y_end = sol.sol(period)
    assert abs(y_end[0] - eps) < 1e-9 * max(1.0, eps)
    assert abs(y_end[1]) < 1e-9


def test_solution_record_and_inverse():
    d = DuffingSolution.from_amplitude(1.7)
    assert 0 <= d.kappa < 1 / math.sqrt(2)
    assert d.omega > 1
    assert amplitude_from_frequency(d.omega) == pytest.approx(1.7, rel=1e-12)
    assert d.profile(0.0) == pytest.approx(1.7)


def test_cn_large_argument_period_reduction():
    kappa = 0.55
    K = complete_elliptic_K(kappa)
    assert jacobi_cn(0.3 + 8 * K, kappa) == pytest.approx(jacobi_cn(0.3, kappa), abs=1e-11)
