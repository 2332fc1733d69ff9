"""Closed-form single-mode solution bifurcating from the lowest eigenmode.

With the ansatz u = phi(t) sin x the wave equation reduces to the
undamped, unforced Duffing oscillator phi'' + phi + phi^3 = 0, solved by
an elliptic-cosine profile.  The frequency-amplitude and
energy-amplitude relations below serve as analytic oracles for the
Galerkin and series machinery.

The two needed elliptic functions (K and cn) are computed in-repo by
arithmetic-geometric-mean iteration; the relevant modulus range is
kappa < 1/sqrt(2), where both are well conditioned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


def complete_elliptic_K(kappa: float) -> float:
    """Complete elliptic integral of the first kind via AGM iteration."""
    if not 0.0 <= kappa < 1.0:
        raise ValueError(f"modulus must satisfy 0 <= kappa < 1, got {kappa}")
    a, b = 1.0, math.sqrt(1.0 - kappa * kappa)
    for _ in range(50):  # quadratic convergence; tolerance stays above 1 ulp
        if abs(a - b) <= 5e-16 * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return math.pi / (2.0 * a)


def jacobi_cn(u: float, kappa: float) -> float:
    """Jacobi elliptic cn(u, kappa) by the descending AGM method.

    The forward AGM pass builds a_i, c_i; the amplitude phi is recovered
    by the backward recursion phi_{i-1} = (phi_i + asin(c_i/a_i sin phi_i))/2.
    The argument is reduced modulo the 4K period first so the backward
    pass stays accurate for large u.
    """
    if not 0.0 <= kappa < 1.0:
        raise ValueError(f"modulus must satisfy 0 <= kappa < 1, got {kappa}")
    if kappa < 1e-14:
        return math.cos(u)
    K = complete_elliptic_K(kappa)
    u = math.fmod(u, 4.0 * K)
    a, b, c = 1.0, math.sqrt(1.0 - kappa * kappa), kappa
    scale = [(a, c)]
    for _ in range(50):
        if abs(c) <= 5e-16 * a:
            break
        a, b, c = 0.5 * (a + b), math.sqrt(a * b), 0.5 * (a - b)
        scale.append((a, c))
    phi = (2 ** (len(scale) - 1)) * a * u
    for a_i, c_i in reversed(scale[1:]):
        phi = 0.5 * (phi + math.asin(max(-1.0, min(1.0, c_i / a_i * math.sin(phi)))))
    return math.cos(phi)


def duffing_kappa(epsilon: float) -> float:
    """Elliptic modulus of the amplitude-epsilon solution; always < 1/sqrt(2)."""
    return epsilon / math.sqrt(2.0 * (1.0 + epsilon * epsilon))


def duffing_frequency(epsilon: float) -> float:
    """Frequency of the periodic orbit with initial data (epsilon, 0)."""
    if epsilon < 0:
        raise ValueError("amplitude must be >= 0")
    if epsilon == 0.0:
        return 1.0
    kappa = duffing_kappa(epsilon)
    return 0.5 * math.pi * math.sqrt(1.0 + epsilon * epsilon) / complete_elliptic_K(kappa)


def duffing_energy(epsilon: float) -> float:
    """Wave-equation energy of the single-mode solution."""
    if epsilon < 0:
        raise ValueError("amplitude must be >= 0")
    e2 = epsilon * epsilon
    return math.pi * e2 * (2.0 + e2) / 8.0


def duffing_profile(epsilon: float, t: float) -> float:
    """Oscillator displacement at time t for initial data (epsilon, 0)."""
    return epsilon * jacobi_cn(math.sqrt(1.0 + epsilon * epsilon) * t, duffing_kappa(epsilon))


@dataclass(frozen=True)
class DuffingSolution:
    """One point of the exact frequency/energy-amplitude family."""

    epsilon: float
    kappa: float
    omega: float
    energy: float

    @classmethod
    def from_amplitude(cls, epsilon: float) -> "DuffingSolution":
        return cls(
            epsilon=epsilon,
            kappa=duffing_kappa(epsilon),
            omega=duffing_frequency(epsilon),
            energy=duffing_energy(epsilon),
        )

    def profile(self, t: float) -> float:
        return duffing_profile(self.epsilon, t)


def amplitude_from_frequency(omega: float, hi: float = 1e6) -> float:
    """Invert the strictly increasing frequency-amplitude relation by bisection."""
    if omega < 1.0:
        raise ValueError("frequency below the linear limit")
    if omega == 1.0:
        return 0.0
    lo_a, hi_a = 0.0, 1.0
    while duffing_frequency(hi_a) < omega:
        hi_a *= 2.0
        if hi_a > hi:
            raise ValueError("frequency out of invertible range")
    for _ in range(200):
        mid = 0.5 * (lo_a + hi_a)
        if duffing_frequency(mid) < omega:
            lo_a = mid
        else:
            hi_a = mid
        if hi_a - lo_a <= 1e-15 * max(1.0, hi_a):
            break
    return 0.5 * (lo_a + hi_a)
