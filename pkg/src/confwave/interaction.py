"""Interaction coefficients of the cubic nonlinearity.

S(j,k,l,m) is the projection of sin jx sin kx sin lx / sin^2 x onto
sin mx, i.e. (2/pi) times the integral of the four-sine product divided
by sin^2 x over (0, pi).  A closed form exists in terms of the signed
half-minimum function; a quadrature oracle verifies it numerically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .algebra import RAT_ZERO, Rational


def m_func(j: int, k: int) -> Rational:
    """Signed half-minimum: sgn(j) sgn(k) min(|j|,|k|) / 2 (zero arguments give 0)."""
    if j == 0 or k == 0:
        return RAT_ZERO
    sign = 1 if (j > 0) == (k > 0) else -1
    return Rational(sign * min(abs(j), abs(k)), 2)


def s_coeff(j: int, k: int, l: int, m: int) -> Rational:
    """Closed-form interaction coefficient; vanishes for odd index-parity sum."""
    if min(j, k, l, m) < 1:
        raise ValueError("interaction indices must be positive")
    if (j + k + l + m) % 2:
        return RAT_ZERO
    return (
        m_func(j + k - l, m)
        + m_func(j - k + l, m)
        + m_func(-j + k + l, m)
        - m_func(j + k + l, m)
    )


def s_quadrature_oracle(j: int, k: int, l: int, m: int) -> float:
    """Adaptive quadrature of the defining integral.

    The integrand extends continuously to the endpoints (the numerator
    vanishes to higher order than sin^2 x); the Gauss-Kronrod rule never
    samples x = 0 or x = pi itself.
    """

    def integrand(x: float) -> float:
        s = np.sin(x)
        return np.sin(j * x) * np.sin(k * x) * np.sin(l * x) * np.sin(m * x) / (s * s)

    val, _ = quad(integrand, 0.0, np.pi, epsabs=1e-13, epsrel=1e-13, limit=400)
    return 2.0 / np.pi * val


@dataclass
class InteractionTable:
    """Bounded cache of interaction coefficients.

    Entries are stored canonically with the three product wavenumbers
    sorted; the projection index m is free.  Lookups beyond max_index
    fault (table too small), mirroring a fixed-size precomputed table.
    """

    max_index: int
    values: dict[tuple[int, int, int, int], Rational] = field(default_factory=dict)

    def value(self, j: int, k: int, l: int, m: int) -> Rational:
        a, b, c = sorted((j, k, l))
        if c > self.max_index:
            raise KeyError(
                f"interaction table too small: index {c} > max_index {self.max_index}"
            )
        if m >= a + b + c - 1:
            return RAT_ZERO
        key = (a, b, c, m)
        cached = self.values.get(key)
        if cached is None:
            cached = self.values[key] = s_coeff(a, b, c, m)
        return cached


def build_table(max_index: int) -> InteractionTable:
    """Populate all canonical entries with product indices <= max_index."""
    if max_index < 1:
        raise ValueError("max_index must be >= 1")
    table = InteractionTable(max_index)
    for a in range(1, max_index + 1):
        for b in range(a, max_index + 1):
            for c in range(b, max_index + 1):
                top = a + b + c - 2
                start = 2 - (a + b + c) % 2
                for m in range(start, top + 1, 2):
                    table.values[(a, b, c, m)] = s_coeff(a, b, c, m)
    return table
