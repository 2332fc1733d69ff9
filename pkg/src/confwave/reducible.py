"""Closed-form predictions from minimally coupled mode pairs.

A single mode A cos(tau) sin(Nx) truncates the Galerkin system to one
cubic equation whose nontrivial root is the trunk amplitude.  Adding a
second mode B cos(m tau) sin(nx) (m odd >= 3, n of the mode-number
parity) produces a 2x2 algebraic system whose solutions branch off the
trunk at a frequency given in closed form; sweeping the admissible
(m, n) pairs enumerates the predicted branch locations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


def trunk_amplitude(N: int, omega: float) -> float:
    """Single-mode amplitude 2 sqrt((Omega^2 - N^2) / (3N)); exists above onset."""
    if omega <= N:
        raise ValueError(f"trunk requires frequency above the eigenvalue {N}")
    return 2.0 * math.sqrt((omega**2 - N * N) / (3.0 * N))


def trunk_energy(N: int, omega: float) -> float:
    a = trunk_amplitude(N, omega)
    return math.pi * omega**2 * a * a / 4.0


@dataclass(frozen=True)
class TwoModeBranch:
    """Mode pair predicting one branch of the family from eigenmode N."""

    N: int
    m: int  # odd temporal harmonic >= 3 of the second mode
    n: int  # spatial wavenumber, same parity as N
    omega_bif: float
    special_case: bool  # n = 4N: overdetermined pair, single frequency

    @classmethod
    def create(cls, N: int, m: int, n: int) -> "TwoModeBranch":
        _validate_pair(N, m, n)
        return cls(N=N, m=m, n=n, omega_bif=bifurcation_frequency_value(N, m, n),
                   special_case=(n == 4 * N))


def _validate_pair(N: int, m: int, n: int) -> None:
    if m < 3 or m % 2 == 0:
        raise ValueError("temporal harmonic m must be odd and >= 3")
    if (n - N) % 2:
        raise ValueError("wavenumber n must share the parity of N")
    if n < m * N + 2:
        raise ValueError(f"pair ({m},{n}) is not admissible for N={N}: need n >= mN+2")


def bifurcation_frequency_value(N: int, m: int, n: int) -> float:
    """Frequency sqrt((n^2 - 2N^2)/(m^2 - 2)) at which the pair branches off.

    For n = 4N this coincides with the overdetermined-case value
    sqrt(2) N (only m = 3 admits that pair).
    """
    return math.sqrt((n * n - 2.0 * N * N) / (m * m - 2.0))


def bifurcation_frequency(branch: TwoModeBranch) -> float:
    return bifurcation_frequency_value(branch.N, branch.m, branch.n)


def two_mode_amplitudes(branch: TwoModeBranch, omega: float) -> tuple[float, float] | None:
    """Both closed-form amplitudes, or None where either radicand is negative.

    The n = 4N pair is overdetermined (amplitudes fill a curve at one
    frequency) and must be handled by its own relation.
    """
    N, m, n = branch.N, branch.m, branch.n
    if n == 4 * N:
        raise ValueError("n = 4N is the overdetermined special case")
    om2 = omega * omega
    rad_a = ((2 * n - N) * n * N + (n - 2 * m * m * N) * om2) / (3.0 * (n - 4 * N) * N)
    rad_b = (2.0 * N * N - n * n + (m * m - 2) * om2) / (3.0 * (n - 4 * N))
    if rad_a < 0 or rad_b < 0:
        return None
    return 2.0 * math.sqrt(rad_a), 2.0 * math.sqrt(rad_b)


def special_case_amplitude_relation(branch: TwoModeBranch, A: float, B: float) -> float:
    """Residual of the n = 4N amplitude constraint 3A^2 + 6B^2 + 4N - 56N/(m^2-2)."""
    N, m = branch.N, branch.m
    if not branch.special_case:
        raise ValueError("relation applies to the n = 4N pair only")
    return 3 * A * A + 6 * B * B + 4 * N - 56.0 * N / (m * m - 2)


def real_amplitude_interval(branch: TwoModeBranch) -> tuple[float, float]:
    """Frequency interval on which both amplitudes are real.

    Each radicand is linear in the squared frequency, so the interval is
    an intersection of two half-lines mapped through the square root;
    infinities mark unbounded sides.
    """
    N, m, n = branch.N, branch.m, branch.n
    if n == 4 * N:
        value = bifurcation_frequency_value(N, m, n)
        return (value, value)
    bounds: list[tuple[float, float]] = []
    denom_a = 3.0 * (n - 4 * N) * N
    # rad_a = [(2n-N) n N + (n - 2 m^2 N) om2] / denom_a >= 0
    bounds.append(_halfline((2 * n - N) * n * N, n - 2 * m * m * N, denom_a))
    denom_b = 3.0 * (n - 4 * N)
    bounds.append(_halfline(2 * N * N - n * n, m * m - 2, denom_b))
    lo = max(b[0] for b in bounds)
    hi = min(b[1] for b in bounds)
    if hi < lo:
        return (math.nan, math.nan)
    return (math.sqrt(max(lo, 0.0)), math.sqrt(hi) if math.isfinite(hi) else math.inf)


def _halfline(constant: float, slope: float, denom: float) -> tuple[float, float]:
    """Solve (constant + slope * s) / denom >= 0 for s = omega^2 >= 0."""
    c, a = constant / denom, slope / denom
    if a == 0:
        return (0.0, math.inf) if c >= 0 else (math.inf, -math.inf)
    root = -c / a
    if a > 0:
        return (max(root, 0.0), math.inf)
    return (0.0, root) if root >= 0 else (math.inf, -math.inf)


def enumerate_branches(N: int, m_max: int, n_max: int) -> list[TwoModeBranch]:
    """All admissible pairs within bounds, sorted by bifurcation frequency.

    Admissible wavenumbers run n = mN + 2k for k >= 1 at every odd
    m >= 3 (the published pair table for N = 2 follows this pattern for
    the m = 3 row as well, where it coincides with the closed-interval
    rule's lower end).
    """
    out = []
    for m in range(3, m_max + 1, 2):
        n_start = m * N + 2
        if (n_start - N) % 2:
            n_start += 1
        for n in range(n_start, n_max + 1, 2):
            out.append(TwoModeBranch.create(N, m, n))
    return sorted(out, key=lambda b: (b.omega_bif, b.m, b.n))


def two_mode_system_residual(branch: TwoModeBranch, omega: float, A: float, B: float) -> tuple[float, float]:
    """Direct substitution into the coupled pair of amplitude equations."""
    N, m, n = branch.N, branch.m, branch.n
    om2 = omega * omega
    return (
        A * (3 * N * A * A + 6 * N * B * B - 4 * om2 + 4 * N * N),
        B * (6 * N * A * A + 3 * n * B * B - 4 * om2 * m * m + 4 * n * n),
    )


def two_mode_energy(branch: TwoModeBranch, omega: float, A: float, B: float) -> float:
    return math.pi / 4.0 * omega**2 * (A * A + branch.m**2 * B * B)
