"""Pseudo-spectral Galerkin system for even mode numbers.

Solutions are sought in span{cos(2j+1)tau sin 2(k+1)x}; collocation uses
half-interval grids whose discrete inner products integrate the retained
basis exactly, and the cubic term is projected on finer grids (three
times the truncation, minus one) so that the discrete projection equals
the exact Galerkin integral - no aliasing.

The single-wavenumber variant (spatial profile sin x) closes exactly
because sin^3 x / sin^2 x = sin x; it reduces to a temporal Galerkin
system for the cubic oscillator and serves as the odd-mode cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


class NonConvergence(RuntimeError):
    """Newton failed; carries the best iterate and its residual norm."""

    def __init__(self, message: str, state: "GalerkinState", norm: float):
        super().__init__(message)
        self.state = state
        self.norm = norm


class SingularJacobian(RuntimeError):
    """Jacobian numerically singular - usually bifurcation-point proximity."""


@dataclass(frozen=True)
class GalerkinConfig:
    """Truncation sizes and spatial parity class.

    even_parity selects the sin 2(k+1)x basis; the False setting is the
    single-mode sin x closure used for the lowest-eigenmode checks and
    requires M_x = 1.
    """

    M_tau: int
    M_x: int
    even_parity: bool = True

    def __post_init__(self):
        if self.M_tau < 1 or self.M_x < 1:
            raise ValueError("truncation sizes must be >= 1")
        if not self.even_parity and self.M_x != 1:
            raise ValueError("the sin x closure supports a single spatial mode")

    @property
    def temporal_harmonics(self) -> tuple[int, ...]:
        return tuple(2 * j + 1 for j in range(self.M_tau))

    @property
    def spatial_wavenumbers(self) -> tuple[int, ...]:
        if self.even_parity:
            return tuple(2 * (k + 1) for k in range(self.M_x))
        return (1,)

    @property
    def n_unknowns(self) -> int:
        return self.M_tau * self.M_x


@dataclass
class GalerkinState:
    """Coefficient matrix u_hat[j, k] of cos(2j+1)tau sin(wavenumber_k x), plus frequency."""

    u_hat: np.ndarray
    omega: float

    def copy(self) -> "GalerkinState":
        return GalerkinState(self.u_hat.copy(), self.omega)

    def fundamental(self) -> float:
        return float(self.u_hat[0, 0])


@lru_cache(maxsize=64)
def _grids(M_tau: int, M_x: int, even_parity: bool):
    """Fine-grid nodes, weights, and basis evaluation matrices.

    Temporal nodes tau_j = pi (j+1/2) / (2Mt+1) with weight 2pi/(2Mt+1);
    spatial nodes x_k = pi (k+1) / (2(Mx+1)) with weight 2pi/(2(Mx+1)).
    Built on the dealiasing sizes 3M-1 so cubic projections are exact.
    """
    Mt_f = 3 * M_tau - 1
    tau = np.pi * (np.arange(Mt_f) + 0.5) / (2 * Mt_f + 1)
    w_tau = 2 * np.pi / (2 * Mt_f + 1)
    harmonics = np.array([2 * j + 1 for j in range(M_tau)])
    cos_mat = np.cos(np.outer(tau, harmonics))  # (fine tau, coarse modes)

    if even_parity:
        Mx_f = 3 * M_x - 1
        x = np.pi * (np.arange(Mx_f) + 1.0) / (2 * (Mx_f + 1))
        w_x = 2 * np.pi / (2 * (Mx_f + 1))
        wavenumbers = np.array([2 * (k + 1) for k in range(M_x)])
        sin_mat = np.sin(np.outer(x, wavenumbers))
        inv_sin_sq = 1.0 / np.sin(x) ** 2
    else:
        x = None
        w_x = np.pi / 2  # exact integral of sin^2 over (0, pi)
        wavenumbers = np.array([1])
        sin_mat = None
        inv_sin_sq = None
    return tau, w_tau, cos_mat, x, w_x, sin_mat, inv_sin_sq, wavenumbers


def residual(state: GalerkinState, cfg: GalerkinConfig) -> np.ndarray:
    """Galerkin projections of the equation onto every retained basis mode.

    Linear part (pi/2)^2 (wavenumber^2 - Omega^2 harmonic^2) u_hat plus
    the dealiased discrete projection of u^3/sin^2 x.
    """
    u_hat = state.u_hat
    if u_hat.shape != (cfg.M_tau, cfg.M_x):
        raise ValueError("state shape does not match the configuration")
    tau, w_tau, cos_mat, x, w_x, sin_mat, inv_sin_sq, wavenumbers = _grids(
        cfg.M_tau, cfg.M_x, cfg.even_parity
    )
    harmonics = np.array(cfg.temporal_harmonics)
    lin = (np.pi / 2) ** 2 * (
        wavenumbers[None, :] ** 2 - state.omega**2 * harmonics[:, None] ** 2
    ) * u_hat
    if cfg.even_parity:
        u_grid = cos_mat @ u_hat @ sin_mat.T
        cubic = u_grid**3 * inv_sin_sq[None, :]
        proj = (w_tau * w_x) * (cos_mat.T @ cubic @ sin_mat)
    else:
        # single sin x mode: u^3 sin^3 x / sin^2 x = u^3 sin x exactly
        phi = cos_mat @ u_hat[:, 0]
        proj = (w_tau * w_x) * (cos_mat.T @ phi**3)[:, None]
    return lin + proj


def residual_norm(state: GalerkinState, cfg: GalerkinConfig) -> float:
    return float(np.max(np.abs(residual(state, cfg))))


def fine_residual_norm(state: GalerkinState, cfg: GalerkinConfig, factor: int = 2) -> float:
    """Residual of the state embedded in a grid enlarged by the factor.

    Measures spectral truncation error: the state solves its own system,
    and the extra rows expose what the truncation discarded.
    """
    big = GalerkinConfig(factor * cfg.M_tau, factor * cfg.M_x, cfg.even_parity)
    u_big = np.zeros((big.M_tau, big.M_x))
    u_big[: cfg.M_tau, : cfg.M_x] = state.u_hat
    return residual_norm(GalerkinState(u_big, state.omega), big)


def energy(state: GalerkinState) -> float:
    """Conserved energy, evaluated where the kinetic term is everything."""
    harmonics = 2 * np.arange(state.u_hat.shape[0]) + 1
    signs = (-1.0) ** np.arange(state.u_hat.shape[0])
    column_sums = (signs * harmonics) @ state.u_hat
    return float(np.pi / 4 * state.omega**2 * np.sum(column_sums**2))


def breathing_mode(state: GalerkinState, cfg: GalerkinConfig) -> float:
    """|B[u]| at tau = 0 by full-interval quadrature.

    The time derivative vanishes there, so only the gradient and quartic
    terms weighted by cos x remain; for this symmetry class the integrand
    is odd about the equator and the value is a pure cancellation check.
    """
    wavenumbers = np.array(cfg.spatial_wavenumbers)
    # coefficients of the spatial profile at tau = 0 and of its x-derivative
    profile = state.u_hat.sum(axis=0)
    npts = 8 * (int(wavenumbers.max()) + 1)
    x = np.pi * np.arange(1, npts) / npts
    w = np.pi / npts
    u0 = np.sin(np.outer(x, wavenumbers)) @ profile
    du0 = np.cos(np.outer(x, wavenumbers)) @ (wavenumbers * profile)
    integrand = np.cos(x) * (du0**2 + 0.5 * u0**4 / np.sin(x) ** 2)
    return float(abs(np.sum(integrand) * w))


# ---------------------------------------------------------------------------
# Newton solver
# ---------------------------------------------------------------------------

NEWTON_TOL = 1e-11
NEWTON_MAX_ITER = 50
FD_STEP = 1e-6


def _pack(state: GalerkinState, cfg: GalerkinConfig, pinned: tuple[int, int] | None):
    if pinned is None:
        return state.u_hat.ravel().copy()
    mask = np.ones(cfg.n_unknowns, dtype=bool)
    mask[pinned[0] * cfg.M_x + pinned[1]] = False
    return np.concatenate([state.u_hat.ravel()[mask], [state.omega]])


def _unpack(vec, cfg, pinned, pinned_value, omega):
    u = np.empty(cfg.n_unknowns)
    if pinned is None:
        u[:] = vec
        return GalerkinState(u.reshape(cfg.M_tau, cfg.M_x), omega)
    mask = np.ones(cfg.n_unknowns, dtype=bool)
    mask[pinned[0] * cfg.M_x + pinned[1]] = False
    u[mask] = vec[:-1]
    u[~mask] = pinned_value
    return GalerkinState(u.reshape(cfg.M_tau, cfg.M_x), float(vec[-1]))


def newton_solve(
    state0: GalerkinState,
    cfg: GalerkinConfig,
    fixed: str | tuple[int, int] = "omega",
    tol: float = NEWTON_TOL,
    max_iter: int = NEWTON_MAX_ITER,
) -> GalerkinState:
    """Damped Newton iteration with a central finite-difference Jacobian.

    fixed='omega' freezes the frequency and solves for the coefficients;
    fixed=(j, k) pins that coefficient at its starting value and frees
    the frequency instead.  Converged when the residual sup-norm drops
    below tol; raises NonConvergence (with the best iterate attached)
    after max_iter sweeps and SingularJacobian when elimination fails.
    """
    pinned = None if fixed == "omega" else tuple(fixed)
    pinned_value = None if pinned is None else float(state0.u_hat[pinned])
    omega = state0.omega
    vec = _pack(state0, cfg, pinned)

    def eval_residual(v):
        st = _unpack(v, cfg, pinned, pinned_value, omega)
        return residual(st, cfg).ravel(), st

    r, best_state = eval_residual(vec)
    best_norm = float(np.max(np.abs(r)))
    for _ in range(max_iter):
        if best_norm < tol:
            return best_state
        jac = _fd_jacobian(eval_residual, vec, r)
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobian(str(exc)) from exc
        # damped update: halve until the residual stops growing
        for damping in (1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125):
            trial = vec + damping * step
            r_trial, st_trial = eval_residual(trial)
            norm_trial = float(np.max(np.abs(r_trial)))
            if norm_trial < best_norm or damping == 0.03125:
                vec, r = trial, r_trial
                best_state, best_norm = st_trial, norm_trial
                break
    if best_norm < tol:
        return best_state
    raise NonConvergence(
        f"no convergence after {max_iter} iterations (residual {best_norm:.3e})",
        best_state,
        best_norm,
    )


def _fd_jacobian(eval_residual, vec, r0):
    n = len(vec)
    jac = np.empty((len(r0), n))
    h = FD_STEP * max(1.0, float(np.max(np.abs(vec))))
    for i in range(n):
        vp = vec.copy()
        vp[i] += h
        vm = vec.copy()
        vm[i] -= h
        jac[:, i] = (eval_residual(vp)[0] - eval_residual(vm)[0]) / (2 * h)
    return jac


# ---------------------------------------------------------------------------
# Seeding from the perturbative series
# ---------------------------------------------------------------------------


def seed_from_series(sol, eps: float, cfg: GalerkinConfig) -> tuple[GalerkinState, bool]:
    """Evaluate the series at the given parameter and truncate to the grid.

    Applies the square-root amplitude prefactor and sets the frequency
    from the squared-frequency series.  The boolean flags a heuristic
    validity warning: the last retained frequency term contributes more
    than half of the previous one, so the parameter is likely outside
    the series' useful range.
    """
    from .algebra import poly_eval

    if eps < 0:
        raise ValueError("series parameter must be >= 0")
    sqrt_eps = np.sqrt(eps)
    u_hat = np.zeros((cfg.M_tau, cfg.M_x))
    harmonics = cfg.temporal_harmonics
    wavenumbers = cfg.spatial_wavenumbers
    for u_order, power in zip(sol.orders, range(len(sol.orders))):
        scale = sqrt_eps * eps**power
        for (j, k), c in u_order.terms.items():
            if j in harmonics and k in wavenumbers:
                u_hat[harmonics.index(j), wavenumbers.index(k)] += float(c) * scale
    omega_sq = poly_eval(sol.omega_series(), eps)
    if omega_sq <= 0:
        raise ValueError("squared-frequency series went nonpositive at this parameter")
    warn = False
    coeffs = sol.omega_sq
    if len(coeffs) >= 2:
        last = abs(float(coeffs[-1])) * eps ** (len(coeffs) - 1)
        prev = abs(float(coeffs[-2])) * eps ** (len(coeffs) - 2)
        warn = prev > 0 and last > 0.5 * prev
    return GalerkinState(u_hat, float(np.sqrt(omega_sq))), warn
