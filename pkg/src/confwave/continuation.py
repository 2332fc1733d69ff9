"""Pseudo-arclength continuation of Galerkin solution curves.

The bordered system appends a secant-normalization row to the Galerkin
residual, so folds in the frequency are traversed without
reparametrization.  Branch points are flagged through the bordered
Jacobian (determinant sign change or smallest singular value dipping
under threshold) and through monitored modal amplitudes crossing zero;
switching onto a detected branch perturbs along the approximate null
direction and re-converges with the emerging coefficient pinned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .galerkin import (
    GalerkinConfig,
    GalerkinState,
    NonConvergence,
    SingularJacobian,
    energy,
    newton_solve,
    residual,
    residual_norm,
)

DS_MIN = 1e-5
DS_MAX = 0.1
SINGULAR_EVENT_TOL = 1e-8
NEAR_SINGULAR_TAG_TOL = 1e-6
MAX_HALVINGS = 8
FAST_ITERATIONS = 4
DIP_RATIO = 0.35  # prominence of a near-singular approach of the Jacobian
DIP_WINDOW = 6  # steps on each side used for the prominence baseline


class StallFault(RuntimeError):
    """Continuation was halved back-to-back past the retry budget."""


class FallbackToTrunk(RuntimeError):
    """Both branch-switch perturbations reconverged to the trunk."""


@dataclass
class DiagramPoint:
    omega: float
    energy: float
    state: GalerkinState
    arclength: float
    branch_id: int
    tags: set[str] = field(default_factory=set)


@dataclass
class BranchEvent:
    omega_est: float
    kind: str  # 'detected-singularity' | 'amplitude-zero-crossing'
    mode_hint: tuple[int, int]  # (temporal harmonic, spatial wavenumber)
    state_before: GalerkinState | None = None
    null_direction: np.ndarray | None = None


def _extended_residual(z: np.ndarray, cfg: GalerkinConfig) -> np.ndarray:
    state = GalerkinState(z[:-1].reshape(cfg.M_tau, cfg.M_x), float(z[-1]))
    return residual(state, cfg).ravel()


def _extended_jacobian(z: np.ndarray, cfg: GalerkinConfig) -> np.ndarray:
    n = len(z)
    r0 = _extended_residual(z, cfg)
    jac = np.empty((len(r0), n))
    h = 1e-6 * max(1.0, float(np.max(np.abs(z))))
    for i in range(n):
        zp = z.copy()
        zp[i] += h
        zm = z.copy()
        zm[i] -= h
        jac[:, i] = (_extended_residual(zp, cfg) - _extended_residual(zm, cfg)) / (2 * h)
    return jac


def _bordered_corrector(
    z_prev: np.ndarray, tangent: np.ndarray, ds: float, cfg: GalerkinConfig,
    tol: float = 1e-11, max_iter: int = 12,
) -> tuple[np.ndarray, np.ndarray, int] | None:
    """One arclength step: Newton on [residual; tangent . (z - z_prev) - ds]."""
    z = z_prev + ds * tangent
    for it in range(max_iter):
        r = _extended_residual(z, cfg)
        constraint = float(tangent @ (z - z_prev) - ds)
        norm = max(float(np.max(np.abs(r))), abs(constraint))
        if norm < tol:
            jac = _extended_jacobian(z, cfg)
            return z, np.vstack([jac, tangent]), it
        jac = _extended_jacobian(z, cfg)
        bordered = np.vstack([jac, tangent])
        rhs = np.concatenate([r, [constraint]])
        try:
            step = np.linalg.solve(bordered, -rhs)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(step)):
            return None
        z = z + step
    return None


def _initial_tangent(z: np.ndarray, cfg: GalerkinConfig, direction: int) -> np.ndarray:
    """Frequency-sensitivity tangent; valid away from folds."""
    jac = _extended_jacobian(z, cfg)
    try:
        du = np.linalg.solve(jac[:, :-1], -jac[:, -1])
    except np.linalg.LinAlgError as exc:
        raise SingularJacobian("cannot start continuation at a singular point") from exc
    t = np.concatenate([du, [1.0]])
    t /= np.linalg.norm(t)
    return direction * t


def point_from_state(state: GalerkinState, cfg: GalerkinConfig, branch_id: int = 0,
                     arclength: float = 0.0) -> DiagramPoint:
    return DiagramPoint(
        omega=state.omega,
        energy=energy(state),
        state=state.copy(),
        arclength=arclength,
        branch_id=branch_id,
        tags=set(),
    )


def continue_branch(
    start: DiagramPoint,
    cfg: GalerkinConfig,
    steps: int,
    ds0: float = 0.01,
    direction: int = 1,
    initial_tangent: np.ndarray | None = None,
    monitor_modes: list[tuple[int, int]] | None = None,
    omega_window: tuple[float, float] | None = None,
    branch_id: int | None = None,
    ds_max: float = DS_MAX,
) -> tuple[list[DiagramPoint], list[BranchEvent]]:
    """March along the solution curve from a converged starting point.

    The step halves on corrector failure (StallFault after 8 consecutive
    halvings) and doubles after 4 fast successes, clamped to
    [1e-5, 0.1].  Events record bordered-Jacobian determinant sign
    changes, smallest-singular-value dips below 1e-8, and sign changes
    of the monitored modal amplitudes; the estimate interpolates inside
    the bracketing step.  Stops early when the frequency leaves
    omega_window.
    """
    if residual_norm(start.state, cfg) > 1e-9:
        raise ValueError("starting point is not converged")
    if monitor_modes is None:
        monitor_modes = [(0, 0)]
    bid = start.branch_id if branch_id is None else branch_id
    z = np.concatenate([start.state.u_hat.ravel(), [start.state.omega]])
    tangent = (
        initial_tangent / np.linalg.norm(initial_tangent)
        if initial_tangent is not None
        else _initial_tangent(z, cfg, direction)
    )
    points = [point_from_state(start.state, cfg, bid, start.arclength)]
    events: list[BranchEvent] = []

    jac_ext = _extended_jacobian(z, cfg)
    sign_prev, logdet_prev = np.linalg.slogdet(jac_ext[:, :-1])
    sigma_u_track = [np.linalg.svd(jac_ext[:, :-1], compute_uv=False)[-1]]

    ds_max = min(max(ds_max, DS_MIN), DS_MAX)
    ds = min(max(ds0, DS_MIN), ds_max)
    arclength = start.arclength
    halvings = 0
    fast_successes = 0
    for _ in range(steps):
        result = _bordered_corrector(z, tangent, ds, cfg)
        if result is None:
            halvings += 1
            fast_successes = 0
            if halvings >= MAX_HALVINGS:
                raise StallFault(f"{MAX_HALVINGS} consecutive halvings at arclength {arclength:.4f}")
            ds = max(ds / 2, DS_MIN)
            continue
        z_new, bordered_new, iterations = result
        halvings = 0
        arclength += ds

        state_new = GalerkinState(z_new[:-1].reshape(cfg.M_tau, cfg.M_x), float(z_new[-1]))
        point = point_from_state(state_new, cfg, bid, arclength)

        # branch monitoring uses the frozen-frequency Jacobian: its
        # determinant flips sign at branch points (and at folds, which the
        # tangent distinguishes), independent of the normalization row
        sign_new, logdet_new = np.linalg.slogdet(bordered_new[:-1, :-1])
        sigma_new = np.linalg.svd(bordered_new, compute_uv=False)[-1]
        sigma_u_new = np.linalg.svd(bordered_new[:-1, :-1], compute_uv=False)[-1]
        sigma_u_track.append(sigma_u_new)
        if sigma_new < NEAR_SINGULAR_TAG_TOL:
            point.tags.add("near-singular")

        new_tangent = (z_new - z) / np.linalg.norm(z_new - z)  # secant tangent
        fold_here = new_tangent[-1] * tangent[-1] < 0 and abs(tangent[-1]) > 1e-3
        if fold_here:
            point.tags.add("fold")

        if (sign_new * sign_prev < 0 and not fold_here) or sigma_new < SINGULAR_EVENT_TOL:
            # the determinant crosses zero inside the step; the logistic
            # form of |det_a| / (|det_a| + |det_b|) is overflow-safe
            frac = 1.0 / (1.0 + math.exp(min(700.0, logdet_new - logdet_prev)))
            omega_est = float(z[-1] + frac * (z_new[-1] - z[-1]))
            events.append(
                _singularity_event(
                    omega_est, (float(z[-1]), float(z_new[-1])), state_new,
                    points[-1].state, cfg,
                )
            )
        for mode in monitor_modes:
            prev_amp = float(points[-1].state.u_hat[mode])
            new_amp = float(state_new.u_hat[mode])
            if prev_amp * new_amp < 0 and max(abs(prev_amp), abs(new_amp)) > 1e-4:
                frac = abs(prev_amp) / (abs(prev_amp) + abs(new_amp))
                omega_est = float(z[-1] + frac * (z_new[-1] - z[-1]))
                events.append(
                    BranchEvent(
                        omega_est=omega_est,
                        kind="amplitude-zero-crossing",
                        mode_hint=(
                            cfg.temporal_harmonics[mode[0]],
                            cfg.spatial_wavenumbers[mode[1]],
                        ),
                        state_before=state_new.copy(),
                    )
                )

        points.append(point)
        z, tangent = z_new, new_tangent
        sign_prev, sigma_prev, logdet_prev = sign_new, sigma_new, logdet_new

        fast_successes = fast_successes + 1 if iterations <= FAST_ITERATIONS else 0
        if fast_successes >= 4:
            ds = min(ds * 2, ds_max)
            fast_successes = 0
        if omega_window is not None and not (omega_window[0] <= z[-1] <= omega_window[1]):
            break

    events.extend(_dip_events(points, sigma_u_track, events, cfg))
    return points, _dedupe_events(events)


def _dip_events(
    points: list[DiagramPoint],
    sigma_u: list[float],
    existing: list[BranchEvent],
    cfg: GalerkinConfig,
) -> list[BranchEvent]:
    """Near-singular approaches that do not flip the determinant.

    Truncation can unfold a branch point into an avoided crossing: the
    smallest singular value of the frozen-frequency Jacobian dips to a
    small positive minimum instead of reaching zero.  A local minimum
    deep relative to the surrounding plateau is reported as a
    detected-singularity event at the parabolic vertex of the dip.
    """
    out: list[BranchEvent] = []
    n = len(points)
    for i in range(1, n - 1):
        s_prev, s_here, s_next = sigma_u[i - 1], sigma_u[i], sigma_u[i + 1]
        if not (s_here < s_prev and s_here <= s_next):
            continue
        before = max(sigma_u[max(0, i - DIP_WINDOW) : i])
        after = max(sigma_u[i + 1 : min(n, i + 1 + DIP_WINDOW)])
        if s_here > DIP_RATIO * min(before, after):
            continue
        om = [points[i - 1].omega, points[i].omega, points[i + 1].omega]
        omega_est = _parabola_vertex(om, [s_prev, s_here, s_next])
        if any(
            abs(e.omega_est - omega_est) < 0.01 * abs(omega_est) for e in existing
        ):
            continue  # a determinant flip already reported this approach
        out.append(
            _singularity_event(
                omega_est,
                (om[0], om[2]),
                points[i + 1].state,
                points[i - 1].state,
                cfg,
            )
        )
    return out


def _parabola_vertex(x: list[float], y: list[float]) -> float:
    denom = (x[0] - x[1]) * (x[0] - x[2]) * (x[1] - x[2])
    if denom == 0:
        return x[1]
    a = (x[2] * (y[1] - y[0]) + x[1] * (y[0] - y[2]) + x[0] * (y[2] - y[1])) / denom
    b = (x[2] ** 2 * (y[0] - y[1]) + x[1] ** 2 * (y[2] - y[0]) + x[0] ** 2 * (y[1] - y[2])) / denom
    if a <= 0:
        return x[1]
    vertex = -b / (2 * a)
    return min(max(vertex, min(x)), max(x))


def _dedupe_events(events: list[BranchEvent]) -> list[BranchEvent]:
    out: list[BranchEvent] = []
    for e in events:
        if any(
            o.kind == e.kind
            and o.mode_hint == e.mode_hint
            and abs(o.omega_est - e.omega_est) < 0.005 * abs(e.omega_est)
            for o in out
        ):
            continue
        out.append(e)
    return sorted(out, key=lambda e: e.omega_est)


def _singularity_event(
    omega_est: float,
    bracket: tuple[float, float],
    state_after: GalerkinState,
    state_before: GalerkinState,
    cfg: GalerkinConfig,
) -> BranchEvent:
    """Refine the crossing by determinant-sign bisection (falling back to
    the interpolated estimate if the curve cannot be parametrized by the
    frequency inside the bracket), then read the emerging direction off
    the near-zero eigenvector of the frozen-frequency Jacobian."""
    at_event = state_after

    def det_sign_at(omega: float, seed: GalerkinState):
        trial = seed.copy()
        trial.omega = omega
        solved = newton_solve(trial, cfg, fixed="omega")
        z = np.concatenate([solved.u_hat.ravel(), [solved.omega]])
        sign = np.linalg.slogdet(_extended_jacobian(z, cfg)[:, :-1])[0]
        return sign, solved

    try:
        lo, hi = bracket
        sign_lo, st_lo = det_sign_at(lo, state_before)
        sign_hi, _ = det_sign_at(hi, state_before)
        if sign_lo * sign_hi < 0:
            for _ in range(8):
                mid = 0.5 * (lo + hi)
                sign_mid, st_mid = det_sign_at(mid, st_lo)
                if sign_mid == sign_lo:
                    lo, st_lo = mid, st_mid
                else:
                    hi = mid
            omega_est = 0.5 * (lo + hi)
            at_event = st_lo
    except (NonConvergence, SingularJacobian):
        pass

    z = np.concatenate([at_event.u_hat.ravel(), [at_event.omega]])
    jac_u = _extended_jacobian(z, cfg)[:, :-1]
    eigvals, eigvecs = np.linalg.eig(jac_u)
    null_u = np.real(eigvecs[:, int(np.argmin(np.abs(eigvals)))])
    null_u /= np.linalg.norm(null_u)
    hint = _dominant_mode(null_u, cfg, exclude=(0, 0))
    return BranchEvent(
        omega_est=float(omega_est),
        kind="detected-singularity",
        mode_hint=hint,
        state_before=at_event.copy(),
        null_direction=np.concatenate([null_u, [0.0]]),
    )


def _dominant_mode(null_u: np.ndarray, cfg: GalerkinConfig, exclude: tuple[int, int]) -> tuple[int, int]:
    mat = np.abs(null_u.reshape(cfg.M_tau, cfg.M_x)).copy()
    mat[exclude] = 0.0
    idx = np.unravel_index(int(np.argmax(mat)), mat.shape)
    return (cfg.temporal_harmonics[idx[0]], cfg.spatial_wavenumbers[idx[1]])


def switch_branch(
    event: BranchEvent,
    cfg: GalerkinConfig,
    deltas: tuple[float, ...] = (0.02, 0.05, 0.1, 0.2),
) -> DiagramPoint:
    """Converge a point off the trunk at a detected-singularity event.

    Takes a pseudo-arclength step of escalating size along the
    approximate null direction (both signs): the bordered corrector cuts
    the crossing transversally, so it can land on the other solution arc
    even when truncation has unfolded the crossing into a near tangency.
    Raises FallbackToTrunk when every attempt reconverges to the trunk.
    """
    if event.state_before is None:
        raise ValueError("event carries no state snapshot")
    base = event.state_before.copy()
    base.omega = event.omega_est
    try:
        trunk = newton_solve(base, cfg, fixed="omega")
    except (NonConvergence, SingularJacobian):
        trunk = base
    z_trunk = np.concatenate([trunk.u_hat.ravel(), [trunk.omega]])
    if event.null_direction is not None:
        null = event.null_direction.copy()
    else:
        jac = _extended_jacobian(z_trunk, cfg)
        null = np.concatenate([np.linalg.svd(jac[:, :-1])[2][-1], [0.0]])
    null /= np.linalg.norm(null)
    scale = max(1.0, float(np.max(np.abs(trunk.u_hat))))
    for delta in deltas:
        for sign in (1.0, -1.0):
            result = _bordered_corrector(z_trunk, sign * null, delta * scale, cfg)
            if result is None:
                continue
            z_new = result[0]
            solved = GalerkinState(
                z_new[:-1].reshape(cfg.M_tau, cfg.M_x), float(z_new[-1])
            )
            if _is_off_trunk(solved, trunk, cfg):
                return point_from_state(solved, cfg, branch_id=-1)
    raise FallbackToTrunk(f"no off-trunk solution found near {event.omega_est:.6f}")


def _is_off_trunk(solved: GalerkinState, trunk: GalerkinState, cfg: GalerkinConfig) -> bool:
    try:
        trunk_at = newton_solve(
            GalerkinState(trunk.u_hat.copy(), solved.omega), cfg, fixed="omega"
        )
        distance = float(np.max(np.abs(trunk_at.u_hat - solved.u_hat)))
    except (NonConvergence, SingularJacobian):
        return True
    return distance > 1e-5 * max(1.0, float(np.max(np.abs(solved.u_hat))))


def rescale_family(points: list[DiagramPoint], q: int) -> list[DiagramPoint]:
    """Map each point by dividing the frequency and multiplying temporal
    harmonics by the (odd) factor; the energy is invariant."""
    if q < 1 or q % 2 == 0:
        raise ValueError("rescaling factor must be odd and positive")
    if q == 1:
        return [
            DiagramPoint(p.omega, p.energy, p.state.copy(), p.arclength, p.branch_id, set(p.tags))
            for p in points
        ]
    out = []
    for p in points:
        M_tau, M_x = p.state.u_hat.shape
        new_M_tau = ((2 * M_tau - 1) * q + 1) // 2
        u_new = np.zeros((new_M_tau, M_x))
        for m in range(M_tau):
            harmonic = (2 * m + 1) * q
            u_new[(harmonic - 1) // 2, :] = p.state.u_hat[m, :]
        state = GalerkinState(u_new, p.omega / q)
        out.append(
            DiagramPoint(
                omega=p.omega / q,
                energy=p.energy,
                state=state,
                arclength=p.arclength,
                branch_id=p.branch_id,
                tags=set(p.tags),
            )
        )
    return out


# ---------------------------------------------------------------------------
# Trunk helpers
# ---------------------------------------------------------------------------


def trunk_seed(N: int, omega: float, cfg: GalerkinConfig) -> GalerkinState:
    """One-mode seed on the trunk bifurcating from the given eigenmode."""
    from .reducible import trunk_amplitude

    u_hat = np.zeros((cfg.M_tau, cfg.M_x))
    if cfg.even_parity:
        col = cfg.spatial_wavenumbers.index(N)
    else:
        col = 0
    u_hat[0, col] = trunk_amplitude(N, omega)
    return GalerkinState(u_hat, omega)


def walk_trunk(
    N: int, cfg: GalerkinConfig, omegas, warm_start: bool = True
) -> list[DiagramPoint]:
    """Fixed-frequency Newton sweep along the trunk (no fold handling)."""
    points = []
    prev: GalerkinState | None = None
    for omega in omegas:
        omega = float(omega)
        if prev is not None and warm_start:
            seed = GalerkinState(prev.u_hat.copy(), omega)
        else:
            seed = trunk_seed(N, omega, cfg)
        solved = newton_solve(seed, cfg, fixed="omega")
        points.append(point_from_state(solved, cfg))
        prev = solved
    return points
