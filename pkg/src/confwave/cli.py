"""Command-line entry point.

Subcommands map one-to-one onto the library layers; every output is
written atomically (temp file + rename) and deterministically (stable
row ordering, 17 significant digits) so repeated runs are byte
identical.  Exit codes: 0 success, 2 argument/validation error,
1 numerical fault.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile

import numpy as np

THREAD_ENV_VAR = "CONFWAVE_THREADS"


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".confwave-")
    try:
        with os.fdopen(fd, "w", encoding="ascii") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: str, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row))
    write_atomic(path, "\n".join(lines) + "\n")


class ValidationError(Exception):
    pass


def _parse_range(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ValidationError(f"expected 'a,b', got {text!r}")
    lo, hi = float(parts[0]), float(parts[1])
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ValidationError(f"range must be finite with min < max, got {text!r}")
    return lo, hi


def _parse_coeffs(text: str) -> list[tuple[int, int]]:
    out = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(",")
        if len(parts) != 2:
            raise ValidationError(f"coefficient must be 'j,k', got {chunk!r}")
        out.append((int(parts[0]), int(parts[1])))
    if not out:
        raise ValidationError("empty coefficient list")
    return out


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_interactions(args) -> int:
    from .interaction import s_coeff, s_quadrature_oracle

    indices = [int(v) for v in args.indices]
    if len(indices) != 4 or min(indices) < 1:
        raise ValidationError("need four positive indices j k l m")
    value = s_coeff(*indices)
    print(f"S({','.join(map(str, indices))}) = {value.numerator}/{value.denominator}")
    if args.check:
        oracle = s_quadrature_oracle(*indices)
        diff = abs(float(value) - oracle)
        print(f"quadrature = {_fmt(oracle)}  |difference| = {diff:.3e}")
        if diff > 1e-9:
            print("MISMATCH beyond 1e-9", file=sys.stderr)
            return 1
    return 0


def cmd_duffing(args) -> int:
    from .duffing import DuffingSolution

    lo, hi = _parse_range(args.eps_range)
    if lo < 0:
        raise ValidationError("amplitudes must be nonnegative")
    if args.count < 2:
        raise ValidationError("need at least two samples")
    rows = []
    for eps in np.linspace(lo, hi, args.count):
        d = DuffingSolution.from_amplitude(float(eps))
        rows.append([d.epsilon, d.omega, d.energy])
    write_csv(args.out, ["eps", "Omega", "E"], rows)
    return 0


def cmd_series(args) -> int:
    from .lindstedt import make_series, write_archive

    if args.mode < 1:
        raise ValidationError("mode number must be >= 1")
    if args.order < 0:
        raise ValidationError("order must be >= 0")
    sol = make_series(args.mode, args.order)
    write_archive(sol, args.out)
    if args.growth_out:
        targets = ["omega"] + (
            [tuple(c) for c in _parse_coeffs(args.growth_coeffs)]
            if args.growth_coeffs
            else [(1, args.mode)]
        )
        rows = []
        for target in targets:
            label = "omega" if target == "omega" else f"{target[0]}:{target[1]}"
            for n, mag in sol.coefficient_growth(target):
                rows.append([label, n, float(mag)])
        write_csv(args.growth_out, ["series", "n", "magnitude"], rows)
    return 0


def cmd_pade_scan(args) -> int:
    from .lindstedt import read_archive
    from .pade import pole_scan

    sol = read_archive(args.archive)
    coeffs = _parse_coeffs(args.coeffs)
    n_list = list(range(args.nmin, args.nmax + 1))
    if not n_list:
        raise ValidationError("empty approximant-order list")
    if sol.n_max < 2 * max(n_list):
        raise ValidationError(
            f"archive order {sol.n_max} is too small: [n/n] with n={max(n_list)} needs order >= {2 * max(n_list)}"
        )
    eps_range = _parse_range(args.eps_range)
    threads = args.threads or int(os.environ.get(THREAD_ENV_VAR, "1"))
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        from .pade import PoleSpectrum

        def task(coeff):
            return pole_scan(sol, [coeff], n_list, eps_range).rows

        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = [r for chunk in pool.map(task, coeffs) for r in chunk]
        spectrum = PoleSpectrum(rows=rows)
    else:
        spectrum = pole_scan(sol, coeffs, n_list, eps_range)
    rows = [
        [r.coeff_id[0], r.coeff_id[1], r.n, r.eps_pole, r.omega_at_pole, r.cluster_tag]
        for r in sorted(
            spectrum.rows, key=lambda r: (r.coeff_id, r.n, r.eps_pole)
        )
    ]
    write_csv(
        args.out,
        ["coeff_j", "coeff_k", "n", "eps_pole", "omega_pole", "cluster_tag"],
        rows,
    )
    return 0


def cmd_pade_curve(args) -> int:
    from .lindstedt import read_archive
    from .pade import pade_curve

    sol = read_archive(args.archive)
    coeff = _parse_coeffs(args.coeff)[0]
    if sol.n_max < 2 * args.n:
        raise ValidationError(f"archive order {sol.n_max} < 2n = {2 * args.n}")
    lo, hi = _parse_range(args.eps_range)
    if lo < 0:
        raise ValidationError("the curve parameter must be nonnegative")
    eps_values = np.linspace(lo, hi, args.count)
    samples = pade_curve(sol, coeff, args.n, eps_values, pole_exclusion=args.pole_exclusion)
    rows = [
        [s.eps, s.amplitude, s.amplitude_physical, s.omega_pade, s.omega_series, int(s.near_pole)]
        for s in samples
    ]
    write_csv(
        args.out,
        ["eps", "amplitude", "amplitude_physical", "omega_pade", "omega_series", "near_pole"],
        rows,
    )
    return 0


def cmd_trunk(args) -> int:
    from .continuation import walk_trunk
    from .galerkin import GalerkinConfig, breathing_mode, residual_norm

    if args.mode < 2 or args.mode % 2:
        raise ValidationError("trunk sweeps support even mode numbers >= 2")
    cfg = GalerkinConfig(args.M, args.M)
    if args.mode not in cfg.spatial_wavenumbers:
        raise ValidationError(f"truncation M={args.M} cannot represent mode {args.mode}")
    lo, hi = _parse_range(args.omega_range)
    if lo <= args.mode:
        raise ValidationError(f"trunk exists only above the eigenvalue {args.mode}")
    omegas = np.arange(lo, hi + 1e-12, args.step)
    points = walk_trunk(args.mode, cfg, omegas)
    header = ["Omega", "E", "residual_norm", "breathing"]
    if args.with_uhat:
        header += [f"u_{2*j+1}_{2*(k+1)}" for j in range(args.M) for k in range(args.M)]
    rows = []
    for p in points:
        row = [p.omega, p.energy, residual_norm(p.state, cfg), breathing_mode(p.state, cfg)]
        if args.with_uhat:
            row += [float(v) for v in p.state.u_hat.ravel()]
        rows.append(row)
    write_csv(args.out, header, rows)
    return 0


def cmd_continue(args) -> int:
    from .continuation import continue_branch, point_from_state, trunk_seed
    from .galerkin import GalerkinConfig, newton_solve, residual_norm

    if args.mode < 2 or args.mode % 2:
        raise ValidationError("continuation supports even mode numbers >= 2")
    cfg = GalerkinConfig(args.M, args.M)
    if args.mode not in cfg.spatial_wavenumbers:
        raise ValidationError(f"truncation M={args.M} cannot represent mode {args.mode}")
    if args.from_omega <= args.mode:
        raise ValidationError("starting frequency must exceed the eigenvalue")
    start_state = newton_solve(trunk_seed(args.mode, args.from_omega, cfg), cfg)
    start = point_from_state(start_state, cfg)
    window = _parse_range(args.omega_window) if args.omega_window else None
    points, events = continue_branch(
        start, cfg, steps=args.steps, ds0=args.ds, ds_max=args.ds_max,
        omega_window=window,
    )
    point_rows = []
    for p in points:
        row = [p.branch_id, p.arclength, p.omega, p.energy,
               residual_norm(p.state, cfg), "|".join(sorted(p.tags))]
        if args.with_uhat:
            row += [float(v) for v in p.state.u_hat.ravel()]
        point_rows.append(row)
    header = ["branch_id", "arclength", "Omega", "E", "residual_norm", "tags"]
    if args.with_uhat:
        header += [f"u_{2*j+1}_{2*(k+1)}" for j in range(args.M) for k in range(args.M)]
    write_csv(args.points_out, header, point_rows)
    event_rows = [
        [e.omega_est, e.kind, f"{e.mode_hint[0]}:{e.mode_hint[1]}"]
        for e in sorted(events, key=lambda e: e.omega_est)
    ]
    write_csv(args.events_out, ["omega_est", "kind", "mode_hint"], event_rows)
    return 0


def cmd_reducible(args) -> int:
    from .reducible import enumerate_branches, real_amplitude_interval

    if args.mode < 1:
        raise ValidationError("mode number must be >= 1")
    branches = enumerate_branches(args.mode, args.m_max, args.n_max)
    rows = []
    for b in branches:
        lo, hi = real_amplitude_interval(b)
        rows.append([b.m, b.n, b.omega_bif, int(b.special_case), lo, hi])
    write_csv(
        args.out,
        ["m", "n", "omega_bif", "special_case", "real_interval_lo", "real_interval_hi"],
        rows,
    )
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="confwave",
        description="Time-periodic solutions of the cubic conformal wave equation "
        "on the 3-sphere: exact series, Galerkin continuation, Pade analysis.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="chatty progress output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("interactions", help="print an interaction coefficient")
    p.add_argument("indices", nargs=4, help="four positive integers j k l m")
    p.add_argument("--check", action="store_true", help="compare against the quadrature oracle")
    p.set_defaults(func=cmd_interactions)

    p = sub.add_parser("duffing", help="exact lowest-mode (eps, Omega, E) curve")
    p.add_argument("--eps-range", required=True, help="amplitude range 'a,b'")
    p.add_argument("--count", type=int, default=101, help="number of samples (default 101)")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_duffing)

    p = sub.add_parser("series", help="construct a perturbative series archive")
    p.add_argument("--mode", type=int, required=True, help="bifurcating mode number N")
    p.add_argument("--order", type=int, required=True, help="highest expansion order")
    p.add_argument("--out", required=True, help="archive output path")
    p.add_argument("--growth-out", help="optional CSV of coefficient magnitudes per order")
    p.add_argument("--growth-coeffs", help="coefficients for --growth-out as 'j1,k1;j2,k2'")
    p.set_defaults(func=cmd_series)

    p = sub.add_parser("pade-scan", help="real-pole spectrum of diagonal approximants")
    p.add_argument("--archive", required=True, help="series archive path")
    p.add_argument("--coeffs", required=True, help="coefficients 'j1,k1;j2,k2;...'")
    p.add_argument("--nmin", type=int, default=1, help="smallest approximant order (default 1)")
    p.add_argument("--nmax", type=int, required=True, help="largest approximant order")
    p.add_argument("--eps-range", required=True, help="parameter search range 'a,b'")
    p.add_argument("--threads", type=int, default=0,
                   help=f"worker threads (default: ${THREAD_ENV_VAR} or 1)")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_pade_scan)

    p = sub.add_parser("pade-curve", help="parametric amplitude-frequency curve from approximants")
    p.add_argument("--archive", required=True, help="series archive path")
    p.add_argument("--coeff", default="1,2", help="coefficient 'j,k' (default 1,2)")
    p.add_argument("--n", type=int, required=True, help="diagonal approximant order")
    p.add_argument("--eps-range", required=True, help="parameter range 'a,b'")
    p.add_argument("--count", type=int, default=200, help="number of samples (default 200)")
    p.add_argument("--pole-exclusion", type=float, default=0.0,
                   help="relative radius around poles to flag (default 0: flag nothing)")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_pade_curve)

    p = sub.add_parser("trunk", help="fixed-frequency sweep along a trunk")
    p.add_argument("--mode", type=int, required=True, help="even mode number N")
    p.add_argument("--M", type=int, required=True, help="truncation M_tau = M_x")
    p.add_argument("--omega-range", required=True, help="frequency range 'a,b'")
    p.add_argument("--step", type=float, required=True, help="frequency step")
    p.add_argument("--with-uhat", action="store_true", help="append flattened coefficients")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_trunk)

    p = sub.add_parser("continue", help="pseudo-arclength continuation with branch events")
    p.add_argument("--mode", type=int, required=True, help="even mode number N")
    p.add_argument("--M", type=int, required=True, help="truncation M_tau = M_x")
    p.add_argument("--from-omega", type=float, required=True, help="starting frequency")
    p.add_argument("--steps", type=int, required=True, help="maximum accepted steps")
    p.add_argument("--ds", type=float, default=0.01, help="initial arclength step (default 0.01)")
    p.add_argument("--ds-max", type=float, default=0.03, help="largest arclength step (default 0.03)")
    p.add_argument("--omega-window", help="stop once the frequency leaves 'a,b'")
    p.add_argument("--with-uhat", action="store_true", help="append flattened coefficients")
    p.add_argument("--points-out", required=True, help="points CSV path")
    p.add_argument("--events-out", required=True, help="events CSV path")
    p.set_defaults(func=cmd_continue)

    p = sub.add_parser("reducible", help="closed-form branch predictions")
    p.add_argument("--mode", type=int, required=True, help="mode number N")
    p.add_argument("--m-max", type=int, required=True, help="largest temporal harmonic")
    p.add_argument("--n-max", type=int, required=True, help="largest wavenumber")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_reducible)
    return parser


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ArithmeticError as exc:
        print(f"numerical fault: {exc}", file=sys.stderr)
        return 1
    except RuntimeError as exc:  # solver faults (non-convergence, stalls)
        print(f"numerical fault: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
