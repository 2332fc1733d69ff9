"""Exact perturbative construction of time-periodic solutions.

For the mode number N the solution and squared frequency are expanded in
a formal parameter; the leading profile is cos(tau) sin(Nx) and every
higher order is fixed by removing resonant terms (modes with k = j*N,
which lie in the kernel of the linear operator).  All coefficients are
exact rationals, so the residual of the truncated series vanishes
identically order by order - no tolerances anywhere in this module.

Order extension is inherently sequential.  The cubic source dominates
the cost, so inside one order it is assembled on scaled-integer
coefficient maps (one shared denominator per block) and converted back
to normalized rationals only when an order is finalized.  A
SeriesSolution is immutable from the caller's point of view: extension
returns a new object (the caches it carries are shared, final data).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .algebra import (
    EpsPolynomial,
    RAT_ZERO,
    Rational,
    TrigPoly,
    format_rational,
    parse_rational,
    resonant_split,
    trig_triple_product,
)
from .interaction import InteractionTable

try:
    from gmpy2 import lcm as _lcm, mpz as _mpz
except ImportError:  # pragma: no cover
    _lcm, _mpz = math.lcm, int

IntTerms = dict[tuple[int, int], int]

# A scaled block is (denominator, integer coefficient map): the exact value
# of the block is map/denominator.  Temporal/spatial key conventions match
# algebra.pair_product (mixed cos-cos basis) and TrigPoly (cos-sin basis).
Block = tuple[object, IntTerms]


@dataclass
class SeriesSolution:
    """Perturbative orders {omega_sq[n], orders[n]} for one mode number.

    The top order is provisional: its resonant amplitudes at temporal
    harmonics 3, 5, ... are fixed only by the next extension and are
    stored as zero until then.
    """

    N: int
    omega_sq: list  # Rational coefficients of the squared-frequency series
    orders: list[TrigPoly]
    _scaled: list[Block] = field(default_factory=list, repr=False)
    _pair_cache: dict[int, Block] = field(default_factory=dict, repr=False)

    @property
    def n_max(self) -> int:
        return len(self.orders) - 1

    @property
    def provisional(self) -> bool:
        return self.n_max >= 1

    def pending_resonant_modes(self) -> list[int]:
        """Temporal harmonics of the top order still awaiting their value."""
        return [2 * m + 1 for m in range(1, self.n_max + 1)]

    def omega_series(self) -> EpsPolynomial:
        """The squared-frequency polynomial (constant term N^2)."""
        return EpsPolynomial(self.omega_sq)

    def coefficient_series(self, j: int, k: int) -> EpsPolynomial:
        """Expansion of the (j, k) Fourier coefficient, without the
        square-root amplitude prefactor of the physical solution."""
        if j % 2 == 0 or k < 1:
            raise ValueError("temporal harmonic must be odd and wavenumber >= 1")
        return EpsPolynomial([u.coefficient(j, k) for u in self.orders])

    def coefficient_growth(self, target) -> list[tuple[int, float]]:
        """(n, |c_n|) pairs of a coefficient series or of the frequency series.

        target is either a (j, k) pair or the string 'omega'; zero entries
        are skipped.  Intended for growth-diagnostic plots.
        """
        if target == "omega":
            from .algebra import series_sqrt

            series = series_sqrt(self.omega_series(), self.n_max)
        else:
            series = self.coefficient_series(*target)
        return [(n, abs(float(c))) for n, c in enumerate(series.coeffs) if c]


def initial_solution(N: int) -> SeriesSolution:
    """Zeroth order: the linear eigenmode profile with squared frequency N^2."""
    if N < 1:
        raise ValueError("mode number must be >= 1")
    u0 = TrigPoly.single(1, N)
    return SeriesSolution(
        N=N,
        omega_sq=[Rational(N * N)],
        orders=[u0],
        _scaled=[_scale_order(u0)],
    )


def default_table(N: int, n_max: int) -> InteractionTable:
    """Table sized for extensions up to the given order."""
    return InteractionTable(max_index=(2 * n_max + 3) * N)


def make_series(N: int, n_max: int, table: InteractionTable | None = None) -> SeriesSolution:
    """Construct the series through the requested order."""
    if table is None:
        table = default_table(N, n_max)
    sol = initial_solution(N)
    for _ in range(n_max):
        sol = extend_order(sol, table)
    return sol


# ---------------------------------------------------------------------------
# Scaled-integer product kernels
# ---------------------------------------------------------------------------


def _scale_order(u: TrigPoly) -> Block:
    """Represent a TrigPoly as integers over the lcm of its denominators."""
    den = _mpz(1)
    for c in u.terms.values():
        den = _lcm(den, c.denominator)
    terms = {}
    for jk, c in u.terms.items():
        scaled = c * den
        terms[jk] = int(scaled.numerator)
    return den, terms


def _ipair_into(dest: IntTerms, pa: IntTerms, pb: IntTerms, scale: int) -> None:
    """dest += scale * (pa x pb) in the mixed cos-cos basis, integer part only.

    The 1/4 linearization factor is carried by the caller's denominator.
    """
    get = dest.get
    for (j1, k1), c1 in pa.items():
        c1s = c1 * scale
        for (j2, k2), c2 in pb.items():
            c = c1s * c2
            jlo, jhi = abs(j1 - j2), j1 + j2
            klo, khi = abs(k1 - k2), k1 + k2
            for jj in (jlo, jhi):
                key = (jj, klo)
                val = get(key, 0) + c
                if val:
                    dest[key] = val
                else:
                    del dest[key]
                key = (jj, khi)
                val = get(key, 0) - c
                if val:
                    dest[key] = val
                else:
                    del dest[key]


def _icross_into(dest: IntTerms, w: IntTerms, pc: IntTerms, scale: int) -> None:
    """dest += scale * (w x pc), sin-x basis; 1/4 factor carried by the caller."""
    get = dest.get
    for (j1, kap), c1 in w.items():
        c1s = c1 * scale
        for (j2, k2), c2 in pc.items():
            c = c1s * c2
            jpair = (abs(j1 - j2), j1 + j2)
            for kk, val in ((k2 + kap, c), (k2 - kap, c)):
                if kk == 0:
                    continue
                if kk < 0:
                    kk, val = -kk, -val
                for jj in jpair:
                    key = (jj, kk)
                    tot = get(key, 0) + val
                    if tot:
                        dest[key] = tot
                    else:
                        del dest[key]


def _idivide_sin_sq(numerator: IntTerms) -> IntTerms:
    """Integer-exact division of a sin-basis map by sin^2 x.

    Solves v_k = -r_{k-2}/4 + r_k/2 - r_{k+2}/4 downward from the top
    wavenumber per temporal harmonic and parity chain; the two lowest
    rows are divisibility checks (the reflected sin(-x) term feeds the
    wavenumber-1 row).
    """
    by_j: dict[int, dict[int, int]] = {}
    for (j, k), c in numerator.items():
        by_j.setdefault(j, {})[k] = c
    out: IntTerms = {}
    for j, row in by_j.items():
        for parity in (0, 1):
            ks = [k for k in row if k % 2 == parity]
            if not ks:
                continue
            top = max(ks)
            r: dict[int, int] = {}
            for k in range(top, 2, -2):
                val = 2 * r.get(k, 0) - r.get(k + 2, 0) - 4 * row.get(k, 0)
                if val:
                    r[k - 2] = val
            if parity == 1:
                if 3 * r.get(1, 0) - r.get(3, 0) != 4 * row.get(1, 0):
                    raise ValueError("numerator is not divisible by sin^2 x")
            else:
                if 2 * r.get(2, 0) - r.get(4, 0) != 4 * row.get(2, 0):
                    raise ValueError("numerator is not divisible by sin^2 x")
            for k, c in r.items():
                out[(j, k)] = c
    return out


def _pair_block(sol: SeriesSolution, s: int) -> Block:
    """Sum of ordered products u^(a) u^(b) with a+b = s, scaled integers.

    Exact value of the returned block is map/den; den collects the lcm of
    the factor denominators and the 1/4 linearization constant.
    """
    scaled = sol._scaled
    den = _mpz(4)
    for a in range(0, s // 2 + 1):
        den = _lcm(den, 4 * scaled[a][0] * scaled[s - a][0])
    acc: IntTerms = {}
    for a in range(0, s // 2 + 1):
        b = s - a
        mult = den // (4 * scaled[a][0] * scaled[b][0])
        if a != b:
            mult *= 2
        _ipair_into(acc, scaled[a][1], scaled[b][1], int(mult))
    return den, acc


def _cubic_source(sol: SeriesSolution, order: int, top_block: Block | None = None) -> tuple[object, IntTerms]:
    """Sum over ordered triples u^(a) u^(b) u^(c) with a+b+c = order, over sin^2 x.

    Returns (den, integer sin-basis map).  Pair blocks below the top come
    from the cache (they involve only finalized orders); the caller
    supplies the top block when the top order is still provisional,
    otherwise it is cached like the rest.
    """
    cache = sol._pair_cache
    blocks: list[Block] = []
    for s in range(order + 1):
        if s == order and top_block is not None:
            blocks.append(top_block)
            continue
        block = cache.get(s)
        if block is None:
            block = cache[s] = _pair_block(sol, s)
        blocks.append(block)
    den = _mpz(4)
    for s, (bden, _) in enumerate(blocks):
        den = _lcm(den, 4 * bden * sol._scaled[order - s][0])
    acc: IntTerms = {}
    for s, (bden, bmap) in enumerate(blocks):
        cden, cmap = sol._scaled[order - s]
        mult = den // (4 * bden * cden)
        _icross_into(acc, bmap, cmap, mult)
    return den, _idivide_sin_sq(acc)


def _to_trigpoly(den, imap: IntTerms) -> TrigPoly:
    return TrigPoly({jk: Rational(c, den) for jk, c in imap.items()})


# ---------------------------------------------------------------------------
# Order extension
# ---------------------------------------------------------------------------


def extend_order(sol: SeriesSolution, table: InteractionTable) -> SeriesSolution:
    """Advance the construction by one order.

    Fixes the new frequency coefficient, the previous order's free
    resonant amplitudes, and the new order's nonresonant coefficients;
    asserts the parity and spectral-support invariants afterwards.
    """
    N = sol.N
    n = sol.n_max + 1
    orders = list(sol.orders)
    scaled = list(sol._scaled)

    # Known part of the order-n source, with the top order as stored
    # (pending resonant amplitudes still zero).
    top_block = _pair_block(sol, n - 1)
    cden, cmap = _cubic_source(sol, n - 1, top_block=top_block)
    source = _to_trigpoly(cden, cmap).scale(-1)
    for k in range(1, n):
        source = source + orders[n - k].d_tau2().scale(-sol.omega_sq[k])

    # Resonant removal: the (1, N) component fixes the frequency; the
    # (2m+1, (2m+1)N) components fix the previous order's free amplitudes,
    # each entering through the closed-form factor 3N((2m+1)^2 - 2)/4.
    omega_n = -source.coefficient(1, N)
    fixes = {}
    for m in range(1, n):
        j = 2 * m + 1
        g = source.coefficient(j, j * N)
        if g:
            fixes[(j, j * N)] = -4 * g / Rational(3 * N * (j * j - 2))
    w_fix = TrigPoly(fixes, _trusted=True)
    if fixes:
        orders[n - 1] = orders[n - 1] + w_fix
        scaled[n - 1] = _scale_order(orders[n - 1])
        source = source + w_fix.d_tau2().scale(-sol.omega_sq[1])
        source = source + trig_triple_product(orders[0], orders[0], w_fix, table).scale(-3)
    source = source + TrigPoly.single(1, N, omega_n)

    res, nonres = resonant_split(source, N)
    if res:
        raise AssertionError(f"resonant source terms survived removal: {res!r}")

    # Nonresonant part inverts the linear operator term by term.
    new_terms = {}
    a1 = RAT_ZERO
    for (j, k), c in nonres.terms.items():
        div = k * k - j * j * N * N
        assert div != 0, "nonresonant mode hit a zero divisor"
        b = c / div
        new_terms[(j, k)] = b
        if k == N:
            a1 -= b
    if a1:
        new_terms[(1, N)] = a1
    u_n = TrigPoly(new_terms, _trusted=True)
    _check_order_invariants(u_n, N, n)

    # The top block becomes final once the revision is folded in:
    # only the ordered pairs (0, n-1) and (n-1, 0) involve the top order.
    cache = dict(sol._pair_cache)
    if fixes:
        wden, wmap = _scale_order(w_fix)
        tden, tmap = top_block
        u0den, u0map = scaled[0]
        den = _lcm(tden, 4 * u0den * wden)
        merged: IntTerms = {jk: c * (den // tden) for jk, c in tmap.items()}
        _ipair_into(merged, u0map, wmap, 2 * (den // (4 * u0den * wden)))
        top_block = (den, merged)
    cache[n - 1] = top_block
    return SeriesSolution(
        N=N,
        omega_sq=sol.omega_sq + [omega_n],
        orders=orders + [u_n],
        _scaled=scaled + [_scale_order(u_n)],
        _pair_cache=cache,
    )


def _check_order_invariants(u_n: TrigPoly, N: int, n: int) -> None:
    k_bound = (2 * n + 1) * N - 2
    norm_sum = RAT_ZERO
    for (j, k), c in u_n.terms.items():
        if j % 2 == 0:
            raise AssertionError(f"even temporal harmonic {j} in order {n}")
        if (k - N) % 2:
            raise AssertionError(f"wavenumber {k} breaks spatial parity at order {n}")
        if j > 2 * n + 1:
            raise AssertionError(f"temporal harmonic {j} exceeds bound at order {n}")
        if k != j * N and k > k_bound:
            raise AssertionError(f"nonresonant wavenumber {k} exceeds bound at order {n}")
        if k == N:
            norm_sum += c
    if norm_sum != 0:
        raise AssertionError(f"normalization sum nonzero at order {n}")


# ---------------------------------------------------------------------------
# Residual of the truncated series
# ---------------------------------------------------------------------------


def residual_series(
    sol: SeriesSolution,
    table: InteractionTable | None = None,
    through_order: int | None = None,
) -> list[TrigPoly]:
    """Expansion coefficients of the PDE residual of the truncated series.

    Recomputed from the stored orders, independently of the construction
    caches.  With a table, the cubic source is assembled through
    interaction coefficients (slow, fully independent route); without
    one, through exact pair products and division (fast route).
    Orders 0 .. n_max must come out exactly empty.
    """
    if through_order is None:
        through_order = sol.n_max
    if through_order > sol.n_max:
        raise ValueError("residual order exceeds the constructed order")
    orders = sol.orders
    fresh = SeriesSolution(
        N=sol.N,
        omega_sq=list(sol.omega_sq),
        orders=list(orders),
        _scaled=[_scale_order(u) for u in orders],
    )
    out = []
    for r in range(through_order + 1):
        res = orders[r].d_x2().scale(-1)
        for k in range(0, r + 1):
            res = res + orders[r - k].d_tau2().scale(sol.omega_sq[k])
        if r >= 1:
            res = res + _cubic_total(fresh, r - 1, table)
        out.append(res)
    return out


def _cubic_total(sol: SeriesSolution, order: int, table: InteractionTable | None) -> TrigPoly:
    orders = sol.orders
    if table is not None:
        acc = TrigPoly()
        for a in range(order + 1):
            for b in range(order - a + 1):
                c = order - a - b
                acc = acc + trig_triple_product(orders[a], orders[b], orders[c], table)
        return acc
    den, imap = _cubic_source(sol, order)
    return _to_trigpoly(den, imap)


# ---------------------------------------------------------------------------
# Archive format: versioned plain text, rationals as p/q
# ---------------------------------------------------------------------------

ARCHIVE_MAGIC = "series-archive"
ARCHIVE_VERSION = 1


def write_archive(sol: SeriesSolution, path) -> None:
    lines = [
        f"{ARCHIVE_MAGIC} {ARCHIVE_VERSION}",
        f"N {sol.N}",
        f"n_max {sol.n_max}",
        f"provisional {int(sol.provisional)}",
    ]
    for n, u in enumerate(sol.orders):
        lines.append(f"order {n}")
        lines.append(f"omega_{n} {format_rational(sol.omega_sq[n])}")
        lines.extend(u.to_lines())
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def read_archive(path) -> SeriesSolution:
    with open(path, encoding="ascii") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith(ARCHIVE_MAGIC):
        raise ValueError("not a series archive")
    version = int(lines[0].split()[1])
    if version != ARCHIVE_VERSION:
        raise ValueError(f"unsupported archive version {version}")
    N = int(lines[1].split()[1])
    n_max = int(lines[2].split()[1])
    # provisional flag is implied by n_max; the header keeps it explicit
    omega_sq: list = []
    orders: list[TrigPoly] = []
    i = 4
    for n in range(n_max + 1):
        if lines[i] != f"order {n}":
            raise ValueError(f"archive corrupt: expected 'order {n}' at line {i + 1}")
        i += 1
        tag, value = lines[i].split()
        if tag != f"omega_{n}":
            raise ValueError(f"archive corrupt: expected omega_{n}")
        omega_sq.append(parse_rational(value))
        i += 1
        block = []
        while i < len(lines) and not lines[i].startswith("order "):
            block.append(lines[i])
            i += 1
        orders.append(TrigPoly.from_lines(block))
    sol = SeriesSolution(N=N, omega_sq=omega_sq, orders=orders)
    sol._scaled = [_scale_order(u) for u in orders]
    return sol
