"""Exact arithmetic kernels: rationals, polynomials in the expansion
parameter, and trigonometric polynomials cos(j*tau)*sin(k*x).

A TrigPoly is a sparse map (j, k) -> Rational with temporal harmonic
j >= 0 and spatial wavenumber k >= 1 (Dirichlet boundary).  The zero
polynomial is the empty map.  All operations are pure; every object is
an immutable value and safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

try:
    from gmpy2 import mpq as Rational
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    from fractions import Fraction as Rational

RAT_ZERO = Rational(0)
RAT_ONE = Rational(1)


def rat(num, den=None) -> Rational:
    """Build a Rational from ints, a float (exact binary value), or a 'p/q' string."""
    if den is not None:
        return Rational(num, den)
    return Rational(num)


def format_rational(value) -> str:
    """Canonical 'p/q' form with an explicit positive denominator."""
    return f"{value.numerator}/{value.denominator}"


def parse_rational(text: str) -> Rational:
    num, _, den = text.partition("/")
    return Rational(int(num), int(den)) if den else Rational(int(num))


# ---------------------------------------------------------------------------
# Dense polynomials in the expansion parameter
# ---------------------------------------------------------------------------


class EpsPolynomial:
    """Dense univariate polynomial with exact rational coefficients.

    coeffs[i] is the coefficient of the i-th power; trailing zeros are
    stripped, so the zero polynomial has empty coeffs and degree -1.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        cs = [Rational(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs = tuple(cs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __eq__(self, other) -> bool:
        return isinstance(other, EpsPolynomial) and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __repr__(self) -> str:
        return f"EpsPolynomial({list(self.coeffs)!r})"

    def __getitem__(self, n: int):
        return self.coeffs[n] if 0 <= n < len(self.coeffs) else RAT_ZERO

    def __add__(self, other: "EpsPolynomial") -> "EpsPolynomial":
        n = max(len(self.coeffs), len(other.coeffs))
        return EpsPolynomial([self[i] + other[i] for i in range(n)])

    def __sub__(self, other: "EpsPolynomial") -> "EpsPolynomial":
        n = max(len(self.coeffs), len(other.coeffs))
        return EpsPolynomial([self[i] - other[i] for i in range(n)])

    def __neg__(self) -> "EpsPolynomial":
        return EpsPolynomial([-c for c in self.coeffs])

    def __mul__(self, other) -> "EpsPolynomial":
        if not isinstance(other, EpsPolynomial):
            return EpsPolynomial([c * Rational(other) for c in self.coeffs])
        if not self.coeffs or not other.coeffs:
            return EpsPolynomial()
        out = [RAT_ZERO] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return EpsPolynomial(out)

    __rmul__ = __mul__

    def truncate(self, order: int) -> "EpsPolynomial":
        """Drop all terms of power > order."""
        return EpsPolynomial(self.coeffs[: order + 1])

    def shift(self, k: int) -> "EpsPolynomial":
        """Multiply by the k-th power of the variable."""
        if not self.coeffs:
            return self
        return EpsPolynomial((RAT_ZERO,) * k + self.coeffs)

    def derivative(self) -> "EpsPolynomial":
        return EpsPolynomial([i * c for i, c in enumerate(self.coeffs)][1:])

    def eval_exact(self, x) -> Rational:
        acc = RAT_ZERO
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __call__(self, x: float) -> float:
        return poly_eval(self, x)


def poly_eval(p: EpsPolynomial, x: float) -> float:
    """Horner evaluation after float conversion of the coefficients."""
    acc = 0.0
    for c in reversed(p.coeffs):
        acc = acc * x + float(c)
    return acc


def series_product(p: EpsPolynomial, q: EpsPolynomial, order: int) -> EpsPolynomial:
    """Product truncated at the given order (inclusive)."""
    out = [RAT_ZERO] * (order + 1)
    for i, a in enumerate(p.coeffs[: order + 1]):
        if a:
            for j, b in enumerate(q.coeffs[: order + 1 - i]):
                out[i + j] += a * b
    return EpsPolynomial(out)


def series_sqrt(p: EpsPolynomial, order: int) -> EpsPolynomial:
    """Exact square root of a series whose constant term is the square of a rational.

    Solves 2*c0*r_n = p_n - sum_{i=1}^{n-1} r_i r_{n-i} order by order.
    """
    c0 = p[0]
    if c0 <= 0:
        raise ValueError("series square root needs a positive constant term")
    num, den = c0.numerator, c0.denominator
    rn = _isqrt_exact(num)
    rd = _isqrt_exact(den)
    if rn is None or rd is None:
        raise ValueError("constant term is not the square of a rational")
    r = [Rational(rn, rd)]
    for n in range(1, order + 1):
        acc = p[n]
        for i in range(1, n):
            acc -= r[i] * r[n - i]
        r.append(acc / (2 * r[0]))
    return EpsPolynomial(r)


def _isqrt_exact(n: int) -> int | None:
    import math

    r = math.isqrt(int(n))
    return r if r * r == n else None


# ---------------------------------------------------------------------------
# Trigonometric polynomials
# ---------------------------------------------------------------------------


TrigTerms = Mapping[tuple[int, int], Rational]


class TrigPoly:
    """Finite sum of c_{jk} cos(j*tau) sin(k*x) with exact coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: TrigTerms | None = None, _trusted: bool = False):
        if terms is None:
            self.terms = {}
        elif _trusted:
            self.terms = terms  # caller guarantees normalized content
        else:
            clean = {}
            for (j, k), c in terms.items():
                if k < 1 or j < 0:
                    raise ValueError(f"invalid mode ({j}, {k}): need j >= 0, k >= 1")
                c = Rational(c)
                if c:
                    clean[(j, k)] = c
            self.terms = clean

    @classmethod
    def single(cls, j: int, k: int, coeff=RAT_ONE) -> "TrigPoly":
        return cls({(j, k): coeff})

    @classmethod
    def zero(cls) -> "TrigPoly":
        return cls()

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __eq__(self, other) -> bool:
        return isinstance(other, TrigPoly) and self.terms == other.terms

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def __iter__(self) -> Iterator[tuple[tuple[int, int], Rational]]:
        return iter(sorted(self.terms.items()))

    def __repr__(self) -> str:
        inner = ", ".join(f"({j},{k}): {c}" for (j, k), c in self)
        return f"TrigPoly({{{inner}}})"

    def coefficient(self, j: int, k: int) -> Rational:
        return self.terms.get((j, k), RAT_ZERO)

    def __add__(self, other: "TrigPoly") -> "TrigPoly":
        return trig_add(self, other)

    def __sub__(self, other: "TrigPoly") -> "TrigPoly":
        return trig_add(self, other.scale(-1))

    def scale(self, factor) -> "TrigPoly":
        f = Rational(factor)
        if not f:
            return TrigPoly()
        return TrigPoly({jk: c * f for jk, c in self.terms.items()}, _trusted=True)

    def d_tau2(self) -> "TrigPoly":
        """Second derivative in tau: multiplies each term by -j^2."""
        out = {}
        for (j, k), c in self.terms.items():
            if j:
                out[(j, k)] = -(j * j) * c
        return TrigPoly(out, _trusted=True)

    def d_x2(self) -> "TrigPoly":
        """Second derivative in x: multiplies each term by -k^2."""
        return TrigPoly(
            {(j, k): -(k * k) * c for (j, k), c in self.terms.items()}, _trusted=True
        )

    def max_temporal(self) -> int:
        return max((j for j, _ in self.terms), default=0)

    def max_spatial(self) -> int:
        return max((k for _, k in self.terms), default=0)

    def to_lines(self) -> list[str]:
        return [f"{j} {k} {format_rational(c)}" for (j, k), c in self]

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "TrigPoly":
        terms = {}
        for line in lines:
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"malformed trig-poly line: {line!r}")
            terms[(int(parts[0]), int(parts[1]))] = parse_rational(parts[2])
        return cls(terms)


def trig_add(p: TrigPoly, q: TrigPoly) -> TrigPoly:
    """Coefficient-wise sum with zero terms pruned."""
    if not p.terms:
        return q
    if not q.terms:
        return p
    out = dict(p.terms)
    for jk, c in q.terms.items():
        s = out.get(jk, RAT_ZERO) + c
        if s:
            out[jk] = s
        else:
            out.pop(jk, None)
    return TrigPoly(out, _trusted=True)


def resonant_split(p: TrigPoly, N: int) -> tuple[TrigPoly, TrigPoly]:
    """Split off the terms with k = j*N (the kernel of N^2 d_tau^2 - d_x^2)."""
    if N < 1:
        raise ValueError("mode number must be >= 1")
    res, non = {}, {}
    for (j, k), c in p.terms.items():
        (res if k == j * N else non)[(j, k)] = c
    return TrigPoly(res, _trusted=True), TrigPoly(non, _trusted=True)


# -- products ---------------------------------------------------------------
#
# Two routes produce the cubic source u^3 / sin^2 x:
#   * trig_triple_product expands sin k1 sin k2 sin k3 / sin^2 x through the
#     interaction table (one table lookup per output wavenumber);
#   * pair_product + cross_product + divide_by_sin_sq multiplies in a mixed
#     cos(j tau) cos(kappa x) basis and performs one exact division at the
#     end.  The second route is far cheaper for large operands; the two are
#     cross-checked in the test suite.


def trig_triple_product(p: TrigPoly, q: TrigPoly, r: TrigPoly, table) -> TrigPoly:
    """Exact p*q*r / sin^2 x via interaction coefficients.

    Temporal factors linearize as cos a cos b cos c -> 1/4 sum over the four
    signed combinations (cosine evenness folds negative frequencies).  The
    spatial triple expands over wavenumbers m of the same parity as
    k1+k2+k3, up to k1+k2+k3-2.
    """
    if not (p.terms and q.terms and r.terms):
        return TrigPoly()
    quarter = Rational(1, 4)
    acc: dict[tuple[int, int], Rational] = {}
    for (j1, k1), c1 in p.terms.items():
        for (j2, k2), c2 in q.terms.items():
            c12 = c1 * c2
            for (j3, k3), c3 in r.terms.items():
                base = quarter * c12 * c3
                ksum = k1 + k2 + k3
                spatial = [
                    (m, s)
                    for m in range(2 - (ksum % 2), ksum - 1, 2)
                    if (s := table.value(k1, k2, k3, m))
                ]
                if not spatial:
                    continue
                for jt in (j1 + j2 + j3, j1 + j2 - j3, j1 - j2 + j3, j1 - j2 - j3):
                    jt = abs(jt)
                    for m, s in spatial:
                        key = (jt, m)
                        val = acc.get(key, RAT_ZERO) + base * s
                        if val:
                            acc[key] = val
                        else:
                            acc.pop(key, None)
    return TrigPoly(acc, _trusted=True)


def pair_product(
    p: TrigPoly,
    q: TrigPoly,
    into: dict[tuple[int, int], Rational] | None = None,
    scale=RAT_ONE,
) -> dict[tuple[int, int], Rational]:
    """Product of two TrigPolys in the mixed basis cos(j*tau) cos(kappa*x).

    sin k sin k' = (cos(k-k') - cos(k+k'))/2 and cos j cos j' folds likewise,
    so every output key has j >= 0, kappa >= 0.  Accumulates into `into`
    (scaled) when given.
    """
    acc = {} if into is None else into
    get = acc.get
    quarter = Rational(scale, 4)
    for (j1, k1), c1 in p.terms.items():
        qc1 = quarter * c1
        for (j2, k2), c2 in q.terms.items():
            c = qc1 * c2
            jlo, jhi = abs(j1 - j2), j1 + j2
            klo, khi = abs(k1 - k2), k1 + k2
            for jj in (jlo, jhi):
                for kk, term in ((klo, c), (khi, -c)):
                    key = (jj, kk)
                    val = get(key, RAT_ZERO) + term
                    if val:
                        acc[key] = val
                    else:
                        acc.pop(key, None)
    return acc


def cross_product(
    w: dict[tuple[int, int], Rational],
    p: TrigPoly,
    into: dict[tuple[int, int], Rational] | None = None,
) -> dict[tuple[int, int], Rational]:
    """Product of a mixed-basis factor with a TrigPoly, in the sin-x basis.

    cos kappa x sin k x = (sin(k+kappa) + sin(k-kappa))/2 with
    sin(-a) = -sin(a); k = kappa drops out.  Output keys may include any
    temporal j >= 0; spatial k >= 1.  Accumulates into `into` when given.
    """
    acc = {} if into is None else into
    get = acc.get
    quarter = Rational(1, 4)
    for (j1, kap), c1 in w.items():
        qc1 = quarter * c1
        for (j2, k2), c2 in p.terms.items():
            c = qc1 * c2
            for jj in (abs(j1 - j2), j1 + j2):
                for kk, val in ((k2 + kap, c), (k2 - kap, c)):
                    if kk == 0:
                        continue
                    if kk < 0:
                        kk, val = -kk, -val
                    key = (jj, kk)
                    tot = get(key, RAT_ZERO) + val
                    if tot:
                        acc[key] = tot
                    else:
                        acc.pop(key, None)
    return acc


def divide_by_sin_sq(numerator: dict[tuple[int, int], Rational]) -> TrigPoly:
    """Exact division of a sin-basis TrigPoly map by sin^2 x.

    Uses sin m sin^2 = -sin(m+2)/4 + sin(m)/2 - sin(m-2)/4 and solves the
    resulting banded system from the top wavenumber down, one temporal
    harmonic at a time.  Raises if the numerator is not divisible (the two
    lowest-wavenumber rows of each chain are consistency checks).
    """
    by_j: dict[int, dict[int, Rational]] = {}
    for (j, k), c in numerator.items():
        by_j.setdefault(j, {})[k] = c
    out: dict[tuple[int, int], Rational] = {}
    for j, row in by_j.items():
        for parity in (0, 1):
            chain = {k: c for k, c in row.items() if k % 2 == parity}
            if not chain:
                continue
            top = max(chain)
            r: dict[int, Rational] = {}
            for k in range(top, 2, -2):
                vk = chain.get(k, RAT_ZERO)
                r_k = r.get(k, RAT_ZERO)
                r_k2 = r.get(k + 2, RAT_ZERO)
                val = 2 * r_k - r_k2 - 4 * vk
                if val:
                    r[k - 2] = val
            if parity == 1:
                lhs = Rational(3, 4) * r.get(1, RAT_ZERO) - Rational(1, 4) * r.get(3, RAT_ZERO)
                if lhs != chain.get(1, RAT_ZERO):
                    raise ValueError("numerator is not divisible by sin^2 x")
            else:
                lhs = Rational(1, 2) * r.get(2, RAT_ZERO) - Rational(1, 4) * r.get(4, RAT_ZERO)
                if lhs != chain.get(2, RAT_ZERO):
                    raise ValueError("numerator is not divisible by sin^2 x")
            for k, c in r.items():
                if c:
                    out[(j, k)] = c
    return TrigPoly(out, _trusted=True)


def triple_product_over_sin_sq(p: TrigPoly, q: TrigPoly, r: TrigPoly) -> TrigPoly:
    """p*q*r / sin^2 x via pair products and one exact division."""
    if not (p.terms and q.terms and r.terms):
        return TrigPoly()
    return divide_by_sin_sq(cross_product(pair_product(p, q), r))
