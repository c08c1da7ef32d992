"""Exact and formal solutions of y(x+1) = y(x)/x + 1/x.

Implemented solutions:

* ``y0``     -- sum of products  sum_k prod_{j<=k} 1/(x-j), the solution with
  poles at the positive integers (residue exp(-1)/Gamma(n) at x = n).
* ``y0_ml``  -- the same function through its partial-fraction (pole) series
  exp(-1) * sum_k 1/((x-k) Gamma(k)).
* ``y1``     -- the entire solution y0 - (pi/e) cot(pi x)/Gamma(x).  The
  residues of the two terms cancel; evaluation within 1e-2 of an integer
  combines the offending pole pair analytically (see ``_y1_deflated``).
* ``yc``     -- the one-parameter family y1 + c/Gamma(x).
* ``formal_series`` -- the coefficients a_n of the formal solution
  sum a_n x^{-n}, computed by the exact integer recursion the functional
  equation forces (a_1 = 1, a_2 = 2, a_3 = 5, a_4 = 15, ...).

Note on the sign of the cotangent term: with a "+" sign the residues of the
two pole families add instead of cancelling (both are +exp(-1)/Gamma(n)),
so the entire solution requires the "-" sign used here; the median identity
with the two path integrals of the acceleration module confirms it to
working precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath as mp
from mpmath import mpc, mpf

from . import hpcore
from .errors import PoleAtPositiveIntegerError, SlowConvergenceError
from .hpcore import (
    DEFAULT_PREC,
    HPComplex,
    POLE_TOL,
    gamma_int,
    to_mpc,
    workprec,
    zm,
)


@dataclass(frozen=True)
class SolutionParams:
    """Parameters of the solution family y_c in acceleration index m."""

    c: complex = 0
    m: int = 0
    precision_bits: int = DEFAULT_PREC

    def __post_init__(self):
        if self.m < 0:
            raise ValueError("m must be >= 0")


@dataclass(frozen=True)
class FormalSeries:
    """Truncated formal power series sum a_n x^{-n} (exact integers)."""

    coeffs: tuple
    order: int

    def term(self, n, x):
        return mpf(self.coeffs[n - 1]) * to_mpc(x) ** (-n)

    def partial_sum(self, x, upto=None):
        upto = self.order if upto is None else upto
        x = to_mpc(x)
        s = mpc(0)
        for n in range(1, upto + 1):
            s += mpf(self.coeffs[n - 1]) * x ** (-n)
        return s


@dataclass(frozen=True)
class RegionSC:
    """Half-plane-like region {x : Re z_m(x) >= C}."""

    C: float
    m: int = 0


def _unpack(x, prec):
    if isinstance(x, HPComplex):
        return x.to_mpc(), (prec or x.precision_bits), True
    return mpc(x), (prec or DEFAULT_PREC), False


def _wrap(value, prec, as_hp):
    return HPComplex.make(value, prec) if as_hp else value


def _nearest_positive_integer(x):
    n = int(mp.nint(x.real))
    if n < 1:
        return None, None
    return n, abs(x - n)


def _guard_positive_pole(x):
    n, dist = _nearest_positive_integer(x)
    if n is not None and dist < POLE_TOL:
        raise PoleAtPositiveIntegerError(
            f"x={x} within {POLE_TOL} of the pole at {n}")


def y0(x, prec=None, max_terms=None):
    """Product-series solution; poles at x = 1, 2, 3, ...

    Truncates once the running product is below 2^-prec of the partial sum
    with a certified geometric tail bound.
    """
    xv, prec, as_hp = _unpack(x, prec)
    with workprec(prec):
        _guard_positive_pole(xv)
        if max_terms is None:
            max_terms = 400 + int(4 * abs(xv)) + 2 * prec
        eps = mpf(2) ** (-(prec + 8))
        s = mpc(0)
        prod = mpf(1)
        ax = abs(xv)
        for k in range(1, max_terms + 1):
            prod = prod / (xv - k)
            s += prod
            if k > ax + 2:
                q = 1 / (k + 1 - ax)
                if q < mpf("0.75") and abs(prod) * q / (1 - q) <= eps * abs(s):
                    return _wrap(s, prec, as_hp)
        raise SlowConvergenceError(
            f"y0 did not meet its truncation criterion in {max_terms} terms; "
            "increase max_terms or precision")


def y0_ml(x, prec=None):
    """Partial-fraction form exp(-1) sum_k 1/((x-k) Gamma(k))."""
    xv, prec, as_hp = _unpack(x, prec)
    with workprec(prec):
        _guard_positive_pole(xv)
        s = _ml_sum(xv, prec, skip=None)
        return _wrap(s / mp.e, prec, as_hp)


def _ml_sum(xv, prec, skip=None):
    """sum_{k != skip} 1/((x-k) Gamma(k)), truncated by the 1/Gamma tail."""
    eps = mpf(2) ** (-(prec + 8))
    s = mpc(0)
    k = 1
    ax = abs(xv)
    while True:
        if k != skip:
            term = 1 / ((xv - k) * gamma_int(k, prec))
            s += term
            if k > ax + 2 and abs(term) <= eps * max(abs(s), mpf(1)):
                return s
        k += 1
        if k > 10000:
            raise SlowConvergenceError("partial-fraction series stalled")


def _pi_cot_minus_inv(u, prec):
    """pi*cot(pi*u) - 1/u = -sum_{j>=1} 2 zeta(2j) u^{2j-1}; |u| < 1."""
    eps = mpf(2) ** (-(prec + 8))
    s = mpc(0)
    u2 = u * u
    upow = u
    for j in range(1, 400):
        term = 2 * mp.zeta(2 * j) * upow
        s -= term
        if abs(term) <= eps * max(abs(s), mpf(1)):
            return s
        upow *= u2
    raise SlowConvergenceError("cot expansion stalled")


def _lngamma_shift(n, u, prec):
    """lnGamma(n+u) - lnGamma(n) via the polygamma Taylor series."""
    eps = mpf(2) ** (-(prec + 8))
    s = mpc(0)
    upow = mpc(1)
    fact = mpf(1)
    for j in range(1, 200):
        upow *= u
        fact *= j
        term = mp.psi(j - 1, n) * upow / fact
        s += term
        if abs(term) <= eps * max(abs(s), mpf(1)):
            return s
    raise SlowConvergenceError("polygamma expansion stalled")


def _y1_deflated_positive(xv, n, prec):
    """y1 near the positive integer n: the k = n partial-fraction term and
    the cotangent pole are combined analytically before summing."""
    u = xv - n
    rest = _ml_sum(xv, prec, skip=n)
    gn = gamma_int(n, prec)
    if u == 0:
        p = mp.psi(0, n)
        creg = mpc(0)
        inv_gnu = 1 / gn
    else:
        S = _lngamma_shift(n, u, prec)
        p = -mp.expm1(-S) / u
        creg = _pi_cot_minus_inv(u, prec)
        inv_gnu = mp.exp(-S) / gn
    return (rest + p / gn - creg * inv_gnu) / mp.e


def _y1_near_nonpositive(xv, n, prec):
    """y1 near x = -n (n >= 0): by reflection,
    cot(pi x)/Gamma(x) = (-1)^n cos(pi u) Gamma(1+n-u) / pi with u = x+n."""
    u = xv + n
    sign = -1 if n % 2 else 1
    return y0_ml(xv, prec) - sign * mp.cos(mp.pi * u) * mp.gamma(1 + n - u) / mp.e


def y1(x, prec=None):
    """The entire solution y0 - (pi/e) cot(pi x) / Gamma(x)."""
    xv, prec, as_hp = _unpack(x, prec)
    with workprec(prec):
        nint = mp.nint(xv.real)
        dist = abs(xv - nint)
        if dist < mpf("0.01") and abs(xv.imag) < mpf("0.01"):
            n = int(nint)
            if n >= 1:
                return _wrap(_y1_deflated_positive(xv, n, prec), prec, as_hp)
            return _wrap(_y1_near_nonpositive(xv, -n, prec), prec, as_hp)
        v = y0_ml(xv, prec) \
            - (mp.pi / mp.e) * mp.cot(mp.pi * xv) * mp.rgamma(xv)
        return _wrap(v, prec, as_hp)


def yc(x, params: SolutionParams):
    """y1(x) + c / Gamma(x)."""
    xv, prec, as_hp = _unpack(x, params.precision_bits)
    with workprec(prec):
        v = y1(xv, prec) + to_mpc(params.c) * mp.rgamma(xv)
        return _wrap(v, prec, as_hp)


def formal_series(N):
    """Exact coefficients a_1..a_N of the formal solution sum a_n x^{-n}.

    Matching powers of 1/x in the functional equation gives
    a_M = [M = 1] + a_{M-1} - sum_{n<M} a_n (-1)^{M-n} C(M-1, M-n),
    carried out in integer arithmetic (the a_n grow superfactorially).
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    a = [0] * (N + 1)
    for M in range(1, N + 1):
        s = (1 if M == 1 else 0) + (a[M - 1] if M >= 2 else 0)
        for n in range(1, M):
            s -= a[n] * (-1) ** (M - n) * math.comb(M - 1, M - n)
        a[M] = s
    return FormalSeries(tuple(a[1:]), N)


def in_region_SC(x, region: RegionSC, prec=DEFAULT_PREC):
    """True iff Re z_m(x) >= C (closed region) on the principal branch."""
    with workprec(prec):
        return zm(to_mpc(x), region.m).real >= mpf(region.C)


def fe_residual(fn, x, prec=DEFAULT_PREC):
    """|f(x+1) - f(x)/x - 1/x| for a candidate solution callable."""
    with workprec(prec):
        xv = to_mpc(x)
        return abs(to_mpc(fn(xv + 1)) - to_mpc(fn(xv)) / xv - 1 / xv)


def residue_at(fn, n, prec=DEFAULT_PREC, h0=None, levels=18):
    """Richardson-extrapolated limit of (x - n) * fn(x) as x -> n.

    Samples at h0 / 2^j and extrapolates the resulting polynomial-in-h
    sequence; used against the exact residue exp(-1)/Gamma(n).
    """
    with workprec(prec):
        if h0 is None:
            h0 = mpf(1) / 64
        hs = [h0 / 2 ** j for j in range(levels)]
        vals = [hs[j] * to_mpc(fn(n + hs[j])) for j in range(levels)]
        for lev in range(1, levels):
            for i in range(levels - lev):
                vals[i] = vals[i + 1] + (vals[i + 1] - vals[i]) \
                    * hs[i + lev] / (hs[i] - hs[i + lev])
        return vals[0]


def fit_asymptotic_coefficients(fn, xs, ncoef, prec=DEFAULT_PREC):
    """Recover leading 1/x-expansion coefficients of ``fn`` by repeated
    Richardson extrapolation in h = 1/x (peeling one coefficient at a
    time).  ``xs`` should be an increasing grid of evaluation points."""
    with workprec(prec):
        xs = [mpf(x) for x in xs]
        cur = [to_mpc(fn(x)) for x in xs]
        hs = [1 / x for x in xs]
        out = []
        npts = len(xs)
        for j in range(ncoef):
            seq = [cur[i] * xs[i] ** (j + 1) for i in range(npts)]
            T = list(seq)
            for lev in range(1, npts):
                for i in range(npts - lev):
                    T[i] = T[i + 1] + (T[i + 1] - T[i]) \
                        * hs[i + lev] / (hs[i] - hs[i + lev])
            out.append(T[0])
            cur = [cur[i] - out[-1] * xs[i] ** (-(j + 1)) for i in range(npts)]
        return out
