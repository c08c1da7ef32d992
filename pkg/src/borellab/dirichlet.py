"""Generalized Dirichlet series sum_k c_k exp(p * lambda_k) and the barrier
diagnostics built on them.

The built-in series all have their convergence abscissa normalized to
Re p = 1, which is a natural boundary for each of them:

* ``builtin_F``        c_k = (1 + ln k)/(e Gamma(k)),  lambda_k = k ln k
* ``builtin_F2(m)``    c_k = (ln k + m/k)/(e Gamma(k)),
                       lambda_k = k ln k - k - (m + 1/2) ln k
* ``builtin_theta``    c_n = exp(-n^2), lambda_n = n^2 (so that the value is
                       sum exp((p-1) n^2), n >= 0)

Evaluation is done in the log domain: a float prescreen locates the
maximal term and the window of terms within the target precision of it;
only those are summed at full precision, rescaled by the maximal term.
Near the barrier the maximal-term index grows like exp(1/(1-p)), so a
guard band refuses Re p >= 1 - guard.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import mpmath as mp
from mpmath import mpc, mpf

from .errors import (
    BarrierProximityError,
    NonIntegerWindingError,
    ZeroOnBoundaryError,
)
from .hpcore import (
    DEFAULT_PREC,
    LogMagnitude,
    lngamma_int,
    to_mpc,
    workprec,
)

BARRIER_GUARD = mpf(10) ** -6


@dataclass(frozen=True)
class DirichletSeriesSpec:
    """Coefficient/exponent data for sum_{k >= k_start} coeff(k) e^{p lam(k)}.

    ``log_coeff_f`` and ``exponent_f`` are fast float versions used only to
    prescreen the dominant window; the high-precision callables are the
    source of truth.
    """

    name: str
    coeff: object            # k -> mpc (evaluated under the working context)
    exponent: object         # k -> mpf
    log_coeff_f: object      # k -> float  (log|coeff|)
    exponent_f: object       # k -> float
    k_start: int = 1


def builtin_F():
    return DirichletSeriesSpec(
        name="F",
        coeff=lambda k: (1 + mp.ln(k)) / mp.e * mp.exp(-lngamma_int(k))
        if k > 1 else mpf(1) / mp.e,
        exponent=lambda k: mpf(k) * mp.ln(k) if k > 1 else mpf(0),
        log_coeff_f=lambda k: math.log1p(math.log(k)) - 1 - math.lgamma(k),
        exponent_f=lambda k: k * math.log(k) if k > 1 else 0.0,
    )


def builtin_F2(m):
    if m < 0:
        raise ValueError("m must be >= 0")
    mu = mpf(m) + mpf(1) / 2

    def coeff(k):
        return (mp.ln(k) + mpf(m) / k) / mp.e * mp.exp(-lngamma_int(k))

    def exponent(k):
        return mpf(k) * mp.ln(k) - k - mu * mp.ln(k)

    def log_coeff_f(k):
        c = (math.log(k) if k > 1 else 0.0) + m / k
        base = math.log(c) if c > 0 else -math.inf
        return base - 1 - math.lgamma(k)

    def exponent_f(k):
        return k * math.log(k) - k - float(mu) * math.log(k) if k > 1 else -1.0

    return DirichletSeriesSpec(
        name=f"F2[m={m}]", coeff=coeff, exponent=exponent,
        log_coeff_f=log_coeff_f, exponent_f=exponent_f,
    )


def builtin_theta():
    """sum_{n >= 0} exp((p - 1) n^2): the (p-1)-shift is folded into the
    coefficients exp(-n^2) so the barrier sits at Re p = 1."""
    return DirichletSeriesSpec(
        name="theta",
        coeff=lambda n: mp.exp(mpf(-(n * n))),
        exponent=lambda n: mpf(n * n),
        log_coeff_f=lambda n: -float(n * n),
        exponent_f=lambda n: float(n * n),
        k_start=0,
    )


@dataclass(frozen=True)
class GrowthProfile:
    p: object
    k_star: int
    log_max_term: mpf
    log_abs_sum: mpf


@dataclass(frozen=True)
class SeriesEval:
    value: LogMagnitude
    k_star: int
    n_terms: int
    k_max: int
    log_tail_bound: float


def _check_guard(spec, p, guard):
    if mpc(p).real > 1 - guard:
        raise BarrierProximityError(
            f"Re p = {mpc(p).real} inside the barrier guard band of "
            f"{spec.name}")


def _prescreen(spec, re_p, prec):
    """Locate k_star and the window of float-relevant terms.

    Returns (k_star, g_star, k_hi, window_threshold) where terms outside
    [k_start, k_hi] are certified below the threshold.
    """
    drop = (prec + 40) * math.log(2.0)
    g = lambda k: re_p * spec.exponent_f(k) + spec.log_coeff_f(k)
    k = spec.k_start
    g_star, k_star = -math.inf, k
    k_hi = k
    # scan until terms fall `drop` below the max and keep falling (the
    # exponent gaps grow, so decay is eventually monotone)
    falling = 0
    while True:
        gk = g(k)
        if gk > g_star:
            g_star, k_star = gk, k
        if gk > g_star - drop:
            k_hi = k
            falling = 0
        else:
            falling += 1
            if falling > 32 and k > 4 * k_star + 64:
                break
        k += 1
        if k > 5 * 10 ** 6:
            raise BarrierProximityError(
                f"{spec.name}: dominant window exceeds the term budget at "
                f"Re p = {re_p}")
    return k_star, g_star, k_hi, g_star - drop


def eval_series_info(spec, p, prec=DEFAULT_PREC, guard=BARRIER_GUARD,
                     _reverse=False):
    """Log-domain compensated evaluation; see module docstring."""
    _check_guard(spec, p, guard)
    with workprec(prec):
        pv = mpc(p)
        re_p = float(pv.real)
        k_star, g_star, k_hi, thresh = _prescreen(spec, re_p, prec)
        ks = [k for k in range(spec.k_start, k_hi + 1)
              if k <= k_star
              or re_p * spec.exponent_f(k) + spec.log_coeff_f(k) > thresh]
        if _reverse:
            ks = list(reversed(ks))
        # rescale by the maximal term's magnitude (real positive factor)
        log_max = pv.real * spec.exponent(k_star) + mp.ln(abs(spec.coeff(k_star)))
        s = mpc(0)
        for k in ks:
            s += spec.coeff(k) * mp.exp(pv * spec.exponent(k) - log_max)
        log_tail = re_p * spec.exponent_f(k_hi + 1) \
            + spec.log_coeff_f(k_hi + 1) - float(g_star)
        if s == 0:
            value = LogMagnitude.from_parts(mpf("-inf"), 0)
        else:
            value = LogMagnitude.from_parts(log_max + mp.ln(abs(s)), mp.arg(s))
        return SeriesEval(value=value, k_star=k_star, n_terms=len(ks),
                          k_max=k_hi, log_tail_bound=log_tail)


def eval_series(spec, p, prec=DEFAULT_PREC, guard=BARRIER_GUARD):
    """Series value as a LogMagnitude."""
    return eval_series_info(spec, p, prec, guard).value


def eval_series_mpc(spec, p, prec=DEFAULT_PREC, guard=BARRIER_GUARD):
    """Series value as an mpc (valid while log|value| fits the exponent)."""
    return eval_series(spec, p, prec, guard).to_mpc()


def growth_profile(spec, p, prec=DEFAULT_PREC):
    """Max-term index and log-domain magnitudes at real p in (0, 1)."""
    info = eval_series_info(spec, p, prec)
    lam = spec.exponent(info.k_star)
    c = spec.coeff(info.k_star)
    with workprec(prec):
        log_max = mpc(p).real * lam + mp.ln(abs(c))
    return GrowthProfile(p=p, k_star=info.k_star, log_max_term=log_max,
                         log_abs_sum=info.value.log_abs)


def growth_law_gap(spec, p, prec=DEFAULT_PREC):
    """ln ln |series(p)| - [1/(1-p) + ln(1-p)] on real p in (0, 1)."""
    prof = growth_profile(spec, p, prec)
    with workprec(prec):
        pv = mpf(p)
        return mp.ln(prof.log_abs_sum) - (1 / (1 - pv) + mp.ln(1 - pv))


def spike_scan(spec, re_p, im_window, samples, prec=DEFAULT_PREC):
    """Sample log|series| along a vertical segment; return the local maxima
    sorted by magnitude (descending)."""
    lo, hi = [mpf(v) for v in im_window]
    if samples < 3:
        raise ValueError("need at least 3 samples")
    pts = []
    for i in range(samples):
        im = lo + (hi - lo) * mpf(i) / (samples - 1)
        val = eval_series(spec, mpc(re_p, im), prec)
        pts.append((im, val.log_abs))
    maxima = []
    for i in range(1, samples - 1):
        if pts[i][1] >= pts[i - 1][1] and pts[i][1] >= pts[i + 1][1]:
            maxima.append(pts[i])
    maxima.sort(key=lambda t: -t[1])
    return maxima


def scan_samples(spec, re_p, im_window, samples, prec=DEFAULT_PREC):
    """All samples (im_p, LogMagnitude) along the segment (CLI helper)."""
    lo, hi = [mpf(v) for v in im_window]
    out = []
    for i in range(samples):
        im = lo + (hi - lo) * mpf(i) / (samples - 1) if samples > 1 else lo
        out.append((im, eval_series_info(spec, mpc(re_p, im), prec)))
    return out


def count_zeros(spec, rect, prec=DEFAULT_PREC, samples_per_edge=64,
                max_refine=12, modulus_floor_log=-60.0):
    """Winding number of the series along a rectangle boundary.

    ``rect`` = (re0, re1, im0, im1) with the closure inside the barrier
    guard band.  The boundary phase is tracked with adaptive bisection
    until consecutive phase steps are below pi/2; a boundary point with
    log|value| below the running maximum plus ``modulus_floor_log`` aborts
    with ``ZeroOnBoundaryError``.
    """
    re0, re1, im0, im1 = [mpf(v) for v in rect]
    if re1 >= 1 - mpf(10) ** -3:
        raise BarrierProximityError("rectangle closure must avoid Re p = 1")
    corners = [mpc(re0, im0), mpc(re1, im0), mpc(re1, im1), mpc(re0, im1),
               mpc(re0, im0)]

    cache = {}

    def val(p):
        key = (str(p.real), str(p.imag))
        if key not in cache:
            cache[key] = eval_series(spec, p, prec)
        return cache[key]

    pts = []
    for a, b in zip(corners, corners[1:]):
        for i in range(samples_per_edge):
            pts.append(a + (b - a) * mpf(i) / samples_per_edge)
    pts.append(corners[0])

    with workprec(prec):
        logs = [val(p) for p in pts]
        max_log = max(v.log_abs for v in logs)
        for v in logs:
            if v.log_abs < max_log + mpf(modulus_floor_log):
                raise ZeroOnBoundaryError(
                    "boundary modulus dips below the zero threshold")

        def refine(pts, logs):
            for _ in range(max_refine):
                new_pts, new_logs = [pts[0]], [logs[0]]
                changed = False
                for i in range(1, len(pts)):
                    d = logs[i].arg - logs[i - 1].arg
                    while d > mp.pi:
                        d -= 2 * mp.pi
                    while d < -mp.pi:
                        d += 2 * mp.pi
                    if abs(d) > mp.pi / 2:
                        mid = (pts[i - 1] + pts[i]) / 2
                        vm = val(mid)
                        if vm.log_abs < max_log + mpf(modulus_floor_log):
                            raise ZeroOnBoundaryError(
                                "boundary modulus dips below the zero "
                                "threshold during refinement")
                        new_pts.append(mid)
                        new_logs.append(vm)
                        changed = True
                    new_pts.append(pts[i])
                    new_logs.append(logs[i])
                pts, logs = new_pts, new_logs
                if not changed:
                    return pts, logs
            raise NonIntegerWindingError("phase refinement did not settle")

        pts, logs = refine(pts, logs)
        tot = mpf(0)
        for i in range(1, len(logs)):
            d = logs[i].arg - logs[i - 1].arg
            while d > mp.pi:
                d -= 2 * mp.pi
            while d < -mp.pi:
                d += 2 * mp.pi
            tot += d
        w = tot / (2 * mp.pi)
        wi = int(mp.nint(w))
        if abs(w - wi) > mpf("0.1"):
            raise NonIntegerWindingError(f"winding {w} not close to integer")
        return wi


# ---------------------------------------------------------------------------
# JSON loading
# ---------------------------------------------------------------------------

_BUILTINS = {
    "F": lambda doc: builtin_F(),
    "F2": lambda doc: builtin_F2(int(doc.get("m", 2))),
    "theta": lambda doc: builtin_theta(),
}


def series_from_json(doc):
    """Build a DirichletSeriesSpec from a JSON document (or dict).

    Schema: {"name": str, "builtin": "F"|"F2"|"theta", "m": int} for the
    built-ins, or {"name", "coeff": <expression in k>, "exponent":
    <expression in k>, "k_start": int} where expressions may use
    k, ln(k)/log(k), exp, sqrt, pi, E and rational arithmetic.
    """
    if isinstance(doc, str):
        doc = json.loads(doc)
    if "builtin" in doc:
        tag = doc["builtin"]
        if tag not in _BUILTINS:
            raise ValueError(f"unknown builtin series {tag!r}")
        return _BUILTINS[tag](doc)

    import sympy

    k = sympy.Symbol("k", positive=True)
    loc = {"k": k, "ln": sympy.log, "log": sympy.log, "exp": sympy.exp,
           "sqrt": sympy.sqrt, "pi": sympy.pi, "E": sympy.E,
           "gamma": sympy.gamma}
    cexpr = sympy.sympify(doc["coeff"], locals=loc)
    eexpr = sympy.sympify(doc["exponent"], locals=loc)
    cf = sympy.lambdify(k, cexpr, "mpmath")
    ef = sympy.lambdify(k, eexpr, "mpmath")
    cff = sympy.lambdify(k, cexpr, "math")
    eff = sympy.lambdify(k, eexpr, "math")

    def log_coeff_f(kk):
        v = cff(kk)
        return math.log(abs(v)) if v else -math.inf

    return DirichletSeriesSpec(
        name=doc.get("name", "custom"),
        coeff=lambda kk: mpc(cf(mpf(kk))),
        exponent=lambda kk: mpf(ef(mpf(kk))),
        log_coeff_f=log_coeff_f,
        exponent_f=lambda kk: float(eff(kk)),
        k_start=int(doc.get("k_start", 1)),
    )
