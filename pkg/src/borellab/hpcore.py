"""Arbitrary-precision scalar types, special functions, critical-time
inversions and adaptive contour quadrature.

Everything downstream (solution evaluation, Dirichlet series, Borel-plane
contours) is built on the primitives here:

* ``HPComplex``   -- an immutable complex value that carries its working
  precision in bits; mixed-precision arithmetic resolves to the larger one.
* ``LogMagnitude`` -- (log|v|, arg v) representation for values far beyond
  floating-point range, e.g. series magnitudes like exp((1-p) exp(1/(1-p))).
* ``invert_critical_time`` / ``invert_zm`` -- Newton inversions of
  z = x ln x and z = x ln x - x - (m+1/2) ln x, with bisection / local
  series fallbacks near the critical points where dz/dx vanishes.
* ``ContourPath`` + ``contour_quad`` -- piecewise paths (lines, arcs,
  truncated rays with analytic tail bounds) integrated by level-doubling
  tanh-sinh panels with a-posteriori error estimates.
* ``PathContinuation`` -- branch tracking of a multivalued inverse along a
  contour by warm-started Newton marching.

All operations are pure; the only shared state is the integer-argument
gamma cache, which is lock-protected.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import mpmath as mp
from mpmath import mpc, mpf

from .errors import (
    BudgetExhaustedError,
    HPOverflowError,
    NoConvergenceError,
    OnBranchCutError,
    PoleAtNonPositiveIntegerError,
    TailBoundViolatedError,
)

DEFAULT_PREC = 256          # bits; all spec tolerances assume this
GUARD_BITS = 16
POLE_TOL = mpf(10) ** -30   # proximity guard around integer poles
OVERFLOW_LOG = mpf(2) ** 24  # |log_abs| above this refuses conversion


def workprec(prec):
    """mpmath context manager at ``prec`` bits plus guard digits."""
    return mp.workprec(int(prec) + GUARD_BITS)


def to_mpc(value):
    """Coerce python / mpmath / HPComplex scalars to mpc."""
    if isinstance(value, HPComplex):
        return value.to_mpc()
    if isinstance(value, LogMagnitude):
        return value.to_mpc()
    return mpc(value)


def _require_finite(v):
    if not mp.isfinite(v):
        raise HPOverflowError(f"non-finite value produced: {v}")
    return v


# ---------------------------------------------------------------------------
# scalar types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HPComplex:
    """Complex value pinned to an explicit binary precision.

    Arithmetic between two HPComplex operands is carried out at the larger
    of the two precisions; plain numbers adopt the HPComplex operand's
    precision.  Non-finite results raise ``HPOverflowError`` instead of
    propagating inf/nan.
    """

    re: mpf
    im: mpf
    precision_bits: int

    def __post_init__(self):
        if self.precision_bits < 64:
            raise ValueError("precision_bits must be >= 64")
        _require_finite(self.re)
        _require_finite(self.im)

    @classmethod
    def make(cls, value, precision_bits=DEFAULT_PREC):
        with mp.workprec(precision_bits):
            v = mpc(value)
            return cls(mpf(v.real), mpf(v.imag), precision_bits)

    def to_mpc(self):
        return mpc(self.re, self.im)

    def __complex__(self):
        return complex(self.re, self.im)

    # -- arithmetic -------------------------------------------------------
    def _binop(self, other, op):
        prec = self.precision_bits
        if isinstance(other, HPComplex):
            prec = max(prec, other.precision_bits)
            ov = other.to_mpc()
        else:
            ov = mpc(other)
        with mp.workprec(prec):
            r = op(self.to_mpc(), ov)
            _require_finite(r.real)
            _require_finite(r.imag)
            return HPComplex(mpf(r.real), mpf(r.imag), prec)

    def __add__(self, other):
        return self._binop(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binop(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._binop(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binop(other, lambda a, b: a * b)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binop(other, lambda a, b: a / b)

    def __rtruediv__(self, other):
        return self._binop(other, lambda a, b: b / a)

    def __pow__(self, other):
        return self._binop(other, lambda a, b: a ** b)

    def __neg__(self):
        return HPComplex(-self.re, -self.im, self.precision_bits)

    def __abs__(self):
        with mp.workprec(self.precision_bits):
            return abs(self.to_mpc())

    def conjugate(self):
        return HPComplex(self.re, -self.im, self.precision_bits)

    def __eq__(self, other):
        if isinstance(other, HPComplex):
            return self.re == other.re and self.im == other.im
        return self.to_mpc() == mpc(other)


def _norm_arg(a):
    two_pi = 2 * mp.pi
    a = mp.fmod(a, two_pi)
    if a > mp.pi:
        a -= two_pi
    elif a <= -mp.pi:
        a += two_pi
    return a


@dataclass(frozen=True)
class LogMagnitude:
    """A complex value stored as exp(log_abs) * e^{i arg}.

    Used wherever magnitudes outgrow any fixed-exponent float, most
    prominently for Dirichlet series values near the barrier.
    """

    log_abs: mpf
    arg: mpf

    @classmethod
    def from_parts(cls, log_abs, arg):
        return cls(mpf(log_abs), _norm_arg(mpf(arg)))

    @classmethod
    def from_mpc(cls, v):
        v = mpc(v)
        if v == 0:
            return cls(mpf("-inf"), mpf(0))
        return cls(mp.ln(abs(v)), mp.arg(v))

    def __mul__(self, other):
        if not isinstance(other, LogMagnitude):
            other = LogMagnitude.from_mpc(other)
        return LogMagnitude(self.log_abs + other.log_abs,
                            _norm_arg(self.arg + other.arg))

    def to_mpc(self):
        if abs(self.log_abs) > OVERFLOW_LOG:
            raise HPOverflowError(
                f"log magnitude {self.log_abs} exceeds conversion threshold")
        return mp.exp(mpc(self.log_abs, self.arg))

    def to_hpcomplex(self, precision_bits=DEFAULT_PREC):
        if abs(self.log_abs) > OVERFLOW_LOG:
            raise HPOverflowError(
                f"log magnitude {self.log_abs} exceeds conversion threshold")
        with mp.workprec(precision_bits):
            return HPComplex.make(self.to_mpc(), precision_bits)


# ---------------------------------------------------------------------------
# gamma
# ---------------------------------------------------------------------------

_gamma_cache_lock = threading.Lock()
_GAMMA_INT = {}
_LNGAMMA_INT = {}


def gamma_int(k, prec=DEFAULT_PREC):
    """Gamma(k) for integer k >= 1, cached per (k, prec)."""
    key = (k, prec)
    with _gamma_cache_lock:
        v = _GAMMA_INT.get(key)
    if v is None:
        with workprec(prec):
            v = mp.gamma(k)
        with _gamma_cache_lock:
            _GAMMA_INT[key] = v
    return v


def lngamma_int(k, prec=DEFAULT_PREC):
    key = (k, prec)
    with _gamma_cache_lock:
        v = _LNGAMMA_INT.get(key)
    if v is None:
        with workprec(prec):
            v = mp.loggamma(k)
        with _gamma_cache_lock:
            _LNGAMMA_INT[key] = v
    return v


def _near_nonpositive_integer(z):
    z = mpc(z)
    n = mp.nint(z.real)
    return n <= 0 and abs(z - n) < POLE_TOL


def gamma(z, prec=None):
    """Gamma function with an explicit pole guard.

    Raises ``PoleAtNonPositiveIntegerError`` within ``POLE_TOL`` of
    0, -1, -2, ...  Accuracy target: 4 ulp at the working precision.
    """
    hp = isinstance(z, HPComplex)
    if prec is None:
        prec = z.precision_bits if hp else DEFAULT_PREC
    zv = to_mpc(z)
    if _near_nonpositive_integer(zv):
        raise PoleAtNonPositiveIntegerError(f"gamma pole at {zv}")
    with workprec(prec):
        r = mp.gamma(zv)
        _require_finite(r.real if isinstance(r, mpc) else r)
    return HPComplex.make(r, prec) if hp else r


def lngamma(z, prec=None):
    """Principal branch of log-gamma, same pole guard as ``gamma``."""
    hp = isinstance(z, HPComplex)
    if prec is None:
        prec = z.precision_bits if hp else DEFAULT_PREC
    zv = to_mpc(z)
    if _near_nonpositive_integer(zv):
        raise PoleAtNonPositiveIntegerError(f"lngamma pole at {zv}")
    with workprec(prec):
        r = mp.loggamma(zv)
    return HPComplex.make(r, prec) if hp else r


# ---------------------------------------------------------------------------
# critical-time maps and their inversions
# ---------------------------------------------------------------------------

def critical_time(x):
    """z = x ln x (principal logarithm)."""
    x = to_mpc(x)
    return x * mp.ln(x)


def zm(x, m):
    """Accelerated time z_m = x ln x - x - (m + 1/2) ln x."""
    x = to_mpc(x)
    lx = mp.ln(x)
    return x * lx - x - (mpf(m) + mpf(1) / 2) * lx


def dzm(x, m):
    """dz_m/dx = ln x - (m + 1/2)/x."""
    x = to_mpc(x)
    return mp.ln(x) - (mpf(m) + mpf(1) / 2) / x


def critical_point_zm(m, prec=DEFAULT_PREC):
    """(x*, z_m(x*)) where dz_m/dx vanishes, i.e. x* ln x* = m + 1/2."""
    with workprec(prec):
        xs = invert_critical_time(mpf(m) + mpf(1) / 2, prec=prec)
        return xs, zm(xs, m).real


def _newton(z, x0, f, df, prec, max_iter=90):
    """Damped Newton iteration for f(x) = z; returns x or raises."""
    with workprec(prec):
        tol = mpf(2) ** (-(prec + 8))
        x = mpc(x0)
        for _ in range(max_iter):
            d = df(x)
            if d == 0:
                raise NoConvergenceError("derivative vanished exactly")
            step = (f(x) - z) / d
            if abs(step) > mpf("0.5") * (1 + abs(x)):
                step *= mpf("0.5") * (1 + abs(x)) / abs(step)
            x = x - step
            if abs(step) <= tol * (1 + abs(x)):
                # one polishing step
                d = df(x)
                if d != 0:
                    x = x - (f(x) - z) / d
                return x
        raise NoConvergenceError(f"Newton did not converge for z={z}")


def _bisect_real(z, lo, hi, f, prec, increasing=True, max_iter=None):
    with workprec(prec):
        z = mpf(z)
        lo, hi = mpf(lo), mpf(hi)
        if max_iter is None:
            max_iter = prec + 40
        for _ in range(max_iter):
            mid = (lo + hi) / 2
            v = f(mid).real
            if (v < z) == increasing:
                lo = mid
            else:
                hi = mid
        return (lo + hi) / 2


def invert_critical_time(z, branch=0, side=0, prec=DEFAULT_PREC):
    """Solve x ln x = z on the requested sheet.

    ``branch`` selects the sheet of the logarithm (0 = principal, the
    branch that is real and > 1/e for real z > -1/e; -1 = the companion
    real branch with x in (0, 1/e) on the cut interval).  On the cut
    (-1/e, 0) the principal inversion is refused unless ``side`` (+1 upper
    sheet / -1 lower, i.e. the small-x companion value) is given.

    Newton iteration uses the derivative dz/dx = 1 + ln x; within
    |1 + ln x| < 1e-3 of the critical point the real section falls back to
    bisection and complex arguments to a local square-root expansion seed.
    """
    with workprec(prec):
        zv = to_mpc(z)
        em1 = mp.exp(-1)
        crit = -em1

        # exact critical point
        if abs(zv - crit) < mpf(2) ** (-(prec - 2)):
            return mpc(em1)

        on_cut = (zv.imag == 0 and crit.real < zv.real < 0)
        if branch == 0 and on_cut:
            if side == 0:
                raise OnBranchCutError(
                    f"z={zv} lies on the branch cut (-1/e, 0); pass side=+1/-1")
            if side < 0:
                branch = -1  # companion real solution x in (0, 1/e)

        f = lambda x: x * mp.ln(x)
        df = lambda x: 1 + mp.ln(x)

        # near-critical: local sqrt expansion about x = 1/e, else bisection
        if abs(zv + em1) < mpf("0.004"):
            s = mp.sqrt(2 * (mp.e * zv + 1))
            sign = 1 if branch == 0 else -1
            w = -1 + sign * s - s * s / 3 + sign * 11 * s ** 3 / 72 \
                - 43 * s ** 4 / 540
            if zv.imag == 0 and zv.real >= crit.real:
                lo, hi = ((em1, mpf(2)) if branch == 0 else
                          (mpf(2) ** (-(prec + 30)), em1))
                x0 = _bisect_real(zv.real, lo, hi, f, prec,
                                  increasing=(branch == 0))
                return mpc(x0)
            return _newton(zv, mp.exp(w), f, df, prec)

        # seed from a 53-bit Lambert-W evaluation on the requested sheet
        try:
            wseed = mp.fp.lambertw(complex(zv), branch)
        except (ValueError, OverflowError):
            wseed = complex(mp.ln(zv + 2))
        x0 = mp.exp(mpc(wseed))
        return _newton(zv, x0, f, df, prec)


def invert_zm(z, m, branch=0, prec=DEFAULT_PREC):
    """Solve z_m(x) = z on the branch containing large positive real x
    (``branch`` = 0) or on the companion branch with x in (0, x*)
    (``branch`` = -1).

    Newton iteration uses dz_m/dx = ln x - (m+1/2)/x; near the critical
    point x* (where that derivative vanishes) the real section is
    bisected and complex arguments are seeded from the local square-root
    expansion.
    """
    with workprec(prec):
        zv = to_mpc(z)
        mu = mpf(m) + mpf(1) / 2
        xs, zs = critical_point_zm(m, prec)
        f = lambda x: x * mp.ln(x) - x - mu * mp.ln(x)
        df = lambda x: mp.ln(x) - mu / x

        if abs(zv - zs) < mpf(2) ** (-(prec - 2)):
            return mpc(xs)

        if abs(zv - zs) < mpf("0.01"):
            d2 = 1 / xs + mu / xs ** 2
            s = mp.sqrt(2 * (zv - zs) / d2)
            sign = 1 if branch == 0 else -1
            if zv.imag == 0 and zv.real >= zs:
                if branch == 0:
                    x0 = _bisect_real(zv.real, xs, 4 * xs + 8, f, prec,
                                      increasing=True)
                else:
                    x0 = _bisect_real(zv.real, mpf(2) ** -40, xs, f, prec,
                                      increasing=False)
                return mpc(x0)
            return _newton(zv, xs + sign * s, f, df, prec)

        if branch == 0:
            # z_m ~ x(ln x - 1) for large x: reuse the critical-time seed
            seed_arg = zv / mp.e
            if abs(seed_arg) < 1:
                seed_arg = mpc(1)
            x0 = mp.e * invert_critical_time(seed_arg, prec=64)
            if abs(x0) < 2 * xs:
                x0 = mpc(2 * xs)
        else:
            if not (zv.imag == 0 and zv.real > zs):
                raise OnBranchCutError(
                    "companion branch is implemented on its real section only")
            x0 = _bisect_real(zv.real, mpf(2) ** -40, xs, f, prec,
                              increasing=False)
            return mpc(x0)
        return _newton(zv, x0, f, df, prec)


# ---------------------------------------------------------------------------
# contour paths
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Line:
    a: mpc
    b: mpc

    def start(self):
        return self.a

    def end(self):
        return self.b

    def point(self, t):
        return self.a + (self.b - self.a) * t

    def dpoint(self, t):
        return self.b - self.a


@dataclass(frozen=True)
class Arc:
    center: mpc
    radius: mpf
    theta0: mpf
    theta1: mpf

    def start(self):
        return self.center + self.radius * mp.exp(1j * self.theta0)

    def end(self):
        return self.center + self.radius * mp.exp(1j * self.theta1)

    def point(self, t):
        th = self.theta0 + (self.theta1 - self.theta0) * t
        return self.center + self.radius * mp.exp(1j * th)

    def dpoint(self, t):
        th = self.theta0 + (self.theta1 - self.theta0) * t
        return 1j * (self.theta1 - self.theta0) * self.radius * mp.exp(1j * th)


@dataclass(frozen=True)
class Ray:
    """Truncated ray: ``start`` + t * ``direction`` for t in [0, radius].

    ``tail_bound`` must bound |integral over (radius, infinity)| of the
    eventual integrand; contour_quad checks it against the tolerance.
    """

    start_point: mpc
    direction: mpc
    truncation_radius: mpf
    tail_bound: object = None  # callable(radius) -> mpf, or None

    def start(self):
        return self.start_point

    def end(self):
        return self.start_point + self.direction * self.truncation_radius

    def point(self, t):
        return self.start_point + self.direction * self.truncation_radius * t

    def dpoint(self, t):
        return self.direction * self.truncation_radius


@dataclass(frozen=True)
class ContourPath:
    """Connected piecewise path; consecutive segments must join."""

    segments: tuple
    orientation: int = +1

    def __post_init__(self):
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        for s0, s1 in zip(segs, segs[1:]):
            gap = abs(mpc(s0.end()) - mpc(s1.start()))
            scale = 1 + abs(mpc(s0.end()))
            if gap > mpf("1e-12") * scale:
                raise ValueError(
                    f"segments not connected: {s0.end()} -> {s1.start()}")

    def reversed(self):
        return ContourPath(self.segments, -self.orientation)


@dataclass
class QuadResult:
    value: mpc
    err_estimate: mpf
    n_evals: int
    converged: bool = True


# --- tanh-sinh panel engine -------------------------------------------------

def _ts_nodes(level, prec):
    """tanh-sinh nodes/weights on (-1, 1) new at this level.

    Level L uses mesh h = 2^-L; levels > minimum contribute only odd k.
    """
    h = mpf(2) ** (-level)
    tmax = mp.asinh((2 / mp.pi) * ((prec + 24) * mp.ln(2)))
    kmax = int(mp.floor(tmax / h)) + 1
    out = []
    step = 1 if level == _TS_MIN_LEVEL else 2
    start = 0 if level == _TS_MIN_LEVEL else 1
    for k in range(start, kmax + 1, step):
        t = k * h
        ch = mp.cosh(t)
        sh = mp.sinh(t)
        den = mp.cosh(mp.pi / 2 * sh)
        x = mp.tanh(mp.pi / 2 * sh)
        w = (mp.pi / 2) * ch / (den * den)
        if 1 - abs(x) == 0:
            break
        out.append((x, w))
        if k:
            out.append((-x, w))
    return out, h


_TS_MIN_LEVEL = 3
_ts_cache = {}
_ts_lock = threading.Lock()


def _ts_level_nodes(level, prec):
    key = (level, prec)
    with _ts_lock:
        v = _ts_cache.get(key)
    if v is None:
        with workprec(prec):
            v = _ts_nodes(level, prec)
        with _ts_lock:
            _ts_cache[key] = v
    return v


def _integrate_segment(seg, f, rel_tol, prec, max_level, scale_hint):
    """Level-doubling tanh-sinh on one segment; returns (value, err, evals,
    converged)."""
    with workprec(prec):
        total = mpc(0)
        prev = None
        err = mpf("inf")
        n_evals = 0
        for level in range(_TS_MIN_LEVEL, max_level + 1):
            nodes, h = _ts_level_nodes(level, prec)
            part = mpc(0)
            for x, w in nodes:
                t = (x + 1) / 2
                part += w * f(seg.point(t)) * seg.dpoint(t)
            n_evals += len(nodes)
            if level == _TS_MIN_LEVEL:
                total = part * h / 2
            else:
                total = total / 2 + part * h / 2
            if prev is not None:
                err = abs(total - prev)
                floor = rel_tol * max(abs(total), scale_hint)
                if err <= floor:
                    return total, err, n_evals, True
            prev = total
        return total, err, n_evals, False


def contour_quad(path, integrand, rel_tol, prec=DEFAULT_PREC, max_level=9):
    """Integrate ``integrand`` along ``path`` to relative tolerance.

    The error estimate is a-posteriori (difference of successive
    refinement levels summed over segments), not a rigorous bound.  If the
    refinement budget runs out the best value is still returned, with
    ``converged=False``.  Ray segments must carry a tail bound; a bound
    exceeding ``rel_tol * |value|`` raises ``TailBoundViolatedError``.
    """
    with workprec(prec):
        rel_tol = mpf(rel_tol)
        # coarse pass for the magnitude scale
        scale = mpf(0)
        for seg in path.segments:
            nodes, h = _ts_level_nodes(_TS_MIN_LEVEL, prec)
            s = mpc(0)
            for x, w in nodes:
                t = (x + 1) / 2
                s += w * integrand(seg.point(t)) * seg.dpoint(t)
            scale += abs(s * h / 2)
        scale = scale if scale > 0 else mpf(1)

        total = mpc(0)
        err = mpf(0)
        n_evals = 0
        converged = True
        nseg = max(1, len(path.segments))
        for seg in path.segments:
            v, e, n, ok = _integrate_segment(
                seg, integrand, rel_tol / nseg, prec, max_level, scale)
            total += v
            err += e
            n_evals += n
            converged = converged and ok
        total *= path.orientation

        for seg in path.segments:
            if isinstance(seg, Ray) and seg.tail_bound is not None:
                bound = mpf(seg.tail_bound(seg.truncation_radius))
                err += bound
                if bound > rel_tol * max(abs(total), mpf(2) ** (-prec)):
                    raise TailBoundViolatedError(
                        f"ray tail bound {bound} exceeds tolerance at radius "
                        f"{seg.truncation_radius}")
        return QuadResult(total, err, n_evals, converged)


# ---------------------------------------------------------------------------
# branch tracking along contours
# ---------------------------------------------------------------------------

class PathContinuation:
    """Analytic continuation of a multivalued inverse along a polyline.

    Given the forward map ``z_of_x`` / ``dz_dx`` and a seed ``x0`` valid at
    the first waypoint, marches Newton along the waypoints with adaptive
    substeps and stores anchors.  Calling the object at a point near the
    path Newton-polishes from the nearest anchor, which keeps the result on
    the continued sheet.
    """

    def __init__(self, z_of_x, dz_dx, waypoints, x0, prec=DEFAULT_PREC,
                 max_step=0.15, rel_step=0.08):
        self.z_of_x = z_of_x
        self.dz_dx = dz_dx
        self.prec = prec
        self.anchors = []
        with workprec(prec):
            x = mpc(x0)
            prev = None
            for wp in waypoints:
                wp = mpc(wp)
                if prev is None:
                    x = self._polish(wp, x)
                else:
                    dist = abs(wp - prev)
                    step = max(mpf(max_step), mpf(rel_step) * abs(prev))
                    nst = max(1, int(mp.ceil(dist / step)))
                    for i in range(1, nst + 1):
                        zt = prev + (wp - prev) * mpf(i) / nst
                        x = self._polish(zt, x)
                self.anchors.append((wp, x))
                prev = wp

    def _polish(self, z, x0):
        return _newton(z, x0, self.z_of_x, self.dz_dx, self.prec)

    def __call__(self, z):
        z = mpc(z)
        _, x0 = min(self.anchors, key=lambda a: abs(z - a[0]))
        return self._polish(z, x0)

    def end_value(self):
        return self.anchors[-1][1]
