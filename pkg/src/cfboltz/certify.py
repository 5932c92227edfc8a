"""Special functions with explicit error bounds, and the K_n certification scan.

lgamma, digamma and trigamma shift the argument up with the recurrence
and then use the asymptotic series, truncated where the first omitted
term bounds the remainder. All functions accept numpy arrays.
"""
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numba import njit

HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)
LOG2 = math.log(2.0)
SHIFT = 16.0
# float rounding allowance, relative to the magnitudes summed
REL = 2.0 ** -45
# remainder of the truncated Stirling series at x >= SHIFT: 691/(360360 x^11)
LGAMMA_REM = 691.0 / (360360.0 * SHIFT ** 11)


def _shift(x, rec):
    x = np.array(x, dtype=float, copy=True)
    acc = np.zeros_like(x)
    for _ in range(int(SHIFT) + 1):
        low = x < SHIFT
        if not low.any():
            break
        acc[low] += rec(x[low])
        x[low] += 1.0
    return x, acc


def lgamma(x):
    """ln Gamma(x) for x > 0; absolute error below LGAMMA_REM plus rounding."""
    scalar = np.isscalar(x)
    y, acc = _shift(np.atleast_1d(x), np.log)
    r = 1.0 / y
    r2 = r * r
    ser = r * (1 / 12 - r2 * (1 / 360 - r2 * (1 / 1260 - r2 * (1 / 1680 - r2 / 1188))))
    out = (y - 0.5) * np.log(y) - y + HALF_LOG_2PI + ser - acc
    return float(out[0]) if scalar else out


def lgamma_mag(x):
    """Bound on the magnitudes summed inside ``lgamma``; rounding error is
    at most REL times this (the result itself can be near 0 at x = 1, 2)."""
    x = np.asarray(x, dtype=float)
    y = np.where(x < SHIFT, x + SHIFT, x)
    return (y + SHIFT + 1.5) * np.log(y) + y + 2.0 + np.abs(np.log(x))


def digamma(x):
    scalar = np.isscalar(x)
    y, acc = _shift(np.atleast_1d(x), lambda t: 1.0 / t)
    r2 = 1.0 / (y * y)
    ser = r2 * (1 / 12 - r2 * (1 / 120 - r2 * (1 / 252 - r2 * (1 / 240 - r2 / 132))))
    out = np.log(y) - 0.5 / y - ser - acc
    return float(out[0]) if scalar else out


def trigamma(x):
    scalar = np.isscalar(x)
    y, acc = _shift(np.atleast_1d(x), lambda t: 1.0 / (t * t))
    r = 1.0 / y
    r2 = r * r
    ser = r * (1 + r / 2 + r2 * (1 / 6 - r2 * (1 / 30 - r2 * (1 / 42 - r2 / 30))))
    out = ser + acc
    return float(out[0]) if scalar else out


def log_cosh(x):
    x = np.abs(x)
    return x + np.log1p(np.exp(-2 * x)) - math.log(2)


def c_func(x):
    """c(x) = -ln cosh(sqrt x) + sqrt(x) tanh(sqrt x), stable near 0."""
    x = float(x)
    if x < 1e-3:
        # Taylor series; next term is O(x^5)
        return x / 2 - x ** 2 / 4 + x ** 3 / 9 - 17 * x ** 4 / 360
    s = math.sqrt(x)
    return -float(log_cosh(s)) + s * math.tanh(s)


def c_bounds(x):
    """Rational bounds on c(x), as Fractions when x is a Fraction."""
    lo = 3 * x * (12 + x) / ((6 + x) * (12 + 5 * x))
    hi = 3 * x * (6 + x) / (4 * (3 + x) ** 2)
    return lo, hi


# saddle in m ---------------------------------------------------------------

def solve_mstar(k, A0, tol=1e-13, max_iter=60):
    """Root m of psi(m+k) - psi(m+1) + ln A0 = 0, clamped at 0.

    ``k`` may be an integer array. The left side is decreasing and convex
    in m, so Newton iterates are monotone after the first step.
    """
    k = np.atleast_1d(np.asarray(k, dtype=float))
    la = math.log(A0)
    m = np.zeros_like(k)
    h = digamma(m + k) - digamma(m + 1) + la
    active = h > 0
    # leading-order start; the first step lands left of the root if it overshoots
    m[active] = np.maximum((k[active] * A0 - 1) / (1 - A0), 0.0)
    for _ in range(max_iter):
        if not active.any():
            break
        ma, ka = m[active], k[active]
        ha = digamma(ma + ka) - digamma(ma + 1) + la
        dh = trigamma(ma + ka) - trigamma(ma + 1)
        step = -ha / dh
        ma_new = np.maximum(ma + step, 0.0)
        m[active] = ma_new
        done = np.abs(step) <= tol * (1 + ma_new)
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    return m


def log_binom_term(k, m, Aneq, A0):
    """lnGamma(k+m) - lnGamma(k+1) - lnGamma(m+1) + k ln Aneq + m ln A0, and
    the float error allowance for it."""
    t1 = lgamma(k + m)
    t2 = lgamma(k + 1.0)
    t3 = lgamma(m + 1.0)
    a = k * math.log(Aneq)
    b = m * math.log(A0)
    val = t1 - t2 - t3 + a + b
    mags = lgamma_mag(k + m) + lgamma_mag(k + 1.0) + lgamma_mag(m + 1.0)
    err = REL * (mags + np.abs(a) + np.abs(b)) + 3 * LGAMMA_REM
    return val, err


@dataclass
class AcceptancePlan:
    n: int
    n_prime: int
    v0: int
    A0: float
    Aneq: float
    xi: float
    log_norm: float      # ln D, D the normalization of F
    log_C: float
    log_Kn: float
    k_star: int
    m_star: float
    margin: float
    g: np.ndarray = None
    m_hat: np.ndarray = None

    @property
    def Kn(self):
        return math.exp(self.log_Kn)

    @property
    def coshNorm(self):
        return math.exp(self.log_norm)

    @property
    def C(self):
        return math.exp(self.log_C)

    def log_F(self, u):
        return log_cosh(self.xi * np.asarray(u, dtype=float)) - self.log_norm


def scan(n_prime, A0, Aneq, xi, log_norm=0.0):
    """g(k) for k = 1..n', with the maximizing real m and error allowances.

    g(k) includes k ln D: the product of the k factors 1/F is at most
    D^k / cosh(xi n'/k)^k by convexity of ln cosh.
    """
    k = np.arange(1, n_prime + 1, dtype=float)
    m = solve_mstar(k, A0)
    base, err = log_binom_term(k, m, Aneq, A0)
    lc = log_cosh(xi * n_prime / k)
    g = base - k * lc + k * log_norm
    # ln cosh is a difference of O(1) terms near 0, so budget |arg| + 1
    err = err + REL * (abs(xi) * n_prime + k * (1.0 + abs(log_norm)))
    return k, m, g, err


def scan_max(n_prime, A0, Aneq, xi, log_norm, points=600):
    """Approximate max of g over a coarse k grid (for tuning only)."""
    ks = np.unique(np.concatenate([
        np.geomspace(1, n_prime, points // 2).round(),
        np.linspace(1, n_prime, points // 2).round()]))
    m = solve_mstar(ks, A0)
    base, _ = log_binom_term(ks, m, Aneq, A0)
    g = base - ks * log_cosh(xi * n_prime / ks) + ks * log_norm
    return float(g.max())


def build_plan(n, v0, A0, Aneq, xi, log_norm, keep=False):
    """Certified acceptance plan for size n.

    ``xi`` is the log-shift used by the mixture and ``log_norm`` = ln D
    with F(u) = cosh(xi u)/D. K_n is chosen so that every r_n evaluated
    in floats satisfies logR + err <= 0. The loose constant C = D^{n'}
    is reported but not used: D^k is kept inside the scan instead.
    """
    n_prime = n - v0
    if n_prime < 1:
        raise ValueError("the plan needs n > v0")
    k, m, g, err = scan(n_prime, A0, Aneq, xi, log_norm)
    i = int(np.argmax(g + err))
    gmax = float(g[i] + err[i])
    log_C = n_prime * max(log_norm, 0.0)
    # runtime evaluation of logR sums terms bounded by these magnitudes
    K, M = n_prime + 1.0, n_prime / v0 + 2.0
    terms = 3 * float(lgamma_mag(K + M)) + K * abs(math.log(Aneq)) + M * abs(math.log(A0))
    worst = terms + abs(xi) * n_prime + K * (1.0 + abs(log_norm)) + 2 * (abs(gmax) + terms)
    margin = 2 * (REL * worst + 3 * LGAMMA_REM)
    log_Kn = -gmax - margin
    return AcceptancePlan(n, n_prime, v0, A0, Aneq, xi, log_norm, log_C, log_Kn,
                          int(k[i]), float(m[i]), margin,
                          g if keep else None, m if keep else None)


def log_acceptance(plan, u_tilde, k, m):
    """(logR, errBound) for a landed walk with k drifted steps and m fills."""
    u = np.asarray(u_tilde, dtype=float)
    sF = float(np.sum(plan.log_F(u)))
    base, err = log_binom_term(float(k), float(m), plan.Aneq, plan.A0)
    base = float(base[0]) if np.ndim(base) else float(base)
    err = float(err[0]) if np.ndim(err) else float(err)
    logR = plan.log_Kn + base - sF
    sa = abs(plan.xi) * float(np.sum(np.abs(u))) + len(u) * (1.0 + abs(plan.log_norm))
    err += REL * (sa + abs(plan.log_Kn) + abs(base))
    return logR, err


def log_acceptance_precise(plan, u_tilde, k, m, prec):
    """The same quantity in mpmath at ``prec`` bits, with a bound on its error."""
    import mpmath
    with mpmath.workprec(prec):
        xi = mpmath.mpf(plan.xi)
        val = (mpmath.mpf(plan.log_Kn) + mpmath.loggamma(k + m) - mpmath.loggamma(k + 1)
               - mpmath.loggamma(m + 1) + k * mpmath.log(mpmath.mpf(plan.Aneq))
               + m * mpmath.log(mpmath.mpf(plan.A0)))
        s = mpmath.mpf(0)
        for u in u_tilde:
            s += mpmath.log(mpmath.cosh(xi * int(u)))
        val -= s - len(u_tilde) * mpmath.mpf(plan.log_norm)
        mag = abs(val) + abs(s) + 10 * (k + m + 2) * (1 + abs(mpmath.log(k + m + 2)))
        return val, mag * mpmath.mpf(2) ** (8 - prec)


def derivative_bounds(plan, k):
    """Interval for d/dk g(k, m*(k)) built from the rational c(x) bounds.

    The digamma part is evaluated in floats and widened by its error.
    """
    k = np.asarray(k, dtype=float)
    m = solve_mstar(k, plan.A0)
    psi = digamma(m + k) - digamma(k + 1) + math.log(plan.Aneq) + plan.log_norm
    y2 = (plan.xi * plan.n_prime / k) ** 2
    lo_c, hi_c = c_bounds(y2)
    w = 1e-12 * (1 + np.abs(digamma(m + k)))
    return psi + lo_c - w, psi + hi_c + w


def derivative_signs(plan, ks=None):
    """Certified sign of the derivative at each k: +1, -1, or 0 if undecided."""
    if ks is None:
        ks = np.arange(1, plan.n_prime + 1)
    lo, hi = derivative_bounds(plan, ks)
    return np.where(lo > 0, 1, np.where(hi < 0, -1, 0))


def sign_changes(plan):
    """Number of certified + to - changes along k, undecided points skipped.

    Each one is an interior local maximum of g. Near k = 1 the derivative
    can also start negative, giving a boundary maximum at k = 1 that the
    full scan covers anyway.
    """
    sgn = derivative_signs(plan)
    sgn = sgn[sgn != 0]
    return int(np.count_nonzero((sgn[:-1] > 0) & (sgn[1:] < 0)))


def derivative_bracket(plan):
    """(a, b) around the first interior maximum of g.

    The derivative is certified positive at a, negative at b, undecided in
    between. Without an interior maximum the boundary is returned: (n', n')
    if the last certified sign is positive, else (1, 1).
    """
    sgn = derivative_signs(plan)
    idx = np.flatnonzero(sgn != 0)
    s = sgn[idx]
    turn = np.flatnonzero((s[:-1] > 0) & (s[1:] < 0))
    if len(turn):
        t = int(turn[0])
        return int(idx[t]) + 1, int(idx[t + 1]) + 1
    if len(s) and s[-1] > 0:
        return plan.n_prime, plan.n_prime
    return 1, 1


# Robbins bound -------------------------------------------------------------

def _stirling_main(n):
    return HALF_LOG_2PI + (n + 0.5) * math.log(n) - n


def robbins_holds(n):
    """Check exp(1/(12n+1)) <= n!/(sqrt(2 pi) n^(n+1/2) e^-n) <= exp(1/(12n)).

    Small n use the exact factorial at high precision. Large n use the
    alternating Stirling series, whose partial sums bracket ln n! minus the
    main term: 1/(12n) - 1/(360n^3) <= d <= 1/(12n) - 1/(360n^3) + 1/(1260n^5).
    These endpoints are compared with the Robbins bounds as exact rationals.
    """
    if n <= 20000:
        import mpmath
        with mpmath.workdps(40 + len(str(n))):
            d = mpmath.log(mpmath.factorial(n)) - (
                mpmath.log(2 * mpmath.pi) / 2 + (n + mpmath.mpf(1) / 2) * mpmath.log(n) - n)
            return 1 / mpmath.mpf(12 * n + 1) <= d <= 1 / mpmath.mpf(12 * n)
    n = Fraction(n)
    lo = 1 / (12 * n) - 1 / (360 * n ** 3)
    hi = lo + 1 / (1260 * n ** 5)
    return lo >= 1 / (12 * n + 1) and hi <= 1 / (12 * n)


def robbins_log_factorial(n):
    """Interval [lo, hi] containing ln n! from the Robbins bound (n >= 1)."""
    s = _stirling_main(n)
    pad = 1e-15 * (abs(s) + 1)
    return s + 1.0 / (12 * n + 1) - pad, s + 1.0 / (12 * n) + pad


# compiled scalar versions for the sampling loop ------------------------------

@njit(cache=True)
def lgamma1(x):
    acc = 0.0
    while x < SHIFT:
        acc += math.log(x)
        x += 1.0
    r = 1.0 / x
    r2 = r * r
    ser = r * (1 / 12 - r2 * (1 / 360 - r2 * (1 / 1260 - r2 * (1 / 1680 - r2 / 1188))))
    return (x - 0.5) * math.log(x) - x + HALF_LOG_2PI + ser - acc


@njit(cache=True)
def lgamma_mag1(x):
    y = x + SHIFT if x < SHIFT else x
    return (y + SHIFT + 1.5) * math.log(y) + y + 2.0 + abs(math.log(x))


@njit(cache=True)
def log_cosh1(x):
    x = abs(x)
    return x + math.log1p(math.exp(-2 * x)) - LOG2


@njit(cache=True)
def log_acceptance1(log_Kn, lnA0, lnAneq, xi, log_norm, k, m, u_tilde):
    """Compiled twin of ``log_acceptance``: (logR, errBound)."""
    t1 = lgamma1(k + m)
    t2 = lgamma1(k + 1.0)
    t3 = lgamma1(m + 1.0)
    a = k * lnAneq
    b = m * lnA0
    base = t1 - t2 - t3 + a + b
    s = 0.0
    sa = 0.0
    for i in range(u_tilde.shape[0]):
        x = xi * u_tilde[i]
        s += log_cosh1(x) - log_norm
        sa += abs(x) + 1.0 + abs(log_norm)
    logR = log_Kn + base - s
    mags = lgamma_mag1(k + m) + lgamma_mag1(k + 1.0) + lgamma_mag1(m + 1.0)
    err = (REL * (mags + abs(a) + abs(b)) + 3 * LGAMMA_REM
           + REL * (sa + abs(log_Kn) + abs(base)))
    return logR, err
