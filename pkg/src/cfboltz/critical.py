"""Critical point of a polynomial system and the constants derived from it.

The characteristic system is Phi(rho, tau) = tau together with
det(I - K) = 0, K being the Jacobian of Phi in tau. We locate the smallest
rho by bisection on z, using monotone Newton from tau = 0 to decide
whether z is below the singularity, then polish (rho, tau) and the
Perron vector v of K with Newton on the square system
Phi(rho, tau) = tau, K v = v, v_0 = 1.
"""
import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .errors import DivergentSystem, NoConvergence, OutsideSubcriticalBall


def _falling(n, d):
    out = 1
    for i in range(d):
        out *= n - i
    return out


class PolySystem:
    """Evaluate Phi and its derivatives; works with floats or mpmath numbers."""

    def __init__(self, spec):
        self.width = len(spec.symbols)
        self.monos = [[(float(mo.coef), mo.h, mo.k) for mo in prods] for prods in spec.productions]
        self.exact = [[(mo.coef, mo.h, mo.k) for mo in prods] for prods in spec.productions]

    @staticmethod
    def _mp(c):
        return mpmath.mpf(c.numerator) / c.denominator

    def _term(self, coef, h, k, z, y, dz=0, dy=None):
        val = coef * _falling(h, dz)
        if val == 0:
            return 0
        if h - dz:
            val *= z ** (h - dz)
        for b, kb in enumerate(k):
            d = dy[b] if dy else 0
            if d > kb:
                return 0
            if d:
                val *= _falling(kb, d)
            if kb - d:
                val *= y[b] ** (kb - d)
        return val

    def phi(self, z, y, precise=False):
        monos = self.exact if precise else self.monos
        return [sum((self._term(self._mp(c) if precise else c, h, k, z, y)
                     for c, h, k in ms), 0) for ms in monos]

    def derivative(self, a, z, y, dz=0, dy=None, precise=False):
        monos = self.exact if precise else self.monos
        return sum((self._term(self._mp(c) if precise else c, h, k, z, y, dz, dy)
                    for c, h, k in monos[a]), 0)

    def jacobian(self, z, y):
        n = self.width
        K = np.zeros((n, n))
        for a in range(n):
            for b in range(n):
                dy = [0] * n
                dy[b] = 1
                K[a, b] = self.derivative(a, z, y, dy=dy)
        return K

    def dz(self, z, y):
        return np.array([self.derivative(a, z, y, dz=1) for a in range(self.width)])


def spectral_radius(M):
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def _irreducible(M):
    A = (np.asarray(M) > 0).astype(np.int64)
    n = len(A)
    R = np.eye(n, dtype=np.int64) | A
    for _ in range(max(1, n.bit_length())):
        R = ((R @ R) > 0).astype(np.int64)
    return bool(R.all())


def frobenius_eigenvalue(M, tol=1e-13, max_iter=200000):
    """Perron root and positive right eigenvector of an irreducible matrix.

    Power iteration on M + I (primitive, same eigenvector), stopped when the
    Collatz-Wielandt bounds min (Bx)_i/x_i <= lambda <= max (Bx)_i/x_i agree
    to ``tol``. The eigenvector is scaled so that its first entry is 1.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or np.any(M < 0):
        raise ValueError("expected a square nonnegative matrix")
    if not M.any() or not _irreducible(M):
        raise NoConvergence("matrix is zero or reducible")
    B = M + np.eye(len(M))
    x = np.ones(len(M))
    for _ in range(max_iter):
        y = B @ x
        ratio = y / x
        lo, hi = ratio.min(), ratio.max()
        x = y / y.max()
        if hi - lo <= tol * hi:
            lam = 0.5 * (lo + hi) - 1.0
            return lam, x / x[0]
    raise NoConvergence("power iteration did not converge")


def _monotone_newton(F, J, x0, radius_check, max_iter=400):
    """Newton from below for x = F(x); returns x or None if it breaks down."""
    x = np.array(x0, dtype=float)
    prev = np.inf
    for _ in range(max_iter):
        Jx = J(x)
        if radius_check and spectral_radius(Jx) >= 1.0:
            return None
        r = F(x) - x
        try:
            step = np.linalg.solve(np.eye(len(x)) - Jx, r)
        except np.linalg.LinAlgError:
            return None
        x = x + step
        if not np.all(np.isfinite(x)) or np.any(x < 0) or np.max(x, initial=0) > 1e12:
            return None
        size = np.max(np.abs(step), initial=0)
        scale = 1 + np.max(np.abs(x), initial=0)
        # near a fold the iteration stalls at rounding noise instead of 1e-15
        if size <= 1e-15 * scale or (size <= 1e-11 * scale and size >= prev):
            if radius_check and spectral_radius(J(x)) >= 1.0:
                return None
            return x
        prev = size
    return None


@dataclass
class CriticalData:
    zeta: float
    theta: float
    tau: np.ndarray
    K: np.ndarray
    frob_vec: np.ndarray
    eigenvalue: float
    residual: float
    tol: float


class CriticalSolver:
    """Characteristic and reduced systems of one specification."""

    def __init__(self, spec):
        self.spec = spec
        self.ps = PolySystem(spec)
        self.width = len(spec.symbols)

    # full system --------------------------------------------------------
    def _probe(self, z, start=None):
        ps = self.ps
        x0 = np.zeros(self.width) if start is None else start
        return _monotone_newton(lambda t: np.array(ps.phi(z, t)),
                                lambda t: ps.jacobian(z, t), x0, True)

    def _residual(self, z, tau, v):
        ps = self.ps
        K = ps.jacobian(z, tau)
        r1 = np.array(ps.phi(z, tau)) - tau
        r2 = K @ v - v
        return np.concatenate([r1, r2])

    def _newton_matrix(self, z, tau, v, precise=False):
        ps, n = self.ps, self.width
        J = mpmath.zeros(2 * n, 2 * n) if precise else np.zeros((2 * n, 2 * n))
        for a in range(n):
            J[a, 0] = ps.derivative(a, z, tau, dz=1, precise=precise)
            for g in range(n):
                dy = [0] * n
                dy[g] = 1
                J[a, 1 + g] = ps.derivative(a, z, tau, dy=dy, precise=precise) - (a == g)
            # row of K v - v
            s = 0
            for b in range(n):
                dy = [0] * n
                dy[b] = 1
                s += ps.derivative(a, z, tau, dz=1, dy=dy, precise=precise) * v[b]
            J[n + a, 0] = s
            for g in range(n):
                s = 0
                for b in range(n):
                    dy = [0] * n
                    dy[b] += 1
                    dy[g] += 1
                    s += ps.derivative(a, z, tau, dy=dy, precise=precise) * v[b]
                J[n + a, 1 + g] = s
            for g in range(1, n):
                dy = [0] * n
                dy[g] = 1
                J[n + a, n + g] = ps.derivative(a, z, tau, dy=dy, precise=precise) - (a == g)
        return J

    def _polish(self, z, tau, v, tol, max_iter=50):
        n = self.width
        for _ in range(max_iter):
            r = self._residual(z, tau, v)
            J = self._newton_matrix(z, tau, v)
            try:
                d = np.linalg.solve(J, -r)
            except np.linalg.LinAlgError as exc:
                raise NoConvergence("singular Newton matrix") from exc
            z += d[0]
            tau = tau + d[1:1 + n]
            v = v.copy()
            v[1:] += d[1 + n:]
            if np.max(np.abs(d)) <= 1e-15 * (1 + np.max(np.abs(tau))):
                break
        return z, tau, v

    def _refine(self, z, tau, v, prec=128, steps=4):
        n = self.width
        with mpmath.workprec(prec):
            z = mpmath.mpf(z)
            tau = [mpmath.mpf(t) for t in tau]
            v = [mpmath.mpf(t) for t in v]
            ps = self.ps
            for _ in range(steps):
                phi = ps.phi(z, tau, precise=True)
                r = [phi[a] - tau[a] for a in range(n)]
                for a in range(n):
                    s = 0
                    for b in range(n):
                        dy = [0] * n
                        dy[b] = 1
                        s += ps.derivative(a, z, tau, dy=dy, precise=True) * v[b]
                    r.append(s - v[a])
                J = self._newton_matrix(z, tau, v, precise=True)
                d = mpmath.lu_solve(J, mpmath.matrix([-x for x in r]))
                z += d[0]
                tau = [tau[a] + d[1 + a] for a in range(n)]
                v = [v[0]] + [v[a] + d[n + a] for a in range(1, n)]
            return float(z), np.array([float(t) for t in tau]), np.array([float(t) for t in v])

    def solve_characteristic(self, tol=1e-12, refine=False):
        z_lo, tau_lo = 0.0, np.zeros(self.width)
        z_hi = None
        z = 1e-3
        while z_hi is None:
            t = self._probe(z, tau_lo)
            if t is None:
                z_hi = z
            else:
                z_lo, tau_lo = z, t
                z *= 2.0
                if z > 1e8:
                    raise DivergentSystem("no singularity found")
        while z_hi - z_lo > 1e-11 * z_hi:
            mid = 0.5 * (z_lo + z_hi)
            t = self._probe(mid, tau_lo)
            if t is None:
                z_hi = mid
            else:
                z_lo, tau_lo = mid, t
        if np.max(tau_lo) > 1e6:
            raise DivergentSystem("tau leaves every bounded region before criticality")
        K = self.ps.jacobian(z_lo, tau_lo)
        _, v = frobenius_eigenvalue(K, tol=1e-14)
        z, tau, v = self._polish(z_lo, tau_lo, v, tol)
        if refine:
            z, tau, v = self._refine(z, tau, v)
        K = self.ps.jacobian(z, tau)
        lam, vec = frobenius_eigenvalue(K, tol=1e-15)
        res = float(np.max(np.abs(np.array(self.ps.phi(z, tau)) - tau)))
        if not (z > 0 and np.all(tau > 0)) or res > tol or abs(lam - 1) > max(tol, 1e-12) * 10:
            raise NoConvergence(f"characteristic system: residual {res:.3g}, eigenvalue {lam!r}")
        return CriticalData(float(z), float(tau[0]), tau, K, vec, float(lam), res, tol)

    # reduced system -----------------------------------------------------
    def solve_reduced(self, z, u, start=None):
        """(Y_1..Y_m, A) at (z, u), with A = Phi_0(z, u, Y)."""
        ps, n = self.ps, self.width
        if n == 1:
            return np.zeros(0), float(ps.phi(z, [u])[0])

        def full(y):
            return [u] + list(y)

        def F(y):
            return np.array(ps.phi(z, full(y))[1:])

        def J(y):
            return ps.jacobian(z, full(y))[1:, 1:]

        y = _monotone_newton(F, J, np.zeros(n - 1) if start is None else start, True)
        if y is None:
            raise OutsideSubcriticalBall(f"reduced system has no subcritical solution at z={z}, u={u}")
        return y, float(ps.phi(z, full(y))[0])

    def reduced_A(self, z, u):
        return self.solve_reduced(z, u)[1]

    def reduced_gradient(self, z, u):
        """A(z,u) and its partial derivatives by implicit differentiation."""
        ps, n = self.ps, self.width
        y, A = self.solve_reduced(z, u)
        t = np.concatenate([[u], y])
        K = ps.jacobian(z, t)
        Pz = ps.dz(z, t)
        if n == 1:
            return A, Pz[0], K[0, 0]
        M = np.eye(n - 1) - K[1:, 1:]
        dy_dz = np.linalg.solve(M, Pz[1:])
        dy_du = np.linalg.solve(M, K[1:, 0])
        return A, Pz[0] + K[0, 1:] @ dy_dz, K[0, 0] + K[0, 1:] @ dy_du

    def reduced_radius(self, z, u):
        y, _ = self.solve_reduced(z, u)
        if self.width == 1:
            return 0.0
        return spectral_radius(self.ps.jacobian(z, np.concatenate([[u], y]))[1:, 1:])


@dataclass
class DerivedConstants:
    A0: float
    Aneq: float
    vbar: float
    eps: float
    kappa: float
    mu: float
    reach_prob: float
    v0: int
    T0: object


def _derivative(g, h=1e-3):
    """Centered difference at 0 with one Richardson step (error O(h^4))."""
    d1 = (g(h) - g(-h)) / (2 * h)
    d2 = (g(h / 2) - g(-h / 2)) / h
    return (4 * d2 - d1) / 3


def derived_constants(solver, crit, catalog):
    zeta, theta, v0 = crit.zeta, crit.theta, catalog.v0
    A = solver.reduced_A(zeta, theta)
    A0 = float(catalog.T0) * zeta ** v0 / theta
    Aneq = A / theta - A0
    vbar = _derivative(lambda e: solver.reduced_A(zeta * (1 + e), theta) / theta)
    # derivative in x at x=1 of (x^-v0 A(zeta x, theta x^v0) - theta A0) / (A - theta A0)
    denom = A - theta * A0

    def G(e):
        x = 1 + e
        return (x ** (-v0) * solver.reduced_A(zeta * x, theta * x ** v0) - theta * A0) / denom

    reach = 1.0 / _derivative(G)
    eps = math.sqrt(3 * Aneq / vbar)
    return DerivedConstants(A0, Aneq, vbar, eps, Aneq / vbar, A0 / vbar, reach, v0, catalog.T0)


def drift(solver, crit, consts, x):
    """f(x) = ln((e^{-x v0} A(zeta e^x, theta e^{x v0}) / theta - A0) / Aneq)."""
    if x == 0:
        return 0.0
    v0 = consts.v0
    A = solver.reduced_A(crit.zeta * math.exp(x), crit.theta * math.exp(x * v0))
    return math.log((math.exp(-x * v0) * A / crit.theta - consts.A0) / consts.Aneq)
