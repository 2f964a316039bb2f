"""Complex quadratic subproblem kernels shared by the block updates.

Every convex block is written as

    minimize  x^H H x - 2 Re(b^H x) + const
    s.t.      x^H Q_i x <= c_i

with H and Q_i Hermitian PSD. The minimizer for multipliers mu is
(H + sum_i mu_i Q_i)^{-1} b; the multipliers come from bisection (one
constraint) or the ellipsoid method (two constraints).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .errors import DomainError, InfeasibleBlockError, NumericalError

HERMITIAN_TOL = 1e-8
RIDGE = 1e-10


@dataclass
class QuadraticSubproblem:
    """Accumulates x^H H x - 2 Re(b^H x) + const from affine residual norms."""

    H: np.ndarray
    b: np.ndarray
    const: float = 0.0
    constraints: list = field(default_factory=list)

    @classmethod
    def empty(cls, n: int) -> "QuadraticSubproblem":
        return cls(np.zeros((n, n), complex), np.zeros(n, complex))

    def add_norm(self, A, b0, weight: float = 1.0) -> None:
        """Add weight * ||A x + b0||^2 (A may be a row vector)."""
        A = np.atleast_2d(A)
        b0 = np.atleast_1d(np.asarray(b0, complex))
        self.H += weight * (A.conj().T @ A)
        self.b -= weight * (A.conj().T @ b0)
        self.const += weight * float(np.vdot(b0, b0).real)

    def add_diag_norm(self, a, b0, weight: float = 1.0) -> None:
        """Add weight * ||a * x + b0||^2 with elementwise product."""
        a = np.asarray(a, complex)
        b0 = np.broadcast_to(np.asarray(b0, complex), a.shape)
        self.H[np.diag_indices_from(self.H)] += weight * np.abs(a) ** 2
        self.b -= weight * a.conj() * b0
        self.const += weight * float(np.sum(np.abs(b0) ** 2))

    def add_linear(self, coef, const: complex = 0.0) -> None:
        """Add -2 Re(coef . x + const) where coef . x is the plain (unconjugated) product."""
        self.b += np.conj(coef)
        self.const -= 2.0 * float(np.real(const))

    def objective(self, x: np.ndarray) -> float:
        return float(np.vdot(x, self.H @ x).real - 2.0 * np.vdot(self.b, x).real + self.const)

    def hermitize(self) -> "QuadraticSubproblem":
        self.H = 0.5 * (self.H + self.H.conj().T)
        return self


def _check_hermitian(H: np.ndarray) -> None:
    scale = max(float(np.max(np.abs(H))), 1e-300) if H.size else 1.0
    if H.size and np.max(np.abs(H - H.conj().T)) > HERMITIAN_TOL * scale:
        raise DomainError("matrix is not Hermitian")


def solve_regularized_hpd(H: np.ndarray, b: np.ndarray) -> np.ndarray:
    """argmin x^H H x - 2 Re(b^H x), i.e. H x = b.

    A ridge of 1e-10 * trace(H)/n is added when H is numerically singular.
    """
    H = np.asarray(H, complex)
    _check_hermitian(H)
    n = H.shape[0]
    H = 0.5 * (H + H.conj().T)
    try:
        c, low = sla.cho_factor(H, lower=True, check_finite=False)
        x = sla.cho_solve((c, low), b, check_finite=False)
        if np.all(np.isfinite(x)) and _well_conditioned(H, c):
            return x
    except np.linalg.LinAlgError:
        pass
    tr = float(np.trace(H).real) / n
    ridge = RIDGE * tr if tr > 0 else 1e-300
    return np.linalg.solve(H + ridge * np.eye(n), b)


def _fast_hpd_solve(H: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cholesky solve without input checks; falls back to the ridge path."""
    _, x, info = lapack.zposv(H, b, lower=1)
    if info == 0 and np.all(np.isfinite(x)):
        return x
    return solve_regularized_hpd(H, b)


def _well_conditioned(H, chol) -> bool:
    d = np.abs(np.diag(chol)) ** 2
    return d.min() > 1e-13 * max(d.max(), 1e-300)


def _whitener(Q, n):
    """Return (apply, unapply) for y = L^H x with Q = L L^H."""
    if Q is None:
        return None, None
    Q = np.asarray(Q)
    if Q.ndim == 1:
        q = np.maximum(Q.real, 0.0)
        if q.max(initial=0.0) <= 0:
            raise DomainError("constraint matrix is zero")
        q = q + 1e-14 * q.max() * (q <= 1e-14 * q.max())
        return np.sqrt(q), None
    Qh = 0.5 * (Q + Q.conj().T)
    tr = float(np.trace(Qh).real) / n
    try:
        L = np.linalg.cholesky(Qh)
    except np.linalg.LinAlgError:
        L = np.linalg.cholesky(Qh + 1e-12 * tr * np.eye(n))
    return None, L


def minimize_with_budget(H, b, Q=None, budget: float = 1.0, max_iter: int = 200):
    """Solve the one-constraint problem; returns (x, mu).

    ``Q`` is None (identity), a 1-D array (diagonal) or a Hermitian PD matrix.
    The multiplier is found by bisection with a doubling upper bound and stop
    rule |ub - lb| <= 1e-8 (1 + ub) in the scaled multiplier; the returned
    point is the one at ``ub`` so the budget always holds.
    """
    H = np.asarray(H, complex)
    b = np.asarray(b, complex)
    n = H.shape[0]
    if budget < 0:
        raise InfeasibleBlockError(f"negative budget {budget:.3e}")
    if budget == 0:
        return np.zeros(n, complex), math.inf
    diag, L = _whitener(Q, n)
    if diag is not None:
        Ht = H / diag[:, None] / diag[None, :]
        bt = b / diag
    elif L is not None:
        Ht = sla.solve_triangular(L, sla.solve_triangular(L, H, lower=True).conj().T, lower=True).conj().T
        bt = sla.solve_triangular(L, b, lower=True)
    else:
        Ht, bt = H, b
    Ht = 0.5 * (Ht + Ht.conj().T)
    lam, U = np.linalg.eigh(Ht)
    lam = np.maximum(lam, 0.0)
    lmax = lam.max(initial=0.0)
    if lam.min(initial=0.0) <= 1e-12 * lmax or lmax == 0.0:
        lam = lam + (RIDGE * lam.sum() / n if lmax > 0 else 1e-300)
    c = U.conj().T @ bt
    c2 = np.abs(c) ** 2

    def norm2(mu):
        with np.errstate(over="ignore", divide="ignore"):
            return float(np.sum(c2 / (lam + mu) ** 2))

    if norm2(0.0) <= budget:
        mu = 0.0
    else:
        scale = max(lmax, math.sqrt(c2.sum() / budget))
        lb, ub = 0.0, 1.0
        it = 0
        while norm2(ub * scale) > budget:
            lb, ub = ub, 2.0 * ub
            it += 1
            if it > max_iter:
                raise NumericalError("bisection failed to bracket the multiplier")
        while ub - lb > 1e-8 * (1.0 + ub):
            mid = 0.5 * (lb + ub)
            if norm2(mid * scale) <= budget:
                ub = mid
            else:
                lb = mid
            it += 1
            if it > max_iter:
                raise NumericalError(f"bisection did not converge: bracket [{lb}, {ub}]")
        mu = ub * scale
    y = U @ (c / (lam + mu))
    if diag is not None:
        x = y / diag
    elif L is not None:
        x = sla.solve_triangular(L.conj().T, y, lower=False)
    else:
        x = y
    return x, mu


def ellipsoid_solve(dual_objective, dim: int, tol: float = 1e-6, center=None, radius: float = 1e3,
                    max_iter: int = 500):
    """Maximize a concave dual over multipliers >= 0 with the deep-cut ellipsoid method.

    ``dual_objective(kappa)`` returns ``(value, gradient)``. Negative
    multipliers trigger a feasibility cut; otherwise a deep objective cut
    through the best value so far is taken. Stops when the ellipsoid's
    width along the cut, an upper bound on the optimality gap, drops below
    ``tol * max(1, |best|)``. Returns the best multiplier vector found.
    """
    if dim not in (1, 2):
        raise DomainError("ellipsoid_solve supports 1 or 2 multipliers")
    n = dim
    kappa = np.ones(n) if center is None else np.array(center, float)
    P = radius ** 2 * np.eye(n)
    best, f_best = None, math.inf
    for _ in range(max_iter):
        if np.any(kappa < 0):
            i = int(np.argmin(kappa))
            g = np.zeros(n)
            g[i] = -1.0
            width = math.sqrt(max(g @ P @ g, 0.0))
            alpha = -kappa[i] / width
        else:
            val, grad = dual_objective(kappa.copy())
            f = -float(val)
            g = -np.asarray(grad, float)
            if f < f_best:
                f_best, best = f, kappa.copy()
            width = math.sqrt(max(g @ P @ g, 0.0))
            if width <= tol * max(1.0, abs(f_best)):
                return best
            alpha = (f - f_best) / width
        if width == 0.0:
            break
        alpha = min(alpha, 1.0 - 1e-12)
        gt = g / width
        Pg = P @ gt
        if n == 1:
            kappa = kappa - 0.5 * (1.0 + alpha) * Pg
            P = P * (0.5 * (1.0 - alpha)) ** 2
        else:
            kappa = kappa - (1.0 + n * alpha) / (n + 1) * Pg
            P = (n * n / (n * n - 1.0)) * (1.0 - alpha ** 2) * (
                P - 2.0 * (1.0 + n * alpha) / ((n + 1) * (1.0 + alpha)) * np.outer(Pg, Pg)
            )
            P = 0.5 * (P + P.T)
    if best is None:
        raise NumericalError("ellipsoid method never visited a feasible multiplier")
    err = NumericalError(f"ellipsoid method hit the iteration cap ({max_iter})")
    err.best = best
    raise err


def minimize_with_two_budgets(H, b, Q1, c1, Q2, c2, max_iter: int = 500, bisect_iter: int = 200):
    """Two quadratic caps; returns (x, (kappa1, kappa2)).

    Inactive and single-active cases are settled exactly by bisection (they
    are the dual optimum whenever the other cap holds); only when both caps
    bind is the 2-D dual searched with the ellipsoid method.
    """
    H = np.asarray(H, complex)
    if c1 < 0 or c2 < 0:
        raise InfeasibleBlockError("negative budget")
    Q1 = np.diag(Q1) if np.ndim(Q1) == 1 else np.asarray(Q1)
    Q2 = np.diag(Q2) if np.ndim(Q2) == 1 else np.asarray(Q2)

    def quad(x, Q):
        return float(np.vdot(x, Q @ x).real)

    def fits(x, Q, cap):
        return quad(x, Q) <= cap * (1 + 1e-9)

    x0 = solve_regularized_hpd(H, b)
    if fits(x0, Q1, c1) and fits(x0, Q2, c2):
        return x0, (0.0, 0.0)
    xa, ka = minimize_with_budget(H, b, Q1, c1, bisect_iter)
    if fits(xa, Q2, c2):
        return xa, (ka, 0.0)
    xb, kb = minimize_with_budget(H, b, Q2, c2, bisect_iter)
    if fits(xb, Q1, c1):
        return xb, (0.0, kb)

    s = np.array([max(ka, 1e-300), max(kb, 1e-300)])
    n = H.shape[0]

    H = 0.5 * (H + H.conj().T)
    Q1 = 0.5 * (Q1 + Q1.conj().T)
    Q2 = 0.5 * (Q2 + Q2.conj().T)

    def solve_at(kappa):
        return _fast_hpd_solve(H + kappa[0] * Q1 + kappa[1] * Q2, b)

    # the dual is rescaled by the single-cap multipliers so the optimum is O(1)
    fscale = max(abs(float(np.vdot(b, xa).real)), 1e-300)

    def dual(kt):
        kappa = kt * s
        x = solve_at(kappa)
        val = -float(np.vdot(b, x).real) - kappa[0] * c1 - kappa[1] * c2
        grad = s * np.array([quad(x, Q1) - c1, quad(x, Q2) - c2])
        return val / fscale, grad / fscale

    try:
        kt = ellipsoid_solve(dual, 2, tol=1e-8, center=(1.0, 1.0), radius=1e3, max_iter=max_iter)
    except NumericalError as exc:
        kt = getattr(exc, "best", None)
        if kt is None:
            raise
    kappa = kt * s
    x = solve_at(kappa)
    t = min(1.0, math.sqrt(c1 / max(quad(x, Q1), 1e-300)), math.sqrt(c2 / max(quad(x, Q2), 1e-300)))
    if n and t < 1.0:
        x = x * t
    return x, (float(kappa[0]), float(kappa[1]))

