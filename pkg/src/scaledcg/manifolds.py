"""Concrete manifolds: spheres, Stiefel manifolds and their products."""

from __future__ import annotations

import numpy as np

from .core import (
    FEAS_TOL,
    DomainError,
    Manifold,
    Pair,
    RankError,
    UsageError,
)
from .transports import (
    transport_diff_orthographic,
    transport_diff_qr_sphere,
    transport_diff_qr_stiefel,
)

RANK_TOL = 1e-12


def qr_positive(B):
    """Thin QR factorisation with a positive diagonal in ``R``.

    Modified Gram-Schmidt with one reorthogonalisation pass per column.
    Raises :class:`RankError` when a column is (numerically) dependent on
    the previous ones.
    """
    B = np.asarray(B, dtype=float)
    if B.ndim != 2:
        raise UsageError(f"qf expects a matrix, got shape {B.shape}")
    n, p = B.shape
    if p > n:
        raise RankError(f"{n}x{p} matrix cannot have full column rank")
    Q = np.zeros((n, p))
    R = np.zeros((p, p))
    for k in range(p):
        v = B[:, k].copy()
        scale = np.linalg.norm(v)
        for _ in range(2):
            for i in range(k):
                r = Q[:, i] @ v
                R[i, k] += r
                v -= r * Q[:, i]
        nv = np.linalg.norm(v)
        if scale == 0.0 or nv <= RANK_TOL * scale:
            raise RankError(f"column {k} is linearly dependent on the preceding columns")
        R[k, k] = nv
        Q[:, k] = v / nv
    return Q, R


def qf(B):
    """Q-factor of ``B``; see :func:`qr_positive`."""
    return qr_positive(B)[0]


def retract_qr_sphere(x, xi):
    y = x + xi
    s = float(y @ y)
    if s == 0.0:
        raise DomainError("x + xi vanishes; QR retraction undefined")
    return y / np.sqrt(s)


def retract_orthographic(x, xi):
    s = float(xi @ xi)
    if s >= 1.0:
        raise DomainError(f"orthographic retraction needs |xi| < 1, got {np.sqrt(s):.6g}")
    return np.sqrt(1.0 - s) * x + xi


def retract_qr_stiefel(X, xi):
    return qf(X + xi)


def retract_product(UV, xi):
    return Pair(qf(UV[0] + xi[0]), qf(UV[1] + xi[1]))


def _renormalize(x):
    # unit sphere only
    if abs(float(x @ x) - 1.0) > FEAS_TOL:
        x = x / np.linalg.norm(x)
    return x


class Sphere(Manifold):
    """Unit sphere in R^n with the metric induced by the Euclidean one.

    ``retraction`` is ``"qr"`` (normalise ``x + xi``) or ``"orthographic"``
    (``sqrt(1 - |xi|^2) x + xi``, defined for ``|xi| < 1``).
    """

    def __init__(self, n: int, retraction: str = "qr"):
        if n < 2:
            raise UsageError("sphere needs n >= 2")
        if retraction not in ("qr", "orthographic"):
            raise UsageError(f"unknown sphere retraction {retraction!r}")
        self.n = n
        self.retraction = retraction
        self.dim = n - 1

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n}, retraction={self.retraction!r})"

    def inner(self, x, xi, zeta):
        return float(xi @ zeta)

    def project(self, x, v):
        return v - x * float(x @ v)

    def retract(self, x, xi):
        if self.retraction == "qr":
            return retract_qr_sphere(x, xi)
        return _renormalize(retract_orthographic(x, xi))

    def transport_diff(self, x, eta, xi):
        if self.retraction == "qr":
            return transport_diff_qr_sphere(x, eta, xi)
        return transport_diff_orthographic(x, eta, xi)

    def max_step(self, x, eta):
        if self.retraction == "orthographic":
            return 1.0 / float(np.sqrt(eta @ eta))
        return None

    def feasibility_residual(self, x):
        return abs(float(x @ x) - 1.0)

    def tangency_residual(self, x, xi):
        return abs(float(x @ xi))

    def check_shape(self, a):
        if np.shape(a) != (self.n,):
            raise UsageError(f"expected shape ({self.n},), got {np.shape(a)}")

    def random_point(self, rng):
        v = rng.standard_normal(self.n)
        return v / np.linalg.norm(v)

    def _ambient_gaussian(self, rng):
        return rng.standard_normal(self.n)


class PeculiarSphere(Sphere):
    """Sphere whose metric inflates the first coordinate near ``+-e_1``.

    ``g_x(xi, zeta) = xi^T G_x zeta`` with
    ``G_x = diag(c * x[0]**2 + 1, 1, ..., 1)`` and ``c = coefficient``.
    """

    def __init__(self, n: int, coefficient: float = 10000.0, retraction: str = "qr"):
        if coefficient < 0:
            raise UsageError("metric coefficient must be non-negative")
        super().__init__(n, retraction)
        self.coefficient = float(coefficient)

    def __repr__(self):
        return (f"PeculiarSphere(n={self.n}, coefficient={self.coefficient:g}, "
                f"retraction={self.retraction!r})")

    def _g11(self, x):
        return self.coefficient * x[0] ** 2 + 1.0

    def inner(self, x, xi, zeta):
        return float(xi @ zeta) + (self._g11(x) - 1.0) * xi[0] * zeta[0]

    def _apply_ginv(self, x, v):
        w = np.array(v, dtype=float)
        w[0] /= self._g11(x)
        return w

    def project(self, x, v):
        gx = self._apply_ginv(x, x)
        return v - gx * (float(x @ v) / float(x @ gx))

    def egrad2rgrad(self, x, egrad):
        return self.project(x, self._apply_ginv(x, egrad))


class Stiefel(Manifold):
    """``St(p, n)``: ``n x p`` matrices with orthonormal columns, QR retraction."""

    def __init__(self, n: int, p: int, transport_method: str = "analytic"):
        if not n >= p >= 1:
            raise UsageError(f"Stiefel manifold needs n >= p >= 1, got n={n}, p={p}")
        self.n, self.p = n, p
        self.transport_method = transport_method
        self.dim = n * p - p * (p + 1) // 2

    def __repr__(self):
        return f"Stiefel(n={self.n}, p={self.p})"

    def inner(self, X, xi, zeta):
        return float(np.vdot(xi, zeta))

    def project(self, X, V):
        S = X.T @ V
        return V - X @ (0.5 * (S + S.T))

    def retract(self, X, xi):
        Q = retract_qr_stiefel(X, xi)
        if self.feasibility_residual(Q) > FEAS_TOL:
            Q = qf(Q)
        return Q

    def transport_diff(self, X, eta, xi):
        return transport_diff_qr_stiefel(X, eta, xi, method=self.transport_method)

    def feasibility_residual(self, X):
        return float(np.linalg.norm(X.T @ X - np.eye(self.p)))

    def tangency_residual(self, X, xi):
        S = X.T @ xi
        return float(np.linalg.norm(S + S.T))

    def check_shape(self, a):
        if np.shape(a) != (self.n, self.p):
            raise UsageError(f"expected shape ({self.n}, {self.p}), got {np.shape(a)}")

    def random_point(self, rng):
        return qf(rng.standard_normal((self.n, self.p)))

    def _ambient_gaussian(self, rng):
        return rng.standard_normal((self.n, self.p))


class ProductStiefel(Manifold):
    """``St(p, m) x St(p, n)`` with the sum metric and factorwise QR retraction."""

    def __init__(self, m: int, n: int, p: int, transport_method: str = "analytic"):
        if not m >= n >= p >= 1:
            raise UsageError(f"product needs m >= n >= p >= 1, got m={m}, n={n}, p={p}")
        self.m, self.n, self.p = m, n, p
        self.factors = (Stiefel(m, p, transport_method), Stiefel(n, p, transport_method))
        self.dim = self.factors[0].dim + self.factors[1].dim

    def __repr__(self):
        return f"ProductStiefel(m={self.m}, n={self.n}, p={self.p})"

    def _each(self, name, *args):
        return Pair(*(getattr(f, name)(*(a[i] for a in args))
                      for i, f in enumerate(self.factors)))

    def inner(self, x, xi, zeta):
        return sum(f.inner(x[i], xi[i], zeta[i]) for i, f in enumerate(self.factors))

    def project(self, x, v):
        return self._each("project", x, v)

    def retract(self, x, xi):
        return self._each("retract", x, xi)

    def transport_diff(self, x, eta, xi):
        return self._each("transport_diff", x, eta, xi)

    def feasibility_residual(self, x):
        return float(np.hypot(*(f.feasibility_residual(x[i]) for i, f in enumerate(self.factors))))

    def tangency_residual(self, x, xi):
        return float(np.hypot(*(f.tangency_residual(x[i], xi[i])
                                for i, f in enumerate(self.factors))))

    def check_shape(self, a):
        if not isinstance(a, Pair):
            raise UsageError("product manifold expects a Pair")
        for i, f in enumerate(self.factors):
            f.check_shape(a[i])

    def random_point(self, rng):
        return Pair(*(f.random_point(rng) for f in self.factors))

    def _ambient_gaussian(self, rng):
        return Pair(*(f._ambient_gaussian(rng) for f in self.factors))
