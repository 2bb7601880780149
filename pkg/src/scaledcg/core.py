"""Points, tangent vectors and the manifold interface.

Points and tangent vectors live in ambient coordinates: a 1-d array for the
sphere, an ``n x p`` array for the Stiefel manifold and a :class:`Pair` of
arrays for a product of two Stiefel manifolds.
"""

from __future__ import annotations

import numpy as np

FEAS_TOL = 1e-10


class ManifoldError(Exception):
    """Base class for errors raised by this package."""


class UsageError(ManifoldError, ValueError):
    """Bad arguments: wrong shapes, invalid configuration."""


class FeasibilityError(ManifoldError):
    """A point is off the manifold or a vector is not tangent."""


class DomainError(ManifoldError):
    """Input outside the domain of a retraction or of a curve."""


class RankError(ManifoldError):
    """Matrix handed to ``qf`` is (numerically) rank deficient."""


class DegenerateTransportError(ManifoldError):
    """Transported vector has (numerically) zero norm and cannot be scaled."""


class Pair(tuple):
    """Point or tangent vector on a product manifold.

    Supports the vector-space operations the solvers need so that
    ``-g + beta * t`` works the same as it does for plain arrays.
    """

    def __new__(cls, first, second):
        return super().__new__(cls, (np.asarray(first, dtype=float),
                                     np.asarray(second, dtype=float)))

    def __add__(self, other):
        return Pair(self[0] + other[0], self[1] + other[1])

    def __sub__(self, other):
        return Pair(self[0] - other[0], self[1] - other[1])

    def __mul__(self, scalar):
        return Pair(scalar * self[0], scalar * self[1])

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return Pair(self[0] / scalar, self[1] / scalar)

    def __neg__(self):
        return Pair(-self[0], -self[1])

    def copy(self):
        return Pair(self[0].copy(), self[1].copy())

    @property
    def shape(self):
        return (self[0].shape, self[1].shape)


def ambient_inner(a, b) -> float:
    """Frobenius inner product of two ambient vectors (arrays or pairs)."""
    if isinstance(a, Pair):
        return float(np.vdot(a[0], b[0]) + np.vdot(a[1], b[1]))
    return float(np.vdot(a, b))


def ambient_norm(a) -> float:
    return float(np.sqrt(ambient_inner(a, a)))


def zeros_like(a):
    if isinstance(a, Pair):
        return Pair(np.zeros_like(a[0]), np.zeros_like(a[1]))
    return np.zeros_like(a)


class Manifold:
    """Interface shared by every manifold in :mod:`scaledcg.manifolds`.

    Subclasses implement the metric, the tangent projection, a retraction
    and the differentiated retraction. Everything else is derived here.
    """

    dim: int

    def inner(self, x, xi, zeta) -> float:
        raise NotImplementedError

    def norm(self, x, xi) -> float:
        return float(np.sqrt(max(self.inner(x, xi, xi), 0.0)))

    def project(self, x, v):
        """Metric-orthogonal projection of an ambient vector onto T_x M."""
        raise NotImplementedError

    def retract(self, x, xi):
        raise NotImplementedError

    def transport_diff(self, x, eta, xi):
        """Differentiated retraction ``D R_x(eta)[xi]``, a vector at ``R_x(eta)``."""
        raise NotImplementedError

    def egrad2rgrad(self, x, egrad):
        """Riemannian gradient from the Euclidean one."""
        return self.project(x, egrad)

    def feasibility_residual(self, x) -> float:
        raise NotImplementedError

    def tangency_residual(self, x, xi) -> float:
        raise NotImplementedError

    def check_shape(self, a) -> None:
        raise NotImplementedError

    def random_point(self, rng: np.random.Generator):
        raise NotImplementedError

    def random_tangent(self, x, rng: np.random.Generator, norm: float = 1.0):
        """Gaussian ambient vector projected to T_x M and scaled to ``norm``."""
        v = self.project(x, self._ambient_gaussian(rng))
        nv = self.norm(x, v)
        return v * (norm / nv)

    def max_step(self, x, eta) -> float | None:
        """Largest admissible ``alpha`` for ``retract(x, alpha * eta)``; ``None`` if unbounded."""
        return None

    def zero_vector(self, x):
        return zeros_like(x)

    def _ambient_gaussian(self, rng):
        raise NotImplementedError


def check_feasibility(manifold: Manifold, x, tol: float = FEAS_TOL) -> tuple[bool, float]:
    """Return ``(feasible, residual)`` for a candidate point."""
    manifold.check_shape(x)
    residual = manifold.feasibility_residual(x)
    return residual <= tol, residual


def require_feasible(manifold: Manifold, x, tol: float = FEAS_TOL) -> None:
    ok, residual = check_feasibility(manifold, x, tol)
    if not ok:
        raise FeasibilityError(f"point violates the manifold constraint (residual {residual:.3e})")


def require_tangent(manifold: Manifold, x, xi, tol: float = FEAS_TOL) -> None:
    manifold.check_shape(xi)
    residual = manifold.tangency_residual(x, xi)
    if residual > tol * max(1.0, ambient_norm(xi)):
        raise FeasibilityError(f"vector is not tangent (residual {residual:.3e})")


def inner(manifold: Manifold, x, xi, zeta, tol: float = FEAS_TOL) -> float:
    """Checked Riemannian inner product ``<xi, zeta>_x``.

    Shapes and tangency are validated; use ``manifold.inner`` directly in
    hot loops.
    """
    manifold.check_shape(x)
    require_tangent(manifold, x, xi, tol)
    require_tangent(manifold, x, zeta, tol)
    return manifold.inner(x, xi, zeta)
