"""Objective functions and their Euclidean gradients.

Problems know nothing about the metric; the Riemannian gradient is obtained
by handing the Euclidean gradient to the manifold (see
:func:`riemannian_gradient`).
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from .core import Pair, UsageError

log = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-12


def _symmetrize(A, what):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise UsageError(f"{what} needs a square matrix, got shape {A.shape}")
    asym = float(np.max(np.abs(A - A.T))) if A.size else 0.0
    if asym > SYMMETRY_TOL:
        log.warning("%s: matrix asymmetric by %.3e, using (A + A^T)/2", what, asym)
    return 0.5 * (A + A.T)


def rayleigh_value(A, x):
    return float(x @ A @ x)


def rayleigh_euclid_grad(A, x):
    return 2.0 * (A @ x)


def brockett_value(A, N, X):
    return float(np.trace(X.T @ A @ X @ N))


def brockett_euclid_grad(A, N, X):
    return 2.0 * (A @ X @ N)


def svd_value(A, N, U, V):
    return float(np.trace(U.T @ A @ V @ N))


def svd_euclid_grads(A, N, U, V):
    return A @ V @ N, A.T @ U @ N


class RayleighProblem:
    """``f(x) = x^T A x`` on a sphere."""

    def __init__(self, A):
        self.A = _symmetrize(A, "RayleighProblem")
        self.n = self.A.shape[0]

    def cost(self, x):
        return rayleigh_value(self.A, x)

    def egrad(self, x):
        return rayleigh_euclid_grad(self.A, x)


class BrockettProblem:
    """``f(X) = tr(X^T A X N)`` on ``St(p, n)``, ``N`` strictly increasing."""

    def __init__(self, A, mu):
        self.A = _symmetrize(A, "BrockettProblem")
        mu = np.asarray(mu, dtype=float)
        if mu.ndim != 1 or np.any(mu <= 0) or np.any(np.diff(mu) <= 0):
            raise UsageError("Brockett weights must be positive and strictly increasing")
        self.N = np.diag(mu)
        self.n, self.p = self.A.shape[0], mu.size

    def cost(self, X):
        return brockett_value(self.A, self.N, X)

    def egrad(self, X):
        return brockett_euclid_grad(self.A, self.N, X)


class SvdProblem:
    """``F(U, V) = tr(U^T A V N)`` on ``St(p, m) x St(p, n)``.

    With ``sense="maximize"`` the solver minimises ``-F``; ``cost`` always
    returns the quantity being minimised and :meth:`value` the raw ``F``.
    """

    def __init__(self, A, mu, sense="maximize"):
        A = np.asarray(A, dtype=float)
        mu = np.asarray(mu, dtype=float)
        if A.ndim != 2:
            raise UsageError("SvdProblem needs a matrix")
        m, n = A.shape
        if not m >= n >= mu.size >= 1:
            raise UsageError(f"need m >= n >= p, got {m}x{n} with p={mu.size}")
        if np.any(mu <= 0) or np.any(np.diff(mu) >= 0):
            raise UsageError("SVD weights must be positive and strictly decreasing")
        if sense not in ("minimize", "maximize"):
            raise UsageError(f"unknown sense {sense!r}")
        self.A, self.N, self.sense = A, np.diag(mu), sense
        self.m, self.n, self.p = m, n, mu.size
        self._sign = -1.0 if sense == "maximize" else 1.0

    def value(self, UV):
        return svd_value(self.A, self.N, UV[0], UV[1])

    def cost(self, UV):
        return self._sign * self.value(UV)

    def egrad(self, UV):
        gu, gv = svd_euclid_grads(self.A, self.N, UV[0], UV[1])
        return Pair(self._sign * gu, self._sign * gv)


def riemannian_gradient(problem, manifold, x):
    return manifold.egrad2rgrad(x, problem.egrad(x))


def load_matrix(path) -> np.ndarray:
    """Read a dense matrix: one row per line, whitespace separated."""
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            rows.append([float(tok) for tok in line.split()])
        except ValueError as exc:
            raise UsageError(f"{path}:{lineno}: {exc}") from None
    if not rows or len({len(r) for r in rows}) != 1:
        raise UsageError(f"{path}: rows are empty or ragged")
    return np.array(rows)


def diag_range(n: int, scale: float = 1.0) -> np.ndarray:
    """``diag(1, 2, ..., n) * scale``."""
    return np.diag(np.arange(1, n + 1, dtype=float) * scale)


MATRIX_PRESETS = {
    "diag20": lambda: diag_range(20),
    "diag100": lambda: diag_range(100, 0.01),
}
