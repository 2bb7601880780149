"""Strong Wolfe step sizes along a retraction curve.

The search works on ``phi(alpha) = f(R_x(alpha * eta))`` whose derivative is
``<grad f(R_x(alpha eta)), D R_x(alpha eta)[eta]>``, i.e. the gradient at the
trial point paired with the differentiated retraction of ``eta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import DomainError, ManifoldError, UsageError
from .problems import riemannian_gradient


class NotDescentError(ManifoldError):
    """The search direction does not decrease ``f`` to first order."""


class LineSearchError(ManifoldError):
    """No strong Wolfe step found within the budget.

    ``best`` holds the best trial that satisfied sufficient decrease, or
    ``None`` if there was none.
    """

    def __init__(self, message, best=None, evaluations=0):
        super().__init__(message)
        self.best = best
        self.evaluations = evaluations


@dataclass(frozen=True)
class WolfeConfig:
    c1: float = 1e-4
    c2: float = 0.1
    alpha_init: float = 1.0
    growth: float = 2.0
    max_bracket: int = 60
    max_zoom: int = 60
    alpha_cap: float | None = None
    cap_fraction: float = 0.99
    # Relative slack on the decrease test; absorbs roundoff in f once the
    # predicted decrease falls below machine precision.
    decrease_tol: float = 1e-14

    def __post_init__(self):
        if not 0 < self.c1 < self.c2 < 0.5:
            raise UsageError(f"need 0 < c1 < c2 < 1/2, got c1={self.c1}, c2={self.c2}")
        if self.growth <= 1:
            raise UsageError("growth factor must exceed 1")
        if self.alpha_init <= 0:
            raise UsageError("alpha_init must be positive")
        if self.max_bracket < 1 or self.max_zoom < 1:
            raise UsageError("search budgets must be positive")
        if self.alpha_cap is not None and self.alpha_cap <= 0:
            raise UsageError("alpha_cap must be positive")


@dataclass(frozen=True)
class Trial:
    alpha: float
    phi: float
    dphi: float
    point: object
    grad: object


@dataclass(frozen=True)
class WolfeResult:
    alpha: float
    phi: float
    dphi: float
    evaluations: int
    point: object
    grad: object


class Curve:
    """``alpha -> (phi, phi')`` for fixed ``x`` and ``eta``, counting evaluations."""

    def __init__(self, problem, manifold, x, eta):
        self.problem, self.manifold, self.x, self.eta = problem, manifold, x, eta
        self.evaluations = 0

    def __call__(self, alpha) -> Trial:
        self.evaluations += 1
        m = self.manifold
        step = self.eta * alpha
        try:
            y = m.retract(self.x, step)
            t = m.transport_diff(self.x, step, self.eta)
        except DomainError as exc:
            raise DomainError(f"curve undefined at alpha={alpha:.6g}: {exc}") from exc
        g = riemannian_gradient(self.problem, m, y)
        return Trial(alpha, self.problem.cost(y), m.inner(y, g, t), y, g)


def phi(problem, manifold, x, eta, alpha):
    if alpha < 0:
        raise DomainError("phi is defined for alpha >= 0")
    return problem.cost(manifold.retract(x, eta * alpha))


def phi_prime(problem, manifold, x, eta, alpha):
    if alpha < 0:
        raise DomainError("phi is defined for alpha >= 0")
    return Curve(problem, manifold, x, eta)(alpha).dphi


def step_cap(manifold, x, eta, config: WolfeConfig):
    """Upper bound (exclusive) on trial steps, or ``None``."""
    caps = []
    limit = manifold.max_step(x, eta)
    if limit is not None:
        caps.append(config.cap_fraction * limit)
    if config.alpha_cap is not None:
        caps.append(config.alpha_cap)
    return min(caps) if caps else None


def _cubic_min(a, fa, da, b, fb, db):
    """Minimiser of the cubic interpolating both end points, or ``None``."""
    d1 = da + db - 3 * (fa - fb) / (a - b)
    disc = d1 * d1 - da * db
    if disc < 0:
        return None
    d2 = math.copysign(math.sqrt(disc), b - a)
    denom = db - da + 2 * d2
    if denom == 0:
        return None
    t = b - (b - a) * (db + d2 - d1) / denom
    return t if math.isfinite(t) else None


def strong_wolfe_search(problem, manifold, x, eta, config: WolfeConfig = WolfeConfig(),
                        f0=None, grad0=None, alpha_init=None) -> WolfeResult:
    """Find ``alpha`` with

    * ``phi(alpha) <= phi(0) + c1 * alpha * phi'(0)``
    * ``|phi'(alpha)| <= c2 * |phi'(0)|``

    by expanding a trial step until a bracket is found and then zooming in
    with safeguarded cubic interpolation. Trials never reach the step cap
    (see :func:`step_cap`).
    """
    if f0 is None:
        f0 = problem.cost(x)
    if grad0 is None:
        grad0 = riemannian_gradient(problem, manifold, x)
    d0 = manifold.inner(x, grad0, eta)
    if not d0 < 0:
        raise NotDescentError(f"phi'(0) = {d0:.3e} is not negative")
    c1, c2 = config.c1, config.c2
    slack = config.decrease_tol * abs(f0)
    curve = Curve(problem, manifold, x, eta)
    cap = step_cap(manifold, x, eta, config)

    def decreases(tr):
        return math.isfinite(tr.phi) and tr.phi <= f0 + c1 * tr.alpha * d0 + slack

    def curvature_ok(tr):
        return abs(tr.dphi) <= -c2 * d0

    def done(tr):
        return WolfeResult(tr.alpha, tr.phi, tr.dphi, curve.evaluations, tr.point, tr.grad)

    def fail(msg, best):
        return LineSearchError(msg, best=best, evaluations=curve.evaluations)

    def zoom(lo, hi):
        for _ in range(config.max_zoom):
            a, b = sorted((lo.alpha, hi.alpha))
            width = b - a
            if width <= 4 * math.ulp(b):
                break
            alpha = None
            if math.isfinite(hi.phi) and math.isfinite(hi.dphi):
                alpha = _cubic_min(lo.alpha, lo.phi, lo.dphi, hi.alpha, hi.phi, hi.dphi)
            if alpha is None or not a + 0.1 * width <= alpha <= b - 0.1 * width:
                alpha = 0.5 * (lo.alpha + hi.alpha)
            tr = curve(alpha)
            if not decreases(tr) or tr.phi >= lo.phi:
                hi = tr
            else:
                if curvature_ok(tr):
                    return done(tr)
                if tr.dphi * (hi.alpha - lo.alpha) >= 0:
                    hi = lo
                lo = tr
        raise fail("zoom budget exhausted", lo if lo.alpha > 0 else None)

    origin = Trial(0.0, f0, d0, x, grad0)
    prev = origin
    alpha = config.alpha_init if alpha_init is None else alpha_init
    if cap is not None and alpha >= cap:
        alpha = 0.5 * cap
    for i in range(config.max_bracket):
        tr = curve(alpha)
        if not decreases(tr) or (i > 0 and tr.phi >= prev.phi):
            return zoom(prev, tr)
        if curvature_ok(tr):
            return done(tr)
        if tr.dphi >= 0:
            return zoom(tr, prev)
        prev = tr
        alpha = config.growth * alpha
        if cap is not None:
            alpha = min(alpha, 0.5 * (prev.alpha + cap))
    raise fail("no bracket found", prev if prev.alpha > 0 else None)
