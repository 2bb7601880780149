"""Runtime checks for solver traces and finite-difference oracles.

Nothing here is used by the solvers themselves; these are the instruments
the test suite and ``scaledcg check`` use to audit them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import DomainError, ManifoldError, ambient_inner, ambient_norm
from .problems import riemannian_gradient


class UndefinedAngleError(ManifoldError):
    """Angle with a zero vector requested."""


def cos_theta(manifold, x, grad, eta) -> float:
    """Cosine of the angle between ``-grad`` and ``eta`` in the metric at ``x``."""
    ng, ne = manifold.norm(x, grad), manifold.norm(x, eta)
    if ng == 0.0 or ne == 0.0:
        raise UndefinedAngleError("angle undefined for a zero vector")
    return -manifold.inner(x, grad, eta) / (ng * ne)


@dataclass
class ZoutendijkLedger:
    """Running sum of ``cos^2(theta_k) |grad f(x_k)|^2``."""

    terms: list = field(default_factory=list)
    partial_sums: list = field(default_factory=list)

    def add_term(self, term: float) -> "ZoutendijkLedger":
        self.terms.append(term)
        prev = self.partial_sums[-1] if self.partial_sums else 0.0
        self.partial_sums.append(prev + term)
        return self

    @property
    def total(self) -> float:
        return self.partial_sums[-1] if self.partial_sums else 0.0

    def tail_growth(self, fraction: float = 0.1) -> float:
        """Increase of the partial sums over the last ``fraction`` of terms."""
        n = len(self.partial_sums)
        if n < 2:
            return 0.0
        start = max(n - max(int(round(fraction * n)), 1) - 1, 0)
        return self.partial_sums[-1] - self.partial_sums[start]


def zoutendijk_term(state) -> float:
    # cos^2(theta) |g|^2 == <g, eta>^2 / |eta|^2
    if state.eta_norm == 0.0:
        return 0.0
    return state.slope ** 2 / state.eta_norm ** 2


def zoutendijk_accumulate(ledger: ZoutendijkLedger, state) -> ZoutendijkLedger:
    return ledger.add_term(zoutendijk_term(state))


def zoutendijk_ledger(trace) -> ZoutendijkLedger:
    ledger = ZoutendijkLedger()
    for s in trace:
        zoutendijk_accumulate(ledger, s)
    return ledger


def lemma_bounds(c2: float) -> tuple[float, float]:
    """Interval that ``<grad, eta> / |grad|^2`` stays in for the scaled method."""
    return -1.0 / (1.0 - c2), (2.0 * c2 - 1.0) / (1.0 - c2)


def lemma_ratio_audit(state, c2: float, slack: float = 1e-10) -> tuple[bool, float]:
    ratio = state.slope / state.grad_norm ** 2
    lo, hi = lemma_bounds(c2)
    return lo - slack <= ratio <= hi + slack, ratio


def fd_directional(f_curve, alpha: float, order: int = 1, h: float | None = None) -> float:
    """Central-difference first or second derivative of a scalar curve."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if h is None:
        h = 1e-6 * (1.0 + abs(alpha)) if order == 1 else 1e-4
    try:
        fp, fm = f_curve(alpha + h), f_curve(alpha - h)
        if order == 1:
            return (fp - fm) / (2.0 * h)
        return (fp - 2.0 * f_curve(alpha) + fm) / (h * h)
    except DomainError as exc:
        raise DomainError(f"finite difference left the curve domain near alpha={alpha}") from exc


@dataclass
class WolfeViolation:
    k: int
    condition: str
    excess: float


def wolfe_audit(problem, manifold, trace, c1: float, c2: float, slack: float = 1e-12,
                recompute: bool = True) -> list[WolfeViolation]:
    """Check both strong Wolfe inequalities on every accepted step of a trace.

    With ``recompute`` the new objective value and the curvature term are
    evaluated afresh from ``x_k``, ``eta_k`` and ``alpha_k`` rather than
    read back from the trace. Steps flagged as line-search fallbacks are
    skipped.
    """
    bad = []
    for s in trace:
        if math.isnan(s.alpha) or s.linesearch_failed:
            continue
        if recompute:
            step = s.eta * s.alpha
            y = manifold.retract(s.x, step)
            f_new = problem.cost(y)
            g = riemannian_gradient(problem, manifold, y)
            dphi = manifold.inner(y, g, manifold.transport_diff(s.x, step, s.eta))
        else:
            f_new, dphi = s.f_next, s.slope_next
        excess = f_new - (s.f + c1 * s.alpha * s.slope)
        if excess > slack:
            bad.append(WolfeViolation(s.k, "sufficient_decrease", excess))
        excess = abs(dphi) - c2 * abs(s.slope)
        if excess > slack:
            bad.append(WolfeViolation(s.k, "curvature", excess))
    return bad


def lemma_audit(trace, c2: float, slack: float = 1e-10) -> list[tuple[int, float]]:
    """``(k, ratio)`` for every iterate outside the descent-ratio interval."""
    out = []
    for s in trace:
        if s.grad_norm == 0.0:
            continue
        ok, ratio = lemma_ratio_audit(s, c2, slack)
        if not ok:
            out.append((s.k, ratio))
    return out


def norm_growth_audit(trace, rel: float = 1e-12) -> list[int]:
    """Iterations whose transported direction came out longer than ``eta_k``."""
    return [s.k for s in trace
            if not math.isnan(s.transported_norm)
            and s.transported_norm > s.eta_norm * (1.0 + rel)]


def recurrence_audit(trace, c2: float, rel: float = 1e-10) -> list[int]:
    """Check ``|eta_k|^2 <= c |g_k|^2 + beta_k^2 |eta_{k-1}|^2`` with ``c = (1+c2)/(1-c2)``."""
    c = (1.0 + c2) / (1.0 - c2)
    out = []
    for prev, s in zip(trace, trace[1:]):
        if s.k != prev.k + 1:
            continue
        bound = c * s.grad_norm ** 2 + s.beta ** 2 * prev.eta_norm ** 2
        if s.eta_norm ** 2 > bound * (1.0 + rel):
            out.append(s.k)
    return out


def gradient_fd_error(problem, manifold, rng, samples: int = 20) -> float:
    """Worst relative gap between ``<grad f, eta>`` and a central difference of ``f``."""
    worst = 0.0
    for _ in range(samples):
        x = manifold.random_point(rng)
        eta = manifold.random_tangent(x, rng)
        g = riemannian_gradient(problem, manifold, x)
        exact = manifold.inner(x, g, eta)
        fd = fd_directional(lambda a: problem.cost(manifold.retract(x, eta * a)), 0.0)
        worst = max(worst, abs(exact - fd) / max(1.0, abs(exact)))
    return worst


def gradient_duality_error(problem, manifold, rng, samples: int = 5, probes: int = 50) -> float:
    """Worst ``|<grad, zeta>_x - <egrad, zeta>|`` over random tangent probes, scaled by ``1 + |egrad|``."""
    worst = 0.0
    for _ in range(samples):
        x = manifold.random_point(rng)
        eg = problem.egrad(x)
        g = manifold.egrad2rgrad(x, eg)
        scale = 1.0 + ambient_norm(eg)
        for _ in range(probes):
            z = manifold.random_tangent(x, rng)
            err = abs(manifold.inner(x, g, z) - ambient_inner(eg, z)) / scale
            worst = max(worst, err)
    return worst


def gradient_tangency_error(problem, manifold, rng, samples: int = 20) -> float:
    """Worst tangency residual of the Riemannian gradient, relative to ``max(1, |grad|)``.

    Duality against tangent probes cannot see a component normal to the
    tangent space; this check does.
    """
    worst = 0.0
    for _ in range(samples):
        x = manifold.random_point(rng)
        g = riemannian_gradient(problem, manifold, x)
        worst = max(worst, manifold.tangency_residual(x, g) / max(1.0, ambient_norm(g)))
    return worst


def transport_fd_error(manifold, rng, samples: int = 100, h: float = 1e-6,
                       step_norm: float = 0.5) -> float:
    """Worst absolute gap between ``D R_x(eta)[xi]`` and ``(R_x(eta + h xi) - R_x(eta - h xi)) / 2h``."""
    worst = 0.0
    for _ in range(samples):
        x = manifold.random_point(rng)
        eta = manifold.random_tangent(x, rng, norm=step_norm)
        xi = manifold.random_tangent(x, rng, norm=step_norm)
        exact = manifold.transport_diff(x, eta, xi)
        fd = (manifold.retract(x, eta + xi * h) - manifold.retract(x, eta - xi * h)) * (0.5 / h)
        worst = max(worst, ambient_norm(exact - fd))
    return worst


@dataclass
class LipschitzProbeReport:
    """Second derivatives of ``t -> f(R_x(t eta))`` on a grid of ``t``.

    ``estimates[i, j]`` belongs to sample ``i`` and ``ts[j]``.
    """

    ts: np.ndarray
    estimates: np.ndarray
    max_observed: float

    def decay_fraction(self, t_far: float = 50.0, factor: float = 0.1) -> float:
        """Share of samples whose estimate at ``t_far`` is at most ``factor`` times that at t=0."""
        j0 = int(np.argmin(np.abs(self.ts)))
        j1 = int(np.argmin(np.abs(self.ts - t_far)))
        near, far = np.abs(self.estimates[:, j0]), np.abs(self.estimates[:, j1])
        return float(np.mean(far <= factor * near))


DEFAULT_PROBE_TS = (0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0)


def lipschitz_probe(problem, manifold, rng, samples: int = 50, ts=DEFAULT_PROBE_TS,
                    h: float = 1e-4) -> LipschitzProbeReport:
    """Sample ``|d^2/dt^2 f(R_x(t eta))|`` for unit-norm ``eta``.

    Only reports; no bound is asserted.
    """
    ts = np.asarray(ts, dtype=float)
    est = np.empty((samples, ts.size))
    for i in range(samples):
        x = manifold.random_point(rng)
        eta = manifold.random_tangent(x, rng, norm=1.0)

        def curve(t):
            return problem.cost(manifold.retract(x, eta * t))

        for j, t in enumerate(ts):
            est[i, j] = fd_directional(curve, t, order=2, h=h)
    return LipschitzProbeReport(ts, est, float(np.max(np.abs(est))))
