"""Fletcher-Reeves conjugate gradient on a Riemannian manifold.

Two variants share one loop:

``standard``
    ``eta_{k+1} = -grad f(x_{k+1}) + beta_{k+1} T^R(eta_k)`` with the
    differentiated retraction ``T^R``.
``scaled``
    as above, but ``T^R(eta_k)`` is rescaled to ``|eta_k|`` whenever it
    came out longer than ``eta_k``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

from .core import UsageError, require_feasible
from .linesearch import LineSearchError, NotDescentError, WolfeConfig, strong_wolfe_search
from .problems import riemannian_gradient
from .transports import transport_switch

log = logging.getLogger(__name__)

VARIANTS = ("standard", "scaled")

CONVERGED = "converged"
MAX_ITER = "max_iter"
LINESEARCH_FAILED = "linesearch_failed"


@dataclass(frozen=True)
class CgConfig:
    variant: str = "scaled"
    wolfe: WolfeConfig = field(default_factory=WolfeConfig)
    max_iter: int = 1000
    grad_tol: float = 1e-8
    restart_period: int | None = None
    record_trace: bool = True
    trace_every: int = 1
    # "fallback": take the best sufficient-decrease step and flag it;
    # "raise": stop with status linesearch_failed.
    on_linesearch_failure: str = "fallback"
    # first trial step of each search after k = 0:
    # "constant" -> wolfe.alpha_init, "quadratic" -> min(1, 2.02 (f_k - f_{k-1}) / phi'(0)),
    # "slope" -> alpha_{k-1} <grad_{k-1}, eta_{k-1}> / <grad_k, eta_k>
    initial_step: str = "slope"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise UsageError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.max_iter < 1:
            raise UsageError("max_iter must be >= 1")
        if not self.grad_tol > 0:
            raise UsageError("grad_tol must be positive")
        if self.restart_period is not None and self.restart_period < 1:
            raise UsageError("restart_period must be >= 1")
        if self.trace_every < 1:
            raise UsageError("trace_every must be >= 1")
        if self.initial_step not in ("constant", "quadratic", "slope"):
            raise UsageError(f"unknown initial_step {self.initial_step!r}")
        if self.on_linesearch_failure not in ("fallback", "raise"):
            raise UsageError("on_linesearch_failure must be 'fallback' or 'raise'")


@dataclass(frozen=True)
class CgState:
    """Iterate ``k`` of the solver.

    ``beta`` is the coefficient that produced ``eta`` (0 at ``k = 0`` and
    after a restart). ``alpha``, ``ratio``, ``scaled`` and the line-search
    fields describe the step taken *from* ``x``; they are NaN / False until
    that step has been made.
    """

    k: int
    x: object
    eta: object
    grad: object
    f: float
    grad_norm: float
    eta_norm: float
    slope: float  # <grad, eta>_x
    beta: float = 0.0
    alpha: float = math.nan
    ratio: float = math.nan
    scaled: bool = False
    f_next: float = math.nan
    slope_next: float = math.nan  # phi'(alpha), the curvature-condition quantity
    transported_norm: float = math.nan  # |T^(k)(eta_k)| at x_{k+1}, the vector actually used
    linesearch_failed: bool = False
    evaluations: int = 0


@dataclass
class CgResult:
    state: CgState
    trace: list
    status: str
    message: str = ""

    @property
    def iterations(self):
        return self.state.k


def beta_fr(grad_next_norm: float, grad_norm: float) -> float:
    """Fletcher-Reeves coefficient from the two gradient norms."""
    return (grad_next_norm / grad_norm) ** 2


def initial_state(problem, manifold, x0) -> CgState:
    g = riemannian_gradient(problem, manifold, x0)
    gn = manifold.norm(x0, g)
    eta = -g
    return CgState(k=0, x=x0, eta=eta, grad=g, f=problem.cost(x0), grad_norm=gn,
                   eta_norm=gn, slope=-gn * gn)


def _first_trial(state, prev, config):
    if prev is None or config.initial_step == "constant" or state.slope >= 0:
        return None
    if config.initial_step == "quadratic":
        a = 2.02 * (state.f - prev.f) / state.slope
        return min(1.0, a) if a > 0 else None
    a = prev.alpha * prev.slope / state.slope
    return a if a > 0 and math.isfinite(a) else None


def cg_step(problem, manifold, state: CgState, config: CgConfig, prev: CgState | None = None):
    """Advance one iteration.

    Returns ``(done, nxt)``: ``done`` is ``state`` with the step fields
    filled in, ``nxt`` the state at ``k + 1``. ``prev`` is the completed
    previous iterate, used only to pick the first trial step. Raises :class:`LineSearchError`
    when the search fails and no fallback step is available (or the config
    says to raise).
    """
    x, eta = state.x, state.eta
    failed = False
    try:
        res = strong_wolfe_search(problem, manifold, x, eta, config.wolfe,
                                  f0=state.f, grad0=state.grad,
                                  alpha_init=_first_trial(state, prev, config))
        alpha, y, g_new, f_new, dphi, evals = (res.alpha, res.point, res.grad, res.phi,
                                               res.dphi, res.evaluations)
    except LineSearchError as exc:
        if config.on_linesearch_failure == "raise" or exc.best is None:
            raise
        best = exc.best
        alpha, y, g_new, f_new, dphi, evals = (best.alpha, best.point, best.grad, best.phi,
                                               best.dphi, exc.evaluations)
        failed = True
        log.warning("k=%d: line search failed (%s); taking alpha=%.3e", state.k, exc, alpha)

    step = eta * alpha
    gn_new = manifold.norm(y, g_new)
    outcome = transport_switch(manifold, x, step, eta, new_point=y)
    moved = outcome.vector if config.variant == "scaled" else outcome.raw

    k1 = state.k + 1
    restart = config.restart_period is not None and k1 % config.restart_period == 0
    beta = 0.0 if restart else beta_fr(gn_new, state.grad_norm)
    if beta != 0.0:
        # the projection strips roundoff normal components; otherwise they
        # ride along with beta ~ 1 and push the iterates off the manifold
        eta_new = manifold.project(y, -g_new + moved * beta)
    else:
        eta_new = -g_new

    done = replace(state, alpha=alpha, ratio=outcome.ratio,
                   scaled=outcome.scaled and config.variant == "scaled",
                   f_next=f_new, slope_next=dphi, linesearch_failed=failed,
                   transported_norm=manifold.norm(y, moved),
                   evaluations=evals)
    nxt = CgState(k=k1, x=y, eta=eta_new, grad=g_new, f=f_new, grad_norm=gn_new,
                  eta_norm=manifold.norm(y, eta_new), slope=manifold.inner(y, g_new, eta_new),
                  beta=beta)
    return done, nxt


def cg_solve(problem, manifold, x0, config: CgConfig = CgConfig(), callback=None) -> CgResult:
    """Run FR-CG from ``x0`` until ``|grad f| <= grad_tol`` or ``max_iter`` steps.

    ``callback(state)`` is called with every completed iterate (and with
    the final one), regardless of trace thinning.
    """
    require_feasible(manifold, x0)
    state = initial_state(problem, manifold, x0)
    trace = []

    def record(s):
        if callback is not None:
            callback(s)
        if config.record_trace and s.k % config.trace_every == 0:
            trace.append(s)

    status, message = MAX_ITER, ""
    prev = None
    while True:
        if state.grad_norm <= config.grad_tol:
            status = CONVERGED
            break
        if state.k >= config.max_iter:
            break
        if not (math.isfinite(state.f) and math.isfinite(state.grad_norm)):
            status, message = LINESEARCH_FAILED, "non-finite objective or gradient"
            break
        try:
            done, state = cg_step(problem, manifold, state, config, prev)
        except (LineSearchError, NotDescentError) as exc:
            status, message = LINESEARCH_FAILED, str(exc)
            break
        record(done)
        prev = done
    record(state)
    return CgResult(state, trace, status, message)
