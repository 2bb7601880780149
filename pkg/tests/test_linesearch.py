import math

import numpy as np
import pytest

from scaledcg.core import DomainError, UsageError
from scaledcg.linesearch import (
    LineSearchError,
    NotDescentError,
    WolfeConfig,
    phi,
    phi_prime,
    step_cap,
    strong_wolfe_search,
)
from scaledcg.manifolds import PeculiarSphere, Sphere
from scaledcg.problems import RayleighProblem, diag_range, riemannian_gradient


def wolfe_holds(problem, manifold, x, eta, res, c1, c2, slack=1e-12):
    f0 = problem.cost(x)
    d0 = manifold.inner(x, riemannian_gradient(problem, manifold, x), eta)
    ok1 = phi(problem, manifold, x, eta, res.alpha) <= f0 + c1 * res.alpha * d0 + slack
    ok2 = abs(phi_prime(problem, manifold, x, eta, res.alpha)) <= c2 * abs(d0) + slack
    return ok1 and ok2


def test_config_validation():
    with pytest.raises(UsageError):
        WolfeConfig(c1=0.2, c2=0.1)
    with pytest.raises(UsageError):
        WolfeConfig(c1=1e-4, c2=0.5)
    with pytest.raises(UsageError):
        WolfeConfig(growth=1.0)
    with pytest.raises(UsageError):
        WolfeConfig(alpha_cap=0.0)


def test_phi_examples():
    prob = RayleighProblem(np.diag([1.0, 2.0]))
    s = Sphere(2)
    x, eta = np.array([0.0, 1.0]), np.array([1.0, 0.0])
    assert phi(prob, s, x, eta, 0.0) == prob.cost(x)
    assert phi(prob, s, x, eta, 1.0) == pytest.approx(1.5, abs=1e-15)
    assert phi(prob, s, x, eta, 1e8) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(DomainError):
        phi(prob, s, x, eta, -1.0)


def test_phi_prime_at_zero_and_descent(rng):
    m = PeculiarSphere(20)
    prob = RayleighProblem(diag_range(20))
    x = m.random_point(rng)
    g = riemannian_gradient(prob, m, x)
    eta = m.random_tangent(x, rng)
    assert phi_prime(prob, m, x, eta, 0.0) == pytest.approx(m.inner(x, g, eta), rel=1e-12)
    assert phi_prime(prob, m, x, -g, 0.0) < 0


@pytest.mark.parametrize("manifold", [Sphere(10), Sphere(10, "orthographic"), PeculiarSphere(10)],
                         ids=repr)
def test_phi_prime_matches_fd(manifold, rng):
    prob = RayleighProblem(diag_range(10))
    h = 1e-6
    for _ in range(20):
        x = manifold.random_point(rng)
        eta = manifold.random_tangent(x, rng, norm=0.5)
        a = rng.uniform(0.1, 1.0)
        fd = (phi(prob, manifold, x, eta, a + h) - phi(prob, manifold, x, eta, a - h)) / (2 * h)
        assert abs(phi_prime(prob, manifold, x, eta, a) - fd) <= 1e-6


def test_search_satisfies_wolfe_with_sampling_oracle(rng):
    s = Sphere(10)
    prob = RayleighProblem(diag_range(10))
    cfg = WolfeConfig(c1=1e-4, c2=0.1)
    for _ in range(20):
        x = s.random_point(rng)
        eta = -riemannian_gradient(prob, s, x)
        res = strong_wolfe_search(prob, s, x, eta, cfg)
        assert wolfe_holds(prob, s, x, eta, res, cfg.c1, cfg.c2)
        # independent check by dense sampling of phi on [0, 2 alpha]
        alphas = np.linspace(0, 2 * res.alpha, 2001)
        vals = np.array([phi(prob, s, x, eta, a) for a in alphas])
        d0 = s.inner(x, -eta, eta)
        assert vals[1000] == pytest.approx(res.phi, abs=1e-13)
        assert vals[1000] <= vals[0] + cfg.c1 * res.alpha * d0
        slope = (vals[1001] - vals[999]) / (alphas[1001] - alphas[999])
        assert abs(slope) <= cfg.c2 * abs(d0) + 1e-4 * abs(d0)


def test_search_rejects_ascent_direction(rng):
    s = Sphere(5)
    prob = RayleighProblem(diag_range(5))
    x = s.random_point(rng)
    with pytest.raises(NotDescentError):
        strong_wolfe_search(prob, s, x, riemannian_gradient(prob, s, x))


def test_search_lands_on_minimiser():
    # phi has an interior minimiser; curvature test at the minimiser holds for any c2
    s = Sphere(2)
    prob = RayleighProblem(np.diag([1.0, 2.0]))
    x = np.array([1.0, 1.0]) / np.sqrt(2)
    eta = -riemannian_gradient(prob, s, x)
    res = strong_wolfe_search(prob, s, x, eta, WolfeConfig(c1=1e-4, c2=0.01))
    assert abs(res.dphi) <= 0.01 * abs(s.inner(x, -eta, eta))


def test_orthographic_cap_respected(rng):
    s = Sphere(10, "orthographic")
    prob = RayleighProblem(diag_range(10, 0.1))
    cfg = WolfeConfig()
    seen = []

    class Spy(Sphere):
        def retract(self, x, xi):
            seen.append(np.linalg.norm(xi))
            return super().retract(x, xi)

    spy = Spy(10, "orthographic")
    for _ in range(20):
        x = s.random_point(rng)
        eta = -riemannian_gradient(prob, s, x) * 5.0
        cap = step_cap(s, x, eta, cfg)
        assert cap == pytest.approx(0.99 / np.linalg.norm(eta))
        res = strong_wolfe_search(prob, spy, x, eta, cfg)
        assert res.alpha < cap
    assert max(seen) < 1.0


def test_explicit_alpha_cap():
    s = Sphere(5)
    x = np.eye(5)[0]
    eta = np.array([0, 1.0, 0, 0, 0])
    assert step_cap(s, x, eta, WolfeConfig(alpha_cap=0.3)) == 0.3
    assert step_cap(s, x, eta, WolfeConfig()) is None


def test_budget_exhaustion_reports_best():
    s = Sphere(2)
    prob = RayleighProblem(np.diag([1.0, 2.0]))
    x = np.array([0.6, 0.8])
    eta = -riemannian_gradient(prob, s, x)
    cfg = WolfeConfig(c2=0.11, max_zoom=1, max_bracket=1, alpha_init=1e-6)
    with pytest.raises(LineSearchError) as info:
        strong_wolfe_search(prob, s, x, eta, cfg)
    assert info.value.best is not None and info.value.best.alpha == 1e-6
    assert info.value.evaluations >= 1


def test_evaluations_counted(rng):
    s = Sphere(6)
    prob = RayleighProblem(diag_range(6))
    x = s.random_point(rng)
    res = strong_wolfe_search(prob, s, x, -riemannian_gradient(prob, s, x))
    assert res.evaluations >= 1 and math.isfinite(res.phi)
