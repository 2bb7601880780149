"""Acceptance criteria 1-11, one test each.

Every test records a one-line verdict with the measured quantity; the
lines are printed in the terminal summary (see ``conftest.py``).
"""

import time

import numpy as np

from scaledcg import diagnostics as dg
from scaledcg.cg import CONVERGED, CgConfig, cg_solve
from scaledcg.experiments import PRESETS, ExperimentSpec, run_experiment
from scaledcg.manifolds import ProductStiefel, Sphere, Stiefel
from scaledcg.problems import BrockettProblem, SvdProblem
from scaledcg.transports import transport_diff_orthographic, transport_scaled

from conftest import all_manifolds

VERDICTS = {}
_RUNS = {}


def record(n, ok, text):
    VERDICTS[n] = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {text}"
    return ok


def preset_run(name, variant, restart=None, max_iter=10_000):
    key = (name, variant, restart, max_iter)
    if key not in _RUNS:
        t = time.perf_counter()
        res = run_experiment(ExperimentSpec(name, variant, restart_period=restart,
                                            max_iter=max_iter), write=False)
        res.seconds = time.perf_counter() - t
        _RUNS[key] = res
    return _RUNS[key]


def first_below(res, threshold):
    k = res.first_k_below(threshold)
    return np.inf if k is None else k


SOLVER_PRESETS = ("peculiar-sphere-20", "ortho-sphere-100", "qr-sphere-20", "brockett-st-3-8", "svd-6x4")


def test_criterion_01_scaled_norm_identity():
    rng = np.random.default_rng(1)
    manifolds = all_manifolds()
    t = time.perf_counter()
    worst = 0.0
    for i in range(10_000):
        m = manifolds[i % len(manifolds)]
        x = m.random_point(rng)
        eta = m.random_tangent(x, rng, norm=rng.uniform(1e-3, 0.99))
        xi = m.random_tangent(x, rng, norm=rng.uniform(1e-3, 10.0))
        y = m.retract(x, eta)
        worst = max(worst, abs(m.norm(y, transport_scaled(m, x, eta, xi, y)) - m.norm(x, xi)))
    secs = time.perf_counter() - t
    ok = worst <= 1e-12 and secs < 5
    assert record(1, ok, f"max | |T0(xi)| - |xi| | = {worst:.2e} (<= 1e-12), {secs:.2f}s (< 5s)")


def test_criterion_02_orthographic_norm_identity():
    rng = np.random.default_rng(2)
    s = Sphere(100, "orthographic")
    t = time.perf_counter()
    worst = 0.0
    for _ in range(10_000):
        x = s.random_point(rng)
        eta = s.random_tangent(x, rng, norm=rng.uniform(0.0, 0.99))
        xi = s.random_tangent(x, rng, norm=rng.uniform(1e-3, 0.999))
        out = transport_diff_orthographic(x, eta, xi)
        gap = out @ out - xi @ xi - (eta @ xi) ** 2 / (1 - eta @ eta)
        worst = max(worst, abs(gap))
    secs = time.perf_counter() - t
    ok = worst <= 1e-12 and secs < 5
    assert record(2, ok, f"max |identity gap| = {worst:.2e} (<= 1e-12), {secs:.2f}s (< 5s)")


def test_criterion_03_differentiated_retraction_matches_fd():
    rng = np.random.default_rng(3)
    t = time.perf_counter()
    errs = {repr(m): dg.transport_fd_error(m, rng, samples=100, h=1e-6) for m in all_manifolds()}
    secs = time.perf_counter() - t
    worst = max(errs.values())
    ok = worst <= 1e-6 and secs < 10
    assert record(3, ok, f"max FD error over {len(errs)} manifolds = {worst:.2e} (<= 1e-6), "
                         f"{secs:.2f}s (< 10s)")


def test_criterion_04_wolfe_audit_all_presets():
    violations, steps, fallbacks = 0, 0, 0
    for name in SOLVER_PRESETS:
        manifold, problem = PRESETS[name].build()
        for variant in ("scaled", "standard"):
            trace = preset_run(name, variant).result.trace
            fallbacks += sum(s.linesearch_failed for s in trace)
            steps += sum(not np.isnan(s.alpha) for s in trace)
            violations += len(dg.wolfe_audit(problem, manifold, trace, 1e-4, 0.1, slack=1e-12))
    ok = violations == 0 and fallbacks == 0
    assert record(4, ok, f"{violations} violations, {fallbacks} fallback steps over {steps} "
                         f"accepted steps (both variants, {len(SOLVER_PRESETS)} presets)")


def test_criterion_05_lemma_bounds_scaled_variant():
    bad, first = 0, []
    for name in SOLVER_PRESETS:
        trace = preset_run(name, "scaled").result.trace
        bad += len(dg.lemma_audit(trace, 0.1, slack=1e-10))
        first.append(trace[0].slope / trace[0].grad_norm ** 2)
    k0 = max(abs(r + 1.0) for r in first)
    ok = bad == 0 and k0 <= 1e-14
    assert record(5, ok, f"{bad} iterates outside [-10/9, -8/9]; max |ratio_0 + 1| = {k0:.1e}")


def test_criterion_06_peculiar_sphere_reproduction():
    sc = preset_run("peculiar-sphere-20", "scaled")
    st = preset_run("peculiar-sphere-20", "standard")
    k_a = first_below(sc, 1e-5)
    st_final = st.rows[-1]
    above = sum(r.ratio_k > 1 for r in st.rows)
    sync = all(r.scaled_k == (r.ratio_k > 1) for r in sc.rows[:-1])
    secs = sc.seconds + st.seconds
    ok = (k_a <= 10_000 and st_final.k == 10_000 and st_final.dist_k > 1e-2 and above >= 1
          and sync and secs < 60)
    assert record(6, ok, f"(a) scaled dist<=1e-5 at k={k_a}; (b) standard dist at k=10^4 = "
                         f"{st_final.dist_k:.3f}, ratio>1 on {above} iterations; scaling "
                         f"synchronised with ratio>1: {sync}; {secs:.1f}s (< 60s)")


def test_criterion_07_orthographic_reproduction():
    sc = preset_run("ortho-sphere-100", "scaled")
    st = preset_run("ortho-sphere-100", "standard")
    ks, kt = first_below(sc, 1e-6), first_below(st, 1e-6)
    steps = [s for s in sc.result.trace if not np.isnan(s.alpha) and s.eta_norm > 0]
    all_scaled = all(s.scaled for s in steps)
    secs = sc.seconds + st.seconds
    ok = ks < kt and all_scaled and secs < 60
    assert record(7, ok, f"dist<=1e-6 at k={ks} (scaled) vs k={kt} (standard); scaled on all "
                         f"{len(steps)} steps: {all_scaled}; {secs:.2f}s (< 60s)")


def test_criterion_08_restart_sweep_ordering():
    t = time.perf_counter()
    k = {(v, N): first_below(preset_run("peculiar-sphere-20", v, N), 1e-6)
         for v in ("scaled", "standard") for N in (19, 50, 100, None)}
    secs = time.perf_counter() - t
    best = k[("scaled", None)]
    ok_scaled = all(best <= k[("scaled", N)] for N in (19, 50, 100))
    ok_std = all(k[("standard", N)] < k[("standard", None)] and k[("standard", N)] > best
                 for N in (19, 50, 100))
    ok = ok_scaled and ok_std and secs < 180
    table = ", ".join(f"{v[:3]}/N={N or '-'}:{k[(v, N)]}" for (v, N) in k)
    assert record(8, ok, f"first k with dist<=1e-6: {table}; {secs:.1f}s (< 180s)")


def test_criterion_09_zoutendijk_plateau():
    # every converging run of this suite: all presets, both variants, plus the restart sweep
    keys = [(name, v, None) for name in SOLVER_PRESETS for v in ("scaled", "standard")]
    keys += [("peculiar-sphere-20", v, N) for v in ("scaled", "standard") for N in (19, 50, 100)]
    growth = {}
    for name, v, N in keys:
        res = preset_run(name, v, N)
        if res.result.status == CONVERGED:
            led = dg.zoutendijk_ledger(res.result.trace)
            growth[f"{name}/{v}/N={N or '-'}"] = led.tail_growth(0.1) / led.total
    failing = {k: g for k, g in growth.items() if g > 1e-6}
    ok = not failing
    detail = "; ".join(f"{k} {g:.1e}" for k, g in sorted(failing.items()))
    assert record(9, ok, f"{len(growth) - len(failing)}/{len(growth)} converged runs with tail "
                         f"growth <= 1e-6 of total" + (f"; over: {detail}" if failing else ""))


def test_criterion_10_appendix_probe():
    rng = np.random.default_rng(10)
    t = time.perf_counter()
    B = rng.standard_normal((4, 4))
    rep_b = dg.lipschitz_probe(BrockettProblem(B + B.T, [1.0, 2.0]), Stiefel(4, 2), rng, samples=100)
    rep_s = dg.lipschitz_probe(SvdProblem(rng.standard_normal((5, 4)), [2.0, 1.0]),
                               ProductStiefel(5, 4, 2), rng, samples=100)
    secs = time.perf_counter() - t
    finite = all(np.all(np.isfinite(r.estimates)) for r in (rep_b, rep_s))
    fb, fs = rep_b.decay_fraction(50.0, 0.1), rep_s.decay_fraction(50.0, 0.1)
    ok = finite and fb >= 0.9 and fs >= 0.9 and secs < 30
    assert record(10, ok, f"finite: {finite}; decayed at t=50: Brockett {fb:.0%}, SVD {fs:.0%} "
                          f"(>= 90%); {secs:.2f}s (< 30s)")


def test_criterion_11_svd_end_to_end():
    t = time.perf_counter()
    worst = 0.0
    for seed in range(5):
        rng = np.random.default_rng(1100 + seed)
        A = rng.standard_normal((6, 4))
        man, prob = ProductStiefel(6, 4, 2), SvdProblem(A, [2.0, 1.0])
        res = cg_solve(prob, man, man.random_point(rng),
                       CgConfig(variant="scaled", max_iter=2000, grad_tol=1e-6))
        U, V = res.state.x
        est = np.diag(U.T @ A @ V)
        sv = np.linalg.svd(A, compute_uv=False)[:2]
        worst = max(worst, float(np.max(np.abs(est - sv))))
    secs = time.perf_counter() - t
    ok = worst <= 1e-6 and secs < 10
    assert record(11, ok, f"max |sigma_est - sigma| over 5 random 6x4 matrices = {worst:.1e} "
                          f"(<= 1e-6); {secs:.2f}s (< 10s)")
