"""Experiment presets, trace files and the invariant check suite."""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import diagnostics as dg
from .cg import LINESEARCH_FAILED, CgConfig, CgResult, cg_solve
from .core import Pair, UsageError, ambient_norm, check_feasibility
from .linesearch import WolfeConfig
from .manifolds import PeculiarSphere, ProductStiefel, Sphere, Stiefel, qf
from .problems import BrockettProblem, RayleighProblem, SvdProblem, diag_range

OUTPUT_DIR_ENV = "SCALEDCG_OUT_DIR"


@dataclass(frozen=True)
class Preset:
    """A fully specified problem instance.

    ``optima`` lists the minimisers up to the sign symmetry of the problem;
    ``signs`` maps a point to the sign-matched optimum for distance tracking.
    """

    name: str
    description: str
    build: object  # () -> (manifold, problem)
    reference_x0: object  # (manifold) -> point
    optimum: object  # (manifold, problem, x0) -> sign-matched optimum
    grad_tol: float = 1e-8
    is_sphere: bool = False


def _sphere_optimum(manifold, problem, x0):
    e1 = np.zeros(manifold.n)
    e1[0] = 1.0
    return e1 if np.linalg.norm(x0 - e1) <= np.linalg.norm(x0 + e1) else -e1


def _brockett_optimum(manifold, problem, X0):
    w, V = np.linalg.eigh(problem.A)
    p = problem.p
    # largest weight pairs with the smallest eigenvalue
    X = V[:, :p][:, ::-1].copy()
    for j in range(p):
        if np.linalg.norm(X0[:, j] + X[:, j]) < np.linalg.norm(X0[:, j] - X[:, j]):
            X[:, j] *= -1
    return X


def _svd_optimum(manifold, problem, UV0):
    U, s, Vt = np.linalg.svd(problem.A, full_matrices=False)
    p = problem.p
    if problem.sense == "maximize":
        U, V = U[:, :p].copy(), Vt[:p].T.copy()
    else:
        U, V = U[:, :p][:, ::-1].copy(), Vt[:p].T[:, ::-1].copy()
    for j in range(p):
        plus = np.linalg.norm(UV0[0][:, j] - U[:, j]) ** 2 + np.linalg.norm(UV0[1][:, j] - V[:, j]) ** 2
        minus = np.linalg.norm(UV0[0][:, j] + U[:, j]) ** 2 + np.linalg.norm(UV0[1][:, j] + V[:, j]) ** 2
        if minus < plus:
            U[:, j] *= -1
            V[:, j] *= -1
    return Pair(U, V)


def _ones_x0(manifold):
    return np.ones(manifold.n) / np.sqrt(manifold.n)


def _seeded_x0(manifold):
    return manifold.random_point(np.random.default_rng(0))


def _brockett_build():
    rng = np.random.default_rng(20150603)
    B = rng.standard_normal((8, 8))
    return Stiefel(8, 3), BrockettProblem(B + B.T, [1.0, 2.0, 3.0])


def _svd_build():
    rng = np.random.default_rng(20150604)
    return ProductStiefel(6, 4, 2), SvdProblem(rng.standard_normal((6, 4)), [2.0, 1.0])


PRESETS = {
    p.name: p
    for p in [
        Preset("peculiar-sphere-20",
               "Rayleigh quotient, A=diag(1..20), sphere with the inflated first-coordinate metric, QR retraction",
               lambda: (PeculiarSphere(20), RayleighProblem(diag_range(20))),
               _ones_x0, _sphere_optimum, grad_tol=2e-7, is_sphere=True),
        Preset("ortho-sphere-100",
               "Rayleigh quotient, A=diag(1..100)/100, standard sphere metric, orthographic retraction",
               lambda: (Sphere(100, "orthographic"), RayleighProblem(diag_range(100, 0.01))),
               _ones_x0, _sphere_optimum, grad_tol=4e-8, is_sphere=True),
        Preset("qr-sphere-20",
               "Rayleigh quotient, A=diag(1..20), standard sphere metric, QR retraction",
               lambda: (Sphere(20, "qr"), RayleighProblem(diag_range(20))),
               _ones_x0, _sphere_optimum, grad_tol=1e-7, is_sphere=True),
        Preset("brockett-st-3-8",
               "Brockett cost tr(X^T A X N) on St(3,8), random symmetric A (fixed seed), N=diag(1,2,3)",
               _brockett_build, _seeded_x0, _brockett_optimum, grad_tol=2e-6),
        Preset("svd-6x4",
               "tr(U^T A V N) maximised on St(2,6) x St(2,4), random 6x4 A (fixed seed), N=diag(2,1)",
               _svd_build, _seeded_x0, _svd_optimum, grad_tol=2e-6),
    ]
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise UsageError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None


VARIANT_ALIASES = {"fr": "standard", "scaled-fr": "scaled", "standard": "standard", "scaled": "scaled"}


@dataclass(frozen=True)
class ExperimentSpec:
    preset: str
    variant: str = "scaled"
    restart_period: int | None = None
    max_iter: int = 10_000
    grad_tol: float | None = None  # None -> preset default
    c1: float = 1e-4
    c2: float = 0.1
    x0: str = "paper"  # "paper" or "random:<seed>"
    out: str | None = None
    fmt: str = "csv"
    trace_every: int = 1
    name: str = ""

    def cg_config(self, preset: Preset) -> CgConfig:
        if self.variant not in VARIANT_ALIASES:
            raise UsageError(f"unknown variant {self.variant!r}")
        return CgConfig(
            variant=VARIANT_ALIASES[self.variant],
            wolfe=WolfeConfig(c1=self.c1, c2=self.c2),
            max_iter=self.max_iter,
            grad_tol=preset.grad_tol if self.grad_tol is None else self.grad_tol,
            restart_period=self.restart_period,
            trace_every=self.trace_every,
        )


def initial_point(spec_x0: str, preset: Preset, manifold):
    if spec_x0 == "paper":
        return preset.reference_x0(manifold)
    if spec_x0.startswith("random:"):
        try:
            seed = int(spec_x0.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"bad x0 spec {spec_x0!r}") from None
        return manifold.random_point(np.random.default_rng(seed))
    raise UsageError(f"x0 must be 'paper' or 'random:<seed>', got {spec_x0!r}")


@dataclass(frozen=True)
class TraceRow:
    k: int
    f_k: float
    grad_norm: float
    alpha_k: float
    beta_k: float
    ratio_k: float
    scaled_k: bool
    x1_k: float
    dist_k: float
    zoutendijk_partial: float


TRACE_COLUMNS = [f.name for f in fields(TraceRow)]


def trace_rows(trace, x_star, is_sphere: bool) -> list[TraceRow]:
    rows = []
    ledger = dg.ZoutendijkLedger()
    for s in trace:
        dg.zoutendijk_accumulate(ledger, s)
        rows.append(TraceRow(
            k=s.k, f_k=s.f, grad_norm=s.grad_norm, alpha_k=s.alpha, beta_k=s.beta,
            ratio_k=s.ratio, scaled_k=s.scaled,
            x1_k=float(s.x[0]) if is_sphere else math.nan,
            dist_k=ambient_norm(s.x - x_star),
            zoutendijk_partial=ledger.total,
        ))
    return rows


def _fmt(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    return format(v, ".17g")


def write_trace(rows, path, fmt="csv", meta=None) -> Path:
    """Write trace rows as CSV (``# key=value`` comment, then header) or JSON lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = meta or {}
    if fmt == "csv":
        with path.open("w", newline="") as fh:
            if meta:
                fh.write("# " + " ".join(f"{k}={v}" for k, v in meta.items()) + "\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACE_COLUMNS)
            for r in rows:
                w.writerow([_fmt(getattr(r, c)) for c in TRACE_COLUMNS])
    elif fmt == "jsonl":
        with path.open("w") as fh:
            if meta:
                fh.write(json.dumps({"meta": meta}) + "\n")
            for r in rows:
                d = {k: (None if isinstance(v, float) and math.isnan(v) else v)
                     for k, v in asdict(r).items()}
                fh.write(json.dumps(d) + "\n")
    else:
        raise UsageError(f"unknown format {fmt!r}")
    return path


def read_trace(path) -> list[dict]:
    """Parse a file written by :func:`write_trace` back into dicts of numbers."""
    path = Path(path)
    lines = path.read_text().splitlines()
    out = []
    if path.suffix == ".jsonl" or (lines and lines[0].startswith("{")):
        for line in lines:
            d = json.loads(line)
            if "meta" in d:
                continue
            out.append({k: (math.nan if v is None else v) for k, v in d.items()})
        return out
    body = [ln for ln in lines if not ln.startswith("#")]
    for rec in csv.DictReader(body):
        out.append({k: (int(v) if k in ("k", "scaled_k") else float(v)) for k, v in rec.items()})
    return out


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    result: CgResult
    rows: list
    path: Path | None = None
    summary: dict = field(default_factory=dict)

    def first_k_below(self, threshold: float):
        """First iteration with ``dist_k <= threshold`` (None if never)."""
        for r in self.rows:
            if r.dist_k <= threshold:
                return r.k
        return None


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, "traces"))


def run_experiment(spec: ExperimentSpec, write: bool = True) -> ExperimentResult:
    """Run one preset and (optionally) write its trace file.

    The trace is written even when the solver stops on a line-search
    failure.
    """
    preset = get_preset(spec.preset)
    manifold, problem = preset.build()
    x0 = initial_point(spec.x0, preset, manifold)
    ok, residual = check_feasibility(manifold, x0)
    if not ok:
        raise UsageError(f"x0 infeasible (residual {residual:.3e})")
    config = spec.cg_config(preset)
    result = cg_solve(problem, manifold, x0, config)
    # Sphere presets match the optimum sign to x0; the Stiefel presets start
    # from random points and may land in any sign class, so match the end point.
    x_star = preset.optimum(manifold, problem, x0 if preset.is_sphere else result.state.x)
    rows = trace_rows(result.trace, x_star, preset.is_sphere)
    final = rows[-1]
    summary = {
        "preset": spec.preset,
        "variant": config.variant,
        "restart": spec.restart_period,
        "status": result.status,
        "iterations": result.state.k,
        "final_f": final.f_k,
        "final_dist": final.dist_k,
        "final_grad_norm": final.grad_norm,
        "scaling_events": sum(1 for s in result.trace if s.scaled),
        "ratio_above_one": sum(1 for s in result.trace if s.ratio > 1.0),
        "linesearch_fallbacks": sum(1 for s in result.trace if s.linesearch_failed),
    }
    path = None
    if write:
        out = spec.out
        if out is None:
            tag = spec.name or f"{spec.preset}_{config.variant}_N{spec.restart_period or 'none'}"
            out = default_output_dir() / f"{tag}.{spec.fmt}"
        meta = {"preset": spec.preset, "variant": config.variant,
                "restart": spec.restart_period or "none", "x0": spec.x0,
                "c1": spec.c1, "c2": spec.c2, "max_iter": spec.max_iter,
                "grad_tol": config.grad_tol, "status": result.status}
        path = write_trace(rows, out, spec.fmt, meta)
    return ExperimentResult(spec, result, rows, path, summary)


def _run_quiet(spec):
    return run_experiment(spec)


def run_restart_sweep(base: ExperimentSpec, periods=(19, 50, 100, None),
                      workers: int = 1) -> dict:
    """One run per restart period (``None`` = no restart), keyed by period.

    Output files get a ``_N<period>`` suffix when ``base.out`` is set.
    """
    specs = []
    for N in periods:
        out = None
        if base.out is not None:
            p = Path(base.out)
            out = str(p.with_name(f"{p.stem}_N{N or 'none'}{p.suffix or '.' + base.fmt}"))
        specs.append(replace(base, restart_period=N, out=out))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_quiet, specs))
    else:
        results = [run_experiment(s) for s in specs]
    return dict(zip(periods, results))


# --------------------------------------------------------------------------
# invariant suite

CHECK_GROUPS = ("metric", "projection", "retraction", "transport", "gradient", "solver")


def _check_manifolds():
    return [Sphere(20, "qr"), Sphere(20, "orthographic"), PeculiarSphere(20),
            Stiefel(6, 3), ProductStiefel(5, 4, 2)]


def _check_problems():
    rng = np.random.default_rng(7)
    B = rng.standard_normal((6, 6))
    return [
        (RayleighProblem(diag_range(20)), Sphere(20, "qr")),
        (RayleighProblem(diag_range(20)), PeculiarSphere(20)),
        (RayleighProblem(diag_range(20, 0.01)), Sphere(20, "orthographic")),
        (BrockettProblem(B + B.T, [1.0, 2.0, 3.0]), Stiefel(6, 3)),
        (SvdProblem(rng.standard_normal((5, 4)), [2.0, 1.0]), ProductStiefel(5, 4, 2)),
    ]


def _check_metric(rng):
    worst_sym, neg = 0.0, 0
    for m in _check_manifolds():
        for _ in range(100):
            x = m.random_point(rng)
            a, b = m.random_tangent(x, rng), m.random_tangent(x, rng)
            worst_sym = max(worst_sym, abs(m.inner(x, a, b) - m.inner(x, b, a)))
            neg += int(m.inner(x, a, a) <= 0)
    return worst_sym <= 1e-12 and neg == 0, {"max_asymmetry": worst_sym, "nonpositive": neg}


def _check_projection(rng):
    worst = 0.0
    for m in _check_manifolds():
        for _ in range(100):
            x = m.random_point(rng)
            v = m.project(x, m._ambient_gaussian(rng))
            worst = max(worst, ambient_norm(m.project(x, v) - v))
    return worst <= 1e-12, {"max_idempotency_gap": worst}


def _check_retraction(rng):
    worst_zero, worst_slope = 0.0, 0.0
    for m in _check_manifolds():
        for _ in range(20):
            x = m.random_point(rng)
            worst_zero = max(worst_zero, ambient_norm(m.retract(x, m.zero_vector(x)) - x))
            eta = m.random_tangent(x, rng, norm=0.5)
            q = [ambient_norm(m.retract(x, eta * t) - x - eta * t) / t ** 2
                 for t in (1e-2, 1e-3, 1e-4)]
            worst_slope = max(worst_slope, max(q) / max(min(q), 1e-300))
    # bounded second-order remainder: the three quotients agree within a factor
    return worst_zero <= 1e-14 and worst_slope <= 10.0, {
        "max_zero_gap": worst_zero, "max_quotient_spread": worst_slope}


def _check_transport(rng):
    fd = {repr(m): dg.transport_fd_error(m, rng, samples=100) for m in _check_manifolds()}
    from .transports import transport_scaled, transport_switch

    worst_scaled, worst_switch = 0.0, 0.0
    for m in _check_manifolds():
        for _ in range(100):
            x = m.random_point(rng)
            eta = m.random_tangent(x, rng, norm=rng.uniform(0.05, 0.9))
            xi = m.random_tangent(x, rng, norm=rng.uniform(0.1, 5.0))
            y = m.retract(x, eta)
            nxi = m.norm(x, xi)
            worst_scaled = max(worst_scaled,
                               abs(m.norm(y, transport_scaled(m, x, eta, xi, y)) - nxi) / nxi)
            out = transport_switch(m, x, eta, xi, y)
            worst_switch = max(worst_switch, m.norm(y, out.vector) / nxi - 1.0)
    ok = max(fd.values()) <= 1e-6 and worst_scaled <= 1e-12 and worst_switch <= 1e-12
    return ok, {"fd_error": fd, "scaled_norm_gap": worst_scaled, "switch_growth": worst_switch}


def _check_gradient(rng):
    detail = {}
    ok = True
    for prob, m in _check_problems():
        fd = dg.gradient_fd_error(prob, m, rng)
        dual = dg.gradient_duality_error(prob, m, rng)
        tangency = dg.gradient_tangency_error(prob, m, rng)
        detail[f"{type(prob).__name__}/{m!r}"] = {"fd": fd, "duality": dual, "tangency": tangency}
        ok &= fd <= 1e-6 and dual <= 1e-10 and tangency <= 1e-10
    return ok, detail


def _check_solver(rng, max_iter=10_000):
    detail, ok = {}, True
    for name in ("peculiar-sphere-20", "ortho-sphere-100", "brockett-st-3-8", "svd-6x4"):
        preset = PRESETS[name]
        for variant in ("scaled", "standard"):
            spec = ExperimentSpec(name, variant, max_iter=max_iter)
            res = run_experiment(spec, write=False)
            trace = res.result.trace
            manifold, problem = preset.build()
            wolfe = dg.wolfe_audit(problem, manifold, trace, spec.c1, spec.c2)
            d = {"status": res.result.status, "iterations": res.result.state.k,
                 "wolfe_violations": len(wolfe)}
            good = not wolfe and res.result.status != LINESEARCH_FAILED
            if variant == "scaled":
                d["lemma_violations"] = len(dg.lemma_audit(trace, spec.c2))
                d["norm_growth"] = len(dg.norm_growth_audit(trace))
                d["recurrence_violations"] = len(dg.recurrence_audit(trace, spec.c2))
                good &= not (d["lemma_violations"] or d["norm_growth"] or d["recurrence_violations"])
            detail[f"{name}/{variant}"] = d
            ok &= good
    return ok, detail


_CHECKS = {
    "metric": _check_metric,
    "projection": _check_projection,
    "retraction": _check_retraction,
    "transport": _check_transport,
    "gradient": _check_gradient,
    "solver": _check_solver,
}


def run_checks(scope="all", seed: int = 0) -> dict:
    """Run invariant groups; returns ``{group: {"ok": bool, "detail": ...}}``.

    ``scope`` is ``"all"``, ``"fast"`` (everything but solver runs), a group
    name, or a comma-separated list of group names.
    """
    if scope == "all":
        groups = list(CHECK_GROUPS)
    elif scope == "fast":
        groups = [g for g in CHECK_GROUPS if g != "solver"]
    else:
        groups = [g.strip() for g in scope.split(",")]
        unknown = [g for g in groups if g not in _CHECKS]
        if unknown:
            raise UsageError(f"unknown check group(s) {unknown}; choose from {CHECK_GROUPS}")
    report = {}
    for g in groups:
        ok, detail = _CHECKS[g](np.random.default_rng(seed))
        report[g] = {"ok": bool(ok), "detail": detail}
    return report
