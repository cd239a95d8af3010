"""Monte-Carlo experiments behind the CLI subcommands.

Each ``run_*`` function takes an :class:`ExperimentConfig` and returns a
:class:`Report` holding CSV tables (header + rows) and any arrays the
figures need.  Everything random is derived from ``config.master_seed``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import partial
import math

import numpy as np

from garchboot.bootstrap import WeightScheme, fit_weighted_bootstrap, residual_bootstrap
from garchboot.core import GarchSpec, InnovationDistribution, SamplePath, simulate
from garchboot.harness.config import ConfigError, ExperimentConfig
from garchboot.harness.replication import ReplicationOutcome, run_replications
from garchboot.inference import (
    CoverageTally,
    basic_interval,
    confidence_ellipse,
    coverage_record,
    percentile_interval,
    sae,
)
from garchboot.qmle import (
    NonStationaryError,
    asymptotic_covariance,
    estimate_J,
    estimate_kurtosis,
    fit_qmle,
)
from garchboot.seeding import derive_seed

__all__ = [
    "Report",
    "covariance_elements",
    "reference_covariance",
    "run_contour",
    "run_convergence",
    "run_coverage",
    "run_fit",
    "run_sae",
    "run_simulate",
]

DEFAULT_GRIDS = {
    "convergence": (100, 250, 500, 1000, 2000, 5000),
    "sae": (500, 1000, 2000),
    "coverage": (500, 1000, 2000),
}
DEFAULT_METHODS = {"convergence": ("qmle", "wb", "rb"), "coverage": ("wb", "rb")}


@dataclass
class Report:
    command: str
    tables: dict[str, tuple[list[str], list[list]]] = field(default_factory=dict)
    replications: dict[str, dict[str, int]] = field(default_factory=dict)
    extras: dict = field(default_factory=dict)
    summary: str = ""

    def account(self, outcome: ReplicationOutcome) -> None:
        self.replications[outcome.label] = {
            "R": outcome.R,
            "completed": len(outcome.records),
            "failures": outcome.n_failures,
        }


def _grid(cfg: ExperimentConfig, command: str) -> tuple[int, ...]:
    return cfg.n_grid if cfg.n_grid else DEFAULT_GRIDS[command]


def _methods(cfg: ExperimentConfig, command: str) -> tuple[str, ...]:
    methods = cfg.methods if cfg.methods is not None else DEFAULT_METHODS[command]
    allowed = {"qmle", "wb", "rb"} if command == "convergence" else {"wb", "rb"}
    bad = set(methods) - allowed
    if bad:
        raise ConfigError(f"unknown methods for {command}: {sorted(bad)}")
    return tuple(methods)


def covariance_elements(spec: GarchSpec) -> list[tuple[str, int, int]]:
    """Names and indices of the distinct covariance-matrix elements."""
    names = spec.names
    d = len(names)
    out = []
    for i in range(d):
        for j in range(i, d):
            if i == j:
                out.append((f"var_{names[i]}", i, i))
            elif d == 2:
                out.append(("cov", i, j))
            else:
                out.append((f"cov_{names[i]}_{names[j]}", i, j))
    return out


def reference_covariance(cfg: ExperimentConfig, spec: GarchSpec | None = None) -> np.ndarray:
    """``(kappa - 1) J^{-1}`` at the true parameters, with J simulated over ``cfg.N`` steps."""
    spec = spec or cfg.spec
    dist = cfg.innovations
    kappa = dist.kurtosis()
    if not math.isfinite(kappa):
        raise ConfigError(f"{dist.label} innovations have infinite fourth moment")
    try:
        J = estimate_J(spec, dist, cfg.N, derive_seed(cfg.master_seed, "reference", 0))
    except NonStationaryError as err:
        raise ConfigError(str(err)) from err
    return asymptotic_covariance(J, kappa)


def _draw_path(cfg: ExperimentConfig, dist: InnovationDistribution, n: int, seed: int) -> SamplePath:
    return simulate(cfg.spec, dist, n, cfg.burn_in, derive_seed(seed, "path"))


def _fit_or_raise(cfg: ExperimentConfig, path: SamplePath):
    fit = fit_qmle(path, cfg.fit)
    if not fit.converged:
        raise RuntimeError("QMLE did not converge")
    return fit


# simulate ------------------------------------------------------------------


def run_simulate(cfg: ExperimentConfig) -> Report:
    path = simulate(cfg.spec, cfg.innovations, cfg.n, cfg.burn_in, cfg.master_seed)
    rows = [[t + 1, x, h] for t, (x, h) in enumerate(zip(path.values, path.true_variances))]
    report = Report("simulate")
    report.tables["simulate"] = (["t", "x", "h"], rows)
    report.extras["path"] = path
    return report


# fit -----------------------------------------------------------------------


def run_fit(cfg: ExperimentConfig, values: np.ndarray | None = None) -> Report:
    """Fit the model to ``values`` (or to a path simulated from the config).

    Standard errors are ``sqrt((kappa - 1) [J^{-1}]_ii / n)`` with J simulated
    at the estimate under Gaussian innovations.  ``kappa`` is the residual
    kurtosis in ``data`` mode, or the known innovation kurtosis in
    ``oracle`` mode when the data were simulated.
    """
    simulated = values is None
    if simulated:
        path = simulate(cfg.spec, cfg.innovations, cfg.n, cfg.burn_in, cfg.master_seed)
    else:
        path = SamplePath(values)
    fit = fit_qmle(path, cfg.fit)
    n = path.n
    kappa_hat = estimate_kurtosis(fit.residuals) if n >= 10 else math.nan
    if cfg.kappa_mode == "oracle" and simulated:
        kappa, kappa_source = cfg.innovations.kurtosis(), "oracle"
    else:
        kappa, kappa_source = kappa_hat, "residuals"

    se = np.full(fit.theta.shape, math.nan)
    se_note = ""
    try:
        J = estimate_J(
            fit.theta_hat,
            InnovationDistribution.gaussian(),
            cfg.N,
            derive_seed(cfg.master_seed, "fit-J", 0),
        )
        cov = asymptotic_covariance(J, kappa)
        se = np.sqrt(np.diag(cov) / n)
    except (NonStationaryError, ValueError, np.linalg.LinAlgError) as err:
        se_note = f"standard errors unavailable: {err}"

    names = fit.theta_hat.names
    report = Report("fit")
    report.tables["fit"] = (
        ["param", "estimate", "se"],
        [[name, est, s] for name, est, s in zip(names, fit.theta, se)],
    )
    report.tables["fit_series"] = (
        ["t", "x", "sigma2", "residual"],
        [[t + 1, x, s2, e] for t, (x, s2, e) in enumerate(zip(path.values, fit.sigma2, fit.residuals))],
    )
    lines = [
        f"QMLE fit of GARCH({fit.theta_hat.p},{fit.theta_hat.q}), n={n}",
        f"{'param':>10} {'estimate':>14} {'se':>12}",
    ]
    lines += [f"{name:>10} {est:14.6f} {s:12.6f}" for name, est, s in zip(names, fit.theta, se)]
    lines += [
        f"negative quasi-loglik: {fit.neg_loglik:.10g}",
        f"residual kurtosis: {kappa_hat:.6g}",
        f"kappa used for SEs: {kappa:.6g} ({kappa_source})",
        f"converged: {fit.converged} after {fit.iterations} iterations; "
        f"boundary: {fit.boundary_flag}",
    ]
    if se_note:
        lines.append(se_note)
    report.summary = "\n".join(lines)
    report.extras["path"] = path
    report.extras["fit"] = fit
    return report


# contour -------------------------------------------------------------------


def _contour_task(cfg: ExperimentConfig, grid: list[tuple[float, float]], r: int, seed: int):
    omega0, alpha0 = grid[r]
    spec = GarchSpec(omega0, (alpha0,))
    dist = cfg.innovations
    J = estimate_J(spec, dist, cfg.N, seed)
    return asymptotic_covariance(J, dist.kurtosis())


def run_contour(cfg: ExperimentConfig) -> Report:
    """Limiting ARCH(1) covariance over the ``(omega_grid, alpha_grid)`` grid."""
    grid = [(w, a) for w in cfg.omega_grid for a in cfg.alpha_grid]
    if not grid:
        raise ConfigError("empty contour grid")
    outcome = run_replications(
        partial(_contour_task, cfg, grid), len(grid), cfg.master_seed, "contour", cfg.threads
    )
    rows = []
    for r, cov in zip(outcome.indices, outcome.records):
        w, a = grid[r]
        rows.append([w, a, cov[0, 0], cov[0, 1], cov[1, 1]])
    report = Report("contour")
    report.account(outcome)
    report.tables["contour"] = (["omega0", "alpha0", "var_omega", "cov", "var_alpha"], rows)
    return report


# convergence ---------------------------------------------------------------


def _moments(reps: np.ndarray, center: np.ndarray) -> tuple[int, np.ndarray, np.ndarray]:
    dev = reps - center
    return dev.shape[0], dev.sum(axis=0), dev.T @ dev


def _convergence_task(cfg: ExperimentConfig, n: int, methods: tuple[str, ...], r: int, seed: int):
    path = _draw_path(cfg, cfg.innovations, n, seed)
    fit = _fit_or_raise(cfg, path)
    theta0 = cfg.spec.theta
    out = {"theta_hat": fit.theta}
    if "wb" in methods:
        res = fit_weighted_bootstrap(
            path, WeightScheme(cfg.scheme), cfg.B, cfg.fit, derive_seed(seed, "wb"), base_fit=fit
        )
        out["wb"] = _moments(res.replicates, theta0) + (res.failures,)
    if "rb" in methods:
        res = residual_bootstrap(path, fit, cfg.B, cfg.fit, derive_seed(seed, "rb"))
        out["rb"] = _moments(res.replicates, theta0) + (res.failures,)
    return out


def _pooled_cov(parts) -> np.ndarray:
    m = sum(p[0] for p in parts)
    s1 = sum(p[1] for p in parts)
    s2 = sum(p[2] for p in parts)
    return (s2 - np.outer(s1, s1) / m) / (m - 1)


def run_convergence(cfg: ExperimentConfig) -> Report:
    """n-scaled covariance of estimates (and pooled bootstrap replicates) divided by the limit.

    For ``qmle`` the ratio should approach 1; for the bootstrap methods the
    pooled replicates spread around the truth with twice the limiting
    covariance, so their ratio approaches 2 for multinomial weights.
    """
    methods = _methods(cfg, "convergence")
    ref = reference_covariance(cfg)
    elems = covariance_elements(cfg.spec)
    report = Report("convergence")
    rows, raw = [], []
    for n in _grid(cfg, "convergence"):
        label = f"convergence/n={n}"
        outcome = run_replications(
            partial(_convergence_task, cfg, n, methods), cfg.R, cfg.master_seed, label, cfg.threads
        )
        report.account(outcome)
        if len(outcome.records) < 2:
            continue
        covs = {}
        if "qmle" in methods:
            est = np.array([rec["theta_hat"] for rec in outcome.records])
            covs["qmle"] = np.cov(est, rowvar=False)
        for m in ("wb", "rb"):
            if m in methods:
                covs[m] = _pooled_cov([rec[m] for rec in outcome.records])
                report.replications[f"{label}/{m}-refit-failures"] = {
                    "failures": int(sum(rec[m][3] for rec in outcome.records))
                }
        for m in methods:
            scaled = n * np.atleast_2d(covs[m])
            for name, i, j in elems:
                rows.append([n, m, name, scaled[i, j] / ref[i, j]])
                raw.append([n, m, name, scaled[i, j], ref[i, j]])
    report.tables["convergence"] = (["n", "method", "elem", "ratio"], rows)
    report.tables["convergence_cov"] = (["n", "method", "elem", "n_cov", "reference"], raw)
    report.extras["reference"] = ref
    return report


# sae -----------------------------------------------------------------------


def _sae_task(cfg: ExperimentConfig, dist: InnovationDistribution, n: int, r: int, seed: int):
    path = _draw_path(cfg, dist, n, seed)
    fit = fit_qmle(path, cfg.fit)
    return sae(fit.theta, cfg.spec.theta)


def run_sae(cfg: ExperimentConfig) -> Report:
    """Sum of absolute estimation errors per replication, by innovation law and sample size."""
    report = Report("sae")
    rows = []
    for label in cfg.dists:
        dist = InnovationDistribution.parse(label)
        for n in _grid(cfg, "sae"):
            outcome = run_replications(
                partial(_sae_task, cfg, dist, n), cfg.R, cfg.master_seed,
                f"sae/{dist.label}/n={n}", cfg.threads,
            )
            report.account(outcome)
            rows.extend([dist.label, n, r, v] for r, v in zip(outcome.indices, outcome.records))
    report.tables["sae"] = (["dist", "n", "rep", "sae"], rows)
    return report


# coverage ------------------------------------------------------------------


def _interval(res, index, level, method):
    if method == "basic":
        return basic_interval(res, index, level)
    return percentile_interval(res, index, level)


def _coverage_task(cfg, n, methods, ellipses, r, seed):
    path = _draw_path(cfg, cfg.innovations, n, seed)
    fit = _fit_or_raise(cfg, path)
    theta0 = cfg.spec.theta
    kappa0 = cfg.innovations.kurtosis()
    data_mode = cfg.kappa_mode == "data"
    # in data mode the limiting covariance is rescaled by the residual kurtosis
    ratio = (estimate_kurtosis(fit.residuals) - 1.0) / (kappa0 - 1.0) if data_mode else 1.0

    out = {"theta_hat": fit.theta, "intervals": {}, "ellipses": {}}
    hits = []
    for level, e in ellipses["empirical"]:
        if data_mode:
            inside = confidence_ellipse(fit.theta, ratio * e.shape, n, level).contains(theta0)
        else:
            inside = e.contains(fit.theta)
        hits.append((level, int(inside), 1))
    out["ellipses"]["empirical"] = hits

    for m in methods:
        if m == "wb":
            res = fit_weighted_bootstrap(
                path, WeightScheme(cfg.scheme), cfg.B, cfg.fit, derive_seed(seed, "wb"), base_fit=fit
            )
        else:
            res = residual_bootstrap(path, fit, cfg.B, cfg.fit, derive_seed(seed, "rb"))
        out["intervals"][m] = [
            coverage_record(_interval(res, i, cfg.ci_level, cfg.ci_method), theta0[i])
            for i in range(theta0.shape[0])
        ]
        hits = []
        for level, e in ellipses[m]:
            e_use = confidence_ellipse(theta0, ratio * e.shape, n, level) if data_mode else e
            inside = sum(e_use.contains(row) for row in res.replicates)
            hits.append((level, int(inside), res.replicates.shape[0]))
        out["ellipses"][m] = hits
    return out


def coverage_ellipses(cfg: ExperimentConfig, ref: np.ndarray, n: int, methods) -> dict:
    """Confidence sets around the truth that estimates (or pooled replicates) are checked against.

    Plain estimates use the limiting covariance; weighted-bootstrap
    replicates use it inflated by the scheme's factor, residual-bootstrap
    replicates by 2 (conditional spread plus sampling spread).
    """
    theta0 = cfg.spec.theta
    scale = {"empirical": 1.0, "wb": WeightScheme(cfg.scheme).gamma(), "rb": 2.0}
    return {
        m: [(lv, confidence_ellipse(theta0, scale[m] * ref, n, lv)) for lv in cfg.levels]
        for m in ("empirical", *methods)
    }


def run_coverage(cfg: ExperimentConfig) -> Report:
    """Interval coverage (Table-1 style) and ellipse coverage (Table-2 style)."""
    methods = _methods(cfg, "coverage")
    if methods and cfg.B < 20:
        raise ConfigError("coverage intervals need B >= 20")
    ref = reference_covariance(cfg)
    names = cfg.spec.names
    report = Report("coverage")
    irows, erows, est_rows = [], [], []
    for n in _grid(cfg, "coverage"):
        label = f"coverage/n={n}"
        ellipses = coverage_ellipses(cfg, ref, n, methods)
        outcome = run_replications(
            partial(_coverage_task, cfg, n, methods, ellipses),
            cfg.R, cfg.master_seed, label, cfg.threads,
        )
        report.account(outcome)
        for r, rec in zip(outcome.indices, outcome.records):
            est_rows.append([n, r, *rec["theta_hat"]])
        for m in methods:
            for i, name in enumerate(names):
                tally = CoverageTally()
                for rec in outcome.records:
                    tally.add(rec["intervals"][m][i])
                if tally.total == 0:
                    continue
                pb, pi, pa = tally.percentages()
                irows.append([n, m, name, cfg.ci_level, tally.below, tally.inside, tally.above,
                              tally.total, pb, pi, pa])
        for m in ("empirical", *methods):
            for k, level in enumerate(cfg.levels):
                inside = sum(rec["ellipses"][m][k][1] for rec in outcome.records)
                total = sum(rec["ellipses"][m][k][2] for rec in outcome.records)
                pct = 100.0 * inside / total if total else math.nan
                erows.append([n, m, level, inside, total, pct])
        report.extras.setdefault("ellipses", {})[n] = ellipses["empirical"]
    report.tables["coverage_intervals"] = (
        ["n", "method", "param", "level", "below", "inside", "above", "total",
         "pct_below", "pct_inside", "pct_above"],
        irows,
    )
    report.tables["coverage_ellipses"] = (["n", "method", "level", "inside", "total", "pct"], erows)
    report.tables["coverage_estimates"] = (["n", "rep", *names], est_rows)
    report.extras["reference"] = ref
    return report

