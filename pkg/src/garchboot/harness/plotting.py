"""Figures written next to the CSV output of each subcommand."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from garchboot.harness.experiments import Report  # noqa: E402

plt.rcParams.update(
    {
        "figure.dpi": 100,
        "savefig.dpi": 120,
        "axes.grid": True,
        "grid.alpha": 0.3,
        "font.size": 10,
        "legend.frameon": False,
        "svg.hashsalt": "garchboot",
    }
)


def _save(fig, out: Path, name: str) -> Path:
    path = out / f"{name}.png"
    fig.savefig(path, bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)
    return path


def plot_simulate(report: Report, out: Path) -> list[Path]:
    path = report.extras["path"]
    t = np.arange(1, path.n + 1)
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(8, 5), sharex=True)
    ax1.plot(t, path.values, lw=0.5, color="k")
    ax1.set_ylabel("x")
    ax2.plot(t, np.sqrt(path.true_variances), lw=0.8, color="C3")
    ax2.set_ylabel("conditional sd")
    ax2.set_xlabel("t")
    return [_save(fig, out, "simulate")]


def plot_fit(report: Report, out: Path) -> list[Path]:
    path, fit = report.extras["path"], report.extras["fit"]
    t = np.arange(1, path.n + 1)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 3.8), gridspec_kw={"width_ratios": [2, 1]})
    ax1.plot(t, np.abs(path.values), lw=0.4, color="0.6", label="|x|")
    ax1.plot(t, np.sqrt(fit.sigma2), lw=0.9, color="C0", label="fitted sd")
    ax1.set_xlabel("t")
    ax1.legend()
    ax2.hist(fit.residuals, bins=50, density=True, color="C0", alpha=0.6)
    z = np.linspace(-5, 5, 400)
    ax2.plot(z, np.exp(-z * z / 2) / np.sqrt(2 * np.pi), color="k", lw=0.8)
    ax2.set_xlabel("residual")
    return [_save(fig, out, "fit")]


def plot_contour(report: Report, out: Path) -> list[Path]:
    header, rows = report.tables["contour"]
    if not rows:
        return []
    arr = np.array([r[:5] for r in rows], dtype=float)
    ws, als = np.unique(arr[:, 0]), np.unique(arr[:, 1])
    titles = ("var(omega)", "cov(omega, alpha)", "var(alpha)")
    if ws.size < 2 or als.size < 2 or arr.shape[0] != ws.size * als.size:
        # a single row or column of the grid: plot each element along the varying axis
        k = 0 if ws.size >= als.size else 1
        order = np.argsort(arr[:, k])
        fig, axes = plt.subplots(1, 3, figsize=(13, 4))
        for ax, col, title in zip(axes, (2, 3, 4), titles):
            ax.plot(arr[order, k], arr[order, col], "o-", color="C0")
            ax.set_title(title)
            ax.set_xlabel(("omega0", "alpha0")[k])
        return [_save(fig, out, "contour")]
    fig, axes = plt.subplots(1, 3, figsize=(13, 4))
    for ax, col, title in zip(axes, (2, 3, 4), titles):
        Z = np.full((als.size, ws.size), np.nan)
        for row in arr:
            Z[np.searchsorted(als, row[1]), np.searchsorted(ws, row[0])] = row[col]
        cs = ax.contour(ws, als, Z, levels=8, colors="k", linewidths=0.8)
        ax.clabel(cs, fontsize=7)
        ax.set_title(title)
        ax.set_xlabel("omega0")
        ax.set_ylabel("alpha0")
    return [_save(fig, out, "contour")]


def plot_convergence(report: Report, out: Path) -> list[Path]:
    _, rows = report.tables["convergence"]
    if not rows:
        return []
    methods = sorted({r[1] for r in rows})
    elems = list(dict.fromkeys(r[2] for r in rows))
    fig, axes = plt.subplots(1, len(methods), figsize=(4.5 * len(methods), 3.8), squeeze=False)
    for ax, m in zip(axes[0], methods):
        for k, e in enumerate(elems):
            pts = sorted((r[0], r[3]) for r in rows if r[1] == m and r[2] == e)
            ax.plot(*zip(*pts), marker="o", ms=3, label=e, color=f"C{k}")
        target = 1.0 if m == "qmle" else 2.0
        ax.axhline(target, color="k", ls="--", lw=0.8)
        ax.set_xscale("log")
        ax.set_title(m)
        ax.set_xlabel("n")
        ax.set_ylabel("n cov / limit")
        ax.legend(fontsize=8)
    return [_save(fig, out, "convergence")]


def plot_sae(report: Report, out: Path) -> list[Path]:
    _, rows = report.tables["sae"]
    if not rows:
        return []
    ns = sorted({r[1] for r in rows})
    dists = list(dict.fromkeys(r[0] for r in rows))
    fig, axes = plt.subplots(1, len(ns), figsize=(4 * len(ns), 3.8), squeeze=False, sharey=True)
    for ax, n in zip(axes[0], ns):
        data = [[r[3] for r in rows if r[0] == d and r[1] == n] for d in dists]
        ax.boxplot(data, showfliers=False)
        ax.set_xticks(range(1, len(dists) + 1), dists)
        ax.set_title(f"n={n}")
    axes[0][0].set_ylabel("SAE")
    return [_save(fig, out, "sae")]


def _ellipse_outline(e, m: int = 200) -> np.ndarray:
    # boundary of {c + s : n s^T S^{-1} s <= thr} in the first two coordinates
    L = np.linalg.cholesky(e.shape[:2, :2])
    ang = np.linspace(0, 2 * np.pi, m)
    circle = np.vstack((np.cos(ang), np.sin(ang))) * np.sqrt(e.threshold / e.n)
    return (e.center[:2, None] + L @ circle).T


def plot_coverage(report: Report, out: Path) -> list[Path]:
    header, rows = report.tables["coverage_estimates"]
    ellipses = report.extras.get("ellipses", {})
    if not rows or len(header) < 4:
        return []
    ns = sorted(ellipses)
    fig, axes = plt.subplots(1, len(ns), figsize=(4.2 * len(ns), 4), squeeze=False)
    for ax, n in zip(axes[0], ns):
        pts = np.array([r[2:4] for r in rows if r[0] == n], dtype=float)
        ax.scatter(pts[:, 0], pts[:, 1], s=3, color="0.4")
        for k, (level, e) in enumerate(ellipses[n]):
            outline = _ellipse_outline(e)
            ax.plot(outline[:, 0], outline[:, 1], color=f"C{k + 3}", lw=1.2, label=f"{level:.0%}")
        ax.set_title(f"n={n}")
        ax.set_xlabel(header[2])
        ax.set_ylabel(header[3])
        ax.legend(fontsize=8)
    return [_save(fig, out, "coverage")]


PLOTTERS = {
    "simulate": plot_simulate,
    "fit": plot_fit,
    "contour": plot_contour,
    "convergence": plot_convergence,
    "sae": plot_sae,
    "coverage": plot_coverage,
}


def render(report: Report, out: str | Path) -> list[Path]:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    return PLOTTERS[report.command](report, out)
