"""Command-line entry point: ``garchboot <subcommand> [options]``.

Exit codes: 0 success, 2 usage or validation error, 3 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
from pathlib import Path
import subprocess
import sys
import time

from garchboot import __version__
from garchboot.harness import experiments
from garchboot.harness.config import ConfigError, load_config
from garchboot.harness.csvio import read_series, write_csv
from garchboot.qmle import SampleTooShortError

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 2, 3

# flag -> configuration key
_FLAG_KEYS = {
    "seed": "master_seed",
    "threads": "threads",
    "out": "output_dir",
    "omega": "omega",
    "alpha": "alpha",
    "beta": "beta",
    "dist": "dist",
    "n": "n",
    "n_grid": "n_grid",
    "R": "R",
    "B": "B",
    "N": "N",
    "burn_in": "burn_in",
    "scheme": "scheme",
    "methods": "methods",
    "dists": "dists",
    "levels": "levels",
    "ci_level": "ci_level",
    "ci_method": "ci_method",
    "kappa_mode": "kappa_mode",
    "omega_grid": "omega_grid",
    "alpha_grid": "alpha_grid",
}


def version_string() -> str:
    try:
        desc = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=Path(__file__).parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
        if desc.returncode == 0 and desc.stdout.strip():
            return f"{__version__}+g{desc.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global")
    g.add_argument("--config", help="key=value configuration file (flags override it)")
    g.add_argument("--seed", help="master seed (unsigned 64-bit)")
    g.add_argument("--threads", help="worker processes for replications")
    g.add_argument("--out", help="output directory")
    g.add_argument("--no-plots", action="store_true", help="write CSV only")
    g.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any configuration key")
    m = p.add_argument_group("model and experiment")
    m.add_argument("--omega")
    m.add_argument("--alpha", help="comma-separated ARCH coefficients")
    m.add_argument("--beta", help="comma-separated GARCH coefficients")
    m.add_argument("--dist", help="gaussian, t5, t:3, ...")
    m.add_argument("--n", dest="n", help="sample size")
    m.add_argument("--n-grid", dest="n_grid", help="comma-separated sample sizes")
    m.add_argument("--R", dest="R", help="Monte-Carlo samples")
    m.add_argument("--B", dest="B", help="bootstrap replications")
    m.add_argument("--N", dest="N", help="simulation length for the information matrix")
    m.add_argument("--burn-in", dest="burn_in")
    m.add_argument("--scheme", help="multinomial, exp or gamma")
    m.add_argument("--methods", help="comma-separated: qmle, wb, rb")
    m.add_argument("--dists", help="comma-separated innovation laws for sae")
    m.add_argument("--levels", help="comma-separated ellipse levels")
    m.add_argument("--ci-level", dest="ci_level")
    m.add_argument("--ci-method", dest="ci_method", help="percentile or basic")
    m.add_argument("--kappa-mode", dest="kappa_mode", help="oracle or data")
    m.add_argument("--omega-grid", dest="omega_grid")
    m.add_argument("--alpha-grid", dest="alpha_grid")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="garchboot",
        description="GARCH simulation, QMLE and bootstrap Monte-Carlo experiments.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common()
    sub.add_parser("simulate", parents=[common], help="simulate a path (t,x,h)")
    fit = sub.add_parser("fit", parents=[common], help="QMLE fit of a series file or a simulated path")
    fit.add_argument("input", nargs="?", help="one observation per line; '#' starts a comment")
    sub.add_parser("contour", parents=[common], help="limiting covariance over an (omega0, alpha0) grid")
    sub.add_parser("convergence", parents=[common], help="n*cov / limit ratios versus n")
    sub.add_parser("sae", parents=[common], help="sum of absolute errors per replication")
    sub.add_parser("coverage", parents=[common], help="interval and ellipse coverage tables")
    return parser


def _overrides(args: argparse.Namespace) -> dict[str, str]:
    out = {}
    for flag, key in _FLAG_KEYS.items():
        value = getattr(args, flag, None)
        if value is not None:
            out[key] = value
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    if args.no_plots:
        out["plots"] = "false"
    return out


def run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, _overrides(args))
    start = time.perf_counter()
    if args.command == "fit":
        values = None
        if args.input is not None:
            try:
                values = read_series(args.input)
            except OSError as err:
                print(f"error: cannot read {args.input}: {err}", file=sys.stderr)
                return EXIT_DATA
            except ValueError as err:
                print(f"error: parse error in {args.input}: {err}", file=sys.stderr)
                return EXIT_DATA
        report = experiments.run_fit(cfg, values)
    else:
        report = getattr(experiments, f"run_{args.command}")(cfg)
    wall = time.perf_counter() - start

    out = Path(cfg.output_dir)
    written = []
    for name, (header, rows) in report.tables.items():
        written.append(write_csv(out / f"{name}.csv", header, rows))
    meta = {
        "command": report.command,
        "version": version_string(),
        "wall_time_s": round(wall, 3),
        "config": cfg.echo(),
        "replications": report.replications,
    }
    meta_path = out / f"{report.command}_meta.json"
    meta_path.write_text(json.dumps(meta, indent=2, default=str) + "\n")
    written.append(meta_path)
    if cfg.plots:
        from garchboot.harness.plotting import render

        written.extend(render(report, out))
    if report.summary:
        print(report.summary)
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return run(args)
    except SampleTooShortError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
