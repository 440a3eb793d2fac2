# isokernel/cli.py
"""
Command-line surface: python -m isokernel <command> ...

stdout carries only CSV/JSON; logs go to stderr. Exit codes: 0 ok, 2 parse/domain,
3 integrability, 4 divergence, 5 statistical failure, 6 testbed failure, 1 anything else.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import asdict, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from rich.console import Console
from rich.logging import RichHandler
from scipy.interpolate import CubicSpline

from .asymptotics import AsymptoticSpec
from .errors import DivergenceError, DomainError, IsoKernelError, StatisticalFailure, TestbedFailure
from .gelfand_testbed import run_trials
from .kernel import build_series, funk_hecke_spectrum, kernel_eval, trace, volume_normalized
from .model_file import ModelFile, load_model_file
from .settings import Settings, load_settings
from .simulate import RngStream, estimate_return_density, moment_checks
from .special_fn import SphereGeometry, integrate_alpha, quadrature
from .spectrum import build_table

logger = logging.getLogger(__name__)

CSV_FLOAT = ".15g"


# ---------- output helpers ----------

def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), CSV_FLOAT)


def write_csv(header: Sequence[str], rows: Iterable[Sequence], out: io.TextIOBase,
              comments: Iterable[str] = ()):
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    for line in comments:
        out.write(f"# {line}\n")


class _Output:
    """stdout, or a file when --out is given."""

    def __init__(self, path: str | None):
        self.path = path
        self.handle = None

    def __enter__(self) -> io.TextIOBase:
        if self.path:
            self.handle = open(self.path, "w", encoding="utf-8", newline="")
            return self.handle
        return sys.stdout

    def __exit__(self, *exc):
        if self.handle:
            self.handle.close()
            logger.info(f"wrote {self.path}")


def configure_logging(level: str):
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def _settings_for(args: argparse.Namespace, mf: ModelFile | None) -> Settings:
    settings = load_settings(args.config)
    if mf is not None:
        settings = mf.settings(settings)
    settings = settings.with_numerics(
        eps=getattr(args, "eps", None),
        quadrature_order=getattr(args, "quadrature_order", None),
        theta_grid=getattr(args, "theta_grid", None),
    )
    workers = getattr(args, "workers", None)
    if workers is not None:
        settings = replace(settings, simulation=replace(settings.simulation, workers=workers))
    return settings


# ---------- commands ----------

def cmd_spectrum(args: argparse.Namespace) -> int:
    mf = load_model_file(args.model)
    table = build_table(mf.model, args.n_max)
    coeffs = table.coefficients(args.t, mf.psi)
    rows = ((n, dn, k, c, a) for (n, dn, k, c), a in zip(table.entries, coeffs))
    with _Output(args.out) as out:
        write_csv(("n", "d_n", "kappa_n", "chi_n", "coeff"), rows, out)
    return 0


def cmd_kernel(args: argparse.Namespace) -> int:
    mf = load_model_file(args.model)
    settings = _settings_for(args, mf)
    geom = mf.model.geom
    series = build_series(mf.model, mf.psi, args.t, numerics=settings.numerics)
    theta = np.linspace(0.0, math.pi, args.angles)
    cos_theta = np.cos(theta)
    dens = np.asarray(kernel_eval(series, cos_theta))
    rule = quadrature(geom, settings.numerics.quadrature_order)
    mass = float(integrate_alpha(rule, geom, kernel_eval(series, rule.nodes)))
    if args.volume_normalized:
        dens = volume_normalized(dens, geom)
    tail = "uncertified" if series.tail_bound is None else format(series.tail_bound, ".3g")
    with _Output(args.out) as out:
        write_csv(("theta", "cos_theta", "density"), zip(theta, cos_theta, dens), out,
                  comments=[f"mass={mass:.12g} n_max={series.n_max} tail_bound={tail}"])
    if abs(mass - 1.0) > 1e-8:
        logger.warning(f"kernel mass {mass:.12g} differs from 1 by more than 1e-8")
    return 0


def cmd_trace(args: argparse.Namespace) -> int:
    mf = load_model_file(args.model)
    settings = _settings_for(args, mf)
    model, psi = mf.model, mf.psi
    spec = None
    if model.is_pure_heat() and (psi is None or psi.index is not None):
        spec = AsymptoticSpec.for_subordinator(model.geom, psi)
    rows = []
    for t in args.t:
        report = trace(model, psi, t, numerics=settings.numerics)
        asym = spec.predict(t, model.a) if spec else math.nan
        rows.append((t, report.trace, report.trace_K, report.diagonal, asym, report.diagonal / asym))
    with _Output(args.out) as out:
        write_csv(("t", "trace", "trace_K", "diagonal", "asym", "ratio"), rows, out)
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    mf = load_model_file(args.model)
    settings = _settings_for(args, mf)
    seed = args.seed if args.seed is not None else (settings.seed if settings.seed is not None else 0)
    workers = settings.simulation.workers
    if args.samples < 1000:
        raise DomainError(f"--samples must be >= 1000, got {args.samples}")
    estimate = estimate_return_density(mf.model, mf.psi, args.t, args.samples, args.bins,
                                       RngStream(seed), workers, settings.numerics, settings.simulation)
    logger.info(f"simulated {args.samples} replicas with seed {seed} on {workers} worker(s)")
    moments = moment_checks(estimate.angles, mf.model, mf.psi, args.t)
    passed = bool(estimate.passed and all(m.passed for m in moments))
    hist = estimate.histogram
    with _Output(args.out) as out:
        write_csv(("theta_lo", "theta_hi", "count"),
                  zip(hist.edges[:-1], hist.edges[1:], hist.counts), out)
    summary = {
        "model_hash": mf.model_hash,
        "t": args.t,
        "samples": args.samples,
        "seed": seed,
        "ks": estimate.ks,
        "ks_band": estimate.ks_band,
        "moments": [asdict(m) for m in moments],
        "pass": passed,
    }
    text = json.dumps(summary, indent=2, sort_keys=True)
    if args.summary:
        Path(args.summary).write_text(text + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text + "\n")
    if not passed:
        raise StatisticalFailure(f"simulation disagrees with the series law (KS {estimate.ks:.5f}, "
                                 f"band {estimate.ks_band:.5f})")
    return 0


def cmd_testbed(args: argparse.Namespace) -> int:
    settings = _settings_for(args, None)
    seed = args.seed if args.seed is not None else (settings.seed or 0)
    report = run_trials(args.m, args.trials, seed, settings.testbed)
    sys.stdout.write(json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n")
    if not report.passed:
        raise TestbedFailure(f"D_{args.m}: {report.first_failure}")
    return 0


def read_kernel_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """(cos_theta, value) columns; '#' lines skipped; 'density' is accepted for 'value'."""
    try:
        lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines()
                 if ln.strip() and not ln.startswith("#")]
    except FileNotFoundError as exc:
        raise DomainError(f"{path}: file not found") from exc
    reader = csv.DictReader(lines)
    header = reader.fieldnames or []
    value_col = "value" if "value" in header else "density" if "density" in header else None
    if "cos_theta" not in header or value_col is None:
        raise DomainError(f"{path}: expected columns cos_theta and value, got {header}")
    try:
        pairs = [(float(r["cos_theta"]), float(r[value_col])) for r in reader]
    except (TypeError, ValueError) as exc:
        raise DomainError(f"{path}: malformed row ({exc})") from exc
    if len(pairs) < 4:
        raise DomainError(f"{path}: need at least 4 samples, got {len(pairs)}")
    s, v = np.array(pairs).T
    s, idx = np.unique(s, return_index=True)
    if np.any(np.abs(s) > 1.0 + 1e-12):
        raise DomainError(f"{path}: cos_theta outside [-1, 1]")
    return s, v[idx]


def cmd_funk_hecke(args: argparse.Namespace) -> int:
    settings = _settings_for(args, None)
    s, v = read_kernel_csv(args.csv)
    spline = CubicSpline(s, v)
    geom = SphereGeometry(args.dimension)
    lam = funk_hecke_spectrum(spline, args.n_max, geom, settings.numerics.quadrature_order)
    with _Output(args.out) as out:
        write_csv(("n", "lambda_n"), enumerate(lam), out)
    return 0


# ---------- parser ----------

def _model_parser(sub, name: str, help_text: str) -> argparse.ArgumentParser:
    p = sub.add_parser(name, help=help_text)
    p.add_argument("model", help="model JSON file")
    p.add_argument("--eps", type=float, help="truncation tolerance")
    p.add_argument("--quadrature-order", type=int, help="Gauss nodes for zonal integrals")
    p.add_argument("--theta-grid", type=int, help="colatitude grid for CDFs")
    return p


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="isokernel",
                                 description="Heat kernels and Levy processes on spheres.")
    ap.add_argument("--config", help="settings YAML (default config/app.yaml)")
    ap.add_argument("--log-level", help="DEBUG, INFO, WARNING, ...")
    ap.add_argument("--out", help="write CSV here instead of stdout")
    sub = ap.add_subparsers(dest="command", required=True)

    p = _model_parser(sub, "spectrum", "n, d_n, kappa_n, chi_n and series coefficients")
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--t", type=float, default=1.0)
    p.set_defaults(func=cmd_spectrum)

    p = _model_parser(sub, "kernel", "transition density on an angle grid")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--angles", type=int, default=1001)
    p.add_argument("--volume-normalized", action="store_true",
                   help="density against Riemannian volume instead of the normalized measure")
    p.set_defaults(func=cmd_kernel)

    p = _model_parser(sub, "trace", "traces, diagonal and short-time asymptotics")
    p.add_argument("--t", type=float, nargs="+", required=True)
    p.set_defaults(func=cmd_trace)

    p = _model_parser(sub, "simulate", "Monte-Carlo endpoints against the series law")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--bins", type=int, default=64)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--summary", help="write the JSON summary here instead of stdout")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("testbed", help="exact Fourier checks on dihedral Gelfand pairs")
    p.add_argument("--m", type=int, default=6)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_testbed)

    p = sub.add_parser("funk-hecke", help="Funk-Hecke eigenvalues of a sampled zonal kernel")
    p.add_argument("csv", help="CSV with cos_theta and value (or density) columns")
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--dimension", type=int, required=True)
    p.add_argument("--quadrature-order", type=int)
    p.set_defaults(func=cmd_funk_hecke)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        configure_logging(args.log_level or load_settings(args.config).log_level)
        return args.func(args)
    except DivergenceError as exc:
        logger.error(f"{exc}")
        if exc.verdict is not None:
            sys.stderr.write(f"verdict: {exc.verdict}\n")
        return exc.exit_code
    except IsoKernelError as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        return exc.exit_code
    except Exception as exc:
        logger.exception(f"unexpected error: {exc}")
        return 1
