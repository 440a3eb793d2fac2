#!/usr/bin/env python3
"""
Batch job: tabulate spectrum and kernel CSVs for every shipped model.

    tables/<model>/spectrum.csv   n, d_n, kappa_n, chi_n, coeff
    tables/<model>/kernel.csv     theta, cos_theta, density
    tables/<model>/manifest.json  build parameters and truncation certificate

Models whose kernel series diverges get a spectrum table and a manifest recording the verdict.
"""
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT))

from isokernel.cli import write_csv  # noqa: E402
from isokernel.errors import DivergenceError, IsoKernelError  # noqa: E402
from isokernel.kernel import build_series, kernel_eval  # noqa: E402
from isokernel.model_file import load_model_file  # noqa: E402
from isokernel.settings import load_settings  # noqa: E402
from isokernel.special_fn import integrate_alpha, quadrature  # noqa: E402
from isokernel.spectrum import build_table  # noqa: E402

logging.basicConfig(level=logging.INFO, format="%(asctime)s [%(levelname)s] %(message)s")

# Parameters (override via environment)
TABLE_T = float(os.getenv("TABLE_T", "0.5"))            # time at which coefficients/kernels are tabulated
TABLE_N_MAX = int(os.getenv("TABLE_N_MAX", "32"))       # rows in spectrum.csv
TABLE_ANGLES = int(os.getenv("TABLE_ANGLES", "181"))    # rows in kernel.csv


def build_model(path: Path, out_dir: Path, settings) -> dict:
    mf = load_model_file(path)
    settings = mf.settings(settings)
    numerics = settings.numerics
    out_dir.mkdir(parents=True, exist_ok=True)

    table = build_table(mf.model, TABLE_N_MAX)
    coeffs = table.coefficients(TABLE_T, mf.psi)
    with open(out_dir / "spectrum.csv", "w", encoding="utf-8", newline="") as f:
        rows = ((n, dn, k, c, a) for (n, dn, k, c), a in zip(table.entries, coeffs))
        write_csv(("n", "d_n", "kappa_n", "chi_n", "coeff"), rows, f)

    manifest = {
        "model": path.name,
        "model_hash": mf.model_hash,
        "t": TABLE_T,
        "n_max": TABLE_N_MAX,
        "eps": numerics.eps,
        "quadrature_order": numerics.quadrature_order,
    }
    try:
        series = build_series(mf.model, mf.psi, TABLE_T, numerics=numerics)
    except DivergenceError as e:
        logging.warning(f"{path.stem}: no kernel table ({e})")
        manifest.update(truncation_level=None, tail_bound=None, certified=False,
                        verdict=str(e.verdict) if e.verdict is not None else None)
        return manifest

    theta = np.linspace(0.0, math.pi, TABLE_ANGLES)
    with open(out_dir / "kernel.csv", "w", encoding="utf-8", newline="") as f:
        write_csv(("theta", "cos_theta", "density"),
                  zip(theta, np.cos(theta), kernel_eval(series, np.cos(theta))), f)
    rule = quadrature(mf.model.geom, numerics.quadrature_order)
    mass = float(integrate_alpha(rule, mf.model.geom, kernel_eval(series, rule.nodes)))
    manifest.update(truncation_level=series.n_max, tail_bound=series.tail_bound,
                    certified=series.certified, mass=mass)
    return manifest


def main():
    settings = load_settings()
    models_dir, tables_dir = settings.models_dir, settings.tables_dir
    logging.info(f"Scanning model files in directory: {models_dir}")
    if not models_dir.is_dir():
        logging.error(f"Model directory not found: {models_dir}")
        return 1
    files = sorted(models_dir.glob("*.json"))
    if not files:
        logging.error("No model files found.")
        return 1

    failures = 0
    for path in files:
        out_dir = tables_dir / path.stem
        try:
            manifest = build_model(path, out_dir, settings)
        except IsoKernelError as e:
            logging.error(f"Failed to tabulate {path.name}: {e}")
            failures += 1
            continue
        with open(out_dir / "manifest.json", "w", encoding="utf-8") as mf:
            json.dump(manifest, mf, indent=2, sort_keys=True)
        logging.info(f"Processed {path.name}: N={manifest['truncation_level']}, "
                     f"certified={manifest['certified']}")

    logging.info(f"Table build complete. Files generated in {tables_dir}")
    return 1 if failures else 0


if __name__ == "__main__":
    exit_code = main()
    sys.exit(exit_code)
