#!/usr/bin/env python3
"""End-to-end experiment: plane wave on a cubic lattice of small spheres.

Builds an n^3 lattice, solves the interaction system twice (dense
factorization and fixed-point iteration), writes the far-field pattern CSV
and the error-budget JSON, and prints a comparison summary.

    python3 scripts/lattice_farfield.py --n 3 --radius 0.02 --spacing 0.4 \
        --k 0.8 --outdir /tmp/lattice
"""

import argparse
import pathlib

import numpy as np

from foldylax import cli, fields, foldy, geometry, layerops


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=3, help="lattice points per axis")
    parser.add_argument("--radius", type=float, default=0.02)
    parser.add_argument("--spacing", type=float, default=0.4)
    parser.add_argument("--k", type=float, default=0.8)
    parser.add_argument("--directions", type=int, default=128)
    parser.add_argument("--outdir", default="lattice_out")
    args = parser.parse_args()

    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    centers = [
        (x * args.spacing, y * args.spacing, z * args.spacing)
        for x in range(args.n) for y in range(args.n) for z in range(args.n)
    ]
    cluster = geometry.Cluster.from_bodies(
        [geometry.BodyShape.sphere(args.radius, c) for c in centers]
    )
    tensors = [layerops.analytic_sphere_tensors(args.radius) for _ in centers]
    spectra = layerops.cluster_spectra(tensors, cluster.epsilon)
    wave = foldy.PlaneWave(k=args.k, theta=(0, 0, 1), p=(1, 0, 0))

    blocks, rhs = foldy.assemble(cluster, tensors, wave)
    direct = foldy.solve_direct(blocks, rhs)
    iterative = foldy.solve_neumann(blocks, rhs, tol=1e-13)
    dev = (np.linalg.norm(direct.a_coeffs - iterative.a_coeffs)
           + np.linalg.norm(direct.b_coeffs - iterative.b_coeffs)) / (
        np.linalg.norm(direct.a_coeffs) + np.linalg.norm(direct.b_coeffs))

    constants = foldy.invertibility_constants(cluster, spectra, wave.k)
    regime = geometry.validate_regime(cluster, wave.k, spectra.mu_plus)
    budget = fields.error_budget(cluster, spectra, wave.k, constants)

    golden = np.pi * (3.0 - np.sqrt(5.0))
    idx = np.arange(args.directions, dtype=float)
    zc = 1.0 - 2.0 * (idx + 0.5) / args.directions
    rho = np.sqrt(1.0 - zc * zc)
    taus = np.stack([rho * np.cos(golden * idx), rho * np.sin(golden * idx), zc], axis=1)
    samples = fields.far_field(direct, cluster, wave, taus)

    ff_path = outdir / "farfield.csv"
    ff_path.write_text(cli._csv_field_rows(
        ["tau_x", "tau_y", "tau_z"], [s.tau for s in samples], [s.e_inf for s in samples]
    ))
    budget_path = outdir / "budget.json"
    budget_path.write_text(cli.dumps_json({
        "constants": constants.as_dict(),
        "regime_report": regime.as_dict(),
        "budget": budget.as_dict(),
    }))

    forward = fields.far_field(direct, cluster, wave, [wave.theta])[0].e_inf
    back = fields.far_field(direct, cluster, wave, [-wave.theta])[0].e_inf
    print(f"m = {cluster.m}, eps = {cluster.epsilon:g}, delta = {cluster.delta:g}, "
          f"eps/delta = {cluster.epsilon / cluster.delta:.3f}")
    print(f"regime value = {regime.value:.3e} (threshold {regime.threshold:g}); "
          f"c_li = {constants.c_li:.4f}, c_li2 = {constants.c_li2:.4f}")
    print(f"direct residual = {direct.residual_norm:.2e}; iterative residual = "
          f"{iterative.residual_norm:.2e} in {iterative.iterations} iterations; "
          f"relative deviation = {dev:.2e}")
    print(f"|E_inf| forward = {np.linalg.norm(forward):.4e}, back = {np.linalg.norm(back):.4e}")
    print(f"wrote {ff_path} and {budget_path}")


if __name__ == "__main__":
    main()
