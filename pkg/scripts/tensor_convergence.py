#!/usr/bin/env python3
"""Convergence study: sphere response tensors vs panel count.

Computes the electric- and magnetic-type response tensors of the unit sphere
on progressively refined meshes and reports the relative error against the
closed-form values (-4 pi I, +2 pi I) together with wall-clock timings.

    python3 scripts/tensor_convergence.py --max-level 4
"""

import argparse
import math
import time

import numpy as np

from foldylax import geometry, layerops

P_EXACT = -4 * math.pi * np.eye(3)
T_EXACT = 2 * math.pi * np.eye(3)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--max-level", type=int, default=4,
                        help="finest icosphere subdivision level (default 4 = 5120 panels)")
    args = parser.parse_args()

    print(f"{'panels':>7} {'assemble[s]':>12} {'solve[s]':>9} "
          f"{'err(-P)':>10} {'err(T)':>10} {'order(-P)':>10}")
    prev_err = None
    for level in range(1, args.max_level + 1):
        mesh = geometry.icosphere(level)
        t0 = time.perf_counter()
        kstar = layerops.assemble_adjoint_np(mesh)
        t_asm = time.perf_counter() - t0
        t0 = time.perf_counter()
        p = layerops.polarization_tensor(mesh, kstar)
        t = layerops.virtual_mass_tensor(mesh, kstar)
        t_slv = time.perf_counter() - t0
        err_p = np.linalg.norm(p - P_EXACT) / np.linalg.norm(P_EXACT)
        err_t = np.linalg.norm(t - T_EXACT) / np.linalg.norm(T_EXACT)
        order = math.log2(prev_err / err_p) / 2 if prev_err else float("nan")
        print(f"{mesh.n_panels:>7d} {t_asm:>12.2f} {t_slv:>9.2f} "
              f"{err_p:>10.3e} {err_t:>10.3e} {order:>10.2f}")
        prev_err = err_p


if __name__ == "__main__":
    main()
