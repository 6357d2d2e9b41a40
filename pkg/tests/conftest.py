import os

# Single-threaded BLAS: deterministic reductions and honest single-core timings.
for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import numpy as np
import pytest

from foldylax import foldy, geometry, layerops


@pytest.fixture(scope="session")
def sphere_mesh_320():
    return geometry.icosphere(2)


@pytest.fixture(scope="session")
def sphere_mesh_1280():
    return geometry.icosphere(3)


@pytest.fixture(scope="session")
def kstar_320(sphere_mesh_320):
    return layerops.assemble_adjoint_np(sphere_mesh_320)


@pytest.fixture(scope="session")
def kstar_1280(sphere_mesh_1280):
    return layerops.assemble_adjoint_np(sphere_mesh_1280)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)


def sphere_cluster(centers, radius, domain_diameter=None):
    bodies = [geometry.BodyShape.sphere(radius, c) for c in np.atleast_2d(centers)]
    return geometry.Cluster.from_bodies(bodies, domain_diameter=domain_diameter)


def sphere_tensors(m, radius):
    return [layerops.analytic_sphere_tensors(radius) for _ in range(m)]


def solved_sphere_system(centers, radius, wave, method="direct", **kwargs):
    cluster = sphere_cluster(centers, radius)
    tensors = sphere_tensors(cluster.m, radius)
    blocks, rhs = foldy.assemble(cluster, tensors, wave)
    solution = foldy.solve(blocks, rhs, method=method, **kwargs)
    return cluster, tensors, blocks, rhs, solution


@pytest.fixture()
def default_wave():
    return foldy.PlaneWave(k=1.0, theta=(0.0, 0.0, 1.0), p=(1.0, 0.0, 0.0))
