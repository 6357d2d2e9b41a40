"""foldylax: point-interaction scattering by clusters of small conductors.

Each small perfectly conducting body is replaced by a pair of coupled dipole
coefficients attached to its center; the pairs interact through free-space
kernels in a 6m x 6m linear system whose ingredients (body response tensors,
conditioning constants, error budgets) are computed by the submodules:

- `geometry`: bodies, meshes, cluster metrics (epsilon/delta), regime check
- `greens`: scalar/gradient/dipole kernels
- `layerops`: response tensors via the boundary-operator collocation scheme
- `foldy`: system assembly, direct and fixed-point solves, constants
- `fields`: far field, near field, error budgets
- `oracles`: independent references (Mie dipole, brute-force elimination)
- `cli`: command-line front end
"""

from .fields import (
    ErrorBudget,
    FarFieldSample,
    error_budget,
    far_field,
    near_field,
    varepsilon_kdm,
)
from .foldy import (
    FoldySolution,
    InvertibilityConstants,
    PlaneWave,
    SystemBlocks,
    assemble,
    incident_values,
    invertibility_constants,
    solve,
    solve_direct,
    solve_neumann,
)
from .geometry import (
    BodyShape,
    Cluster,
    SurfaceMesh,
    compute_epsilon_delta,
    icosphere,
    load_off,
    save_off,
    shell_count,
    validate_regime,
)
from .greens import dyadic_pi, grad_phi, phi
from .layerops import (
    BodyTensors,
    ClusterSpectra,
    analytic_sphere_tensors,
    assemble_adjoint_np,
    body_tensors,
    cluster_spectra,
    cluster_tensors,
    polarization_tensor,
    virtual_mass_tensor,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BodyShape",
    "BodyTensors",
    "Cluster",
    "ClusterSpectra",
    "ErrorBudget",
    "FarFieldSample",
    "FoldySolution",
    "InvertibilityConstants",
    "PlaneWave",
    "SurfaceMesh",
    "SystemBlocks",
    "analytic_sphere_tensors",
    "assemble",
    "assemble_adjoint_np",
    "body_tensors",
    "cluster_spectra",
    "cluster_tensors",
    "compute_epsilon_delta",
    "dyadic_pi",
    "error_budget",
    "far_field",
    "grad_phi",
    "icosphere",
    "incident_values",
    "invertibility_constants",
    "load_off",
    "near_field",
    "phi",
    "polarization_tensor",
    "save_off",
    "shell_count",
    "solve",
    "solve_direct",
    "solve_neumann",
    "validate_regime",
    "varepsilon_kdm",
    "virtual_mass_tensor",
]
