"""Free-space frequency-domain kernels.

Scalar outgoing Green function ``e^{ik r} / (4 pi r)``, its gradient in the
first argument, and the rank-2 kernel ``k^2 Phi I + grad_x grad_x Phi`` that
couples dipole moments to vector fields.  All kernels are pure functions of
value inputs and broadcast over leading axes; the wavenumber may be complex
with nonnegative imaginary part.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "CoincidentPoints",
    "DEFAULT_COINCIDENCE_FLOOR",
    "check_wavenumber",
    "phi",
    "grad_phi",
    "dyadic_pi",
    "coupling_kernels",
]

# Separations below this are treated as coincident source/target points.
DEFAULT_COINCIDENCE_FLOOR = 1e-14


class CoincidentPoints(ValueError):
    """Kernel evaluated at (numerically) identical source and target."""


def check_wavenumber(k) -> complex:
    """Validate a wavenumber: finite complex scalar with Im k >= 0."""
    k = complex(k)
    if not (np.isfinite(k.real) and np.isfinite(k.imag)):
        raise ValueError(f"wavenumber must be finite, got {k}")
    if k.imag < 0.0:
        raise ValueError(f"wavenumber must have Im k >= 0, got {k}")
    return k


def _separation(x, y, floor):
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    if d.shape[-1] != 3:
        raise ValueError("points must have trailing dimension 3")
    r = np.sqrt(np.einsum("...i,...i->...", d, d))
    if np.any(r < floor):
        raise CoincidentPoints(f"|x - y| below coincidence floor {floor:g}")
    return d, r


def phi(k, x, y, floor: float = DEFAULT_COINCIDENCE_FLOOR):
    """Outgoing scalar kernel exp(ik|x-y|) / (4 pi |x-y|)."""
    k = check_wavenumber(k)
    _, r = _separation(x, y, floor)
    return np.exp(1j * k * r) / (4.0 * np.pi * r)


def grad_phi(k, x, y, floor: float = DEFAULT_COINCIDENCE_FLOOR):
    """Gradient of `phi` in its first argument; grad_y phi = -grad_x phi."""
    k = check_wavenumber(k)
    d, r = _separation(x, y, floor)
    single = d.ndim == 1
    if single:
        d, r = d[None, :], np.reshape(r, (1,))
    ph = np.exp(1j * k * r) / (4.0 * np.pi * r)
    radial = ph * (1j * k - 1.0 / r) / r
    out = radial[..., None] * d
    return out[0] if single else out


def dyadic_pi(k, x, y, floor: float = DEFAULT_COINCIDENCE_FLOOR):
    """Dipole-to-field matrix kernel k^2 phi I + grad_x grad_x phi.

    Closed form in the unit separation direction rhat:

        phi(r) * [ (k^2 + ik/r - 1/r^2) I + (-k^2 - 3ik/r + 3/r^2) rhat rhat^T ]

    Symmetric 3x3 for every argument pair, symmetric in x <-> y.
    """
    k = check_wavenumber(k)
    d, r = _separation(x, y, floor)
    single = d.ndim == 1
    if single:
        d, r = d[None, :], np.reshape(r, (1,))
    out = _pi_from_displacement(k, d, r)
    return out[0] if single else out


def _pi_from_displacement(k, d, r):
    ph = np.exp(1j * k * r) / (4.0 * np.pi * r)
    c_iso = k * k + 1j * k / r - 1.0 / r**2
    c_rad = -k * k - 3j * k / r + 3.0 / r**2
    rhat = d / r[..., None]
    outer = rhat[..., :, None] * rhat[..., None, :]
    eye = np.eye(3)
    return ph[..., None, None] * (c_iso[..., None, None] * eye + c_rad[..., None, None] * outer)


def coupling_kernels(k, displacements, self_mask=None):
    """Gradient and dipole kernels from raw displacement vectors.

    Assembly helper: `displacements` has shape (..., 3); entries selected by
    the boolean `self_mask` (broadcast over the leading axes) are returned as
    zeros instead of raising, so pairwise blocks can be built with the
    diagonal excluded.  Returns ``(grad, pi)`` with shapes (..., 3) and
    (..., 3, 3).
    """
    k = check_wavenumber(k)
    d = np.asarray(displacements, dtype=float)
    r = np.sqrt(np.einsum("...i,...i->...", d, d))
    if self_mask is None:
        if np.any(r == 0.0):
            raise CoincidentPoints("zero displacement without a self mask")
        safe_r = r
    else:
        safe_r = np.where(self_mask, 1.0, r)
        if np.any((safe_r == 0.0) & ~self_mask):
            raise CoincidentPoints("zero displacement outside the self mask")
    ph = np.exp(1j * k * safe_r) / (4.0 * np.pi * safe_r)
    grad = (ph * (1j * k - 1.0 / safe_r) / safe_r)[..., None] * d
    pi = _pi_from_displacement(k, d, safe_r)
    if self_mask is not None:
        grad = np.where(self_mask[..., None], 0.0, grad)
        pi = np.where(self_mask[..., None, None], 0.0, pi)
    return grad, pi
