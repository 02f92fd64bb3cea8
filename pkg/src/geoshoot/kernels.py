"""Green's-function kernels of the planar operator (I - alpha^2 Lap)^nu.

The scalar kernel G(r) couples particle momenta to velocities. Three
families are supported:

* ``conical``: the nu = 3/2 case, G(r) = exp(-r/alpha) / (2 pi alpha^2).
  Nonsmooth at the origin (finite jump in dG/dr), which keeps particle
  interactions short-ranged.
* ``gaussian``: the smooth nu -> infinity limit, taken here as
  G(r) = exp(-r^2 / (2 alpha^2)) / (2 pi alpha^2).
* ``bessel``: general order nu > 1,
  G(r) = C r^(nu-1) K_(nu-1)(r/alpha) with
  C = 2^(1-nu) / (2 pi alpha^(1+nu) Gamma(nu)), where K is the modified
  Bessel function of the second kind.  At the origin the continuous
  extension is G(0) = 1 / (4 pi alpha^2 (nu - 1)).

With ``normalized=True`` every kernel is rescaled so G(0) = 1, the
convention used throughout the matching experiments (the conical kernel
then reads exp(-r/alpha)).
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as _gamma
from scipy.special import kv as _besselk

from .errors import ConfigurationError, DegenerateConfigurationError

__all__ = [
    "KernelFamily",
    "KernelSpec",
    "kernel_value",
    "kernel_derivative",
    "gram_matrix",
]


class KernelFamily(str, enum.Enum):
    CONICAL = "conical"
    GAUSSIAN = "gaussian"
    BESSEL = "bessel"


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family selector with length scale and normalization.

    ``nu`` is only consulted for the ``bessel`` family (conical is pinned
    at nu = 3/2 and gaussian is the smooth limit).  Orders in (1, 3/2)
    are evaluated but emit a warning: the kernel is bounded there yet has
    a cusp at the origin, so particle dynamics through close encounters
    are unreliable without mollification, which this package does not do.
    """

    family: KernelFamily = KernelFamily.CONICAL
    nu: float = 1.5
    alpha: float = 1.0
    normalized: bool = True

    def __post_init__(self):
        object.__setattr__(self, "family", KernelFamily(self.family))
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ConfigurationError(f"alpha must be positive, got {self.alpha}")
        if not (self.nu > 0 and math.isfinite(self.nu)):
            raise ConfigurationError(f"nu must be positive, got {self.nu}")
        if self.family is KernelFamily.BESSEL:
            if self.nu <= 1:
                raise ConfigurationError(
                    f"bessel kernels require nu > 1 (kernel unbounded otherwise), got nu={self.nu}"
                )
            if self.nu < 1.5:
                warnings.warn(
                    f"nu={self.nu} in (1, 1.5): kernel has a cusp at r=0 and is used unmollified",
                    stacklevel=2,
                )

    def peak(self) -> float:
        """Unnormalized kernel value at r = 0."""
        a2 = self.alpha * self.alpha
        if self.family is KernelFamily.BESSEL:
            return 1.0 / (4.0 * math.pi * a2 * (self.nu - 1.0))
        return 1.0 / (2.0 * math.pi * a2)


def _bessel_value_raw(spec: KernelSpec, r: np.ndarray) -> np.ndarray:
    """Unnormalized bessel-family kernel, continuous extension at r = 0."""
    mu = spec.nu - 1.0
    c = 2.0 ** (1.0 - spec.nu) / (
        2.0 * math.pi * spec.alpha ** (1.0 + spec.nu) * _gamma(spec.nu)
    )
    peak = spec.peak()
    out = np.full_like(r, peak)
    pos = r > 0
    with np.errstate(over="ignore", invalid="ignore"):
        vals = c * r[pos] ** mu * _besselk(mu, r[pos] / spec.alpha)
    # kv overflows for extremely small arguments at large order; the product
    # is finite there and indistinguishable from the peak in double precision
    vals = np.where(np.isfinite(vals), vals, peak)
    out[pos] = vals
    return out


def _bessel_derivative_raw(spec: KernelSpec, r: np.ndarray) -> np.ndarray:
    """d/dr of the unnormalized bessel-family kernel, r > 0 only.

    Uses d/dz [z^mu K_mu(z)] = -z^mu K_(mu-1)(z).
    """
    mu = spec.nu - 1.0
    c = 2.0 ** (1.0 - spec.nu) / (
        2.0 * math.pi * spec.alpha ** (1.0 + spec.nu) * _gamma(spec.nu)
    )
    return -(c / spec.alpha) * r**mu * _besselk(mu - 1.0, r / spec.alpha)


def kernel_value(spec: KernelSpec, r):
    """Evaluate G(r) for r >= 0.  Accepts a scalar or an array."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise ValueError("kernel_value requires r >= 0")
    scalar = r_arr.ndim == 0
    r_arr = np.atleast_1d(r_arr)

    if spec.family is KernelFamily.CONICAL:
        out = np.exp(-r_arr / spec.alpha)
        if not spec.normalized:
            out *= spec.peak()
    elif spec.family is KernelFamily.GAUSSIAN:
        out = np.exp(-0.5 * (r_arr / spec.alpha) ** 2)
        if not spec.normalized:
            out *= spec.peak()
    else:
        out = _bessel_value_raw(spec, r_arr)
        if spec.normalized:
            out /= spec.peak()

    return float(out[0]) if scalar else out


def kernel_derivative(spec: KernelSpec, r):
    """Evaluate dG/dr for r > 0.  Accepts a scalar or an array.

    The conical kernel's radial derivative jumps at r = 0, so the value
    there is deliberately undefined; callers must exclude coincident
    pairs (the momentum equation's sum already skips j = i).
    """
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0):
        raise ValueError("kernel_derivative requires r > 0; r = 0 is a caller bug")
    scalar = r_arr.ndim == 0
    r_arr = np.atleast_1d(r_arr)

    if spec.family is KernelFamily.CONICAL:
        out = -np.exp(-r_arr / spec.alpha) / spec.alpha
        if not spec.normalized:
            out *= spec.peak()
    elif spec.family is KernelFamily.GAUSSIAN:
        out = -(r_arr / spec.alpha**2) * np.exp(-0.5 * (r_arr / spec.alpha) ** 2)
        if not spec.normalized:
            out *= spec.peak()
    else:
        out = _bessel_derivative_raw(spec, r_arr)
        if spec.normalized:
            out /= spec.peak()

    return float(out[0]) if scalar else out


def pairwise_distances(points: np.ndarray) -> np.ndarray:
    """Symmetric matrix of Euclidean distances between planar points."""
    pts = np.asarray(points, dtype=float)
    diff = pts[:, None, :] - pts[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def gram_matrix(spec: KernelSpec, points) -> np.ndarray:
    """Kernel matrix K[i, j] = G(|x_i - x_j|) over a planar point set.

    Points must be pairwise distinct; coincident points would make the
    matrix singular and are rejected.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 1:
        raise ValueError(f"points must have shape (N, 2), got {pts.shape}")
    dist = pairwise_distances(pts)
    off_diag = ~np.eye(len(pts), dtype=bool)
    if np.any(dist[off_diag] == 0.0):
        i, j = np.argwhere((dist == 0.0) & off_diag)[0]
        raise DegenerateConfigurationError(
            f"points {i} and {j} coincide; Gram matrix would be singular"
        )
    return kernel_value(spec, dist)
