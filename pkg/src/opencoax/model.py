"""Layer stack description and per-frequency spectral context.

Geometry convention: regions are numbered from the axis outward, starting
at 0 for the innermost conductor. Region i is bounded above by
``radii[i]``; the last region extends to infinity (its ``outer_radius`` is
``math.inf``). A stack with n_regions regions therefore has
n_boundaries = n_regions - 1 material interfaces.

The axial wavenumber is called alpha throughout, with the e^{-i omega t}
time convention, so propagating-and-decaying waves have Re alpha > 0 and
Im alpha > 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import C0, EPS0
from .errors import ModelError

__all__ = ["Layer", "LayerStack", "SpectralContext", "spectral_context"]


@dataclass(frozen=True)
class Layer:
    """One homogeneous region.

    Args:
        outer_radius: bounding radius in metres; ``math.inf`` for the
            unbounded exterior only.
        eps_r: real relative permittivity.
        sigma: conductivity in S/m.
        mu_r: real relative permeability.
        name: optional label carried through to reports.
    """

    outer_radius: float
    eps_r: float
    sigma: float = 0.0
    mu_r: float = 1.0
    name: str = ""


@dataclass(frozen=True)
class LayerStack:
    layers: tuple[Layer, ...]

    def __post_init__(self):
        if len(self.layers) < 2:
            raise ModelError("a stack needs at least a conductor and an exterior")
        *finite, exterior = self.layers
        if exterior.outer_radius != math.inf:
            raise ModelError("the last region must be unbounded (outer_radius = inf)")
        prev = 0.0
        for i, lay in enumerate(finite):
            r = lay.outer_radius
            if not (math.isfinite(r) and r > prev):
                raise ModelError(
                    f"region {i}: outer_radius must be finite and strictly "
                    f"increasing (got {r!r} after {prev!r})"
                )
            prev = r
        for i, lay in enumerate(self.layers):
            if not (lay.eps_r > 0 and math.isfinite(lay.eps_r)):
                raise ModelError(f"region {i}: eps_r must be positive")
            if not (lay.sigma >= 0 and math.isfinite(lay.sigma)):
                raise ModelError(f"region {i}: sigma must be non-negative")
            if not (lay.mu_r > 0 and math.isfinite(lay.mu_r)):
                raise ModelError(f"region {i}: mu_r must be positive")
        if self.layers[0].sigma <= 0:
            raise ModelError("the innermost region must conduct (it carries the drive current)")

    @property
    def n_regions(self) -> int:
        return len(self.layers)

    @property
    def n_boundaries(self) -> int:
        return len(self.layers) - 1

    @property
    def radii(self) -> np.ndarray:
        """Interface radii in metres, shape (n_boundaries,)."""
        return np.array([lay.outer_radius for lay in self.layers[:-1]])

    def region_of_radius(self, radius: float) -> int:
        """Index of the finite region whose outer boundary is ``radius``."""
        for i, lay in enumerate(self.layers[:-1]):
            if math.isclose(lay.outer_radius, radius, rel_tol=1e-9):
                return i
        raise ModelError(f"no interface at radius {radius} m")


@dataclass(frozen=True)
class SpectralContext:
    """Frequency-resolved material data used by every spectral evaluation.

    ``eps`` holds the complex relative permittivities
    eps_r + i sigma / (omega eps0); ``mu`` the (real) relative
    permeabilities. Both have one entry per region. ``radii`` are the
    interface radii. All derived solvers take a context rather than
    (stack, frequency) pairs so the complex material arrays are built once.
    """

    stack: LayerStack
    frequency: float
    omega: float = field(init=False)
    k0: float = field(init=False)
    eps: np.ndarray = field(init=False)
    mu: np.ndarray = field(init=False)
    radii: np.ndarray = field(init=False)

    def __post_init__(self):
        if not (self.frequency > 0 and math.isfinite(self.frequency)):
            raise ModelError("frequency must be positive and finite")
        omega = 2.0 * math.pi * self.frequency
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "k0", omega / C0)
        eps = np.array(
            [lay.eps_r + 1j * lay.sigma / (omega * EPS0) for lay in self.stack.layers]
        )
        mu = np.array([lay.mu_r for lay in self.stack.layers])
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "radii", self.stack.radii)

    @property
    def n_regions(self) -> int:
        return self.stack.n_regions

    def kappa(self, region: int, alpha):
        """Transverse wavenumber of one region at axial wavenumber alpha.

        kappa = i sqrt(alpha^2 - k0^2 mu eps) with the principal square
        root, which places arg(kappa) in (0, pi]: decaying-outward waves in
        lossy media get Im kappa > 0, and the lossless below-cutoff limit
        lands on the negative real axis (the continuation from above).
        Even in alpha by construction.
        """
        a = np.asarray(alpha, dtype=np.complex128)
        k2 = self.k0 * self.k0 * self.mu[region] * self.eps[region]
        return 1j * np.sqrt(a * a - k2)

    def branch_point(self) -> complex:
        """Axial wavenumber where the exterior transverse wavenumber vanishes."""
        return complex(self.k0 * np.sqrt(self.mu[-1] * self.eps[-1]))


def spectral_context(stack: LayerStack, frequency: float) -> SpectralContext:
    """Build the per-frequency evaluation context for ``stack``."""
    return SpectralContext(stack=stack, frequency=frequency)
