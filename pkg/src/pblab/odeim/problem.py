"""Problem container for the radial anharmonic spectral determinant.

The operator is ``-d^2/dx^2 + x^(2*alpha) + l*(l+1)/x^2`` on the half line.
``SpectralProblem`` holds the exponent ``alpha``, the angular parameter
``l``, and the shooting configuration (matching point, series seed point,
far boundary).  Derived quantities used throughout:

    kappa = 1/(1 + alpha)
    q     = exp(i*pi/(1 + alpha))     rotation of the x plane
    rho   = (2/kappa)^(2-2*kappa) * Gamma(1-kappa)^2
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SpectralProblem:
    alpha: float
    l: complex
    x_match: float = 2.0
    # None means: pick per energy (see seed_point / far_point).
    x_start: float | None = None
    x_far: float | None = None
    series_cutoff: float = 24.1
    n_segments: int = 24

    def __post_init__(self) -> None:
        if not self.alpha > 1.0:
            raise ValueError(f"alpha must exceed 1, got {self.alpha}")
        if complex(self.l).real <= -1.5:
            raise ValueError(f"Re(l) must exceed -3/2, got {self.l}")
        if not 0.0 < self.x_match:
            raise ValueError("x_match must be positive")
        if self.n_segments < 1:
            raise ValueError("n_segments must be at least 1")

    @property
    def kappa(self) -> float:
        return 1.0 / (1.0 + self.alpha)

    @property
    def q(self) -> complex:
        return cmath.exp(1j * math.pi / (1.0 + self.alpha))

    @property
    def rho(self) -> float:
        k = self.kappa
        return (2.0 / k) ** (2.0 - 2.0 * k) * math.gamma(1.0 - k) ** 2

    def conjugate_l(self) -> "SpectralProblem":
        """Companion problem with l -> -l - 1 (same potential)."""
        return SpectralProblem(
            alpha=self.alpha,
            l=-complex(self.l) - 1.0,
            x_match=self.x_match,
            x_start=self.x_start,
            x_far=self.x_far,
            series_cutoff=self.series_cutoff,
            n_segments=self.n_segments,
        )

    def seed_point(self, energy: complex) -> float:
        """Radius where the small-x series is summed before integrating out."""
        if self.x_start is not None:
            return self.x_start
        e = abs(energy)
        if e <= 20.0:
            return 0.25
        return 0.25 * math.sqrt(20.0 / e)

    def far_point(self, energy: complex) -> float:
        """Start of the inward (subdominant) shot; past the turning point."""
        if self.x_far is not None:
            return self.x_far
        turn = (50.0 + 5.0 * abs(energy)) ** (1.0 / (1.0 + self.alpha))
        return max(12.0, 1.6 * turn)


@dataclass(frozen=True)
class WaveValue:
    """Solution sample (value, x-derivative) at one point."""

    x: float
    value: complex
    derivative: complex

    def wronskian(self, other: "WaveValue") -> complex:
        return self.value * other.derivative - self.derivative * other.value


@dataclass(frozen=True)
class BetheRoots:
    alpha: float
    l: float
    z: tuple[complex, ...]
    residual: float = field(default=float("nan"))

    def __post_init__(self) -> None:
        if len(self.z) == 0:
            raise ValueError("need at least one root")
        zs = np.asarray(self.z)
        dd = np.abs(zs[:, None] - zs[None, :])
        dd[np.eye(len(zs), dtype=bool)] = np.inf
        if dd.min() < 1e-12 * (1.0 + np.abs(zs).max()):
            raise ValueError("roots must be pairwise distinct")

    @property
    def level(self) -> int:
        return len(self.z)
