"""Core value types for the log-gas ensemble.

The joint eigenvalue density is

    P(x_1..x_M)  propto  |Delta(x)|^beta * exp(sum_i w(x_i)),

where Delta is the Vandermonde determinant and w is minus the confining
potential.  Three potential variants are supported:

* ``Gaussian(a)``        : w(x) = -x^2 / (2 a^2), i.e. the single
                           quadratic coupling t_2 = -1/(2 a^2).
* ``PolynomialCouplings``: w(x) = sum_k t_k x^k.
* ``MultiPenner``        : w(x) = -C * sum_l m_l * log(x - w_l).

The coupling kappa = beta / 2 is the natural parameter for the moment
identities and for everything downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class PotentialSpec:
    """Base class for potential variants; use one of the subclasses."""

    def couplings(self) -> tuple[float, ...]:
        raise NotImplementedError


@dataclass(frozen=True)
class Gaussian(PotentialSpec):
    """Quadratic confinement with scale ``a``: weight exp(-x^2/(2 a^2))."""

    a: float = 1.0

    def __post_init__(self) -> None:
        if not self.a > 0:
            raise ValueError(f"scale a must be positive, got {self.a}")

    def couplings(self) -> tuple[float, ...]:
        return (0.0, 0.0, -1.0 / (2.0 * self.a ** 2))


@dataclass(frozen=True)
class PolynomialCouplings(PotentialSpec):
    """Finite sequence of couplings t_0..t_K, weight exp(sum_k t_k x^k)."""

    t: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "t", tuple(float(v) for v in self.t))
        if len(self.t) == 0:
            raise ValueError("need at least one coupling")

    def couplings(self) -> tuple[float, ...]:
        return self.t

    def confining(self) -> bool:
        """True when the leading coupling gives a normalizable weight."""
        k = len(self.t) - 1
        while k > 0 and self.t[k] == 0.0:
            k -= 1
        return k >= 2 and k % 2 == 0 and self.t[k] < 0


@dataclass(frozen=True)
class MultiPenner(PotentialSpec):
    """Logarithmic sources: weight prod_l (x - w_l)^(-C m_l).

    ``positions`` must be pairwise distinct.  Masses and the overall
    constant C are the caller's responsibility; integrability of the
    resulting weight on the chosen domain is a precondition of the
    quadrature routines, not enforced here.
    """

    masses: tuple[float, ...]
    positions: tuple[float, ...]
    C: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "masses", tuple(float(v) for v in self.masses))
        object.__setattr__(self, "positions", tuple(float(v) for v in self.positions))
        if len(self.masses) != len(self.positions):
            raise ValueError("masses and positions must have equal length")
        if len(self.positions) < 1:
            raise ValueError("need at least one source")
        pos = np.asarray(self.positions)
        if len(set(self.positions)) != len(self.positions):
            raise ValueError(f"source positions must be distinct, got {pos}")

    def couplings(self) -> tuple[float, ...]:
        raise ValueError("multi-source potential has no polynomial couplings")


@dataclass(frozen=True)
class EnsembleSpec:
    """A log-gas ensemble: particle count, coupling beta, potential."""

    n_eigen: int
    beta: float
    potential: PotentialSpec = field(default_factory=Gaussian)

    def __post_init__(self) -> None:
        if self.n_eigen < 1:
            raise ValueError(f"n_eigen must be >= 1, got {self.n_eigen}")
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")

    @property
    def kappa(self) -> float:
        return self.beta / 2.0

    @property
    def central_charge(self) -> float:
        """c = 1 - 6 (1 - kappa)^2 / kappa, symmetric under kappa -> 1/kappa."""
        k = self.kappa
        return 1.0 - 6.0 * (1.0 - k) ** 2 / k


@dataclass(frozen=True)
class SampleBatch:
    """Monte Carlo draws: ``configs`` has shape (n_samples, n_eigen).

    ``log_weights`` carries importance-reweighting exponents relative to
    the ensemble density; direct draws carry zeros.
    """

    configs: np.ndarray
    log_weights: np.ndarray
    seed: int
    spec: EnsembleSpec

    def __post_init__(self) -> None:
        c = np.asarray(self.configs)
        w = np.asarray(self.log_weights)
        if c.ndim != 2 or c.shape[1] != self.spec.n_eigen:
            raise ValueError(f"configs shape {c.shape} does not match n_eigen={self.spec.n_eigen}")
        if w.shape != (c.shape[0],):
            raise ValueError(f"log_weights shape {w.shape} does not match {c.shape[0]} samples")

    @property
    def n_samples(self) -> int:
        return self.configs.shape[0]

    def power_sums(self, orders: Sequence[int]) -> np.ndarray:
        """Per-sample power sums p_n = sum_i x_i^n, with p_0 = n_eigen.

        Returns shape (n_samples, len(orders)).
        """
        out = np.empty((self.n_samples, len(orders)))
        for j, n in enumerate(orders):
            if n == 0:
                out[:, j] = self.spec.n_eigen
            else:
                out[:, j] = np.sum(self.configs ** n, axis=1)
        return out


@dataclass(frozen=True)
class MCStat:
    """A Monte Carlo estimate with its standard error."""

    mean: complex
    stderr: float
    n_samples: int

    def consistent_with_zero(self, n_sigma: float = 3.0) -> bool:
        return abs(self.mean) <= n_sigma * self.stderr
