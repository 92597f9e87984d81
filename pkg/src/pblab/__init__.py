"""Numerical laboratory for log-gas ensembles at general coupling, the
associated edge-scaling limit law, pole dynamics of rational solutions,
their 2x2 linear problem, and spectral determinants of anharmonic
oscillators on the half line.

Subpackages
-----------
ensemble
    Tridiagonal sampling of the Gaussian log-gas at arbitrary coupling,
    low-dimensional quadrature references, and moment/partition-function
    identity residuals.
qpii
    Backward parabolic solver for the edge evolution equation, limit-law
    extraction, and an empirical cumulative distribution of the largest
    eigenvalue for cross-checks.
poles
    Rational-solution pole dynamics: equations of motion, first integrals,
    governing-system and bilinear residuals.
lax
    The 2x2 linear problem attached to a pole configuration:
    zero-curvature residual, reconstruction of the scalar solution,
    monodromy, oscillator gauge.
odeim
    Spectral determinants of x^(2*alpha) + angular-momentum potentials:
    power-series/asymptotic shooting, quantum Wronskian, Bethe roots,
    excited-state potentials.
"""

__version__ = "0.1.0"
