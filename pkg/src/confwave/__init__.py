"""Time-periodic solutions of the cubic conformal wave equation on the
3-sphere: exact perturbative series, interaction coefficients, Galerkin
continuation, reducible-system predictions, and Pade pole analysis."""

__version__ = "0.1.0"
