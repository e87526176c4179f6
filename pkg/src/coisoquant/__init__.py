"""Symbolic workbench for module deformations over coisotropic subvarieties.

Exact polynomial algebra for star products, module-deformation solvers,
curvature obstructions, the Hochschild curved dg Lie algebra, and finite
curved L-infinity verification.
"""

__version__ = "0.1.0"
