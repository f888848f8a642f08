"""Geometric diagnostics for analytic incompressible flows.

Submodules:
  jets         truncated Taylor arithmetic
  exterior     forms, polyvectors, wedge/interior/Hodge calculus
  background   background metrics, Christoffels, curvature
  expr         expression parser for user-defined flows
  flows        flow catalog and user flow construction
  diagnostics  pointwise kinematic and curvature diagnostics
  structures   Monge-Ampere structures on phase space
  legendre     Legendre duality for 2D stream functions
  gaussbonnet  Gauss-Bonnet auditing of vortex patches
  reduction    warped-product reduction of swirl flows
  cli          command-line interface
"""

__version__ = "0.1.0"

__all__ = [
    "jets", "exterior", "background", "expr", "flows", "diagnostics",
    "structures", "legendre", "gaussbonnet", "reduction", "errors",
]
