__name__ = "contactrom"

__version__ = "0.4.0"

__description__ = "Sparse dictionary reduced-order models for frictionless contact."

__doc__ = """
``contactrom`` builds reduced-order models of frictionless, non-adhesive
contact between linear-elastic bodies and solves parametric contact queries
with them.

- Offline: a built-in high-fidelity solver (plane-strain quads, node-to-segment
  contact, Lagrange multipliers) runs over a training design; displacements are
  compressed by truncated SVD while contact pressures are kept raw as an
  over-complete dual dictionary.
- Online: a greedy active-set solver picks a handful of dictionary columns,
  enriching with the most violated projected gap and eliminating negative
  coefficients, until the reduced KKT system is satisfied.
- A convex-hull variant (monolithic dictionaries solved by nnFOCUSS) for
  problems whose contact operators do not depend on the configuration.
- Three benchmarks ship ready to run: Hertz, ironing (one or two parameters)
  and a rope over an obstacle.
"""
