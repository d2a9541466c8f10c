"""Exact computations for quadratic forms over the polynomial ring F_q[t].

The subpackages build on each other roughly bottom-up:

- ``basefield``: prime fields, additive/multiplicative characters, exact
  scaled-cyclotomic values.
- ``polyring``: dense polynomials over F_q, residue rings, rational functions.
- ``laurent``: truncated Laurent series at the infinite place, square roots,
  the additive character psi.
- ``quadform``: quadratic forms, congruence diagonalization, dual forms,
  anisotropic cones.
- ``tintegral``: exact integration over balls at infinity, the circle
  dissection, oscillatory (Bessel/Gaussian) integrals, stationary phase.
- ``expsums``: complete exponential sums attached to a counting problem,
  their factorizations, and Weil-type bound scans.
- ``densities``: local solution densities and their partial-sum identity.
- ``circle``: the end-to-end count (weighted solution count equals its
  spectral expansion) and the strong-approximation solver.
- ``morgenstern``: quaternionic Cayley graphs of projective linear groups.
"""

__version__ = "0.1.0"
