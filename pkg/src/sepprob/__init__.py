"""Hilbert-Schmidt separability probabilities of two-qubit states.

Modules follow the computation: :mod:`bloore` (state space and tests),
:mod:`desf` (closed-form separability functions), :mod:`quadrature`
(probability integrals and jacobians), :mod:`cubes` (cube-integration
schemes), :mod:`qmc` (quasi-Monte Carlo estimators), :mod:`report`
(artifacts and the bound summary), :mod:`acceptance` and :mod:`cli`.
"""

__version__ = "0.1.0"
