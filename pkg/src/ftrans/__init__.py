"""Fortran-to-Python migration pipeline with a differentiable leaf-physics oracle.

The package splits a free-form Fortran codebase into testable units, orders
them by dependency, and drives a chat-model translation loop in which
generated pytest suites decide whether a unit is done or needs repair.
It also ships a native, dual-number-differentiable implementation of the
day-length and leaf-photosynthesis kernels used to validate translations
and to fit the Vcmax parameter by gradient descent.
"""

__version__ = "0.1.0"
