"""Timed Petri nets with priorities, compiled to piecewise linear delay systems.

The package checks the spectral conditions policy by policy, computes the
Laurent germ of the discounted value and the invariant half-line
``x(t) = u + rho (t + t1)``, and simulates the system on an exact grid.
"""

__version__ = "0.1.0"
