"""HDG solver for the 2D incompressible Navier-Stokes equations.

The velocity computed by this discretization is pointwise divergence-free
and H(div)-conforming; the package ships benchmark cases and a runtime
audit suite for the conservation/stability properties of the scheme.
"""

__version__ = "0.1.0"
