"""varpn: variational Poisson-Nijenhuis structures on evolution equations.

Exact symbolic checks and searches for Hamiltonian operators, recursion
operators and their compatibility, through jet-space calculus and the
tangent and cotangent coverings of an equation.
"""

__version__ = "0.1.0"
