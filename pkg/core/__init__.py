"""
Numerical core: linear algebra, decompositions, randomized sparsification,
explicit constructions and lower-bound verifiers.
"""

__version__ = "1.0.0"
