"""Truncated normalization of germ systems along a compact leaf with unitary flat normal bundle.

Modules:

* :mod:`ueda.series` truncated multivariate power series and tau matrices
* :mod:`ueda.bundles` flat line bundle tuples, Diophantine scans, epsilon sequences
* :mod:`ueda.majorant` majorant recursions and their cross-checks
* :mod:`ueda.cohomology` twisted coboundary solvers
* :mod:`ueda.normalizer` obstruction classes, type, and linearization
* :mod:`ueda.germs` named examples and random system builders
* :mod:`ueda.cli` command-line front end
"""
__version__ = "0.1.0"
