"""featline: finite-domain constraint solving for product-line models.

The fd subpackage is a standalone integer constraint solver. On top of it,
feature models written in a small text language are compiled to constraint
stores and analyzed, optimized, or configured step by step, from Python, the
command line, or the bundled HTTP service.
"""

__version__ = "0.1.0"
