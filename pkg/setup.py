"""Build script for the optional compiled kernels.

The package works without the extension (a pure-Python fallback is selected
at import time), so the extension is marked optional: a missing compiler or
Cython must not fail the install.
"""

from setuptools import setup

try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/sitquery/kernels/_cy.pyx",
        language_level="3",
    )
    for ext in ext_modules:
        ext.include_dirs.append(numpy.get_include())
        # No FMA contraction: the pure-Python fallback must round identically.
        ext.extra_compile_args = ["-O2", "-ffp-contract=off"]
        ext.optional = True
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
