from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [Extension("probedrive._speedups", ["src/probedrive/_speedups.pyx"])],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # No Cython: the package still installs and falls back to the pure-Python
    # planner kernels (much slower for full episodes).
    extensions = []

setup(ext_modules=extensions)
