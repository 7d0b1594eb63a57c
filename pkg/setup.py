"""Build hooks for the optional compiled simulator core.

The package is fully functional without the extension: slaforge.simulator
falls back to a pure-Python twin of the same kernel. The extension is a
straight speedup, so a missing compiler or Cython must not fail the install.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the extension if possible, otherwise warn and continue."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, headers missing, ...
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        import warnings

        warnings.warn(
            "slaforge: compiled simulator core not built (%s); "
            "falling back to the pure-Python kernel" % (exc,)
        )


def _extensions():
    import os.path

    if not os.path.exists("src/slaforge/simulator/_core_cy.pyx"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "slaforge.simulator._core_cy",
        sources=["src/slaforge/simulator/_core_cy.pyx"],
        language="c++",
    )
    return cythonize(
        [ext],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )


setup(
    ext_modules=_extensions(),
    cmdclass={"build_ext": optional_build_ext},
)
