"""Build script for the optional compiled path-length kernel.

The package works without the extension: tiwsforest.backend falls back to
the vectorized numpy walker when the compiled module is missing.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the Cython kernel if possible, otherwise install pure Python."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler / headers
            self._skip(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._skip(exc)

    @staticmethod
    def _skip(exc):
        print(f"WARNING: compiled kernel not built ({exc}); "
              "tiwsforest will use the pure-python backend")


try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                name="tiwsforest._pathlen_cy",
                sources=["src/tiwsforest/_pathlen_cy.pyx"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(
    ext_modules=extensions,
    cmdclass={"build_ext": optional_build_ext},
)
