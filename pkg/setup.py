"""Build script for the compiled kernel extension.

The extension is optional: if it cannot be built (no compiler, no Cython),
the package installs anyway and falls back to the pure-Python kernels at
import time.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the extension if possible, otherwise install without it."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            print(f"warning: compiled kernels not built ({exc}); "
                  "payguard will use the pure-Python fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: failed to compile {ext.name} ({exc}); "
                  "payguard will use the pure-Python fallback")


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "payguard._kernels",
        ["src/payguard/_kernels.pyx"],
        extra_compile_args=["-O3", "-march=native", "-ffast-math",
                            "-funroll-loops"],
        # -ffast-math emits libmvec vector-math calls; link them explicitly
        extra_link_args=["-lmvec", "-lm"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
