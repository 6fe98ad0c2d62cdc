"""Builds the native module with cargo (no maturin/setuptools-rust needed).

The extension is compiled by the workspace build (`cargo build --release
-p slowman-py`) and the resulting cdylib is copied to wherever setuptools
expects the extension file.
"""

import shutil
import subprocess
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext

WORKSPACE = Path(__file__).resolve().parent.parent


class CargoBuildExt(build_ext):
    def build_extension(self, ext):
        subprocess.run(
            ["cargo", "build", "--release", "-p", "slowman-py"],
            cwd=WORKSPACE,
            check=True,
        )
        release = WORKSPACE / "target" / "release"
        for name in ("libslowman_py.so", "libslowman_py.dylib", "slowman_py.dll"):
            built = release / name
            if built.exists():
                break
        else:
            raise FileNotFoundError(f"no cdylib found under {release}")
        dest = Path(self.get_ext_fullpath(ext.name))
        dest.parent.mkdir(parents=True, exist_ok=True)
        shutil.copy2(built, dest)


setup(
    ext_modules=[Extension("slowman_py._native", sources=[])],
    cmdclass={"build_ext": CargoBuildExt},
)
