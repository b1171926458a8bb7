import os
import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeExtension(Extension):
    def __init__(self, name: str, sourcedir: str = "") -> None:
        super().__init__(name, sources=[])
        self.sourcedir = os.fspath(Path(sourcedir).resolve())


class CMakeBuild(build_ext):
    def build_extension(self, ext: CMakeExtension) -> None:
        ext_fullpath = Path.cwd() / self.get_ext_fullpath(ext.name)
        extdir = ext_fullpath.parent.resolve()
        extdir.mkdir(parents=True, exist_ok=True)

        cmake_args = [
            f"-DCMAKE_LIBRARY_OUTPUT_DIRECTORY={extdir}{os.sep}",
            f"-DPYTHON_EXECUTABLE={sys.executable}",
            "-DCMAKE_BUILD_TYPE=Release",
            "-DGEOLOOP_BUILD_CLI=OFF",
            "-DGEOLOOP_BUILD_TESTS=OFF",
            "-DGEOLOOP_BUILD_PYTHON=ON",
            "-DGEOLOOP_PYTHON_STAGE=OFF",
        ]
        try:
            import pybind11

            cmake_args.append(f"-Dpybind11_DIR={pybind11.get_cmake_dir()}")
        except ImportError:
            pass

        build_temp = Path(self.build_temp) / ext.name
        build_temp.mkdir(parents=True, exist_ok=True)
        subprocess.run(
            ["cmake", ext.sourcedir, *cmake_args], cwd=build_temp, check=True
        )
        subprocess.run(
            [
                "cmake",
                "--build",
                ".",
                "--target",
                "_core",
                f"-j{os.cpu_count() or 2}",
            ],
            cwd=build_temp,
            check=True,
        )


setup(
    ext_modules=[CMakeExtension("geoloop._core")],
    cmdclass={"build_ext": CMakeBuild},
    zip_safe=False,
)
