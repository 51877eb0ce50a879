import os
from glob import glob

from pybind11.setup_helpers import Pybind11Extension, build_ext
from setuptools import setup


def eigen_include():
    env = os.environ.get("EIGEN3_INCLUDE_DIR")
    candidates = ([env] if env else []) + [
        "/usr/include/eigen3",
        "/usr/local/include/eigen3",
    ]
    for path in candidates:
        if path and os.path.isdir(os.path.join(path, "Eigen")):
            return path
    raise RuntimeError(
        "Eigen3 headers not found; set EIGEN3_INCLUDE_DIR to the directory "
        "containing Eigen/"
    )


ext = Pybind11Extension(
    "lowrank._lowrank",
    sources=sorted(glob("src/*.cpp")) + ["bindings/module.cpp"],
    include_dirs=["include", eigen_include()],
    cxx_std=20,
)

setup(ext_modules=[ext], cmdclass={"build_ext": build_ext})
