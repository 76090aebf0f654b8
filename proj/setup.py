import platform
from glob import glob

from pybind11.setup_helpers import Pybind11Extension, build_ext
from setuptools import setup

extra_compile = []
if platform.machine() in ("x86_64", "AMD64"):
    extra_compile.append("-mbmi2")

ext = Pybind11Extension(
    "bitweave._core",
    sorted(glob("src/*.cpp")),
    include_dirs=["include", "vendor"],
    cxx_std=20,
    extra_compile_args=extra_compile,
    extra_link_args=["-pthread"],
)

setup(ext_modules=[ext], cmdclass={"build_ext": build_ext})
