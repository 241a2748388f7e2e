#!/usr/bin/env python

from setuptools import find_packages, setup

MINIMAL_REQUIREMENTS = [
    "numpy>=1.22",
    "xarray>=2022.6",
    "dask[array]",
    "pyyaml",
    "psutil",
    "fsspec",
    "pandas>=1.5",
]

setup(
    name="hyperpose",
    version="0.1.0",
    packages=find_packages(exclude=["examples", "examples.*"]),
    description=(
        "Monocular 3D pose lifting with a Lorentz-geometry tangent-flow network"
    ),
    long_description=open("README.rst").read(),
    long_description_content_type="text/x-rst",
    include_package_data=True,
    package_data={"hyperpose.kinematics": ["presets/*.json"]},
    install_requires=MINIMAL_REQUIREMENTS,
    python_requires=">=3.9",
    entry_points={"console_scripts": ["hyperpose=hyperpose.cli:entry_point"]},
    classifiers=[
        "Programming Language :: Python",
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3.9",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
    ],
)
