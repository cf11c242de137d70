#!/usr/bin/env python

import os

from setuptools import setup

setup(
    name="lrdtest",
    version="0.1.0",
    description="Test for long-range dependence in locally stationary time series",
    license="BSD",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: BSD License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    keywords=["long memory", "time series", "whittle", "farima", "hypothesis test"],
    packages=["lrdtest", "lrdtest.cli", "lrdtest.tests"],
    package_data={"lrdtest": ["fixtures/*.csv", "fixtures/*.rst"]},
    install_requires=[open("requirements.txt").read().strip().split("\n")],
    long_description=(
        open("README.rst").read() if os.path.exists("README.rst") else ""
    ),
    extras_require={"test": ["pytest", "pytest-timeout"]},
    entry_points={"console_scripts": ["lrd=lrdtest.cli.main:main"]},
    python_requires=">=3.9",
    zip_safe=False,
)
