from setuptools import find_packages, setup
from multiphasetorsion import __version__

setup(
    name="multiphasetorsion",
    version=__version__,
    description=(
        "Spectral solvers for multi-phase torsion transmission problems and "
        "non-radial configurations with overdetermined boundary conditions."
    ),
    long_description=open("README.rst").read(),
    license="MIT",
    packages=find_packages(exclude=["tests"]),
    include_package_data=True,
    install_requires=["numpy>=1.22", "scipy>=1.8"],
    extras_require={
        "tests": [
            "pytest>=7.0.1",
            "coverage>=6.3.1",
        ],
    },
    entry_points={
        "console_scripts": ["multiphase-torsion=multiphasetorsion.cli:main"],
    },
    python_requires=">=3.8",
    classifiers=[
        "Development Status :: 4 - Beta",
        "Environment :: Console",
        "Intended Audience :: Science/Research",
        "Operating System :: OS Independent",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
)
