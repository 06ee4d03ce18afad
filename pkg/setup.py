from os import path
from setuptools import setup, find_packages


here = path.abspath(path.dirname(__file__))

with open(path.join(here, "README.md"), encoding="utf-8") as f:
    long_description = f.read()


setup(
    name="pseudolap",
    version="0.1.0",
    description=(
        "Numerical experiments on the regularity of degenerate"
        " pseudo-p-Laplacian equations."
    ),
    long_description=long_description,
    long_description_content_type="text/markdown",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    packages=find_packages(),
    python_requires=">=3.8",
    install_requires=["numpy", "scipy", "pandas", "matplotlib"],
    extras_require={
        "test": ["pytest", "hypothesis"]
    },
    entry_points={
        "console_scripts": ["pseudolap=pseudolap.experiments.run:main"]
    },
    include_package_data=True,
)
