"""
Setup script for the cat-harness evaluation tool.
"""
from setuptools import setup, find_packages

with open("requirements.txt", "r", encoding="utf-8") as f:
    requirements = [line.strip() for line in f if line.strip() and not line.startswith("#")]

setup(
    name="cat-harness",
    version="1.0.0",
    author="CAT Harness Team",
    description="Scenario-based collision avoidance testing harness with a NIEON reference driver",
    long_description="Scores pluggable driving policies against a non-impaired, eyes-on-conflict reference driver over a database of conflict scenarios",
    packages=find_packages(exclude=("examples", "examples.*")),
    package_data={
        "cat_harness": ["data/*.json", "data/scenarios/*.scn"],
    },
    install_requires=requirements,
    python_requires=">=3.9",
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering",
    ],
    entry_points={
        "console_scripts": [
            "cat-harness=cat_harness.main:main",
        ],
    },
)
